"""Command-line interface: ``rtcomm <command> --instance FILE [options]``.

Every command writes one JSON document (to ``--out`` or stdout). Timing
information lives under a top-level ``meta`` key; everything else is a
deterministic function of the inputs and flags.

Exit codes: 0 success, 1 other error, 2 parse error, 3 validation error,
4 limit exceeded, 5 dimension mismatch.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

from . import __version__
from .design import load_design
from .errors import (
    BeliefMismatchError,
    DimensionMismatchError,
    InstanceParseError,
    InstanceValidationError,
    LimitExceededError,
)
from .evaluator import evaluate_exact, simulate, trace
from .model import instance_from_dict, load_instance, validate_instance
from .oracle import MAX_DESIGNS, brute_force, compare
from .solver import SolverLimits, Solver

log = logging.getLogger("rtcomm")

EXIT_OK, EXIT_ERROR, EXIT_PARSE, EXIT_VALIDATION, EXIT_LIMIT, EXIT_DIMENSION = 0, 1, 2, 3, 4, 5


def _limits(args) -> SolverLimits:
    return SolverLimits(max_rules=args.max_rules, max_nodes=args.max_nodes,
                        time_budget_s=args.time_budget_s)


def cmd_validate(args):
    try:
        data = json.loads(open(args.instance).read())
    except (OSError, json.JSONDecodeError) as exc:
        raise InstanceParseError(f"{args.instance}: {exc}") from None
    violations = validate_instance(instance_from_dict(data))
    return (EXIT_OK if not violations else EXIT_VALIDATION), violations


def cmd_solve(args):
    inst = load_instance(args.instance)
    solver = Solver(inst, _limits(args), enumerate_decoders=args.debug_enumerate_decoders)
    result = solver.solve()
    log.info("j_star=%r in %.3fs, %d cache entries", result.j_star, result.wall_time,
             result.cache_entries)
    out = {"command": "solve"}
    out.update(result.to_dict(inst, include_states=args.include_states))
    return EXIT_OK, out


def cmd_evaluate(args):
    inst = load_instance(args.instance)
    design = load_design(_require(args, "design"), inst)
    report = evaluate_exact(inst, design)
    return EXIT_OK, {"command": "evaluate", **report.to_dict()}


def cmd_simulate(args):
    inst = load_instance(args.instance)
    design = load_design(_require(args, "design"), inst)
    report = simulate(inst, design, args.samples, args.seed)
    return EXIT_OK, {"command": "simulate", **report.to_dict()}


def cmd_trace(args):
    inst = load_instance(args.instance)
    design = load_design(_require(args, "design"), inst)
    return EXIT_OK, {"command": "trace", "seed": args.seed, "events": trace(inst, design, args.seed)}


def cmd_oracle(args):
    inst = load_instance(args.instance)
    t0 = time.perf_counter()
    res = brute_force(inst, args.mode, max_designs=args.max_designs, threads=args.threads)
    out = {"command": "oracle", **res.to_dict(inst)}
    out["meta"] = {"wall_time_s": time.perf_counter() - t0}
    return EXIT_OK, out


def cmd_compare(args):
    inst = load_instance(args.instance)
    design = load_design(_require(args, "design"), inst)
    return EXIT_OK, {"command": "compare", **compare(inst, design, limits=_limits(args))}


COMMANDS = {
    "validate": cmd_validate,
    "solve": cmd_solve,
    "evaluate": cmd_evaluate,
    "simulate": cmd_simulate,
    "trace": cmd_trace,
    "oracle": cmd_oracle,
    "compare": cmd_compare,
}


def _require(args, name):
    value = getattr(args, name)
    if value is None:
        raise InstanceParseError(f"--{name} is required for '{args.command}'")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rtcomm", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--instance", required=True, help="instance JSON file")
    p.add_argument("--design", help="design JSON file (a solve/oracle output also works)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--max-rules", type=int, default=SolverLimits.max_rules)
    p.add_argument("--max-nodes", type=int, default=SolverLimits.max_nodes)
    p.add_argument("--max-designs", type=int, default=MAX_DESIGNS)
    p.add_argument("--time-budget-s", type=float, default=SolverLimits.time_budget_s)
    p.add_argument("--mode", choices=["full", "no-feedback"], default="full")
    p.add_argument("--debug-enumerate-decoders", action="store_true",
                   help="search all decoder tables instead of per-cell Bayes estimates")
    p.add_argument("--include-states", action="store_true",
                   help="also dump the information states along the optimal path")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def _error(kind, exc, **extra):
    return {"error": {"type": kind, "message": str(exc), **extra}}


def run(argv=None):
    """Parse ``argv`` and execute; returns ``(exit_code, json_document)``."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args) + (args,)
    except InstanceParseError as exc:
        return EXIT_PARSE, _error("parse", exc), args
    except InstanceValidationError as exc:
        return EXIT_VALIDATION, _error("validation", exc, violations=exc.violations), args
    except LimitExceededError as exc:
        stats = dict(exc.stats or {})
        elapsed = stats.pop("elapsed_s", None)
        doc = _error("limit_exceeded", exc, what=exc.what, count=exc.count, limit=exc.limit,
                     stats=stats)
        if elapsed is not None:
            doc["meta"] = {"elapsed_s": elapsed}
        return EXIT_LIMIT, doc, args
    except (DimensionMismatchError, BeliefMismatchError) as exc:
        return EXIT_DIMENSION, _error("dimension_mismatch", exc), args


def main(argv=None) -> int:
    code, doc, args = run(argv)
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
