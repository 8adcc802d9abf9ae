"""Exhaustive search over history-form designs for tiny instances.

Every design in the unstructured class is scored exactly. A design is a
tuple of rule tables ordered ``c_1, g_1, l_1, c_2, g_2, l_2, ..., c_T,
g_T`` (``l_T`` is never read and is not enumerated). Concatenating the table
entries gives the design's lexicographic position, which is also its
integer index in a mixed-radix count. Stage-1 decoder and memory tables
range over ``Y`` only, since the incoming memory is the dummy symbol 0.

Scoring is vectorised over blocks of design indices but is otherwise a
plain path sum; no pruning or per-cell optimisation is done.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .design import HistoryDesign, HistoryStage, history_table_size, keep_memory_rule
from .errors import LimitExceededError
from .evaluator import evaluate_exact
from .model import noise_law
from .solver import solve

TIE_TOL = 1e-12
MAX_DESIGNS = 1 << 22
BLOCK = 1 << 16


@dataclass
class DesignSpaceCount:
    encoders: list
    decoders: list
    memory: list
    total: int

    def to_dict(self) -> dict:
        return {"encoders": self.encoders, "decoders": self.decoders,
                "memory": self.memory, "total": self.total}


@dataclass
class _Component:
    role: str       # "c", "g" or "l"
    t: int
    size: int       # table entries
    base: int       # symbols per entry
    count: int      # base ** size
    stride: int = 1


def _components(inst, feedback: bool) -> list[_Component]:
    T, n_y, n_m = inst.horizon, inst.n_y, inst.n_m
    comps = []
    for t in range(1, T + 1):
        cells = n_y if t == 1 else n_y * n_m
        size = history_table_size(t, inst.n_x, inst.n_yt, feedback)
        comps.append(_Component("c", t, size, inst.n_z, inst.n_z ** size))
        comps.append(_Component("g", t, cells, inst.n_xhat, inst.n_xhat ** cells))
        if t < T:
            comps.append(_Component("l", t, cells, n_m, n_m ** cells))
    stride = 1
    for comp in reversed(comps):
        comp.stride = stride
        stride *= comp.count
    return comps


def _mode_feedback(mode: str) -> bool:
    if mode in ("full",):
        return True
    if mode in ("no_feedback", "no-feedback"):
        return False
    raise ValueError(f"unknown mode {mode!r}")


def count_designs(inst, mode: str = "full") -> DesignSpaceCount:
    comps = _components(inst, _mode_feedback(mode))
    pick = lambda role: [c.count for c in comps if c.role == role]  # noqa: E731
    total = 1
    for c in comps:
        total *= c.count
    return DesignSpaceCount(pick("c"), pick("g"), pick("l"), total)


def decode_design(inst, index: int, mode: str = "full") -> HistoryDesign:
    """History design at lexicographic position ``index``."""
    feedback = _mode_feedback(mode)
    comps = _components(inst, feedback)
    n_y, n_m = inst.n_y, inst.n_m
    tables = {}
    for comp in comps:
        k = (index // comp.stride) % comp.count
        entries = []
        for _ in range(comp.size):
            k, r = divmod(k, comp.base)
            entries.append(r)
        entries.reverse()
        if comp.t == 1 and comp.role in ("g", "l"):
            full = [0] * (n_y * n_m)
            for y, v in enumerate(entries):
                full[y * n_m] = v
            entries = full
        tables[(comp.role, comp.t)] = tuple(entries)
    stages = []
    for t in range(1, inst.horizon + 1):
        stages.append(HistoryStage(
            tables[("c", t)], tables[("g", t)],
            tables.get(("l", t), keep_memory_rule(n_y, n_m))))
    return HistoryDesign(stages, feedback=feedback)


def design_costs(inst, indices, mode: str = "full") -> np.ndarray:
    """Exact expected total distortion of each design index in ``indices``."""
    feedback = _mode_feedback(mode)
    comps = _components(inst, feedback)
    idx = np.asarray(indices, dtype=np.int64)
    digits = {}
    for comp in comps:
        k = (idx // comp.stride) % comp.count
        powers = comp.base ** np.arange(comp.size - 1, -1, -1, dtype=np.int64)
        digits[(comp.role, comp.t)] = (k, powers, comp.base)

    def entry(role, t, j):
        k, powers, base = digits[(role, t)]
        return (k // powers[j]) % base

    f_out, f_w = noise_law(inst.forward, inst.n_y)
    b_out, b_w = noise_law(inst.backward, inst.n_yt)
    T, n_x, n_yt, n_m = inst.horizon, inst.n_x, inst.n_yt, inst.n_m
    rho = inst.distortion
    total = np.zeros(idx.shape[0])

    def rec(t, px, xi, yi, m, w, cost):
        # xi, yi: row-major indices of x^{t-1} and ytilde^{t-1}
        for x in range(n_x):
            p = inst.source_initial[x] if t == 1 else inst.transition(t - 1)[px, x]
            if p == 0:
                continue
            xi2 = xi * n_x + x
            h = xi2 * n_yt ** (t - 1) + yi if feedback else xi2
            z = entry("c", t, h)
            for n in range(f_w.shape[1]):
                wn = w * p * f_w[z, n]
                y = f_out[z, n]
                cell = y if t == 1 else y * n_m + m
                c2 = cost + rho[x, entry("g", t, cell)]
                if t == T:
                    total[:] += wn * c2
                    continue
                m2 = entry("l", t, cell)
                for nt in range(b_w.shape[1]):
                    rec(t + 1, x, xi2, yi * n_yt + b_out[y, nt], m2, wn * b_w[y, nt], c2)

    zero = np.zeros(idx.shape[0], dtype=np.int64)
    rec(1, 0, zero, zero, zero, np.ones(idx.shape[0]), np.zeros(idx.shape[0]))
    return total


@dataclass
class OracleResult:
    j_star: float
    design: HistoryDesign
    index: int
    count: DesignSpaceCount
    evaluated: int
    mode: str

    def to_dict(self, inst) -> dict:
        return {"mode": self.mode, "j_star": self.j_star, "index": self.index,
                "count": self.count.to_dict(), "evaluated": self.evaluated,
                "design": self.design.to_dict()}


def brute_force(inst, mode: str = "full", max_designs: int = MAX_DESIGNS, threads: int = 1,
                block: int = BLOCK) -> OracleResult:
    """Minimum over every design of the class, and its first minimiser.

    The reported design is the lexicographically first one whose cost is
    within ``TIE_TOL`` of the minimum. Blocks may be scored on several
    threads; the result does not depend on the thread count.
    """
    count = count_designs(inst, mode)
    if count.total > max_designs:
        raise LimitExceededError("designs", count.total, max_designs)
    costs = np.empty(count.total)
    starts = list(range(0, count.total, block))

    def run(start):
        stop = min(start + block, count.total)
        costs[start:stop] = design_costs(inst, np.arange(start, stop), mode)
        return stop - start

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            evaluated = sum(pool.map(run, starts))
    else:
        evaluated = sum(run(s) for s in starts)
    j_star = float(costs.min())
    index = int(np.flatnonzero(costs <= j_star + TIE_TOL)[0])
    return OracleResult(j_star, decode_design(inst, index, mode), index, count, evaluated,
                        "full" if _mode_feedback(mode) else "no_feedback")


def brute_force_full(inst, max_designs: int = MAX_DESIGNS, threads: int = 1) -> OracleResult:
    return brute_force(inst, "full", max_designs, threads)


def brute_force_no_feedback(inst, max_designs: int = MAX_DESIGNS, threads: int = 1) -> OracleResult:
    return brute_force(inst, "no_feedback", max_designs, threads)


def compare(inst, design, j_star: float | None = None, limits=None) -> dict:
    """Exact cost of a heuristic design against the optimum."""
    if j_star is None:
        j_star = solve(inst, limits).j_star
    cost = evaluate_exact(inst, design).expected
    gap = cost - j_star
    return {
        "heuristic_cost": cost,
        "j_star": j_star,
        "absolute_gap": gap,
        "relative_gap": gap / j_star if j_star > 0 else (0.0 if abs(gap) <= 1e-12 else None),
    }

