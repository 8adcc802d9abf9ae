"""Exact solution of the nested optimality equations.

Values are defined recursively over information states::

    V1_{T+1} = 0
    V1_t(pi1) = min_c  V2_t(Q1(c) pi1)
    V2_t(pi2) = min_g  cost(pi2, g) + V3_t(Q2 pi2)
    V3_t(pi3) = min_l  V1_{t+1}(Q3(l) pi3)

and evaluated by memoised depth-first recursion from the initial state, so
only reachable states are ever built. The minimising rules are replayed
forward from the initial state to extract one concrete design.

Enumeration order and tie-breaking are fixed: candidates are visited in
lexicographic order of their tables and a later candidate replaces the
incumbent only if it is better by more than ``TIE_TOL``.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from .beliefs import POSTERIOR_FLOOR, receiver_posterior
from .design import StructuredDesign, StructuredStage, keep_memory_rule
from .errors import LimitExceededError
from .infostate import (
    BeliefSpace,
    InfoState1,
    InfoState2,
    InfoState3,
    apply_1Q,
    apply_2Q,
    apply_3Q,
    canonical_key,
    initial_info_state,
    stage_cost,
)

TIE_TOL = 1e-12


@dataclass
class SolverLimits:
    max_rules: int = 1 << 16       # candidate rules per Bellman node
    max_nodes: int = 2_000_000     # distinct (t, kind, state) nodes expanded
    time_budget_s: float = 3600.0

    def __post_init__(self):
        if self.max_rules <= 0 or self.max_nodes <= 0 or self.time_budget_s <= 0:
            raise ValueError("solver limits must be positive")


def enumerate_encoder_rules(pi1: InfoState1, n_x: int, n_z: int, limits: SolverLimits | None = None):
    """All encoder tables on ``X x support beliefs``, lexicographic order.

    Table cells are ordered x-major then belief id; the first rule sends
    symbol 0 everywhere.
    """
    cells = [(x, b) for x in range(n_x) for b in pi1.support_beliefs()]
    count = n_z ** len(cells)
    if limits is not None and count > limits.max_rules:
        raise LimitExceededError("encoder rules per node", count, limits.max_rules)
    for combo in itertools.product(range(n_z), repeat=len(cells)):
        yield dict(zip(cells, combo))


def enumerate_memory_rules(pi3: InfoState3, n_y: int, n_m: int, limits: SolverLimits | None = None):
    """Memory tables in lexicographic order, restricted to reached (y, m) cells.

    Cells of ``Y x M`` that carry no mass in ``pi3`` are fixed to 0. Rules
    differing only there yield the same successor state, and the zero-filled
    one is the lexicographically first of each such class, so the first
    minimiser found matches a search over all ``n_m ** (n_y * n_m)`` tables.
    """
    live = sorted({k[1] * n_m + k[3] for k in pi3.atoms})
    count = n_m ** len(live)
    if limits is not None and count > limits.max_rules:
        raise LimitExceededError("memory rules per node", count, limits.max_rules)
    base = [0] * (n_y * n_m)
    for combo in itertools.product(range(n_m), repeat=len(live)):
        rule = list(base)
        for i, v in zip(live, combo):
            rule[i] = v
        yield tuple(rule)


def optimize_decoder(pi2: InfoState2, rho: np.ndarray):
    """Per-cell Bayes decoder and its expected cost.

    The decoder does not influence the next state, so the minimisation over
    tables splits into one estimate per ``(y, m)``. Unreached cells get 0.
    """
    s = pi2.space
    joint = np.zeros((s.n_y * s.n_m, s.n_x))
    for (x, y, m, _), p in pi2.atoms.items():
        joint[y * s.n_m + m, x] += p
    g = [0] * (s.n_y * s.n_m)
    for cell in range(joint.shape[0]):
        if joint[cell].sum() > POSTERIOR_FLOOR:
            costs = joint[cell] @ rho
            g[cell] = int(np.flatnonzero(costs <= costs.min() + TIE_TOL)[0])
    g = tuple(g)
    return g, stage_cost(pi2, g, rho)


def optimize_decoder_naive(pi2: InfoState2, rho: np.ndarray):
    """Exhaustive search over all decoder tables (cross-check only)."""
    s = pi2.space
    best = None
    for g in itertools.product(range(rho.shape[1]), repeat=s.n_y * s.n_m):
        cost = stage_cost(pi2, g, rho)
        if best is None or cost < best[1] - TIE_TOL:
            best = (g, cost)
    return best


class ValueCache:
    """Memo of ``(t, kind, canonical key) -> (value, argmin rule)``."""

    def __init__(self):
        self.table: dict = {}
        self.hits = 0

    def get(self, t, kind, key):
        out = self.table.get((t, kind, key))
        if out is not None:
            self.hits += 1
        return out

    def put(self, t, kind, key, value, rule):
        self.table[(t, kind, key)] = (value, rule)

    def __len__(self):
        return len(self.table)

    def counts(self, horizon):
        out = [{1: 0, 2: 0, 3: 0} for _ in range(horizon)]
        for t, kind, _ in self.table:
            if t <= horizon:
                out[t - 1][kind] += 1
        return out


@dataclass(eq=False)
class SolveResult:
    j_star: float
    design: StructuredDesign
    reachable: list
    cache_hits: int
    cache_entries: int
    wall_time: float
    trajectory: list = field(repr=False)
    space: BeliefSpace = field(repr=False)

    def to_dict(self, inst, include_states: bool = False) -> dict:
        out = {
            "j_star": self.j_star,
            "design": self.design.to_dict(inst.n_x),
            "reachable_states": [
                {"t": t, "encoder": c[1], "decoder": c[2], "memory": c[3]}
                for t, c in enumerate(self.reachable, start=1)
            ],
            "cache": {"hits": self.cache_hits, "entries": self.cache_entries},
        }
        if include_states:
            out["trajectory"] = [
                {"t": t, "pi1": p1.to_dict(), "pi2": p2.to_dict(), "pi3": p3.to_dict()}
                for t, (p1, p2, p3) in enumerate(self.trajectory, start=1)
            ]
        out["meta"] = {"wall_time_s": self.wall_time}
        return out


class Solver:
    """Bellman recursion bound to one instance, one belief space and one cache."""

    def __init__(self, inst, limits: SolverLimits | None = None, space: BeliefSpace | None = None,
                 enumerate_decoders: bool = False, record_states: bool = False):
        self.inst = inst
        self.limits = limits or SolverLimits()
        self.space = space or BeliefSpace.for_instance(inst)
        self.enumerate_decoders = enumerate_decoders
        self.fwd = inst.forward_matrix
        self.bwd = inst.backward_matrix
        self.rho = inst.distortion
        self.cache = ValueCache()
        # every state expanded, as (t, state); only kept when asked for
        self.visited: list | None = [] if record_states else None
        self._started = time.perf_counter()

    def _stats(self):
        return {"cache_entries": len(self.cache), "cache_hits": self.cache.hits,
                "elapsed_s": time.perf_counter() - self._started}

    def _expand(self, t, state):
        if self.visited is not None:
            self.visited.append((t, state))
        if len(self.cache) >= self.limits.max_nodes:
            raise LimitExceededError("expanded nodes", len(self.cache) + 1, self.limits.max_nodes,
                                     self._stats())
        if time.perf_counter() - self._started > self.limits.time_budget_s:
            raise LimitExceededError("wall time (s)", round(time.perf_counter() - self._started, 3),
                                     self.limits.time_budget_s, self._stats())

    def _reraise(self, exc):
        if not exc.stats:
            exc.stats = self._stats()
        raise exc

    # -- Bellman operators ------------------------------------------------

    def v1(self, pi1: InfoState1, t: int):
        if t > self.inst.horizon:
            return 0.0, None
        key = canonical_key(pi1)
        hit = self.cache.get(t, 1, key)
        if hit is not None:
            return hit
        self._expand(t, pi1)
        best = None
        try:
            for c in enumerate_encoder_rules(pi1, self.inst.n_x, self.inst.n_z, self.limits):
                v, _ = self.v2(apply_1Q(pi1, c, self.fwd), t)
                if best is None or v < best[0] - TIE_TOL:
                    best = (v, c)
        except LimitExceededError as exc:
            self._reraise(exc)
        self.cache.put(t, 1, key, *best)
        return best

    def v2(self, pi2: InfoState2, t: int):
        key = canonical_key(pi2)
        hit = self.cache.get(t, 2, key)
        if hit is not None:
            return hit
        self._expand(t, pi2)
        if self.enumerate_decoders:
            g, cost = optimize_decoder_naive(pi2, self.rho)
        else:
            g, cost = optimize_decoder(pi2, self.rho)
        if t < self.inst.horizon:
            cont, _ = self.v3(apply_2Q(pi2, self.bwd), t)
        else:
            cont = 0.0
        out = (cost + cont, g)
        self.cache.put(t, 2, key, *out)
        return out

    def v3(self, pi3: InfoState3, t: int):
        n_y, n_m = self.inst.n_y, self.inst.n_m
        if t >= self.inst.horizon:
            return 0.0, keep_memory_rule(n_y, n_m)
        key = canonical_key(pi3)
        hit = self.cache.get(t, 3, key)
        if hit is not None:
            return hit
        self._expand(t, pi3)
        src = self.inst.transition(t)
        best = None
        try:
            for l in enumerate_memory_rules(pi3, n_y, n_m, self.limits):
                v, _ = self.v1(apply_3Q(pi3, l, src), t + 1)
                if best is None or v < best[0] - TIE_TOL:
                    best = (v, l)
        except LimitExceededError as exc:
            self._reraise(exc)
        self.cache.put(t, 3, key, *best)
        return best

    def value_at(self, state, t: int) -> float:
        """Value of any information state of the right kind at stage ``t``."""
        if isinstance(state, InfoState1):
            return self.v1(state, t)[0]
        if isinstance(state, InfoState2):
            return self.v2(state, t)[0]
        if isinstance(state, InfoState3):
            return self.v3(state, t)[0]
        raise TypeError(f"not an information state: {type(state).__name__}")

    # -- driver -------------------------------------------------------------

    def solve(self) -> SolveResult:
        inst = self.inst
        pi1 = initial_info_state(inst, self.space)
        j_star, _ = self.v1(pi1, 1)
        stages, trajectory = [], []
        for t in range(1, inst.horizon + 1):
            _, c = self.v1(pi1, t)
            pi2 = apply_1Q(pi1, c, self.fwd)
            _, g = self.v2(pi2, t)
            pi3 = apply_2Q(pi2, self.bwd)
            _, l = self.v3(pi3, t)
            stages.append(StructuredStage(
                encoder=dict(c),
                beliefs={b: self.space.m[b] for b in pi1.support_beliefs()},
                decoder=g, memory=l))
            trajectory.append((pi1, pi2, pi3))
            if t < inst.horizon:
                pi1 = apply_3Q(pi3, l, inst.transition(t))
        return SolveResult(
            j_star=float(j_star),
            design=StructuredDesign(stages),
            reachable=self.cache.counts(inst.horizon),
            cache_hits=self.cache.hits,
            cache_entries=len(self.cache),
            wall_time=time.perf_counter() - self._started,
            trajectory=trajectory,
            space=self.space,
        )


def solve(inst, limits: SolverLimits | None = None, enumerate_decoders: bool = False) -> SolveResult:
    return Solver(inst, limits, enumerate_decoders=enumerate_decoders).solve()


def value_at(state, t: int, inst, limits: SolverLimits | None = None) -> float:
    return Solver(inst, limits, space=state.space).value_at(state, t)


def bayes_violations(result: SolveResult, inst, tol: float = 1e-12) -> list[str]:
    """Cells where an extracted decoder is not a posterior-risk minimiser.

    Checked at every ``(y, m)`` with mass above ``POSTERIOR_FLOOR`` along the
    optimal trajectory; ties within ``tol`` count as optimal.
    """
    out = []
    for t, ((_, pi2, _), st) in enumerate(zip(result.trajectory, result.design.stages), start=1):
        mass = pi2.ym_marginal()
        for y in range(inst.n_y):
            for m in range(inst.n_m):
                if mass[y * inst.n_m + m] <= POSTERIOR_FLOOR:
                    continue
                risk = receiver_posterior(pi2, y, m) @ inst.distortion
                chosen = st.decoder[y * inst.n_m + m]
                if risk[chosen] > risk.min() + tol:
                    out.append(f"t={t} (y={y}, m={m}): chose {chosen} with risk {risk[chosen]!r}, "
                               f"minimum {risk.min()!r}")
    return out
