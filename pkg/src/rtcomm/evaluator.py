"""Exact and Monte-Carlo performance of a fixed design.

Variables are generated in the order

    x_t, z_t, n_t, y_t, xhat_t, m_t, ntilde_t, ytilde_t, x_{t+1}, ...

with the feedback pair skipped at the final stage (it is never read).
The receiver's memory entering stage 1 is the dummy symbol 0.

Random numbers: a single ``numpy`` PCG64 generator seeded with
``SeedSequence(seed)`` fills a ``(n, T, 3)`` array of uniforms row-major.
Episode ``i`` consumes row ``i`` (source, forward noise, backward noise per
stage, by inverse CDF), so an episode does not depend on how many others
are drawn with it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import beliefs
from .design import HistoryDesign, HistoryStage, StructuredDesign, history_index, history_table_size
from .errors import LimitExceededError
from .infostate import BeliefSpace, apply_1Q, apply_2Q, apply_3Q, initial_info_state, stage_cost
from .model import noise_law

MAX_PATHS = 10 ** 7
MAX_TABLE = 10 ** 7


@dataclass
class EvalReport:
    expected: float
    per_stage: list
    exact: bool = True
    stderr: float | None = None
    samples: int | None = None
    seed: int | None = None
    total_weight: float | None = None
    paths: int | None = None

    def to_dict(self) -> dict:
        out = {"expected_distortion": self.expected, "per_stage": list(self.per_stage),
               "exact": self.exact}
        if self.exact:
            out["total_weight"] = self.total_weight
            out["paths"] = self.paths
        else:
            out.update(stderr=self.stderr, samples=self.samples, seed=self.seed)
        return out


# ------------------------------------------------- structured -> history form

def _track_beliefs(inst, design: StructuredDesign, visit):
    """Walk every reachable ``(x^t, ytilde^{t-1})`` prefix under ``design``.

    Calls ``visit(t, xs, yts, vec, z)`` once per reachable prefix with the
    encoder's belief ``vec`` on M and the chosen input ``z``.
    """
    fwd, bwd = inst.forward_matrix, inst.backward_matrix
    p_yt = fwd @ bwd                      # law of ytilde given z
    T = inst.horizon

    def rec(t, xs, yts, px, b1):
        st = design.stages[t - 1]
        for x in range(inst.n_x):
            w = (inst.source_initial[x] if t == 1 else inst.transition(t - 1)[xs[-1], x]) * px
            if w <= 0:
                continue
            xs2 = xs + (x,)
            z = st.encode(x, b1)
            visit(t, xs2, yts, b1, z)
            if t == T:
                continue
            b2 = beliefs.belief_after_transmission(b1, z, fwd)
            for yt in range(inst.n_yt):
                wy = w * p_yt[z, yt]
                if wy <= 0:
                    continue
                b3 = beliefs.belief_after_feedback(b2, yt, bwd)
                nb1 = beliefs.advance_belief_through_memory(b3, st.memory, inst.n_m)
                rec(t + 1, xs2, yts + (yt,), wy, nb1)

    delta = np.zeros(inst.n_m)
    delta[0] = 1.0
    rec(1, (), (), 1.0, delta)


def to_history_design(inst, design: StructuredDesign) -> HistoryDesign:
    """Equivalent history-form design; unreachable history cells get 0."""
    sizes = [history_table_size(t, inst.n_x, inst.n_yt) for t in range(1, inst.horizon + 1)]
    if max(sizes) > MAX_TABLE:
        raise LimitExceededError("history table size", max(sizes), MAX_TABLE)
    tables = [[0] * n for n in sizes]

    def visit(t, xs, yts, vec, z):
        tables[t - 1][history_index(xs, yts, inst.n_x, inst.n_yt)] = z

    _track_beliefs(inst, design, visit)
    return HistoryDesign([
        HistoryStage(tuple(tab), st.decoder, st.memory)
        for tab, st in zip(tables, design.stages)
    ])


def _as_history(inst, design):
    if isinstance(design, StructuredDesign):
        return to_history_design(inst, design)
    return design


# ----------------------------------------------------------- exact evaluation

def evaluate_exact(inst, design, max_paths: int = MAX_PATHS) -> EvalReport:
    """Expected total distortion by summing over every noise/source path.

    Paths range over ``(x^T, n^T, ntilde^{T-1})``; their weights are the
    product of source, forward-noise and backward-noise probabilities.
    """
    hist = _as_history(inst, design)
    f_out, f_w = noise_law(inst.forward, inst.n_y)
    b_out, b_w = noise_law(inst.backward, inst.n_yt)
    T = inst.horizon
    n_paths = (inst.n_x * f_w.shape[1]) ** T * b_w.shape[1] ** (T - 1)
    if n_paths > max_paths:
        raise LimitExceededError("evaluation paths", n_paths, max_paths)
    rho = inst.distortion
    n_m = inst.n_m
    per_stage = [0.0] * T
    acc = {"weight": 0.0, "paths": 0}

    def rec(t, xs, yts, m, w, costs):
        st = hist.stages[t - 1]
        for x in range(inst.n_x):
            wx = w * (inst.source_initial[x] if t == 1 else inst.transition(t - 1)[xs[-1], x])
            xs2 = xs + (x,)
            z = hist.encode(t, xs2, yts, inst.n_x, inst.n_yt) if wx > 0 else 0
            for n in range(f_w.shape[1]):
                wn = wx * f_w[z, n]
                y = f_out[z, n]
                xhat = st.decoder[y * n_m + m]
                m_next = st.memory[y * n_m + m]
                c2 = costs + (rho[x, xhat],)
                if t == T:
                    acc["paths"] += 1
                    acc["weight"] += wn
                    for s, c in enumerate(c2):
                        per_stage[s] += wn * c
                    continue
                for nt in range(b_w.shape[1]):
                    rec(t + 1, xs2, yts + (b_out[y, nt],), m_next, wn * b_w[y, nt], c2)

    rec(1, (), (), 0, 1.0, ())
    per_stage = [float(v) for v in per_stage]
    return EvalReport(expected=float(sum(per_stage)), per_stage=per_stage,
                      total_weight=float(acc["weight"]), paths=acc["paths"])


def evaluate_by_information_states(inst, design: StructuredDesign) -> EvalReport:
    """Same number as :func:`evaluate_exact`, via the information-state chain.

    The design's belief-keyed tables are re-keyed onto a fresh belief space by
    matching belief vectors.
    """
    space = BeliefSpace.for_instance(inst)
    pi1 = initial_info_state(inst, space)
    per_stage = []
    for t, st in enumerate(design.stages, start=1):
        c = {}
        for b in pi1.support_beliefs():
            src = st.belief_id(space.m[b])
            for x in range(inst.n_x):
                c[(x, b)] = st.encoder[(x, src)]
        pi2 = apply_1Q(pi1, c, inst.forward_matrix)
        per_stage.append(stage_cost(pi2, st.decoder, inst.distortion))
        if t < inst.horizon:
            pi1 = apply_3Q(apply_2Q(pi2, inst.backward_matrix), st.memory, inst.transition(t))
    per_stage = [float(v) for v in per_stage]
    return EvalReport(expected=float(sum(per_stage)), per_stage=per_stage, total_weight=1.0)


# ------------------------------------------------------------- Monte Carlo

def _uniforms(seed: int, n: int, horizon: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    return rng.random((n, horizon, 3))


def _draw(cdf_rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw; row ``i`` of ``cdf_rows`` is the CDF used for ``u[i]``."""
    idx = (u[:, None] >= cdf_rows).sum(axis=1)
    return np.minimum(idx, cdf_rows.shape[1] - 1)


def simulate(inst, design, n: int, seed: int) -> EvalReport:
    """Monte-Carlo estimate of the expected total distortion."""
    if n < 1:
        raise ValueError("sample count must be ≥ 1")
    hist = _as_history(inst, design)
    T, n_m = inst.horizon, inst.n_m
    u = _uniforms(seed, n, T)
    f_out, f_w = noise_law(inst.forward, inst.n_y)
    b_out, b_w = noise_law(inst.backward, inst.n_yt)
    f_cdf, b_cdf = np.cumsum(f_w, axis=1), np.cumsum(b_w, axis=1)
    rho = inst.distortion
    x = _draw(np.broadcast_to(np.cumsum(inst.source_initial), (n, inst.n_x)), u[:, 0, 0])
    xi = np.zeros(n, dtype=np.int64)      # row-major index of x_1..x_t
    yi = np.zeros(n, dtype=np.int64)      # row-major index of ytilde_1..ytilde_{t-1}
    m = np.zeros(n, dtype=np.int64)
    costs = np.zeros((n, T))
    for t in range(1, T + 1):
        st = hist.stages[t - 1]
        if t > 1:
            x = _draw(np.cumsum(inst.transition(t - 1), axis=1)[x], u[:, t - 1, 0])
        xi = xi * inst.n_x + x
        enc_idx = xi * inst.n_yt ** (t - 1) + yi if hist.feedback else xi
        z = np.asarray(st.encoder, dtype=np.int64)[enc_idx]
        noise = _draw(f_cdf[z], u[:, t - 1, 1])
        y = f_out[z, noise]
        cell = y * n_m + m
        xhat = np.asarray(st.decoder, dtype=np.int64)[cell]
        costs[:, t - 1] = rho[x, xhat]
        m = np.asarray(st.memory, dtype=np.int64)[cell]
        if t < T:
            nt = _draw(b_cdf[y], u[:, t - 1, 2])
            yi = yi * inst.n_yt + b_out[y, nt]
    totals = costs.sum(axis=1)
    mean = float(totals.mean())
    stderr = float(totals.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return EvalReport(expected=mean, per_stage=costs.mean(axis=0).tolist(), exact=False,
                      stderr=stderr, samples=n, seed=seed)


def trace(inst, design, seed: int) -> list:
    """One episode (episode 0 of ``simulate`` with the same seed) as events."""
    structured = isinstance(design, StructuredDesign)
    hist = _as_history(inst, design)
    T, n_m = inst.horizon, inst.n_m
    u = _uniforms(seed, 1, T)[0]
    f_out, f_w = noise_law(inst.forward, inst.n_y)
    b_out, b_w = noise_law(inst.backward, inst.n_yt)
    fwd, bwd = inst.forward_matrix, inst.backward_matrix
    events = []

    def draw(p, v):
        return int(_draw(np.cumsum(p)[None, :], np.array([v]))[0])

    xs, yts = (), ()
    m = 0
    b1 = np.zeros(n_m)
    b1[0] = 1.0
    for t in range(1, T + 1):
        st = hist.stages[t - 1]
        p = inst.source_initial if t == 1 else inst.transition(t - 1)[xs[-1]]
        x = draw(p, u[t - 1, 0])
        xs += (x,)
        events.append({"t": t, "var": "x", "value": x})
        if structured:
            events.append({"t": t, "var": "B1", "value": b1.tolist()})
        z = hist.encode(t, xs, yts, inst.n_x, inst.n_yt)
        events.append({"t": t, "var": "z", "value": z})
        n = draw(f_w[z], u[t - 1, 1])
        y = int(f_out[z, n])
        events.append({"t": t, "var": "n", "value": n})
        events.append({"t": t, "var": "y", "value": y})
        if structured:
            b2 = beliefs.belief_after_transmission(b1, z, fwd)
            events.append({"t": t, "var": "B2", "value": b2.tolist()})
        xhat = st.decoder[y * n_m + m]
        events.append({"t": t, "var": "xhat", "value": xhat})
        events.append({"t": t, "var": "distortion", "value": float(inst.distortion[x, xhat])})
        m = st.memory[y * n_m + m]
        events.append({"t": t, "var": "m", "value": m})
        if t < T:
            nt = draw(b_w[y], u[t - 1, 2])
            yt = int(b_out[y, nt])
            yts += (yt,)
            events.append({"t": t, "var": "ntilde", "value": nt})
            events.append({"t": t, "var": "ytilde", "value": yt})
            if structured:
                b3 = beliefs.belief_after_feedback(b2, yt, bwd)
                events.append({"t": t, "var": "B3", "value": b3.tolist()})
                b1 = beliefs.advance_belief_through_memory(b3, st.memory, n_m)
    return events
