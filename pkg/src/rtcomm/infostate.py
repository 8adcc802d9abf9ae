"""Information states and their linear dynamics.

An information state is a finite-support unconditional law over the
receiver's variables, the current source symbol and the encoder's belief.
Three kinds alternate within a stage:

* ``InfoState1``: atoms ``(x, m, b)`` just before encoding, ``b`` a belief on M
* ``InfoState2``: atoms ``(x, y, m, b)`` after transmission, ``b`` on Y x M
* ``InfoState3``: atoms ``(x, y, ytilde, m, b)`` after feedback, ``b`` on Y x M

``m`` is always the memory content *entering* the stage. Beliefs are stored
once in a :class:`BeliefSpace` and referenced by integer id.

Decision rules used here:

* encoder rule: ``dict`` mapping ``(x, belief_id) -> z``
* decoder rule: flat tuple, ``g[y * n_m + m] = xhat``
* memory rule: flat tuple, ``l[y * n_m + m] = m_next``
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from . import beliefs
from .errors import MissingRuleError, StageMismatchError

KEY_DIGITS = 12
MERGE_TOL = 1e-9
PRUNE_MASS = 1e-15
_SCALE = 10.0 ** KEY_DIGITS


def quantize(vec) -> tuple:
    return tuple(int(v) for v in np.rint(np.asarray(vec, dtype=float) * _SCALE))


class BeliefRegistry:
    """Append-only table of beliefs with dense integer ids.

    Lookup is by the 12-digit quantised key; on a miss, any stored belief
    within ``MERGE_TOL`` in sup-norm is reused and the new key aliased to it.
    Registration is atomic, so concurrent callers see one id per belief.
    """

    def __init__(self, dim: int):
        self.dim = dim
        self.values: list[np.ndarray] = []
        self.keys: list[tuple] = []
        self._by_key: dict[tuple, int] = {}
        self._lock = threading.Lock()

    def __len__(self):
        return len(self.values)

    def register(self, vec) -> int:
        vec = np.asarray(vec, dtype=float)
        key = quantize(vec)
        found = self._by_key.get(key)
        if found is not None:
            return found
        with self._lock:
            found = self._by_key.get(key)
            if found is not None:
                return found
            for i, v in enumerate(self.values):
                if np.max(np.abs(v - vec)) <= MERGE_TOL:
                    self._by_key[key] = i
                    return i
            i = len(self.values)
            self.values.append(vec.copy())
            self.keys.append(key)
            self._by_key[key] = i
            return i

    def find(self, vec, tol: float = MERGE_TOL) -> int | None:
        """Id of a stored belief within ``tol`` of ``vec``, without registering."""
        vec = np.asarray(vec, dtype=float)
        i = self._by_key.get(quantize(vec))
        if i is not None:
            return i
        for i, v in enumerate(self.values):
            if np.max(np.abs(v - vec)) <= tol:
                return i
        return None

    def __getitem__(self, i: int) -> np.ndarray:
        return self.values[i]


class BeliefSpace:
    """Belief registries for one solve, plus memoised belief transitions."""

    def __init__(self, n_x: int, n_y: int, n_yt: int, n_m: int):
        self.n_x, self.n_y, self.n_yt, self.n_m = n_x, n_y, n_yt, n_m
        self.m = BeliefRegistry(n_m)
        self.ym = BeliefRegistry(n_y * n_m)
        self._memo: dict = {}

    @classmethod
    def for_instance(cls, inst):
        return cls(inst.n_x, inst.n_y, inst.n_yt, inst.n_m)

    def _table(self, tag, matrix):
        # keep a reference to the matrix so its id() stays unique
        key = (tag, id(matrix))
        entry = self._memo.get(key)
        if entry is None:
            entry = self._memo[key] = (matrix, {})
        return entry[1]

    def transmit(self, b: int, z: int, fwd) -> int:
        memo = self._table("fwd", fwd)
        out = memo.get((b, z))
        if out is None:
            out = memo[(b, z)] = self.ym.register(
                beliefs.belief_after_transmission(self.m[b], z, fwd))
        return out

    def feedback(self, b: int, yt: int, bwd) -> int:
        memo = self._table("bwd", bwd)
        out = memo.get((b, yt))
        if out is None:
            out = memo[(b, yt)] = self.ym.register(
                beliefs.belief_after_feedback(self.ym[b], yt, bwd))
        return out

    def advance(self, b: int, rule: tuple) -> int:
        memo = self._table("mem", None)
        out = memo.get((b, rule))
        if out is None:
            out = memo[(b, rule)] = self.m.register(
                beliefs.advance_belief_through_memory(self.ym[b], rule, self.n_m))
        return out


@dataclass(eq=False)
class _InfoState:
    atoms: dict
    space: BeliefSpace = field(repr=False)

    kind = 0

    @property
    def n_x(self):
        return self.space.n_x

    @property
    def registry(self) -> BeliefRegistry:
        return self.space.m if self.kind == 1 else self.space.ym

    def total(self) -> float:
        return float(sum(self.atoms.values()))

    def support_beliefs(self) -> list[int]:
        return sorted({k[-1] for k in self.atoms})

    def x_marginal(self) -> np.ndarray:
        out = np.zeros(self.n_x)
        for k, p in self.atoms.items():
            out[k[0]] += p
        return out

    def ym_marginal(self) -> np.ndarray:
        """Law of (Y, M) flattened; only for kinds 2 and 3."""
        s = self.space
        out = np.zeros(s.n_y * s.n_m)
        for k, p in self.atoms.items():
            out[k[1] * s.n_m + k[-2]] += p
        return out

    def calibration_error(self) -> float:
        """Largest gap between an atom belief and the law it should match.

        For kind 1 the law is that of M given the belief id; for kinds 2 and 3
        it is the law of (Y, M) given the belief id.
        """
        s = self.space
        dim = s.n_m if self.kind == 1 else s.n_y * s.n_m
        cond: dict[int, np.ndarray] = {}
        for k, p in self.atoms.items():
            vec = cond.setdefault(k[-1], np.zeros(dim))
            if self.kind == 1:
                vec[k[1]] += p
            else:
                vec[k[1] * s.n_m + k[-2]] += p
        err = 0.0
        for b, vec in cond.items():
            tot = vec.sum()
            if tot > 0:
                err = max(err, float(np.max(np.abs(vec / tot - self.registry[b]))))
        return err

    def to_dict(self) -> dict:
        names = {1: ("x", "m"), 2: ("x", "y", "m"), 3: ("x", "y", "ytilde", "m")}[self.kind]
        atoms = []
        for k in sorted(self.atoms):
            entry = dict(zip(names, k[:-1]))
            entry["belief"] = k[-1]
            entry["mass"] = self.atoms[k]
            atoms.append(entry)
        return {
            "kind": self.kind,
            "atoms": atoms,
            "beliefs": {str(b): self.registry[b].tolist() for b in self.support_beliefs()},
        }


class InfoState1(_InfoState):
    kind = 1


class InfoState2(_InfoState):
    kind = 2


class InfoState3(_InfoState):
    kind = 3


def _pruned(acc: dict) -> dict:
    return {k: p for k, p in acc.items() if p >= PRUNE_MASS}


def initial_info_state(inst, space: BeliefSpace | None = None) -> InfoState1:
    """Stage-1 state: memory at the dummy symbol 0, encoder sure of it."""
    space = space or BeliefSpace.for_instance(inst)
    delta = np.zeros(inst.n_m)
    delta[0] = 1.0
    b0 = space.m.register(delta)
    atoms = {(x, 0, b0): float(p) for x, p in enumerate(inst.source_initial) if p > 0}
    return InfoState1(atoms, space)


def apply_1Q(pi1: InfoState1, c: dict, fwd) -> InfoState2:
    """Transmission under encoder rule ``c``; returns the post-channel state."""
    space = pi1.space
    acc: dict = {}
    for (x, m, b), p in pi1.atoms.items():
        try:
            z = c[(x, b)]
        except KeyError:
            raise MissingRuleError(f"encoder rule has no entry for (x={x}, belief={b})") from None
        b2 = space.transmit(b, z, fwd)
        row = fwd[z]
        for y in range(space.n_y):
            w = row[y]
            if w > 0:
                key = (x, y, m, b2)
                acc[key] = acc.get(key, 0.0) + p * w
    return InfoState2(_pruned(acc), space)


def apply_2Q(pi2: InfoState2, bwd) -> InfoState3:
    """Feedback step. Takes no decision rule: decoding never steers the state."""
    space = pi2.space
    acc: dict = {}
    for (x, y, m, b), p in pi2.atoms.items():
        row = bwd[y]
        for yt in range(space.n_yt):
            w = row[yt]
            if w > 0:
                key = (x, y, yt, m, space.feedback(b, yt, bwd))
                acc[key] = acc.get(key, 0.0) + p * w
    return InfoState3(_pruned(acc), space)


def apply_3Q(pi3: InfoState3, l: tuple, src_next) -> InfoState1:
    """Memory update under rule ``l`` followed by one source transition."""
    space = pi3.space
    n_m = space.n_m
    l = tuple(l)
    acc: dict = {}
    for (x, y, yt, m, b), p in pi3.atoms.items():
        m_next = l[y * n_m + m]
        b1 = space.advance(b, l)
        row = src_next[x]
        for x_next in range(space.n_x):
            w = row[x_next]
            if w > 0:
                key = (x_next, m_next, b1)
                acc[key] = acc.get(key, 0.0) + p * w
    return InfoState1(_pruned(acc), space)


def stage_cost(pi2: InfoState2, g, rho) -> float:
    """Expected distortion of decoder ``g`` against the law ``pi2``."""
    n_m = pi2.space.n_m
    return float(sum(p * rho[x, g[y * n_m + m]] for (x, y, m, _), p in pi2.atoms.items()))


def canonical_key(state) -> bytes:
    """Order-independent key; equal up to 12-digit rounding of masses."""
    reg = state.registry
    items = sorted(
        (k[:-1], reg.keys[k[-1]], int(np.rint(p * _SCALE)))
        for k, p in state.atoms.items()
    )
    return repr((state.kind, tuple(items))).encode()


def mix(states, weights):
    """Convex combination of same-kind states sharing one belief space."""
    if not states:
        raise ValueError("mix needs at least one state")
    kind = type(states[0])
    space = states[0].space
    for s in states:
        if type(s) is not kind:
            raise StageMismatchError(f"cannot mix {kind.__name__} with {type(s).__name__}")
        if s.space is not space:
            raise ValueError("states must share one BeliefSpace")
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (len(states),) or np.any(weights < 0) or abs(weights.sum() - 1) > 1e-12:
        raise ValueError(f"weights {weights.tolist()} are not a PMF over {len(states)} states")
    acc: dict = {}
    for s, w in zip(states, weights):
        if w == 0:
            continue
        for k, p in s.atoms.items():
            acc[k] = acc.get(k, 0.0) + w * p
    return kind(acc, space)
