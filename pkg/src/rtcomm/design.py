"""Designs (per-stage rule tables) and their JSON form.

Two encoder classes are supported:

* :class:`StructuredDesign` encoders map ``(x_t, encoder belief on M)`` to a
  channel input. Each stage carries the beliefs its table is keyed on.
* :class:`HistoryDesign` encoders map the raw history ``(x_1..x_t,
  ytilde_1..ytilde_{t-1})`` to a channel input. The past channel inputs are
  left out of the domain: with deterministic rules they are a function of
  the remaining history, so no achievable behaviour is lost. In
  ``no_feedback`` mode the domain is ``x_1..x_t`` only.

Decoder and memory tables are flat, index ``y * n_m + m``. At stage 1 the
incoming memory is the dummy symbol 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BeliefMismatchError, DimensionMismatchError, InstanceParseError
from .infostate import MERGE_TOL


def history_index(xs, yts, n_x: int, n_yt: int) -> int:
    """Row-major index of ``(x_1.., ytilde_1..)`` into a history table."""
    idx = 0
    for x in xs:
        idx = idx * n_x + x
    for yt in yts:
        idx = idx * n_yt + yt
    return idx


def history_table_size(t: int, n_x: int, n_yt: int, feedback: bool = True) -> int:
    return n_x ** t * (n_yt ** (t - 1) if feedback else 1)


def keep_memory_rule(n_y: int, n_m: int) -> tuple:
    """Canonical memory rule ``l(y, m) = m``; used where the rule is never read."""
    return tuple(m for _ in range(n_y) for m in range(n_m))


@dataclass(eq=False)
class StructuredStage:
    encoder: dict            # (x, belief_id) -> z
    beliefs: dict            # belief_id -> np.ndarray over M
    decoder: tuple
    memory: tuple

    def belief_id(self, vec) -> int:
        vec = np.asarray(vec, dtype=float)
        for b, v in self.beliefs.items():
            if np.max(np.abs(v - vec)) <= MERGE_TOL:
                return b
        raise BeliefMismatchError(
            f"belief {vec.tolist()} is not among the encoder's table beliefs")

    def encode(self, x: int, vec) -> int:
        return self.encoder[(x, self.belief_id(vec))]


@dataclass(eq=False)
class StructuredDesign:
    stages: list = field(default_factory=list)

    kind = "structured"

    @property
    def horizon(self):
        return len(self.stages)

    def to_dict(self, n_x: int) -> dict:
        stages = []
        for t, st in enumerate(self.stages, start=1):
            enc = [
                {"belief_id": int(b), "belief": st.beliefs[b].tolist(),
                 "z": [int(st.encoder[(x, b)]) for x in range(n_x)]}
                for b in sorted(st.beliefs)
            ]
            stages.append({"t": t, "encoder": enc,
                           "decoder": [int(v) for v in st.decoder],
                           "memory": [int(v) for v in st.memory]})
        return {"kind": self.kind, "stages": stages}


@dataclass(eq=False)
class HistoryStage:
    encoder: tuple
    decoder: tuple
    memory: tuple


@dataclass(eq=False)
class HistoryDesign:
    stages: list = field(default_factory=list)
    feedback: bool = True

    kind = "history"

    @property
    def horizon(self):
        return len(self.stages)

    def encode(self, t: int, xs, yts, n_x: int, n_yt: int) -> int:
        st = self.stages[t - 1]
        return st.encoder[history_index(xs, yts if self.feedback else (), n_x, n_yt)]

    def to_dict(self, n_x: int | None = None) -> dict:
        return {
            "kind": self.kind,
            "mode": "full" if self.feedback else "no_feedback",
            "stages": [
                {"t": t, "encoder": [int(v) for v in st.encoder],
                 "decoder": [int(v) for v in st.decoder],
                 "memory": [int(v) for v in st.memory]}
                for t, st in enumerate(self.stages, start=1)
            ],
        }


def design_to_dict(design, inst) -> dict:
    return design.to_dict(inst.n_x)


def _table(values, size, base, label):
    if not isinstance(values, list) or len(values) != size:
        n = len(values) if isinstance(values, list) else type(values).__name__
        raise DimensionMismatchError(f"{label} has {n} entries, expected {size}")
    for v in values:
        if not isinstance(v, int) or not 0 <= v < base:
            raise DimensionMismatchError(f"{label} entry {v!r} outside alphabet of size {base}")
    return tuple(values)


def design_from_dict(data: dict, inst):
    """Rebuild a design and check it against the instance alphabets."""
    if "design" in data and "stages" not in data:
        data = data["design"]
    try:
        kind = data["kind"]
        stages = data["stages"]
    except (KeyError, TypeError):
        raise InstanceParseError("design needs 'kind' and 'stages'") from None
    if len(stages) != inst.horizon:
        raise DimensionMismatchError(f"design has {len(stages)} stages, instance horizon is {inst.horizon}")
    ym = inst.n_y * inst.n_m
    try:
        if kind == "structured":
            out = []
            for t, st in enumerate(stages, start=1):
                enc, bel = {}, {}
                for entry in st["encoder"]:
                    b = int(entry["belief_id"])
                    vec = np.array(entry["belief"], dtype=float)
                    if vec.shape != (inst.n_m,):
                        raise DimensionMismatchError(
                            f"stage {t} belief {b} has length {vec.size}, expected {inst.n_m}")
                    bel[b] = vec
                    zs = _table(entry["z"], inst.n_x, inst.n_z, f"stage {t} encoder belief {b}")
                    for x, z in enumerate(zs):
                        enc[(x, b)] = z
                out.append(StructuredStage(
                    enc, bel,
                    _table(st["decoder"], ym, inst.n_xhat, f"stage {t} decoder"),
                    _table(st["memory"], ym, inst.n_m, f"stage {t} memory")))
            return StructuredDesign(out)
        if kind == "history":
            feedback = data.get("mode", "full") == "full"
            out = []
            for t, st in enumerate(stages, start=1):
                size = history_table_size(t, inst.n_x, inst.n_yt, feedback)
                out.append(HistoryStage(
                    _table(st["encoder"], size, inst.n_z, f"stage {t} encoder"),
                    _table(st["decoder"], ym, inst.n_xhat, f"stage {t} decoder"),
                    _table(st["memory"], ym, inst.n_m, f"stage {t} memory")))
            return HistoryDesign(out, feedback=feedback)
    except (KeyError, TypeError) as exc:
        raise InstanceParseError(f"malformed design: {exc}") from None
    raise InstanceParseError(f"unknown design kind {kind!r}")


def load_design(path, inst):
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InstanceParseError(f"{path}: {exc}") from None
    return design_from_dict(data, inst)


def save_design(design, inst, path) -> None:
    Path(path).write_text(json.dumps(design_to_dict(design, inst), indent=2) + "\n")
