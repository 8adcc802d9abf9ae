"""Problem instances: alphabets, source law, channels and distortion.

All alphabets are ``range(n)`` for the stated size. Channels are
time-invariant. A channel is given either as a stochastic matrix
``P[input, output]`` or functionally as an output table ``h[input, noise]``
plus a noise PMF; the functional form is kept next to its compiled matrix so
that exact evaluation can enumerate noise realisations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .errors import InstanceParseError, InstanceValidationError

SUM_TOL = 1e-12
NEG_FLOOR = -1e-15


def _clamp(a):
    a = np.array(a, dtype=float)
    a[(a < 0) & (a > NEG_FLOOR)] = 0.0
    return a


@dataclass(eq=False)
class ChannelSpec:
    """Either ``matrix`` or the pair (``table``, ``noise``) is set."""

    matrix: np.ndarray | None = None
    table: np.ndarray | None = None
    noise: np.ndarray | None = None

    @classmethod
    def from_matrix(cls, matrix):
        return cls(matrix=_clamp(matrix))

    @classmethod
    def from_function(cls, table, noise):
        return cls(table=np.array(table, dtype=np.int64), noise=_clamp(noise))

    @property
    def is_functional(self):
        return self.matrix is None

    @property
    def n_inputs(self):
        return (self.table if self.is_functional else self.matrix).shape[0]

    def to_dict(self):
        if self.is_functional:
            return {"function": {"table": self.table.tolist(), "noise": self.noise.tolist()}}
        return {"matrix": self.matrix.tolist()}


def compile_channel(spec: ChannelSpec, n_out: int | None = None) -> np.ndarray:
    """Transition matrix of a channel spec.

    For a functional spec, ``P[z, y] = sum(P_N[n] for n with h(z, n) == y)``.
    A matrix spec is returned unchanged.
    """
    if not spec.is_functional:
        return spec.matrix
    table, noise = spec.table, spec.noise
    if n_out is None:
        n_out = int(table.max()) + 1
    out = np.zeros((table.shape[0], n_out))
    for z in range(table.shape[0]):
        for n, y in enumerate(table[z]):
            out[z, y] += noise[n]
    return out


def noise_law(spec: ChannelSpec, n_out: int | None = None):
    """Return ``(outputs, weights)``, both shaped ``(n_inputs, n_noise)``.

    ``outputs[z, n]`` is the channel output for noise symbol ``n`` and
    ``weights[z, n]`` its probability. Matrix specs are put in canonical
    functional form: the noise symbol *is* the output, weighted by
    ``P[z, y]``.
    """
    if spec.is_functional:
        outputs = spec.table
        weights = np.broadcast_to(spec.noise, outputs.shape).copy()
        return outputs, weights
    n_in, n_y = spec.matrix.shape
    outputs = np.broadcast_to(np.arange(n_y), (n_in, n_y)).copy()
    return outputs, spec.matrix.copy()


@dataclass(eq=False)
class Instance:
    n_x: int
    n_z: int
    n_y: int
    n_yt: int
    n_m: int
    n_xhat: int
    horizon: int
    source_initial: np.ndarray
    source_transitions: list
    forward: ChannelSpec
    backward: ChannelSpec
    distortion: np.ndarray
    name: str = field(default="")

    @cached_property
    def forward_matrix(self) -> np.ndarray:
        return compile_channel(self.forward, self.n_y)

    @cached_property
    def backward_matrix(self) -> np.ndarray:
        return compile_channel(self.backward, self.n_yt)

    @property
    def rho_max(self) -> float:
        return float(self.distortion.max())

    def transition(self, t: int) -> np.ndarray:
        """Source transition matrix from stage ``t`` to ``t + 1`` (1-based)."""
        return self.source_transitions[t - 1]

    def source_marginals(self):
        """List of the marginal PMFs of ``X_1 .. X_T``."""
        p = self.source_initial
        out = [p]
        for t in range(1, self.horizon):
            p = p @ self.transition(t)
            out.append(p)
        return out

    def guessing_bound(self) -> float:
        """Cost of the best constant estimate at every stage (no channel use)."""
        return float(sum(np.min(p @ self.distortion) for p in self.source_marginals()))

    def sizes(self):
        return {"X": self.n_x, "Z": self.n_z, "Y": self.n_y, "Ytilde": self.n_yt,
                "M": self.n_m, "Xhat": self.n_xhat}


def make_instance(initial, transition, forward, backward, distortion, horizon,
                  n_m=2, name=""):
    """Convenience constructor inferring alphabet sizes from the matrices.

    ``transition`` is a single stationary matrix or a list of ``horizon - 1``
    matrices. ``forward``/``backward`` are matrices or :class:`ChannelSpec`.
    """
    fwd = forward if isinstance(forward, ChannelSpec) else ChannelSpec.from_matrix(forward)
    bwd = backward if isinstance(backward, ChannelSpec) else ChannelSpec.from_matrix(backward)
    initial = _clamp(initial)
    distortion = np.array(distortion, dtype=float)
    n_y = compile_channel(fwd).shape[1] if fwd.is_functional else fwd.matrix.shape[1]
    n_yt = compile_channel(bwd).shape[1] if bwd.is_functional else bwd.matrix.shape[1]
    if isinstance(transition, (list, tuple)) and len(transition) and np.ndim(transition[0]) == 2:
        transitions = [_clamp(m) for m in transition]
    else:
        transitions = [_clamp(transition) for _ in range(max(horizon - 1, 0))]
    return Instance(
        n_x=len(initial), n_z=fwd.n_inputs, n_y=n_y, n_yt=n_yt, n_m=n_m,
        n_xhat=distortion.shape[1], horizon=horizon, source_initial=initial,
        source_transitions=transitions, forward=fwd, backward=bwd,
        distortion=distortion, name=name,
    )


def bsc(p: float) -> np.ndarray:
    """Binary symmetric channel (or symmetric flip chain) with crossover ``p``."""
    return np.array([[1.0 - p, p], [p, 1.0 - p]])


def hamming(n: int, n_hat: int | None = None) -> np.ndarray:
    n_hat = n if n_hat is None else n_hat
    return np.array([[0.0 if x == xh else 1.0 for xh in range(n_hat)] for x in range(n)])


# ---------------------------------------------------------------- validation

def _check_pmf(vec, label, size, out):
    vec = np.asarray(vec, dtype=float)
    if vec.ndim != 1 or vec.shape[0] != size:
        out.append(f"{label} has length {vec.shape[0] if vec.ndim == 1 else vec.shape}, expected {size}")
        return
    for i, v in enumerate(vec):
        if not np.isfinite(v) or v < 0:
            out.append(f"{label}[{i}] = {v!r} is negative or not finite")
    s = float(vec.sum())
    if abs(s - 1.0) > SUM_TOL:
        out.append(f"{label} sums to {s!r} (off by {s - 1.0:.3g}), expected 1 within {SUM_TOL:g}")


def _check_matrix(mat, label, n_rows, n_cols, out):
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape != (n_rows, n_cols):
        out.append(f"{label} has shape {mat.shape}, expected ({n_rows}, {n_cols})")
        return
    for r in range(n_rows):
        _check_pmf(mat[r], f"{label}[{r}]", n_cols, out)


def _check_channel(spec, label, n_in, n_out, out):
    if spec.is_functional:
        table = np.asarray(spec.table)
        if table.ndim != 2 or table.shape[0] != n_in:
            out.append(f"{label}.function.table has shape {table.shape}, expected {n_in} rows")
            return
        _check_pmf(spec.noise, f"{label}.function.noise", table.shape[1], out)
        for z in range(table.shape[0]):
            for n in range(table.shape[1]):
                if not 0 <= table[z, n] < n_out:
                    out.append(f"{label}.function.table[{z}][{n}] = {table[z, n]} is outside the "
                               f"output alphabet of size {n_out}")
    else:
        _check_matrix(spec.matrix, f"{label}.matrix", n_in, n_out, out)


def validate_instance(inst: Instance) -> list[str]:
    """Return a list of human-readable invariant violations (empty if valid)."""
    out: list[str] = []
    for key, n in inst.sizes().items():
        if not isinstance(n, (int, np.integer)) or n < 1:
            out.append(f"alphabets.{key} must be a positive integer, got {n!r}")
    if out:
        return out
    if inst.horizon < 1:
        out.append("horizon must be ≥ 1")
    _check_pmf(inst.source_initial, "source.initial", inst.n_x, out)
    expected = max(inst.horizon - 1, 0)
    if len(inst.source_transitions) != expected:
        out.append(f"source.transitions has {len(inst.source_transitions)} matrices, expected {expected}")
    for t, mat in enumerate(inst.source_transitions):
        _check_matrix(mat, f"source.transitions[{t}]", inst.n_x, inst.n_x, out)
    _check_channel(inst.forward, "forward", inst.n_z, inst.n_y, out)
    _check_channel(inst.backward, "backward", inst.n_y, inst.n_yt, out)
    rho = np.asarray(inst.distortion, dtype=float)
    if rho.shape != (inst.n_x, inst.n_xhat):
        out.append(f"distortion has shape {rho.shape}, expected ({inst.n_x}, {inst.n_xhat})")
    else:
        for x in range(rho.shape[0]):
            for xh in range(rho.shape[1]):
                v = rho[x, xh]
                if not np.isfinite(v) or v < 0:
                    out.append(f"distortion[{x}][{xh}] = {v!r} must be finite and ≥ 0")
    return out


# ----------------------------------------------------------------- file I/O

def _schema():
    text = resources.files("rtcomm").joinpath("schemas/instance.schema.json").read_text()
    return json.loads(text)


def instance_from_dict(data: dict, name: str = "") -> Instance:
    """Build an :class:`Instance` from parsed JSON (no numeric validation)."""
    try:
        jsonschema.validate(data, _schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InstanceParseError(f"{where}: {exc.message}") from None
    a = data["alphabets"]
    horizon = data["horizon"]
    src = data["source"]
    if "transitions" in src:
        transitions = [_clamp(m) for m in src["transitions"]]
    else:
        transitions = [_clamp(src["transition"]) for _ in range(max(horizon - 1, 0))]

    def channel(d):
        if "matrix" in d:
            return ChannelSpec.from_matrix(d["matrix"])
        return ChannelSpec.from_function(d["function"]["table"], d["function"]["noise"])

    try:
        return Instance(
            n_x=a["X"], n_z=a["Z"], n_y=a["Y"], n_yt=a["Ytilde"], n_m=a["M"], n_xhat=a["Xhat"],
            horizon=horizon, source_initial=_clamp(src["initial"]),
            source_transitions=transitions, forward=channel(data["forward"]),
            backward=channel(data["backward"]),
            distortion=np.array(data["distortion"], dtype=float), name=name,
        )
    except ValueError as exc:  # ragged arrays
        raise InstanceParseError(str(exc)) from None


def instance_to_dict(inst: Instance) -> dict:
    return {
        "alphabets": inst.sizes(),
        "horizon": inst.horizon,
        "source": {
            "initial": inst.source_initial.tolist(),
            "transitions": [m.tolist() for m in inst.source_transitions],
        },
        "forward": inst.forward.to_dict(),
        "backward": inst.backward.to_dict(),
        "distortion": inst.distortion.tolist(),
    }


def load_instance(path) -> Instance:
    """Parse and validate an instance file.

    Raises :class:`InstanceParseError` for malformed files and
    :class:`InstanceValidationError` listing every violated invariant.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InstanceParseError(f"{path}: {exc}") from None
    inst = instance_from_dict(data, name=path.stem)
    violations = validate_instance(inst)
    if violations:
        raise InstanceValidationError(violations)
    return inst


def save_instance(inst: Instance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=2) + "\n")
