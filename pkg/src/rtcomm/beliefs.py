"""Encoder belief dynamics and the receiver's posterior on the source.

The encoder's belief about the receiver lives on ``M`` right before
encoding, and on ``Y x M`` after transmission and after feedback. Vectors
over ``Y x M`` are flat, index ``y * n_m + m``.
"""

from __future__ import annotations

import numpy as np

from .errors import ZeroLikelihoodError, ZeroMassError

LIKELIHOOD_FLOOR = 1e-300
POSTERIOR_FLOOR = 1e-12


def ym_index(y: int, m: int, n_m: int) -> int:
    return y * n_m + m


def belief_after_transmission(b1, z: int, fwd: np.ndarray) -> np.ndarray:
    """Belief on ``(Y, M)`` once ``z`` has been sent: ``fwd[z, y] * b1[m]``."""
    return np.outer(fwd[z], b1).ravel()


def belief_after_feedback(b2, ytilde: int, bwd: np.ndarray) -> np.ndarray:
    """Bayes update of a ``(Y, M)`` belief on the feedback symbol ``ytilde``."""
    b2 = np.asarray(b2, dtype=float)
    n_m = b2.shape[0] // bwd.shape[0]
    like = np.repeat(bwd[:, ytilde], n_m)
    joint = like * b2
    d = joint.sum()
    if d <= LIKELIHOOD_FLOOR:
        raise ZeroLikelihoodError(
            f"feedback symbol {ytilde} has likelihood {d!r} under the current belief")
    return joint / d


def advance_belief_through_memory(b3, rule, n_m: int) -> np.ndarray:
    """Push a ``(Y, M)`` belief through a memory update rule.

    ``rule`` is a flat table ``rule[y * n_m + m] = m'``. Works on
    unnormalised vectors as well, which keeps the map linear.
    """
    out = np.zeros(n_m)
    np.add.at(out, np.asarray(rule), np.asarray(b3, dtype=float))
    return out


def receiver_posterior(pi2, y: int, m: int) -> np.ndarray:
    """``Pr(X = . | Y = y, M_prev = m)`` read off an information state.

    ``pi2`` is an :class:`~rtcomm.infostate.InfoState2`; its atoms are keyed
    ``(x, y, m, belief)``.
    """
    post = np.zeros(pi2.n_x)
    for (x, yy, mm, _), p in pi2.atoms.items():
        if yy == y and mm == m:
            post[x] += p
    mass = post.sum()
    if mass <= POSTERIOR_FLOOR:
        raise ZeroMassError(f"observation (y={y}, m={m}) has mass {mass!r}")
    return post / mass


def bayes_estimate(posterior, rho: np.ndarray) -> int:
    """Smallest index minimising posterior expected distortion."""
    return int(np.argmin(posterior @ rho))
