"""Reference computations straight from the generative model.

Nothing here uses the package's belief or information-state code: beliefs
are obtained by conditioning the full joint over histories, and joint laws
by summing path probabilities.
"""

import itertools

import numpy as np


def _path_prob(inst, xs):
    p = inst.source_initial[xs[0]]
    for s in range(1, len(xs)):
        p *= inst.transition(s)[xs[s - 1], xs[s]]
    return p


def encoder_belief(inst, zs, yts, mem_rules):
    """Pr(M_{s} = . | z^s, ytilde^s) by enumerating y^s."""
    n_m = inst.n_m
    fwd, bwd = inst.forward_matrix, inst.backward_matrix
    out = np.zeros(n_m)
    if not zs:
        out[0] = 1.0
        return out
    for ys in itertools.product(range(inst.n_y), repeat=len(zs)):
        w = 1.0
        m = 0
        for s, (z, y, yt) in enumerate(zip(zs, ys, yts)):
            w *= fwd[z, y] * bwd[y, yt]
            m = mem_rules[s][y * n_m + m]
        out[m] += w
    tot = out.sum()
    return out / tot if tot > 0 else None


def info_state1_by_enumeration(inst, encoder, mem_rules, t):
    """Law of ``(X_t, M_{t-1}, encoder belief)`` at stage ``t``.

    ``encoder(s, x, belief)`` returns the channel input at stage ``s``.
    Returned as ``{(x, m, rounded belief tuple): mass}``.
    """
    fwd, bwd = inst.forward_matrix, inst.backward_matrix
    n_m = inst.n_m
    out = {}
    for xs in itertools.product(range(inst.n_x), repeat=t):
        px = _path_prob(inst, xs)
        if px == 0:
            continue
        for yts in itertools.product(range(inst.n_yt), repeat=t - 1):
            zs = []
            for s in range(t - 1):
                b = encoder_belief(inst, zs, yts[:s], mem_rules)
                if b is None:
                    break
                zs.append(encoder(s + 1, xs[s], b))
            belief = encoder_belief(inst, zs, yts, mem_rules) if len(zs) == t - 1 else None
            if belief is None:
                continue   # feedback prefix has probability zero
            key_b = tuple(np.round(belief, 9))
            for ys in itertools.product(range(inst.n_y), repeat=t - 1):
                w = px
                m = 0
                for s in range(t - 1):
                    w *= fwd[zs[s], ys[s]] * bwd[ys[s], yts[s]]
                    m = mem_rules[s][ys[s] * n_m + m]
                if w > 0:
                    key = (xs[-1], m, key_b)
                    out[key] = out.get(key, 0.0) + w
    return out


def by_belief_value(state):
    """Re-key a package information state on rounded belief vectors."""
    out = {}
    for k, p in state.atoms.items():
        key = k[:-1] + (tuple(np.round(state.registry[k[-1]], 9)),)
        out[key] = out.get(key, 0.0) + p
    return out
