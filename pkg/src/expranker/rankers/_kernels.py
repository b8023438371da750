"""BPR-SGD inner loops for the CD and PITF scorers.

Factor tables are passed as two explanation matrices: CD uses ``exp_a`` for
its single table and ignores ``exp_b``; PITF uses ``exp_a`` for the
user-side and ``exp_b`` for the item-side explanation factors.

``sgd_epoch`` dispatches to a scalar-loop numba kernel, or to a per-step
numpy loop when numba is disabled. Both apply the gradients of
:func:`bpr_grad`.
"""

import math

import numpy as np

from .._accel import NUMBA_ENABLED, maybe_njit

CLAMP = 35.0


def bpr_grad(pu, qi, a_e, a_f, b_e, b_f, is_pitf, lam):
    """Loss and gradients of one sampled BPR term plus its L2 penalty.

    Returns ``(loss, g_pu, g_qi, g_ae, g_af, g_be, g_bf)``; the ``b`` grads
    are zero for CD.
    """
    if is_pitf:
        x = pu @ (a_e - a_f) + qi @ (b_e - b_f)
    else:
        x = np.sum(pu * qi * (a_e - a_f))
    x = min(max(x, -CLAMP), CLAMP)
    reg = pu @ pu + qi @ qi + a_e @ a_e + a_f @ a_f
    if is_pitf:
        reg += b_e @ b_e + b_f @ b_f
    loss = math.log1p(math.exp(-x)) + lam * reg
    # d(-ln sigmoid(x))/dx = -sigmoid(-x)
    g = -1.0 / (1.0 + math.exp(x))
    two_lam = 2.0 * lam
    if is_pitf:
        return (
            loss,
            g * (a_e - a_f) + two_lam * pu,
            g * (b_e - b_f) + two_lam * qi,
            g * pu + two_lam * a_e,
            -g * pu + two_lam * a_f,
            g * qi + two_lam * b_e,
            -g * qi + two_lam * b_f,
        )
    diff = a_e - a_f
    pq = pu * qi
    zero = np.zeros_like(b_e)
    return (
        loss,
        g * qi * diff + two_lam * pu,
        g * pu * diff + two_lam * qi,
        g * pq + two_lam * a_e,
        -g * pq + two_lam * a_f,
        zero,
        zero.copy(),
    )


def _numpy_steps(P, Q, exp_a, exp_b, is_pitf, users, items, pos, neg, lam, lr):
    total = 0.0
    for t in range(users.shape[0]):
        u, i, e, f = users[t], items[t], pos[t], neg[t]
        b_e = exp_b[e] if is_pitf else exp_b[0]
        b_f = exp_b[f] if is_pitf else exp_b[0]
        loss, g_pu, g_qi, g_ae, g_af, g_be, g_bf = bpr_grad(
            P[u].copy(), Q[i].copy(), exp_a[e].copy(), exp_a[f].copy(), b_e.copy(), b_f.copy(), is_pitf, lam
        )
        total += loss
        P[u] -= lr * g_pu
        Q[i] -= lr * g_qi
        exp_a[e] -= lr * g_ae
        exp_a[f] -= lr * g_af
        if is_pitf:
            exp_b[e] -= lr * g_be
            exp_b[f] -= lr * g_bf
    return total


def _sgd_epoch_numpy(P, Q, exp_a, exp_b, is_pitf, users, items, pos, neg, lam, lr):
    # divergence is reported by the caller once the epoch is done
    with np.errstate(over="ignore", invalid="ignore"):
        return _numpy_steps(P, Q, exp_a, exp_b, is_pitf, users, items, pos, neg, lam, lr)


@maybe_njit
def _sgd_epoch_numba(P, Q, exp_a, exp_b, is_pitf, users, items, pos, neg, lam, lr):
    d = P.shape[1]
    two_lam = 2.0 * lam
    total = 0.0
    for t in range(users.shape[0]):
        u = users[t]
        i = items[t]
        e = pos[t]
        f = neg[t]
        x = 0.0
        reg = 0.0
        for k in range(d):
            pu = P[u, k]
            qi = Q[i, k]
            ae = exp_a[e, k]
            af = exp_a[f, k]
            if is_pitf:
                be = exp_b[e, k]
                bf = exp_b[f, k]
                x += pu * (ae - af) + qi * (be - bf)
                reg += be * be + bf * bf
            else:
                x += pu * qi * (ae - af)
            reg += pu * pu + qi * qi + ae * ae + af * af
        if x > CLAMP:
            x = CLAMP
        elif x < -CLAMP:
            x = -CLAMP
        total += math.log1p(math.exp(-x)) + lam * reg
        g = -1.0 / (1.0 + math.exp(x))
        for k in range(d):
            pu = P[u, k]
            qi = Q[i, k]
            ae = exp_a[e, k]
            af = exp_a[f, k]
            if is_pitf:
                be = exp_b[e, k]
                bf = exp_b[f, k]
                P[u, k] = pu - lr * (g * (ae - af) + two_lam * pu)
                Q[i, k] = qi - lr * (g * (be - bf) + two_lam * qi)
                exp_a[e, k] = ae - lr * (g * pu + two_lam * ae)
                exp_a[f, k] = af - lr * (-g * pu + two_lam * af)
                exp_b[e, k] = be - lr * (g * qi + two_lam * be)
                exp_b[f, k] = bf - lr * (-g * qi + two_lam * bf)
            else:
                P[u, k] = pu - lr * (g * qi * (ae - af) + two_lam * pu)
                Q[i, k] = qi - lr * (g * pu * (ae - af) + two_lam * qi)
                exp_a[e, k] = ae - lr * (g * pu * qi + two_lam * ae)
                exp_a[f, k] = af - lr * (-g * pu * qi + two_lam * af)
    return total


def sgd_epoch(P, Q, exp_a, exp_b, is_pitf, users, items, pos, neg, lam, lr, accelerated=None):
    """One in-place SGD pass over (u, i, e+, e-) quadruples; returns the summed pre-update loss."""
    if accelerated is None:
        accelerated = NUMBA_ENABLED
    fn = _sgd_epoch_numba if accelerated else _sgd_epoch_numpy
    return fn(P, Q, exp_a, exp_b, bool(is_pitf), users, items, pos, neg, float(lam), float(lr))
