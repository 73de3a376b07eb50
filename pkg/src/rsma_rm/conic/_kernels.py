"""Cone arithmetic for the interior-point solver, numpy implementation.

Vectors live in the product cone ``R^l_+ x Q^{m_1} x ... x Q^{m_N}`` and are
stored packed: the ``l`` orthant entries first, then each second-order cone
block with its scalar head followed by its tail.  Every function takes the
layout as ``(l, qstarts, qsizes)`` where ``qstarts`` are absolute offsets of
the cone heads.

The compiled module ``_ckernels`` exposes the same functions with the same
signatures; ``rsma_rm.conic.kernels`` picks one at import time.
"""

import numpy as np

__all__ = [
    "max_step",
    "nt_scaling",
    "apply_scaling",
    "jordan_prod",
    "jordan_div",
    "identity",
    "shift_distance",
]


def _segments(qstarts, qsizes):
    # segment id of every SOC row, counted from the first SOC row
    qsizes = np.asarray(qsizes, dtype=np.intp)
    seg = np.repeat(np.arange(len(qsizes)), qsizes)
    return seg


def _soc_parts(x, l, qstarts, qsizes):
    xq = x[l:]
    rel = np.asarray(qstarts, dtype=np.intp) - l
    heads = xq[rel]
    tail = xq.copy()
    tail[rel] = 0.0
    return heads, tail, rel


def identity(l, qstarts, qsizes):
    m = l + int(np.sum(qsizes))
    e = np.zeros(m)
    e[:l] = 1.0
    e[np.asarray(qstarts, dtype=np.intp)] = 1.0
    return e


def shift_distance(x, l, qstarts, qsizes):
    """Smallest ``t`` with ``x + t*e`` in the closed cone."""
    t = -np.inf
    if l:
        t = max(t, -float(np.min(x[:l])))
    if len(qsizes):
        heads, tail, rel = _soc_parts(x, l, qstarts, qsizes)
        nrm = np.sqrt(np.add.reduceat(tail * tail, rel)) if len(rel) else np.zeros(0)
        t = max(t, float(np.max(nrm - heads)))
    return t


def max_step(x, dx, l, qstarts, qsizes):
    """Largest ``a >= 0`` with ``x + a*dx`` in the cone (``inf`` if unbounded).

    ``x`` must lie in the interior.
    """
    amax = np.inf
    if l:
        d = dx[:l]
        neg = d < 0
        if np.any(neg):
            amax = float(np.min(-x[:l][neg] / d[neg]))
    if len(qsizes):
        x0, x1, rel = _soc_parts(x, l, qstarts, qsizes)
        d0, d1, _ = _soc_parts(dx, l, qstarts, qsizes)
        nx1 = np.sqrt(np.add.reduceat(x1 * x1, rel))
        c = (x0 - nx1) * (x0 + nx1)
        a = d0 * d0 - np.add.reduceat(d1 * d1, rel)
        b = x0 * d0 - np.add.reduceat(x1 * d1, rel)
        den = np.sqrt(np.maximum(b * b - a * c, 0.0)) - b
        pos = den > 0
        if np.any(pos):
            amax = min(amax, float(np.min(c[pos] / den[pos])))
    return amax


def nt_scaling(s, z, l, qstarts, qsizes):
    """Nesterov-Todd scaling for strictly feasible ``s`` and ``z``.

    Returns ``(d, beta, wbar, lam)``: orthant diagonal, per-cone scale,
    packed normalized scaling points for the SOC blocks, and the scaled
    point ``lam = W z = W^{-1} s``.
    """
    d = np.sqrt(s[:l] / z[:l])
    lam = np.empty_like(s)
    lam[:l] = np.sqrt(s[:l] * z[:l])
    nq = len(qsizes)
    if nq == 0:
        return d, np.zeros(0), np.zeros(0), lam
    seg = _segments(qstarts, qsizes)
    s0, s1, rel = _soc_parts(s, l, qstarts, qsizes)
    z0, z1, _ = _soc_parts(z, l, qstarts, qsizes)
    ns1 = np.sqrt(np.add.reduceat(s1 * s1, rel))
    nz1 = np.sqrt(np.add.reduceat(z1 * z1, rel))
    sjs = np.sqrt((s0 - ns1) * (s0 + ns1))
    zjz = np.sqrt((z0 - nz1) * (z0 + nz1))
    sq = s[l:] / sjs[seg]
    zq = z[l:] / zjz[seg]
    gamma = np.sqrt(0.5 * (1.0 + np.add.reduceat(sq * zq, rel)))
    jz = -zq
    jz[rel] = zq[rel]
    wbar = (sq + jz) / (2.0 * gamma[seg])
    beta = np.sqrt(sjs / zjz)
    lam[l:] = _apply_soc(beta, wbar, z[l:], rel, seg, inverse=False)
    return d, beta, wbar, lam


def _apply_soc(beta, wbar, xq, rel, seg, inverse):
    w0 = wbar[rel]
    wt = wbar.copy()
    wt[rel] = 0.0
    if xq.ndim == 1:
        x0 = xq[rel]
        xt = xq.copy()
        xt[rel] = 0.0
        dot = np.add.reduceat(wt * xt, rel)
        if inverse:
            top = (w0 * x0 - dot) / beta
            coef = (-x0 + dot / (1.0 + w0)) / beta
            out = xt / beta[seg] + wt * coef[seg]
        else:
            top = beta * (w0 * x0 + dot)
            coef = beta * (x0 + dot / (1.0 + w0))
            out = beta[seg] * xt + wt * coef[seg]
        out[rel] = top
        return out
    x0 = xq[rel, :]
    xt = xq.copy()
    xt[rel, :] = 0.0
    dot = np.add.reduceat(wt[:, None] * xt, rel, axis=0)
    if inverse:
        top = (w0[:, None] * x0 - dot) / beta[:, None]
        coef = (-x0 + dot / (1.0 + w0)[:, None]) / beta[:, None]
        out = xt / beta[seg][:, None] + wt[:, None] * coef[seg]
    else:
        top = beta[:, None] * (w0[:, None] * x0 + dot)
        coef = beta[:, None] * (x0 + dot / (1.0 + w0)[:, None])
        out = beta[seg][:, None] * xt + wt[:, None] * coef[seg]
    out[rel, :] = top
    return out


def apply_scaling(d, beta, wbar, x, l, qstarts, qsizes, inverse=False):
    """Multiply ``x`` (vector or row-blocked matrix) by ``W`` or ``W^{-1}``."""
    out = np.empty_like(x, dtype=float)
    if x.ndim == 1:
        out[:l] = x[:l] / d if inverse else x[:l] * d
    else:
        out[:l] = x[:l] / d[:, None] if inverse else x[:l] * d[:, None]
    if len(qsizes):
        rel = np.asarray(qstarts, dtype=np.intp) - l
        seg = _segments(qstarts, qsizes)
        out[l:] = _apply_soc(beta, wbar, x[l:], rel, seg, inverse)
    return out


def jordan_prod(u, v, l, qstarts, qsizes):
    out = u * v
    if len(qsizes):
        rel = np.asarray(qstarts, dtype=np.intp) - l
        seg = _segments(qstarts, qsizes)
        uq, vq = u[l:], v[l:]
        u0, v0 = uq[rel], vq[rel]
        tail = u0[seg] * vq + v0[seg] * uq
        tail[rel] = np.add.reduceat(uq * vq, rel)
        out[l:] = tail
    return out


def jordan_div(lam, d, l, qstarts, qsizes):
    """Solve ``lam o x = d`` for ``x`` (``lam`` in the cone interior)."""
    out = np.empty_like(d)
    out[:l] = d[:l] / lam[:l]
    if len(qsizes):
        rel = np.asarray(qstarts, dtype=np.intp) - l
        seg = _segments(qstarts, qsizes)
        lq, dq = lam[l:], d[l:]
        l0, d0 = lq[rel], dq[rel]
        lt = lq.copy()
        lt[rel] = 0.0
        dt = dq.copy()
        dt[rel] = 0.0
        nl = np.sqrt(np.add.reduceat(lt * lt, rel))
        x0 = (l0 * d0 - np.add.reduceat(lt * dt, rel)) / ((l0 - nl) * (l0 + nl))
        tail = (dt - x0[seg] * lt) / l0[seg]
        tail[rel] = x0
        out[l:] = tail
    return out
