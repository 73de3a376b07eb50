# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled cone kernels; see ``_kernels.py`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, INFINITY

cnp.import_array()


def identity(Py_ssize_t l, qstarts, qsizes):
    cdef cnp.intp_t[:] st = np.asarray(qstarts, dtype=np.intp)
    cdef cnp.intp_t[:] sz = np.asarray(qsizes, dtype=np.intp)
    cdef Py_ssize_t m = l, i
    for i in range(sz.shape[0]):
        m += sz[i]
    out = np.zeros(m)
    cdef double[:] e = out
    for i in range(l):
        e[i] = 1.0
    for i in range(st.shape[0]):
        e[st[i]] = 1.0
    return out


def shift_distance(double[:] x, Py_ssize_t l, qstarts, qsizes):
    cdef cnp.intp_t[:] st = np.asarray(qstarts, dtype=np.intp)
    cdef cnp.intp_t[:] sz = np.asarray(qsizes, dtype=np.intp)
    cdef double t = -INFINITY, nrm
    cdef Py_ssize_t i, k, j0
    for i in range(l):
        if -x[i] > t:
            t = -x[i]
    for k in range(st.shape[0]):
        j0 = st[k]
        nrm = 0.0
        for i in range(j0 + 1, j0 + sz[k]):
            nrm += x[i] * x[i]
        nrm = sqrt(nrm) - x[j0]
        if nrm > t:
            t = nrm
    return t


def max_step(double[:] x, double[:] dx, Py_ssize_t l, qstarts, qsizes):
    cdef cnp.intp_t[:] st = np.asarray(qstarts, dtype=np.intp)
    cdef cnp.intp_t[:] sz = np.asarray(qsizes, dtype=np.intp)
    cdef double amax = INFINITY, a, b, c, nx1, den, r
    cdef Py_ssize_t i, k, j0
    for i in range(l):
        if dx[i] < 0:
            r = -x[i] / dx[i]
            if r < amax:
                amax = r
    for k in range(st.shape[0]):
        j0 = st[k]
        nx1 = 0.0
        a = dx[j0] * dx[j0]
        b = x[j0] * dx[j0]
        for i in range(j0 + 1, j0 + sz[k]):
            nx1 += x[i] * x[i]
            a -= dx[i] * dx[i]
            b -= x[i] * dx[i]
        nx1 = sqrt(nx1)
        c = (x[j0] - nx1) * (x[j0] + nx1)
        den = b * b - a * c
        if den < 0:
            den = 0.0
        den = sqrt(den) - b
        if den > 0:
            r = c / den
            if r < amax:
                amax = r
    return amax


cdef void _soc_apply_vec(double beta, double[:] w, double[:] x, double[:] out,
                         Py_ssize_t j0, Py_ssize_t m, bint inverse) noexcept nogil:
    cdef double w0 = w[j0], x0 = x[j0], dot = 0.0, coef
    cdef Py_ssize_t i
    for i in range(j0 + 1, j0 + m):
        dot += w[i] * x[i]
    if inverse:
        out[j0] = (w0 * x0 - dot) / beta
        coef = (-x0 + dot / (1.0 + w0)) / beta
        for i in range(j0 + 1, j0 + m):
            out[i] = x[i] / beta + w[i] * coef
    else:
        out[j0] = beta * (w0 * x0 + dot)
        coef = beta * (x0 + dot / (1.0 + w0))
        for i in range(j0 + 1, j0 + m):
            out[i] = beta * x[i] + w[i] * coef


def nt_scaling(double[:] s, double[:] z, Py_ssize_t l, qstarts, qsizes):
    cdef cnp.intp_t[:] st = np.asarray(qstarts, dtype=np.intp)
    cdef cnp.intp_t[:] sz = np.asarray(qsizes, dtype=np.intp)
    cdef Py_ssize_t m = s.shape[0], nq = st.shape[0], i, k, j0, mk
    d_arr = np.empty(l)
    lam_arr = np.empty(m)
    beta_arr = np.empty(nq)
    # wbar indexed like the packed SOC rows, offset by l
    wfull = np.zeros(m)
    cdef double[:] d = d_arr, lam = lam_arr, beta = beta_arr, w = wfull
    cdef double ns1, nz1, sjs, zjz, gamma, dot
    for i in range(l):
        d[i] = sqrt(s[i] / z[i])
        lam[i] = sqrt(s[i] * z[i])
    for k in range(nq):
        j0 = st[k]
        mk = sz[k]
        ns1 = 0.0
        nz1 = 0.0
        for i in range(j0 + 1, j0 + mk):
            ns1 += s[i] * s[i]
            nz1 += z[i] * z[i]
        ns1 = sqrt(ns1)
        nz1 = sqrt(nz1)
        sjs = sqrt((s[j0] - ns1) * (s[j0] + ns1))
        zjz = sqrt((z[j0] - nz1) * (z[j0] + nz1))
        dot = 0.0
        for i in range(j0, j0 + mk):
            dot += (s[i] / sjs) * (z[i] / zjz)
        gamma = sqrt(0.5 * (1.0 + dot))
        w[j0] = (s[j0] / sjs + z[j0] / zjz) / (2.0 * gamma)
        for i in range(j0 + 1, j0 + mk):
            w[i] = (s[i] / sjs - z[i] / zjz) / (2.0 * gamma)
        beta[k] = sqrt(sjs / zjz)
        _soc_apply_vec(beta[k], w, z, lam, j0, mk, False)
    return d_arr, beta_arr, wfull[l:].copy(), lam_arr


def apply_scaling(double[:] d, double[:] beta, double[:] wbar, x, Py_ssize_t l,
                  qstarts, qsizes, bint inverse=False):
    cdef cnp.intp_t[:] st = np.asarray(qstarts, dtype=np.intp)
    cdef cnp.intp_t[:] sz = np.asarray(qsizes, dtype=np.intp)
    cdef Py_ssize_t nq = st.shape[0], i, k, j0, mk, c, ncol
    cdef double[:] xv, ov
    cdef double[:, :] xm, om
    cdef double w0, x0, dot, coef, bk
    xa = np.asarray(x, dtype=float)
    if xa.ndim == 1:
        out = np.empty_like(xa)
        xv = xa
        ov = out
        for i in range(l):
            ov[i] = xv[i] / d[i] if inverse else xv[i] * d[i]
        for k in range(nq):
            j0 = st[k]
            mk = sz[k]
            bk = beta[k]
            w0 = wbar[j0 - l]
            x0 = xv[j0]
            dot = 0.0
            for i in range(j0 + 1, j0 + mk):
                dot += wbar[i - l] * xv[i]
            if inverse:
                ov[j0] = (w0 * x0 - dot) / bk
                coef = (-x0 + dot / (1.0 + w0)) / bk
                for i in range(j0 + 1, j0 + mk):
                    ov[i] = xv[i] / bk + wbar[i - l] * coef
            else:
                ov[j0] = bk * (w0 * x0 + dot)
                coef = bk * (x0 + dot / (1.0 + w0))
                for i in range(j0 + 1, j0 + mk):
                    ov[i] = bk * xv[i] + wbar[i - l] * coef
        return out
    xa = np.ascontiguousarray(xa)
    out = np.empty_like(xa)
    xm = xa
    om = out
    ncol = xa.shape[1]
    for i in range(l):
        for c in range(ncol):
            om[i, c] = xm[i, c] / d[i] if inverse else xm[i, c] * d[i]
    for k in range(nq):
        j0 = st[k]
        mk = sz[k]
        bk = beta[k]
        w0 = wbar[j0 - l]
        for c in range(ncol):
            x0 = xm[j0, c]
            dot = 0.0
            for i in range(j0 + 1, j0 + mk):
                dot += wbar[i - l] * xm[i, c]
            if inverse:
                om[j0, c] = (w0 * x0 - dot) / bk
                coef = (-x0 + dot / (1.0 + w0)) / bk
                for i in range(j0 + 1, j0 + mk):
                    om[i, c] = xm[i, c] / bk + wbar[i - l] * coef
            else:
                om[j0, c] = bk * (w0 * x0 + dot)
                coef = bk * (x0 + dot / (1.0 + w0))
                for i in range(j0 + 1, j0 + mk):
                    om[i, c] = bk * xm[i, c] + wbar[i - l] * coef
    return out


def jordan_prod(double[:] u, double[:] v, Py_ssize_t l, qstarts, qsizes):
    cdef cnp.intp_t[:] st = np.asarray(qstarts, dtype=np.intp)
    cdef cnp.intp_t[:] sz = np.asarray(qsizes, dtype=np.intp)
    cdef Py_ssize_t m = u.shape[0], i, k, j0
    out_arr = np.empty(m)
    cdef double[:] out = out_arr
    cdef double acc
    for i in range(l):
        out[i] = u[i] * v[i]
    for k in range(st.shape[0]):
        j0 = st[k]
        acc = 0.0
        for i in range(j0, j0 + sz[k]):
            acc += u[i] * v[i]
        for i in range(j0 + 1, j0 + sz[k]):
            out[i] = u[j0] * v[i] + v[j0] * u[i]
        out[j0] = acc
    return out_arr


def jordan_div(double[:] lam, double[:] d, Py_ssize_t l, qstarts, qsizes):
    cdef cnp.intp_t[:] st = np.asarray(qstarts, dtype=np.intp)
    cdef cnp.intp_t[:] sz = np.asarray(qsizes, dtype=np.intp)
    cdef Py_ssize_t m = lam.shape[0], i, k, j0
    out_arr = np.empty(m)
    cdef double[:] out = out_arr
    cdef double nl, ld, x0
    for i in range(l):
        out[i] = d[i] / lam[i]
    for k in range(st.shape[0]):
        j0 = st[k]
        nl = 0.0
        ld = 0.0
        for i in range(j0 + 1, j0 + sz[k]):
            nl += lam[i] * lam[i]
            ld += lam[i] * d[i]
        nl = sqrt(nl)
        x0 = (lam[j0] * d[j0] - ld) / ((lam[j0] - nl) * (lam[j0] + nl))
        for i in range(j0 + 1, j0 + sz[k]):
            out[i] = (d[i] - x0 * lam[i]) / lam[j0]
        out[j0] = x0
    return out_arr
