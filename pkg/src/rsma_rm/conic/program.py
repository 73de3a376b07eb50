"""Convex program builder: quadratic objective, linear and second-order cone
constraints, and convex quadratic-below-affine constraints.

Constraints are stored as data so they can be re-evaluated at any point after
a solve, compiled to the standard form consumed by the solvers::

    minimize    (1/2) x^T P x + q^T x + const
    subject to  G x + s = h,   s in R^l_+ x Q^{m_1} x ... x Q^{m_N}
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ConicProgram",
    "Linear",
    "Soc",
    "QuadLeAffine",
    "Variable",
    "embed_complex_quadratic",
    "quad_le_affine_to_soc",
    "psd_factor",
]

PSD_CLIP = 1e-10
RANK_TOL = 1e-12


def embed_complex_quadratic(Q):
    """Real symmetric embedding ``[[Re Q, -Im Q], [Im Q, Re Q]]``.

    For ``z = x_re + 1j * x_im`` and ``x = [x_re, x_im]`` the identity
    ``x^T Q_r x == (z^H Q z).real`` holds, and the spectrum of ``Q_r`` is that
    of ``Q`` with every multiplicity doubled.
    """
    Q = np.asarray(Q)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {Q.shape}")
    scale = max(1.0, float(np.max(np.abs(Q), initial=0.0)))
    if np.max(np.abs(Q - Q.conj().T), initial=0.0) > 1e-10 * scale:
        raise ValueError("matrix is not Hermitian")
    re, im = Q.real, Q.imag
    return np.block([[re, -im], [im, re]])


def psd_factor(Q):
    """Return ``L`` with ``Q = L L^T``, truncating numerically-zero modes.

    Eigenvalues in ``[-1e-10 * trace, 0)`` are treated as rounding noise and
    clipped; anything more negative means ``Q`` is indefinite.
    """
    Q = np.asarray(Q, dtype=float)
    Q = 0.5 * (Q + Q.T)
    n = Q.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    vals, vecs = np.linalg.eigh(Q)
    tr = max(float(np.sum(np.abs(vals))), 0.0)
    if vals[0] < -PSD_CLIP * max(tr, 1e-300):
        raise ValueError(f"matrix is not PSD (min eigenvalue {vals[0]:.3e}, trace {tr:.3e})")
    keep = vals > RANK_TOL * tr
    return vecs[:, keep] * np.sqrt(vals[keep])


@dataclass(frozen=True)
class Variable:
    name: str
    offset: int
    size: int

    @property
    def slice(self):
        return slice(self.offset, self.offset + self.size)


@dataclass
class Linear:
    """``a . x <= b``"""

    a: np.ndarray
    b: float
    name: str = ""

    def violation(self, x):
        return float(self.a @ x - self.b)

    def relative_violation(self, x):
        return self.violation(x) / max(1.0, abs(self.b))


@dataclass
class Soc:
    """``||F x + g||_2 <= c . x + d``"""

    F: np.ndarray
    g: np.ndarray
    c: np.ndarray
    d: float
    name: str = ""

    def violation(self, x):
        return float(np.linalg.norm(self.F @ x + self.g) - (self.c @ x + self.d))

    def relative_violation(self, x):
        return self.violation(x) / max(1.0, abs(self.d), float(np.linalg.norm(self.g)))


@dataclass
class QuadLeAffine:
    """``x^T Q x <= a . x + b`` with ``Q`` PSD."""

    Q: np.ndarray
    a: np.ndarray
    b: float
    name: str = ""
    factor: np.ndarray = field(default=None, repr=False)

    def violation(self, x):
        return float(x @ self.Q @ x - (self.a @ x + self.b))

    def relative_violation(self, x):
        rhs = self.a @ x + self.b
        return self.violation(x) / max(1.0, abs(float(rhs)))


def quad_le_affine_to_soc(Q, a, b, factor=None):
    """Rotated-cone reduction of ``x^T Q x <= a.x + b``.

    Emits ``||[2 L^T x ; a.x + b - 1]|| <= a.x + b + 1`` with ``Q = L L^T``;
    both sides agree whenever ``a.x + b >= 0``, which the cone forces.
    """
    a = np.asarray(a, dtype=float)
    L = psd_factor(Q) if factor is None else factor
    F = np.vstack([2.0 * L.T, a[None, :]])
    g = np.zeros(F.shape[0])
    g[-1] = b - 1.0
    return Soc(F=F, g=g, c=a.copy(), d=b + 1.0)


class ConicProgram:
    """Builder for the convex programs the SCA loop solves.

    Variables are named real blocks laid out contiguously.  Coefficients for
    constraints are given either as full-length arrays or as ``{name: coef}``
    mappings, which :meth:`row` and :meth:`rows` expand.
    """

    def __init__(self):
        self.variables = {}
        self.n = 0
        self.constraints = []
        self.P = None
        self.q = None
        self.const = 0.0

    # -- variables -----------------------------------------------------
    def add_variable(self, name, size):
        if name in self.variables:
            raise ValueError(f"variable {name!r} already declared")
        if size < 1:
            raise ValueError(f"variable {name!r} must have positive size")
        var = Variable(name, self.n, int(size))
        self.variables[name] = var
        self.n += int(size)
        return var

    def row(self, coefs):
        """Full-length coefficient vector from ``{name: vector}``."""
        if not isinstance(coefs, dict):
            a = np.asarray(coefs, dtype=float)
            if a.shape != (self.n,):
                raise ValueError(f"coefficient vector has shape {a.shape}, expected ({self.n},)")
            return a
        a = np.zeros(self.n)
        for name, val in coefs.items():
            var = self._var(name)
            val = np.broadcast_to(np.asarray(val, dtype=float), (var.size,))
            a[var.slice] += val
        return a

    def rows(self, coefs, nrows):
        """Full-width matrix from ``{name: (nrows, size) matrix}``."""
        if not isinstance(coefs, dict):
            M = np.asarray(coefs, dtype=float)
            if M.shape != (nrows, self.n):
                raise ValueError(f"coefficient matrix has shape {M.shape}, expected {(nrows, self.n)}")
            return M
        M = np.zeros((nrows, self.n))
        for name, val in coefs.items():
            var = self._var(name)
            val = np.asarray(val, dtype=float)
            if val.shape != (nrows, var.size):
                raise ValueError(
                    f"block for {name!r} has shape {val.shape}, expected {(nrows, var.size)}"
                )
            M[:, var.slice] += val
        return M

    def square(self, blocks):
        """Full ``n x n`` matrix from ``{name: block}`` or ``{(a, b): block}``."""
        M = np.zeros((self.n, self.n))
        for key, val in blocks.items():
            ra, rb = (key, key) if isinstance(key, str) else key
            va, vb = self._var(ra), self._var(rb)
            val = np.asarray(val, dtype=float)
            if val.shape != (va.size, vb.size):
                raise ValueError(f"block {key!r} has shape {val.shape}, expected {(va.size, vb.size)}")
            M[va.slice, vb.slice] += val
        return M

    def _var(self, name):
        try:
            return self.variables[name]
        except KeyError:
            raise KeyError(f"unknown variable {name!r}") from None

    # -- objective ---------------------------------------------------------
    def set_objective(self, quad=None, lin=None, const=0.0):
        """Objective ``x^T quad x + lin . x + const``; ``quad`` must be PSD."""
        if quad is None:
            quad = np.zeros((self.n, self.n))
        elif isinstance(quad, dict):
            quad = self.square(quad)
        quad = np.asarray(quad, dtype=float)
        if quad.shape != (self.n, self.n):
            raise ValueError(f"objective matrix has shape {quad.shape}, expected {(self.n, self.n)}")
        quad = 0.5 * (quad + quad.T)
        psd_factor(quad)
        self.P = 2.0 * quad
        self.q = np.zeros(self.n) if lin is None else self.row(lin)
        self.const = float(const)

    def objective_value(self, x):
        P = self.P if self.P is not None else np.zeros((self.n, self.n))
        q = self.q if self.q is not None else np.zeros(self.n)
        return float(0.5 * x @ P @ x + q @ x + self.const)

    # -- constraints ---------------------------------------------------------
    def add_linear(self, a, b, name=""):
        con = Linear(self.row(a), float(b), name)
        self.constraints.append(con)
        return con

    def add_soc(self, F, g, c, d, name=""):
        g = np.atleast_1d(np.asarray(g, dtype=float))
        F = self.rows(F, g.shape[0])
        con = Soc(F, g, self.row(c), float(d), name)
        self.constraints.append(con)
        return con

    def add_quad_le_affine(self, Q, a, b, name="", factor=None):
        """``x^T Q x <= a.x + b``.

        ``factor`` is an optional ``L`` with ``Q = L L^T`` that skips the
        eigendecomposition; the caller vouches for it.
        """
        Q = self.square(Q) if isinstance(Q, dict) else np.asarray(Q, dtype=float)
        if Q.shape != (self.n, self.n):
            raise ValueError(f"quadratic has shape {Q.shape}, expected {(self.n, self.n)}")
        Q = 0.5 * (Q + Q.T)
        if factor is None:
            L = psd_factor(Q)
        else:
            L = np.asarray(factor, dtype=float)
            if L.ndim != 2 or L.shape[0] != self.n:
                raise ValueError(f"factor has shape {L.shape}, expected ({self.n}, r)")
        con = QuadLeAffine(Q, self.row(a), float(b), name, factor=L)
        self.constraints.append(con)
        return con

    # -- evaluation ------------------------------------------------------------
    def split(self, x):
        return {name: x[v.slice].copy() for name, v in self.variables.items()}

    def violations(self, x):
        return [con.violation(x) for con in self.constraints]

    def max_violation(self, x):
        """Largest relative violation over all constraints (``<= 0`` if feasible)."""
        if not self.constraints:
            return 0.0
        return max(con.relative_violation(x) for con in self.constraints)

    # -- compilation -----------------------------------------------------------
    def standard_form(self):
        """Return ``(P, q, G, h, l, qsizes)`` with orthant rows first."""
        lin = [c for c in self.constraints if isinstance(c, Linear)]
        cones = []
        for c in self.constraints:
            if isinstance(c, Soc):
                cones.append(c)
            elif isinstance(c, QuadLeAffine):
                cones.append(quad_le_affine_to_soc(c.Q, c.a, c.b, factor=c.factor))
        G_rows, h_rows = [], []
        if lin:
            G_rows.append(np.array([c.a for c in lin]))
            h_rows.append(np.array([c.b for c in lin]))
        qsizes = []
        for c in cones:
            G_rows.append(np.vstack([-c.c[None, :], -c.F]))
            h_rows.append(np.concatenate([[c.d], c.g]))
            qsizes.append(c.F.shape[0] + 1)
        G = np.vstack(G_rows) if G_rows else np.zeros((0, self.n))
        h = np.concatenate(h_rows) if h_rows else np.zeros(0)
        P = self.P if self.P is not None else np.zeros((self.n, self.n))
        q = self.q if self.q is not None else np.zeros(self.n)
        return P, q, G, h, len(lin), qsizes

    def dump(self):
        """Plain-text listing for cross-checking against external solvers.

        One line per variable block, the objective, then one line per
        constraint with its kind, name and coefficient arrays.
        """
        fmt = {"float_kind": lambda v: f"{v:.17g}"}

        def arr(a):
            return np.array2string(np.asarray(a), separator=",", max_line_width=10**9,
                                   threshold=10**9, formatter=fmt)

        lines = [f"var {v.name} {v.offset} {v.size}" for v in self.variables.values()]
        P = self.P if self.P is not None else np.zeros((self.n, self.n))
        q = self.q if self.q is not None else np.zeros(self.n)
        lines.append(f"objective P={arr(P / 2.0)} q={arr(q)} const={self.const:.17g}")
        for con in self.constraints:
            if isinstance(con, Linear):
                lines.append(f"linear {con.name} a={arr(con.a)} b={con.b:.17g}")
            elif isinstance(con, Soc):
                lines.append(f"soc {con.name} F={arr(con.F)} g={arr(con.g)} c={arr(con.c)} d={con.d:.17g}")
            else:
                lines.append(f"quad {con.name} Q={arr(con.Q)} a={arr(con.a)} b={con.b:.17g}")
        return "\n".join(lines) + "\n"
