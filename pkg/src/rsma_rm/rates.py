"""Ergodic common/private rates under phase-perturbed CSI and a Monte Carlo
check of the closed forms."""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Precoder",
    "RateReport",
    "quadratic_forms",
    "interference_terms",
    "common_sinr",
    "private_sinr",
    "common_rate",
    "private_rate",
    "total_rates",
    "instantaneous_rate_sample",
    "draw_true_channels",
]


@dataclass(frozen=True)
class Precoder:
    """Column 0 of ``p`` is the common precoder, columns 1..K the private ones."""

    p: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=complex)
        c = np.asarray(self.c, dtype=float)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "c", c)
        if p.ndim != 2 or p.shape[1] != c.shape[0] + 1:
            raise ValueError(f"precoder shape {p.shape} does not match {c.shape[0]} users")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(c))):
            raise ValueError("precoder has non-finite entries")
        if np.any(c < 0):
            raise ValueError("common-rate portions must be non-negative")

    @property
    def feed_powers(self):
        return np.sum(np.abs(self.p) ** 2, axis=1)

    @property
    def total_power(self):
        return float(np.sum(np.abs(self.p) ** 2))

    def feasible(self, per_feed_power, tol=1e-6):
        return bool(np.all(self.feed_powers <= per_feed_power + tol))


@dataclass(frozen=True)
class RateReport:
    r_common: np.ndarray
    r_private: np.ndarray
    r_total: np.ndarray
    common_sum_ok: bool


def _check(precoder, stats):
    n_t, kp1 = precoder.p.shape
    if stats.q_fb.shape != (kp1 - 1, n_t, n_t):
        raise ValueError(
            f"stats for {stats.q_fb.shape[0]} users / {stats.q_fb.shape[1]} feeds do not match "
            f"precoder of shape {precoder.p.shape}"
        )


def quadratic_forms(p, stats):
    """``F[k, j] = p_j^H q_fb[k] p_j`` and ``B[k, j] = p_j^H q_both[k] p_j``."""
    F = np.einsum("ik,uij,jk->uk", p.conj(), stats.q_fb, p).real
    B = np.einsum("ik,uij,jk->uk", p.conj(), stats.q_both, p).real
    return np.maximum(F, 0.0), np.maximum(B, 0.0)


def interference_terms(precoder, stats):
    """``(l_c, l_p)``, each of length K."""
    _check(precoder, stats)
    F, B = quadratic_forms(precoder.p, stats)
    leak = B.sum(axis=1)
    priv = F[:, 1:].sum(axis=1)
    own = np.diag(F[:, 1:])
    return leak + priv, leak + priv - own


def common_sinr(precoder, stats, sigma2):
    F, _ = quadratic_forms(precoder.p, stats)
    l_c, _ = interference_terms(precoder, stats)
    assert sigma2 > 0
    return F[:, 0] / (l_c + sigma2)


def private_sinr(precoder, stats, sigma2):
    F, _ = quadratic_forms(precoder.p, stats)
    _, l_p = interference_terms(precoder, stats)
    assert sigma2 > 0
    return np.diag(F[:, 1:]) / (l_p + sigma2)


def common_rate(precoder, stats, sigma2):
    """``R_c,k`` in bps/Hz for every user."""
    return np.log2(1.0 + common_sinr(precoder, stats, sigma2))


def private_rate(precoder, stats, sigma2):
    """``R_p,k`` in bps/Hz for every user."""
    return np.log2(1.0 + private_sinr(precoder, stats, sigma2))


def total_rates(precoder, stats, sigma2, slack=1e-6):
    r_c = common_rate(precoder, stats, sigma2)
    r_p = private_rate(precoder, stats, sigma2)
    ok = bool(np.min(r_c) >= precoder.c.sum() - slack) if len(r_c) else True
    return RateReport(r_c, r_p, r_p + precoder.c, ok)


def draw_true_channels(h_hat, model, rng, n_draws):
    """Phase factors for ``n_draws`` channel realizations.

    Returns ``(g_fb, e_ce)`` of shape ``(n_draws, N_t, K)`` where ``g_fb`` is
    the receiver-side estimate and ``g_fb * e_ce`` the true channel.
    """
    h = np.asarray(h_hat)
    shape = (n_draws,) + h.shape
    th_fb = rng.normal(0.0, model.delta_fb_rad, size=shape) if model.delta_fb_rad > 0 else np.zeros(shape)
    th_ce = rng.normal(0.0, model.delta_ce_rad, size=shape) if model.delta_ce_rad > 0 else np.zeros(shape)
    return h[None] * np.exp(1j * th_fb), np.exp(1j * th_ce)


def instantaneous_rate_sample(h_hat, precoder, model, sigma2, rng, n_draws):
    """Mean per-draw rates with self-interference and SIC error treated as noise.

    Returns
    -------
    (ndarray, ndarray)
        Mean common and private rates per user over ``n_draws`` draws.
    """
    if n_draws < 1:
        raise ValueError("n_draws must be >= 1")
    p = precoder.p
    g_fb, e_ce = draw_true_channels(h_hat, model, rng, n_draws)
    g_ce = g_fb * (e_ce - 1.0)
    g_full = g_fb * e_ce
    # y[d, k, j] = |g^H p_j|^2 for user k, stream j
    y_fb = np.abs(np.einsum("dik,ij->dkj", g_fb.conj(), p)) ** 2
    y_ce = np.abs(np.einsum("dik,ij->dkj", g_ce.conj(), p)) ** 2
    y_full = np.abs(np.einsum("dik,ij->dkj", g_full.conj(), p)) ** 2
    k = p.shape[1] - 1
    idx = np.arange(k)
    inter = y_full[:, :, 1:].sum(axis=2)
    sinr_c = y_fb[:, :, 0] / (y_ce[:, :, 0] + inter + sigma2)
    others = ~np.eye(k, dtype=bool)
    inter_p = np.einsum("dkj,kj->dk", y_full[:, :, 1:], others)
    sinr_p = y_fb[:, idx, idx + 1] / (y_ce[:, idx, idx + 1] + y_ce[:, :, 0] + inter_p + sigma2)
    return np.log2(1.0 + sinr_c).mean(axis=0), np.log2(1.0 + sinr_p).mean(axis=0)
