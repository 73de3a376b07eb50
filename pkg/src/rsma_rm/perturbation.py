"""Closed-form second moments of Gaussian phase errors and the per-user
quadratic-form matrices built from them."""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PerturbationModel",
    "PerturbationStats",
    "feedback_expectation_matrix",
    "estimation_error_expectation_matrix",
    "build_stats",
    "hermitize",
]


@dataclass(frozen=True)
class PerturbationModel:
    """Phase-error standard deviations in radians."""

    delta_fb_rad: float = 0.0
    delta_ce_rad: float = 0.0

    def __post_init__(self):
        if not (self.delta_fb_rad >= 0 and self.delta_ce_rad >= 0):
            raise ValueError("phase-error standard deviations must be non-negative")

    @classmethod
    def from_degrees(cls, delta_fb_deg=0.0, delta_ce_deg=0.0):
        return cls(float(np.deg2rad(delta_fb_deg)), float(np.deg2rad(delta_ce_deg)))

    @property
    def perfect(self):
        return self.delta_fb_rad == 0 and self.delta_ce_rad == 0


@dataclass(frozen=True)
class PerturbationStats:
    """``q_fb[k]`` and ``q_both[k]`` stacked as ``(K, N_t, N_t)`` arrays."""

    q_fb: np.ndarray
    q_both: np.ndarray
    model: PerturbationModel = None

    @property
    def n_users(self):
        return self.q_fb.shape[0]

    @property
    def n_feeds(self):
        return self.q_fb.shape[1]


def hermitize(X):
    return 0.5 * (X + np.swapaxes(X, -1, -2).conj())


def feedback_expectation_matrix(delta_fb, n_t):
    """``E[e e^H]`` for ``e = exp(1j*theta)``, ``theta ~ N(0, delta^2 I)``.

    Unit diagonal, off-diagonal ``exp(-delta^2)``.
    """
    if delta_fb < 0 or n_t < 1:
        raise ValueError("need delta_fb >= 0 and n_t >= 1")
    r = np.exp(-delta_fb**2)
    return r * np.ones((n_t, n_t)) + (1.0 - r) * np.eye(n_t)


def estimation_error_expectation_matrix(delta_ce, n_t):
    """``E[(e - 1)(e - 1)^H]`` for the same phase-error model.

    Off-diagonal ``(1 - exp(-delta^2/2))^2``, diagonal ``2 - 2 exp(-delta^2/2)``.
    """
    if delta_ce < 0 or n_t < 1:
        raise ValueError("need delta_ce >= 0 and n_t >= 1")
    off = (1.0 - np.exp(-0.5 * delta_ce**2)) ** 2
    return off * np.ones((n_t, n_t)) + (1.0 - np.exp(-delta_ce**2)) * np.eye(n_t)


def build_stats(h_hat, model):
    """Per-user matrices for every rate expression.

    Parameters
    ----------
    h_hat : ndarray, shape (N_t, K)
        Satellite-side channel estimate.
    model : PerturbationModel

    Returns
    -------
    PerturbationStats
        ``q_fb[k] = (h_k h_k^H) o M_fb`` and ``q_both[k] = q_fb[k] o M_ce``.
    """
    h = np.asarray(h_hat)
    if h.ndim != 2:
        raise ValueError(f"h_hat must be 2-D (N_t, K), got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise ValueError("h_hat has non-finite entries")
    n_t = h.shape[0]
    m_fb = feedback_expectation_matrix(model.delta_fb_rad, n_t)
    m_ce = estimation_error_expectation_matrix(model.delta_ce_rad, n_t)
    outer = np.einsum("ik,jk->kij", h, h.conj())
    q_fb = hermitize(outer * m_fb)
    q_both = hermitize(q_fb * m_ce)
    return PerturbationStats(q_fb, q_both, model)
