"""Multibeam LEO downlink geometry, beam pattern and channel synthesis."""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import constants, special

__all__ = [
    "Geometry",
    "LinkPhysics",
    "ChannelSet",
    "ChannelError",
    "beam_gain",
    "boresight_angle",
    "boresight_angles",
    "channel_amplitude",
    "with_users",
    "slant_range",
    "sample_rain_attenuation",
    "place_users",
    "default_geometry",
    "synthesize_channel",
    "apply_phase_perturbation",
    "per_feed_power_from_eirp",
]

SPEED_OF_LIGHT = constants.c
BOLTZMANN = constants.k
MU_SCALE = 2.07123


class ChannelError(ValueError):
    """Inconsistent geometry or physics input."""


def db2lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def per_feed_power_from_eirp(eirp_dbw_per_mhz=4.0, bandwidth_hz=400e6, g_max_dbi=38.5):
    """Per-feed power in W from an EIRP density given in dBW/MHz."""
    p_dbw = eirp_dbw_per_mhz + 10.0 * np.log10(bandwidth_hz / 1e6) - g_max_dbi
    return float(10.0 ** (p_dbw / 10.0))


@dataclass(frozen=True)
class LinkPhysics:
    carrier_freq_hz: float = 20e9
    bandwidth_hz: float = 400e6
    theta_3db_rad: float = float(np.deg2rad(1.7647))
    g_max_linear: float = float(db2lin(38.5))
    g_rx_linear: float = float(db2lin(39.7))
    t_sys_kelvin: float = 150.0
    boltzmann: float = BOLTZMANN
    rain_mu_db: float = -2.6
    rain_sigma_db: float = 1.63
    per_feed_power_w: float = per_feed_power_from_eirp()
    noise_variance: float = 1.0

    def __post_init__(self):
        for name in ("carrier_freq_hz", "bandwidth_hz", "g_max_linear", "g_rx_linear",
                     "t_sys_kelvin", "boltzmann", "per_feed_power_w", "noise_variance"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ChannelError(f"{name} must be positive and finite, got {v!r}")
        if not 0.0 < self.theta_3db_rad < np.pi / 2:
            raise ChannelError(f"theta_3db_rad must lie in (0, pi/2), got {self.theta_3db_rad!r}")
        if not self.rain_sigma_db >= 0:
            raise ChannelError(f"rain_sigma_db must be >= 0, got {self.rain_sigma_db!r}")

    @property
    def wavelength_m(self):
        return SPEED_OF_LIGHT / self.carrier_freq_hz


@dataclass(frozen=True)
class Geometry:
    """Flat-earth layout; the satellite sits ``sat_altitude_m`` above the
    centroid of the beam centers."""

    sat_altitude_m: float
    beam_centers: np.ndarray
    beam_radius_m: float
    user_positions: np.ndarray
    user_beam_assignment: tuple

    def __post_init__(self):
        centers = np.atleast_2d(np.asarray(self.beam_centers, dtype=float))
        users = np.atleast_2d(np.asarray(self.user_positions, dtype=float))
        assign = tuple(int(a) for a in self.user_beam_assignment)
        object.__setattr__(self, "beam_centers", centers)
        object.__setattr__(self, "user_positions", users)
        object.__setattr__(self, "user_beam_assignment", assign)
        if centers.shape[1] != 2 or users.shape[1] != 2:
            raise ChannelError("beam_centers and user_positions must be lists of 2-D points")
        if len(assign) != users.shape[0]:
            raise ChannelError(
                f"user_beam_assignment has {len(assign)} entries for {users.shape[0]} users"
            )
        if any(a < 0 or a >= centers.shape[0] for a in assign):
            raise ChannelError(f"user_beam_assignment {assign} indexes a missing beam")
        if not (self.sat_altitude_m > 0 and self.beam_radius_m > 0):
            raise ChannelError("sat_altitude_m and beam_radius_m must be positive")

    @property
    def n_feeds(self):
        return self.beam_centers.shape[0]

    @property
    def n_users(self):
        return self.user_positions.shape[0]

    @property
    def satellite_position(self):
        c = self.beam_centers.mean(axis=0)
        return np.array([c[0], c[1], self.sat_altitude_m])


@dataclass(frozen=True)
class ChannelSet:
    """Satellite-side channel estimate and the draws that produced it."""

    h_hat: np.ndarray
    rain_draws: np.ndarray
    nominal_phases: np.ndarray
    rng_seed: object = None
    geometry: Geometry = field(default=None, repr=False)

    @property
    def n_feeds(self):
        return self.h_hat.shape[0]

    @property
    def n_users(self):
        return self.h_hat.shape[1]


def _ground3(p):
    p = np.asarray(p, dtype=float)
    return np.concatenate([p, np.zeros(p.shape[:-1] + (1,))], axis=-1)


def boresight_angle(feed_index, user_index, geometry):
    """Off-axis angle at the satellite between feed ``feed_index``'s beam
    center and user ``user_index``."""
    if not 0 <= feed_index < geometry.n_feeds:
        raise IndexError(f"feed index {feed_index} out of range")
    if not 0 <= user_index < geometry.n_users:
        raise IndexError(f"user index {user_index} out of range")
    sat = geometry.satellite_position
    u = _ground3(geometry.beam_centers[feed_index]) - sat
    v = _ground3(geometry.user_positions[user_index]) - sat
    # atan2 form stays accurate for tiny angles, unlike arccos of the dot product
    return float(np.arctan2(np.linalg.norm(np.cross(u, v)), u @ v))


def boresight_angles(geometry):
    """All ``(N_t, K)`` off-axis angles."""
    sat = geometry.satellite_position
    u = _ground3(geometry.beam_centers) - sat
    v = _ground3(geometry.user_positions) - sat
    cross = np.cross(u[:, None, :], v[None, :, :])
    return np.arctan2(np.linalg.norm(cross, axis=-1), u @ v.T)


def slant_range(geometry):
    """Distance from the satellite to each user, in metres."""
    return np.linalg.norm(_ground3(geometry.user_positions) - geometry.satellite_position, axis=1)


def beam_gain(theta_nk, theta_3db, g_max):
    """Bessel-type beam pattern.

    Parameters
    ----------
    theta_nk : float or ndarray
        Off-axis angle in radians, ``>= 0``.
    theta_3db : float
        3 dB angle in radians.
    g_max : float
        Boresight gain (linear).

    Returns
    -------
    ndarray or float
        ``g_max * (J1(mu)/(2 mu) + 36 J3(mu)/mu^3)^2`` with
        ``mu = 2.07123 sin(theta)/sin(theta_3db)``.
    """
    theta = np.asarray(theta_nk, dtype=float)
    if np.any(theta < 0) or np.any(np.isnan(theta)):
        raise ValueError("off-axis angle must be non-negative")
    if not theta_3db > 0:
        raise ValueError("theta_3db must be positive")
    mu = MU_SCALE * np.sin(theta) / np.sin(theta_3db)
    small = mu < 1e-4
    mus = np.where(small, 1.0, mu)
    bracket = special.jv(1, mus) / (2 * mus) + 36.0 * special.jv(3, mus) / mus**3
    # series: 1/4 - mu^2/32 + 3/4 - 3 mu^2/64
    bracket = np.where(small, 1.0 - 5.0 * mu**2 / 64.0, bracket)
    g = g_max * bracket**2
    return float(g) if np.ndim(g) == 0 else g


def sample_rain_attenuation(mu_db, sigma_db, rng, size=None):
    """Linear rain factor ``chi`` with ``10 log10(chi) ~ N(mu_db, sigma_db^2)``."""
    if sigma_db < 0:
        raise ValueError("sigma_db must be non-negative")
    chi_db = rng.normal(mu_db, sigma_db, size=size)
    return 10.0 ** (chi_db / 10.0)


def place_users(beam_centers, beam_radius_m, assignment, rng):
    """Uniform positions inside each user's beam disk."""
    centers = np.asarray(beam_centers, dtype=float)
    k = len(assignment)
    r = beam_radius_m * np.sqrt(rng.uniform(size=k))
    phi = rng.uniform(0.0, 2 * np.pi, size=k)
    return centers[list(assignment)] + np.column_stack([r * np.cos(phi), r * np.sin(phi)])


def default_geometry(rng=None, sat_altitude_m=600e3, spacing_m=20e3, assignment=(0, 1, 2, 3, 3)):
    """2x2 beam grid; users uniform in their beams, or at beam centers
    when ``rng`` is None."""
    h = spacing_m / 2
    centers = np.array([[-h, h], [h, h], [-h, -h], [h, -h]])
    radius = spacing_m / 2
    if rng is None:
        users = centers[list(assignment)].copy()
    else:
        users = place_users(centers, radius, assignment, rng)
    return Geometry(sat_altitude_m, centers, radius, users, tuple(assignment))


def channel_amplitude(geometry, physics):
    """Deterministic part of ``|h_hat|`` (no rain), shape ``(N_t, K)``."""
    gains = beam_gain(boresight_angles(geometry), physics.theta_3db_rad, physics.g_max_linear)
    d = slant_range(geometry)
    noise = np.sqrt(physics.boltzmann * physics.t_sys_kelvin * physics.bandwidth_hz)
    return np.sqrt(gains * physics.g_rx_linear) / (4 * np.pi * (d / physics.wavelength_m) * noise)


def synthesize_channel(scenario, rng, phase_rng=None):
    """Draw a satellite-side channel estimate for ``scenario``.

    Rain factors come from ``rng``.  Phases come from ``phase_rng`` when
    given, else from a stream spawned off ``rng``, so the magnitudes never
    depend on the phase stream.

    Parameters
    ----------
    scenario
        Anything with ``geometry`` and ``physics`` attributes.
    rng : numpy.random.Generator or int
    """
    geometry, physics = scenario.geometry, scenario.physics
    seed = None
    if not isinstance(rng, np.random.Generator):
        seed = int(rng)
        rng = np.random.default_rng(seed)
    if phase_rng is None:
        phase_rng = rng.spawn(1)[0]
    n, k = geometry.n_feeds, geometry.n_users
    r_target = getattr(scenario, "r_target", None)
    if r_target is not None and len(r_target) != k:
        raise ChannelError(f"r_target has {len(scenario.r_target)} entries for {k} users")
    amp = channel_amplitude(geometry, physics)
    chi = sample_rain_attenuation(physics.rain_mu_db, physics.rain_sigma_db, rng, size=(n, k))
    phi = phase_rng.uniform(0.0, 2 * np.pi, size=(n, k))
    h_hat = amp * chi ** -0.5 * np.exp(-1j * phi)
    norms = np.linalg.norm(h_hat, axis=0)
    if not (np.all(np.isfinite(h_hat)) and np.all(norms > 0)):
        raise ChannelError("synthesized channel has a zero or non-finite column")
    return ChannelSet(h_hat, chi, phi, seed, geometry)


def apply_phase_perturbation(h_hat_col, delta_rad, rng):
    """``h * exp(1j*theta)`` with ``theta ~ N(0, delta^2)`` i.i.d. per entry."""
    if delta_rad < 0:
        raise ValueError("delta_rad must be non-negative")
    h = np.asarray(h_hat_col)
    if delta_rad == 0:
        return h.astype(complex, copy=True)
    return h * np.exp(1j * rng.normal(0.0, delta_rad, size=h.shape))


def with_users(geometry, user_positions):
    return replace(geometry, user_positions=np.asarray(user_positions, dtype=float))
