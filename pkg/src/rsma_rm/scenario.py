"""Scenario description and its JSON file format.

Angles are stored in degrees and gains in dB in the file, and converted to
radians / linear at load time.  Every field except ``r_target`` is optional
and falls back to the defaults below.

Schema (all keys optional unless noted)::

    {
      "r_target": [2, 2, 3, 3.5, 4],          # required, bps/Hz per user
      "trials": 20,
      "seed": 0,
      "geometry": {
        "sat_altitude_m": 600000,
        "beam_centers_m": [[x, y], ...],
        "beam_radius_m": 10000,
        "user_beam_assignment": [0, 1, 2, 3, 3],
        "user_positions_m": null               # null: uniform per trial
      },
      "physics": {
        "carrier_freq_hz": 2e10, "bandwidth_hz": 4e8, "theta_3db_deg": 1.7647,
        "g_max_dbi": 38.5, "g_rx_dbi": 39.7, "t_sys_kelvin": 150,
        "rain_mu_db": -2.6, "rain_sigma_db": 1.63,
        "per_feed_power_w": 0.1419, "noise_variance": 1.0
      },
      "perturbation": {"delta_fb_deg": 5, "delta_ce_deg": 2},
      "optimizer": {"eta": 0.91, "objective_norm": "L2", "max_iter": 20,
                    "tol": 1e-4, "mmse_reg": null, "colors": null,
                    "stop_rule": "gap"}
    }
"""

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .channel import ChannelError, Geometry, LinkPhysics, default_geometry, place_users, with_users
from .optimizer import RmOptions
from .perturbation import PerturbationModel

__all__ = [
    "Scenario",
    "ScenarioError",
    "default_scenario",
    "scenario_from_dict",
    "scenario_to_dict",
    "load_scenario",
    "save_scenario",
    "DEMANDS_A",
    "DEMANDS_B",
]

DEMANDS_A = (2.0, 2.0, 3.0, 3.5, 4.0)
DEMANDS_B = (4.0, 5.6, 1.4, 1.8, 1.8)


class ScenarioError(ValueError):
    """Invalid scenario; the message names the offending field."""


@dataclass(frozen=True)
class Scenario:
    geometry: Geometry = field(default_factory=default_geometry)
    physics: LinkPhysics = field(default_factory=LinkPhysics)
    perturbation: PerturbationModel = field(default_factory=lambda: PerturbationModel.from_degrees(5.0, 2.0))
    r_target: tuple = DEMANDS_A
    opts: RmOptions = field(default_factory=RmOptions)
    trials: int = 20
    seed: int = 0
    # False: users are redrawn uniformly inside their beams for every trial
    fixed_users: bool = False

    def __post_init__(self):
        r = tuple(float(v) for v in self.r_target)
        object.__setattr__(self, "r_target", r)
        if len(r) != self.geometry.n_users:
            raise ScenarioError(f"r_target: has {len(r)} entries for {self.geometry.n_users} users")
        if any(not (np.isfinite(v) and v >= 0) for v in r):
            raise ScenarioError("r_target: demands must be finite and >= 0")
        if int(self.trials) < 1:
            raise ScenarioError("trials: must be >= 1")

    @property
    def n_users(self):
        return self.geometry.n_users

    @property
    def n_feeds(self):
        return self.geometry.n_feeds

    def with_(self, **kw):
        return replace(self, **kw)

    def trial_geometry(self, rng):
        """Geometry for one trial, drawing users from ``rng`` unless pinned."""
        if self.fixed_users:
            return self.geometry
        g = self.geometry
        return with_users(g, place_users(g.beam_centers, g.beam_radius_m, g.user_beam_assignment, rng))


def default_scenario(r_target=DEMANDS_A, delta_fb_deg=5.0, delta_ce_deg=2.0, **kw):
    return Scenario(
        perturbation=PerturbationModel.from_degrees(delta_fb_deg, delta_ce_deg),
        r_target=tuple(r_target),
        **kw,
    )


_PHYS_SI = ("carrier_freq_hz", "bandwidth_hz", "t_sys_kelvin", "rain_mu_db", "rain_sigma_db",
            "per_feed_power_w", "noise_variance")
_OPT_KEYS = ("eta", "objective_norm", "max_iter", "tol", "mmse_reg", "colors", "stop_rule")


def _num(section, key, val):
    try:
        out = float(val)
    except (TypeError, ValueError):
        raise ScenarioError(f"{section}.{key}: expected a number, got {val!r}") from None
    if not np.isfinite(out):
        raise ScenarioError(f"{section}.{key}: must be finite")
    return out


def _unknown(section, d, allowed):
    extra = set(d) - set(allowed)
    if extra:
        raise ScenarioError(f"{section}: unknown field(s) {sorted(extra)}")


def scenario_from_dict(d):
    if not isinstance(d, dict):
        raise ScenarioError("scenario: top level must be an object")
    _unknown("scenario", d, ("r_target", "trials", "seed", "geometry", "physics", "perturbation",
                             "optimizer", "fixed_users"))
    if "r_target" not in d:
        raise ScenarioError("r_target: required")
    r = d["r_target"]
    if not isinstance(r, list):
        raise ScenarioError("r_target: expected a list of numbers")
    r = tuple(_num("scenario", "r_target", v) for v in r)

    g = d.get("geometry") or {}
    _unknown("geometry", g, ("sat_altitude_m", "beam_centers_m", "beam_radius_m",
                             "user_beam_assignment", "user_positions_m"))
    base = default_geometry()
    centers = np.asarray(g.get("beam_centers_m", base.beam_centers), dtype=float)
    assign = tuple(g.get("user_beam_assignment", base.user_beam_assignment))
    users = g.get("user_positions_m")
    fixed = bool(d.get("fixed_users", users is not None))
    if users is None:
        users = centers[list(assign)] if all(0 <= a < len(centers) for a in assign) else np.zeros((len(assign), 2))
    try:
        geometry = Geometry(
            _num("geometry", "sat_altitude_m", g.get("sat_altitude_m", base.sat_altitude_m)),
            centers,
            _num("geometry", "beam_radius_m", g.get("beam_radius_m", base.beam_radius_m)),
            np.asarray(users, dtype=float),
            assign,
        )
    except (ChannelError, ValueError) as exc:
        raise ScenarioError(f"geometry: {exc}") from None

    p = d.get("physics") or {}
    _unknown("physics", p, _PHYS_SI + ("theta_3db_deg", "g_max_dbi", "g_rx_dbi"))
    kw = {k: _num("physics", k, p[k]) for k in _PHYS_SI if k in p}
    if "theta_3db_deg" in p:
        kw["theta_3db_rad"] = float(np.deg2rad(_num("physics", "theta_3db_deg", p["theta_3db_deg"])))
    for src, dst in (("g_max_dbi", "g_max_linear"), ("g_rx_dbi", "g_rx_linear")):
        if src in p:
            kw[dst] = float(10.0 ** (_num("physics", src, p[src]) / 10.0))
    try:
        physics = LinkPhysics(**kw)
    except ChannelError as exc:
        raise ScenarioError(f"physics: {exc}") from None

    pt = d.get("perturbation") or {}
    _unknown("perturbation", pt, ("delta_fb_deg", "delta_ce_deg"))
    try:
        pert = PerturbationModel.from_degrees(
            _num("perturbation", "delta_fb_deg", pt.get("delta_fb_deg", 5.0)),
            _num("perturbation", "delta_ce_deg", pt.get("delta_ce_deg", 2.0)),
        )
    except ValueError as exc:
        raise ScenarioError(f"perturbation: {exc}") from None

    o = d.get("optimizer") or {}
    _unknown("optimizer", o, _OPT_KEYS)
    okw = {k: o[k] for k in _OPT_KEYS if o.get(k) is not None}
    if "colors" in okw:
        okw["colors"] = tuple(int(c) for c in okw["colors"])
    try:
        opts = RmOptions(**okw)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"optimizer: {exc}") from None

    try:
        trials = int(d.get("trials", 20))
        seed = int(d.get("seed", 0))
    except (TypeError, ValueError):
        raise ScenarioError("trials/seed: expected integers") from None
    return Scenario(geometry, physics, pert, r, opts, trials, seed, fixed)


def scenario_to_dict(s):
    g, p, o = s.geometry, s.physics, s.opts
    geo = {
        "sat_altitude_m": g.sat_altitude_m,
        "beam_centers_m": g.beam_centers.tolist(),
        "beam_radius_m": g.beam_radius_m,
        "user_beam_assignment": list(g.user_beam_assignment),
    }
    if s.fixed_users:
        geo["user_positions_m"] = g.user_positions.tolist()
    phys = {k: getattr(p, k) for k in _PHYS_SI}
    phys["theta_3db_deg"] = float(np.rad2deg(p.theta_3db_rad))
    phys["g_max_dbi"] = float(10.0 * np.log10(p.g_max_linear))
    phys["g_rx_dbi"] = float(10.0 * np.log10(p.g_rx_linear))
    opt = {"eta": o.eta, "objective_norm": o.objective_norm, "max_iter": o.max_iter, "tol": o.tol,
           "mmse_reg": o.mmse_reg, "colors": list(o.colors) if o.colors is not None else None,
           "stop_rule": o.stop_rule}
    return {
        "r_target": list(s.r_target),
        "trials": s.trials,
        "seed": s.seed,
        "fixed_users": s.fixed_users,
        "geometry": geo,
        "physics": phys,
        "perturbation": {
            "delta_fb_deg": float(np.rad2deg(s.perturbation.delta_fb_rad)),
            "delta_ce_deg": float(np.rad2deg(s.perturbation.delta_ce_rad)),
        },
        "optimizer": opt,
    }


def load_scenario(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return scenario_from_dict(data)


def save_scenario(scenario, path):
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=2) + "\n", encoding="utf-8")
