import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from rsma_rm.channel import (
    ChannelError,
    Geometry,
    LinkPhysics,
    apply_phase_perturbation,
    beam_gain,
    boresight_angle,
    boresight_angles,
    channel_amplitude,
    default_geometry,
    per_feed_power_from_eirp,
    place_users,
    sample_rain_attenuation,
    slant_range,
    synthesize_channel,
)
from rsma_rm.scenario import default_scenario

# mpmath at 30 digits
AMP_AT_600KM = 17.7546586225673497605
GAIN_RATIO_3DB = 0.500000408332786717
GAIN_RATIO_10KM = 0.820247720747152832
ATAN_10KM_600KM = 0.0166651237139407485


def test_beam_gain_boresight_is_gmax():
    assert beam_gain(0.0, 0.03, 123.0) == pytest.approx(123.0, rel=1e-15)


def test_beam_gain_at_3db_angle():
    th = np.deg2rad(1.7647)
    assert_allclose(beam_gain(th, th, 1.0), GAIN_RATIO_3DB, rtol=1e-9)


def test_beam_gain_offset_user():
    th3 = np.deg2rad(1.7647)
    assert_allclose(beam_gain(ATAN_10KM_600KM, th3, 1.0), GAIN_RATIO_10KM, rtol=1e-9)


def test_beam_gain_series_branch_is_continuous():
    th3 = 0.03
    # mu crosses 1e-4 around theta = 1e-4 * sin(th3) / 2.07123
    edge = 1e-4 * np.sin(th3) / 2.07123
    g = beam_gain(np.array([edge * 0.999999, edge * 1.000001]), th3, 1.0)
    assert abs(g[0] - g[1]) < 1e-12


def test_beam_gain_negative_angle_raises():
    with pytest.raises(ValueError):
        beam_gain(-0.1, 0.03, 1.0)


@pytest.mark.parametrize("theta", np.linspace(0, np.pi / 2, 9))
def test_beam_gain_nonnegative(theta):
    assert beam_gain(theta, np.deg2rad(1.7647), 10.0) >= 0


def test_boresight_angle_at_beam_center_is_zero():
    g = default_geometry()
    for n in range(4):
        assert boresight_angle(n, n, g) == pytest.approx(0.0, abs=1e-15)


def test_boresight_angle_small_offset():
    g = Geometry(600e3, [[0.0, 0.0]], 10e3, [[10e3, 0.0]], (0,))
    assert_allclose(boresight_angle(0, 0, g), ATAN_10KM_600KM, rtol=1e-12)


def test_boresight_angle_symmetry():
    g = default_geometry(assignment=(0, 1, 2, 3))
    assert boresight_angle(0, 1, g) == pytest.approx(boresight_angle(1, 0, g), rel=1e-14)


def test_boresight_angles_matches_scalar():
    g = default_geometry(np.random.default_rng(1))
    A = boresight_angles(g)
    for n in range(g.n_feeds):
        for k in range(g.n_users):
            assert_allclose(A[n, k], boresight_angle(n, k, g), rtol=1e-12, atol=1e-15)


def test_boresight_angle_index_errors():
    g = default_geometry()
    with pytest.raises(IndexError):
        boresight_angle(4, 0, g)
    with pytest.raises(IndexError):
        boresight_angle(0, 5, g)


def test_rain_deterministic_when_sigma_zero(rng):
    assert sample_rain_attenuation(0.0, 0.0, rng) == 1.0
    assert_allclose(sample_rain_attenuation(-2.6, 0.0, rng), 10 ** -0.26, rtol=1e-15)


def test_rain_db_moments(rng):
    chi = sample_rain_attenuation(-2.6, 1.63, rng, size=10**6)
    db = 10 * np.log10(chi)
    assert abs(db.mean() + 2.6) < 0.01
    assert abs(db.std() - 1.63) < 0.01
    assert np.all(chi > 0)


def test_rain_negative_sigma_raises(rng):
    with pytest.raises(ValueError):
        sample_rain_attenuation(0.0, -1.0, rng)


def test_amplitude_at_600km_boresight():
    g = Geometry(600e3, [[0.0, 0.0]], 10e3, [[0.0, 0.0]], (0,))
    assert_allclose(channel_amplitude(g, LinkPhysics())[0, 0], AMP_AT_600KM, rtol=1e-12)


def test_synthesize_without_randomness_is_real_positive():
    g = Geometry(600e3, [[0.0, 0.0]], 10e3, [[0.0, 0.0]], (0,))
    sc = default_scenario(r_target=[1.0], geometry=g, physics=LinkPhysics(rain_mu_db=0.0, rain_sigma_db=0.0))

    class ZeroPhase:
        def uniform(self, lo, hi, size):
            return np.zeros(size)

    ch = synthesize_channel(sc, np.random.default_rng(0), phase_rng=ZeroPhase())
    assert ch.h_hat[0, 0].imag == 0
    assert_allclose(ch.h_hat[0, 0].real, AMP_AT_600KM, rtol=1e-12)


def test_synthesize_is_deterministic():
    sc = default_scenario()
    a = synthesize_channel(sc, 7).h_hat
    b = synthesize_channel(sc, 7).h_hat
    assert_array_equal(a, b)
    assert a.tobytes() == b.tobytes()


def test_magnitudes_independent_of_phase_stream():
    sc = default_scenario()
    a = synthesize_channel(sc, np.random.default_rng(3), phase_rng=np.random.default_rng(1))
    b = synthesize_channel(sc, np.random.default_rng(3), phase_rng=np.random.default_rng(2))
    assert_array_equal(a.rain_draws, b.rain_draws)
    assert_allclose(np.abs(a.h_hat), np.abs(b.h_hat), rtol=1e-14)
    assert not np.allclose(a.h_hat, b.h_hat)


def test_synthesize_dimension_mismatch():
    sc = default_scenario()
    bad = type("S", (), {"geometry": sc.geometry, "physics": sc.physics, "r_target": (1.0, 2.0)})()
    with pytest.raises(ChannelError):
        synthesize_channel(bad, 0)


def test_geometry_validation():
    with pytest.raises(ChannelError):
        Geometry(600e3, [[0, 0]], 10e3, [[0, 0]], (1,))
    with pytest.raises(ChannelError):
        Geometry(600e3, [[0, 0]], 10e3, [[0, 0], [1, 1]], (0,))
    with pytest.raises(ChannelError):
        Geometry(-1.0, [[0, 0]], 10e3, [[0, 0]], (0,))


def test_physics_validation():
    with pytest.raises(ChannelError):
        LinkPhysics(bandwidth_hz=0.0)
    with pytest.raises(ChannelError):
        LinkPhysics(theta_3db_rad=2.0)


def test_place_users_inside_beams(rng):
    g = default_geometry()
    pos = place_users(g.beam_centers, g.beam_radius_m, g.user_beam_assignment, rng)
    d = np.linalg.norm(pos - g.beam_centers[list(g.user_beam_assignment)], axis=1)
    assert np.all(d <= g.beam_radius_m)


def test_slant_range_nadir():
    g = Geometry(600e3, [[0.0, 0.0]], 10e3, [[0.0, 0.0], [3e3, 4e3]], (0, 0))
    assert_allclose(slant_range(g), [600e3, np.hypot(600e3, 5e3)], rtol=1e-14)


def test_per_feed_power_from_eirp():
    assert_allclose(per_feed_power_from_eirp(), 0.141925355693430183, rtol=1e-13)
    assert_allclose(10 * np.log10(per_feed_power_from_eirp() * 1e3), 21.52, atol=5e-3)


def test_phase_perturbation_zero_is_identity(rng):
    h = np.array([1 + 2j, -3j, 0.5])
    assert_array_equal(apply_phase_perturbation(h, 0.0, rng), h)


def test_phase_perturbation_keeps_magnitude(rng):
    h = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    out = apply_phase_perturbation(h, 0.3, rng)
    assert_allclose(np.abs(out), np.abs(h), rtol=1e-14)


def test_phase_perturbation_mean_factor(rng):
    d = np.deg2rad(5)
    out = apply_phase_perturbation(np.ones(10**6, dtype=complex), d, rng)
    assert abs(out.mean() - 0.996199522417471304) < 5e-4
