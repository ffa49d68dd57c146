import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmwsim.antenna import (
    AmplitudeProfile,
    ArrayConfig,
    Direction,
    Isotropic,
    ParametricPatch,
    PatternDomainError,
    PatternFileError,
    Tabulated,
    array_factor_db,
    array_gain_db,
    element_gain_db,
    export_pattern_cut,
    field_amplitude,
    load_tabulated,
    make_weights,
    measured_patch_pattern,
    quantize_phase,
    save_tabulated,
)

CFG = ArrayConfig()
AMP = AmplitudeProfile.uniform(CFG.n)
PATCH = ParametricPatch()

# frozen from a standalone numpy evaluation of the closed-form pattern
BORESIGHT_AF_DB = 18.061799739838872  # 10 log10(64)
PATCH_AT_60_DB = -2.2248520710059196  # 8 - 12 (60/65)^2
PATCH_ZENITH_DB = -15.00591715976331  # 8 - 12 (90/65)^2
GRATING_NULL_DEG = 14.477512185929925  # arcsin(2/8)


def test_iso_is_flat():
    assert element_gain_db(Isotropic(), Direction(17.0, -133.0)) == 0.0


@pytest.mark.parametrize(
    "theta, phi, expected",
    [
        (90.0, 0.0, 8.0),
        (90.0, 60.0, PATCH_AT_60_DB),
        (90.0, 180.0, 8.0 - 30.0),
        (0.0, 0.0, PATCH_ZENITH_DB),
        (0.0, 180.0, -22.0),
    ],
)
def test_patch_golden(theta, phi, expected):
    assert element_gain_db(PATCH, Direction(theta, phi)) == pytest.approx(expected, abs=1e-9)


def test_boresight_af_and_gain():
    w = make_weights(CFG, Direction(90, 0))
    assert array_factor_db(CFG, AMP, w, Direction(90, 0)) == pytest.approx(BORESIGHT_AF_DB, abs=1e-9)
    assert array_gain_db(PATCH, CFG, AMP, w, Direction(90, 0)) == pytest.approx(8.0 + BORESIGHT_AF_DB, abs=1e-9)


def test_steered_to_60():
    w = make_weights(CFG, Direction(90, 60))
    assert array_gain_db(PATCH, CFG, AMP, w, Direction(90, 60)) == pytest.approx(
        PATCH_AT_60_DB + BORESIGHT_AF_DB, abs=1e-9
    )


def test_field_amplitude_boresight():
    w = make_weights(CFG, Direction(90, 0))
    assert field_amplitude(PATCH, CFG, AMP, w, Direction(90, 0)) == pytest.approx(20.095091452076645, rel=1e-12)


def test_one_bit_phases_binary():
    w = make_weights(CFG, Direction(90, 37.0), bits=1)
    ph = np.mod(w.steering_phase, 2 * np.pi)
    assert np.all(np.isclose(ph, 0.0) | np.isclose(ph, np.pi) | np.isclose(ph, 2 * np.pi))


def test_single_element_weight():
    cfg = ArrayConfig(1, 1)
    w = make_weights(cfg, Direction(90, 42.0))
    assert np.allclose(w.weights, [1.0])
    assert array_factor_db(cfg, AmplitudeProfile.uniform(1), w, Direction(90, -10)) == pytest.approx(0.0)


def test_grating_null_is_minus_inf():
    w = make_weights(CFG, Direction(90, 0))
    assert array_factor_db(CFG, AMP, w, Direction(90, GRATING_NULL_DEG)) == -math.inf


def test_null_location_by_grid_search():
    w = make_weights(CFG, Direction(90, 0))
    grid = np.linspace(5, 25, 20001)
    terms = np.exp(1j * np.pi * np.outer(np.sin(np.radians(grid)), np.arange(8)))
    brute = np.abs(terms.sum(axis=1)) ** 2  # column factor; the row factor is 8 at theta=90
    assert abs(grid[np.argmin(brute)] - GRATING_NULL_DEG) < 1e-3
    near = array_factor_db(CFG, AMP, w, Direction(90, GRATING_NULL_DEG + 0.5))
    assert near < -10


def test_quantize_phase_levels():
    ph = np.linspace(-7, 7, 1001)
    q = quantize_phase(ph, 3)
    step = 2 * np.pi / 8
    assert np.allclose(np.mod(q / step, 1.0) * (1 - np.mod(q / step, 1.0)), 0.0, atol=1e-9)
    err = np.angle(np.exp(1j * (q - ph)))
    assert np.all(np.abs(err) <= step / 2 + 1e-12)
    assert quantize_phase(ph, None) is ph or np.array_equal(quantize_phase(ph, None), ph)


def test_quantization_sweep_monotone():
    """Averaged and worst-case steering gain never drop as bits increase.

    Individual angles can lose a little when a finer grid rounds less
    luckily, so the sweep statistics carry the invariant.
    """
    phis = np.arange(-60.0, 60.01, 0.5)
    unbounded = np.array([array_factor_db(CFG, AMP, make_weights(CFG, Direction(90, p)), Direction(90, p)) for p in phis])
    rows = []
    for b in range(1, 11):
        rows.append([array_factor_db(CFG, AMP, make_weights(CFG, Direction(90, p), b), Direction(90, p)) for p in phis])
    m = np.array(rows)
    assert np.all(np.diff(m.mean(axis=1)) >= 0)
    assert np.all(np.diff(m.min(axis=1)) >= 0)
    assert np.all(np.abs(m[7:] - unbounded) <= 0.1)
    assert np.allclose(unbounded, BORESIGHT_AF_DB, atol=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 180), st.floats(-180, 180))
def test_patch_symmetry(theta, phi):
    a = PATCH.gain_db(theta, phi)
    assert PATCH.gain_db(theta, -phi) == pytest.approx(a, abs=1e-12)
    assert PATCH.gain_db(180 - theta, phi) == pytest.approx(a, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_patch_bounds(theta, phi):
    g = element_gain_db(PATCH, Direction(theta, phi))
    assert PATCH.g_max - PATCH.a_m - 1e-12 <= g <= PATCH.g_max + 1e-12


@settings(max_examples=100, deadline=None)
@given(
    st.integers(1, 6), st.integers(1, 6),
    st.floats(-90, 90), st.floats(0, 180), st.floats(-180, 180),
    st.one_of(st.none(), st.integers(1, 8)),
)
def test_af_upper_bound(rows, cols, steer, theta, phi, bits):
    cfg = ArrayConfig(rows, cols)
    w = make_weights(cfg, Direction(90, steer), bits)
    af = array_factor_db(cfg, AmplitudeProfile.uniform(cfg.n), w, Direction(theta, phi))
    assert af <= 10 * math.log10(cfg.n) + 1e-9


@settings(max_examples=100, deadline=None)
@given(st.floats(-180, 180), st.floats(0, 180), st.floats(-180, 180))
def test_db_round_trip(steer, theta, phi):
    w = make_weights(CFG, Direction(90, steer))
    d = Direction(theta, phi)
    g = array_gain_db(PATCH, CFG, AMP, w, d)
    a = field_amplitude(PATCH, CFG, AMP, w, d)
    if math.isinf(g):
        assert a == 0.0
    else:
        assert 20 * math.log10(a) == pytest.approx(g, abs=1e-9)


def test_direction_normalization():
    d = Direction(190.0, 10.0).normalized()
    assert d.theta == pytest.approx(170.0)
    assert d.phi == pytest.approx(-170.0)
    assert Direction(90.0, 180.0).normalized().phi == -180.0


def test_tabulated_reproduces_nodes():
    model = measured_patch_pattern(step=5.0)
    T, P = np.meshgrid(model.theta_grid, model.phi_grid, indexing="ij")
    assert np.array_equal(model.gain_db(T, P), model.gain)


def test_measured_patch_shape():
    model = measured_patch_pattern()
    assert model.g_max == pytest.approx(5.71)
    assert model.gain_db(90, 0) - model.gain_db(90, 60) == pytest.approx(6.0, abs=1e-9)
    assert model.gain_db(90, 0) - model.gain_db(90, 180) == pytest.approx(25.0, abs=1e-9)


def test_tabulated_domain():
    model = measured_patch_pattern(step=10.0)
    with pytest.raises(PatternDomainError):
        model.gain_db(-1.0, 0.0)
    with pytest.raises(PatternDomainError):
        model.gain_db(90.0, 181.0)


def test_tabulated_grid_validation():
    with pytest.raises(PatternFileError):
        Tabulated(np.array([0.0, 90.0]), np.array([-90.0, 180.0]), np.zeros((2, 2)))


def test_tabulated_file_round_trip(tmp_path):
    model = measured_patch_pattern(step=15.0)
    path = tmp_path / "p.csv"
    save_tabulated(model, path)
    back = load_tabulated(path)
    assert np.allclose(back.gain, model.gain, atol=1e-6)
    assert np.array_equal(back.phi_grid, model.phi_grid)


@pytest.mark.parametrize(
    "body, line",
    [
        ("theta_deg,phi_deg,gain_dbi\n0,-180,1\n0,180,x\n", 3),
        ("theta_deg,phi_deg,gain_dbi\n0,-180,1\n0,180\n", 3),
        ("theta,phi,gain\n", 1),
        ("theta_deg,phi_deg,gain_dbi\n0,-180,1\n0,180,1\n180,180,1\n180,-180,1\n", 4),
    ],
)
def test_pattern_file_errors_name_line(tmp_path, body, line):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(PatternFileError, match=f"bad.csv:{line}:"):
        load_tabulated(path)


def test_pattern_cut_columns():
    w = make_weights(CFG, Direction(90, 0))
    cut = export_pattern_cut(PATCH, CFG, AMP, w, phi_step=1.0)
    assert cut.dtype.names == ("phi_deg", "element_db", "af_db", "array_db")
    i = int(np.argmax(cut["array_db"]))
    assert cut["phi_deg"][i] == 0.0
    assert cut["array_db"][i] == pytest.approx(8.0 + BORESIGHT_AF_DB, abs=1e-9)
    finite = np.isfinite(cut["af_db"])
    assert np.allclose(cut["array_db"][finite], (cut["element_db"] + cut["af_db"])[finite])
