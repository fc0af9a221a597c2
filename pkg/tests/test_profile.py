import math

import numpy as np
import pytest

from twopeak import profile as pf
from twopeak.potentials import ParameterError


def test_one_dimensional_oracle(prof1):
    r = prof1.r_samples
    sel = r <= 10
    exact = math.sqrt(2) / np.cosh(r[sel])
    assert abs(prof1.shoot_amplitude - math.sqrt(2)) <= 1e-6
    assert np.abs(prof1.values[sel] - exact).max() <= 1e-5
    assert pf.moment(prof1, 2) == pytest.approx(4.0, rel=1e-4)
    assert pf.moment(prof1, 4) == pytest.approx(16 / 3, rel=1e-4)


@pytest.mark.parametrize("fixture", ["prof1", "prof2", "prof3"])
def test_profile_invariants(fixture, request):
    prof = request.getfixturevalue(fixture)
    assert np.all(prof.values > 0)
    assert np.all(np.diff(prof.values) < 0)
    assert prof.values[-1] <= 1e-8
    # Pohozaev / Nehari: int |W'|^2 + W^2 = int W^4
    lhs = pf.gradient_moment(prof) + pf.moment(prof, 2)
    assert lhs == pytest.approx(pf.moment(prof, 4), rel=1e-4)
    res = prof.residual(order=2)
    assert np.sqrt(np.mean(res ** 2)) <= 1e-5


def test_three_dimensional_step_stability(prof3):
    fine = pf.solve_profile(3, 2.0, ode_step=2.5e-4)
    assert fine.shoot_amplitude == pytest.approx(prof3.shoot_amplitude, rel=5e-5)
    assert pf.moment(fine, 4) == pytest.approx(pf.moment(prof3, 4), rel=5e-5)


def test_general_exponent():
    prof = pf.solve_profile(2, 1.5)
    # Nehari for p: int |W'|^2 + W^2 = int W^(2p)
    lhs = pf.gradient_moment(prof) + pf.moment(prof, 2)
    assert lhs == pytest.approx(pf.moment(prof, 3.0), rel=1e-4)


def test_bad_inputs(prof1):
    with pytest.raises(ParameterError):
        pf.solve_profile(4)
    with pytest.raises(ParameterError):
        pf.solve_profile(3, 3.0)  # supercritical for N=3
    with pytest.raises(ParameterError):
        pf.moment(prof1, 1.0)
    with pytest.raises(ParameterError):
        pf.rescale_profile(prof1, -1.0, 1.0)


def test_rescaling(prof2):
    u = pf.rescale_profile(prof2, 1.0, 1.0)
    assert (u.amplitude, u.width) == (1.0, 1.0)
    u = pf.rescale_profile(prof2, 4.0, 1.0, center=(1.0, 2.0))
    assert (u.amplitude, u.width) == (2.0, 2.0)
    assert u(np.array([1.0, 2.0])) == pytest.approx(2 * prof2.shoot_amplitude)


def test_rescaled_residual_order(prof2):
    steps = [0.05, 0.025, 0.0125]
    res = [pf.rescaled_residual(prof2, 4.0, 1.0, s) for s in steps]
    orders = np.log2(np.array(res[:-1]) / res[1:])
    assert np.all(np.abs(orders - 2.0) <= 0.2)


def test_limit_energy(prof1, prof3):
    e = pf.limit_energy(prof1, 1.0, 1.0)
    assert e.direct == pytest.approx(4 / 3, rel=1e-6)
    e3 = pf.limit_energy(prof3, 1.0, 1.0)
    assert e3.direct == pytest.approx(e3.quarter_value, rel=1e-4)
    assert e3.paper_value == pytest.approx(2 * e3.quarter_value)
    r = pf.limit_energy(prof3, 4.0, 1.0).direct / e3.direct
    assert r == pytest.approx(2.0, rel=1e-4)


def test_c0_candidates(prof1, prof3):
    half, quarter = pf.c0_candidates(prof1)
    assert half == pytest.approx(8 / 3, rel=1e-6)
    assert quarter == pytest.approx(4 / 3, rel=1e-6)
    h3, q3 = pf.c0_candidates(prof3)
    assert h3 == 2 * q3


def test_two_dimensional_moment(prof2):
    # frozen reference value for int W^4 in the plane
    assert pf.moment(prof2, 4) == pytest.approx(23.4017930, rel=1e-6)


def test_table_roundtrip(prof2, tmp_path):
    pf.save_profile(prof2, tmp_path / "w.dat")
    meta, r, w = pf.load_profile_table(tmp_path / "w.dat")
    assert meta["N"] == 2 and meta["p"] == 2.0
    assert meta["shoot_amplitude"] == prof2.shoot_amplitude
    np.testing.assert_array_equal(w, prof2.values)
