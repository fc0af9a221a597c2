import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twopeak import ansatz as anz
from twopeak import field
from twopeak.ansatz import CutoffSpec, PlacementError
from twopeak.driver import extract_peaks, fit_slope
from twopeak.potentials import ParameterError, PotentialSet


def test_place_examples():
    pl = anz.place((0.3, 0.0, 0.0), 0.04)
    np.testing.assert_allclose(pl.Qprime, (0.5, 0, 0))
    np.testing.assert_allclose(pl.P, (7.5, 0, 0))
    np.testing.assert_allclose(pl.Pprime, (12.5, 0, 0))
    assert pl.separation == pytest.approx(5.0, abs=1e-12)
    assert anz.place((0, 0, 0), 0.01).separation == pytest.approx(10.0, abs=1e-12)
    far = anz.place((0, 0, 0), 0.0001)
    assert far.separation > 2 * CutoffSpec(0.0001).outer_radius


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-4, 0.2), st.floats(-1, 1), st.floats(-1, 1))
def test_place_invariants(eps, a, b):
    pl = anz.place((a, b), eps)
    assert abs(pl.separation - eps ** -0.5) <= 1e-12 * eps ** -0.5
    assert math.dist(pl.Q, pl.Qprime) == pytest.approx(math.sqrt(eps), rel=1e-12)


def test_place_errors():
    with pytest.raises(PlacementError):
        anz.place((0.95, 0.0), 0.04, box=[(-1, 1), (-1, 1)])
    with pytest.raises(ParameterError):
        anz.place((0.0,), 0.0)


def test_cutoff_examples():
    s = CutoffSpec(0.0001)
    assert (s.inner_radius, s.outer_radius) == pytest.approx((10.0, 20.0))
    assert anz.cutoff_value(5.0, s) == 1.0
    assert anz.cutoff_value(25.0, s) == 0.0
    assert anz.cutoff_value(15.0, s) == pytest.approx(0.5, abs=1e-15)
    assert anz.cutoff_value(np.array([15.0, 0.0]), s) == pytest.approx(0.5)


def test_cutoff_gradient_bound():
    rng = np.random.default_rng(0)
    for eps in (0.04, 0.01, 0.0001):
        s = CutoffSpec(eps)
        r = rng.uniform(0, 2.5 * s.outer_radius, 200)
        h = 1e-6
        g = np.abs(s.radial(r + h) - s.radial(r - h)) / (2 * h)
        assert g.max() <= 2 * eps ** 0.25 + 1e-8
        assert s.max_gradient() < 2 * eps ** 0.25


def test_build_ansatz(prof2, const2):
    pl = anz.place((0.1, 0.0), 0.01)
    g = field.make_grid(pl, 8.0, 0.25)
    pair = anz.ansatz(const2, prof2, pl, g)
    assert pair.fields.u.max() == pytest.approx(prof2.shoot_amplitude, abs=1e-4)
    assert pair.fields.boundary_max() == 0.0
    four = PotentialSet.from_strings(J1="4", dim=2)
    p4 = anz.ansatz(four, prof2, pl, g)
    assert p4.fields.u.max() == pytest.approx(2 * prof2.shoot_amplitude, abs=1e-3)
    # support containment
    r = np.sqrt(((g.points - np.array(pl.P)) ** 2).sum(-1))
    assert np.all(pair.fields.u[r >= CutoffSpec(0.01).outer_radius] == 0.0)
    # disjoint supports at small eps: no overlap at all
    pl2 = anz.place((0.0, 0.0), 0.0005)
    g2 = field.make_grid(pl2, 2.2 * 0.0005 ** -0.25, 0.5)
    assert field.overlap(anz.ansatz(const2, prof2, pl2, g2).fields) == 0.0


def test_window_too_small(prof2, const2):
    pl = anz.place((0.0, 0.0), 0.01)
    g = field.make_grid(pl, 6.5, 0.25)
    small = field.Grid(g.origin, g.h, (g.shape[0] - 8, g.shape[1]))
    with pytest.raises(PlacementError):
        anz.ansatz(const2, prof2, pl, small)


def test_peaks_invert_placement(prof2, bump):
    for Q in [(0.0, 0.0), (0.137, -0.052)]:
        pl = anz.place(Q, 0.02)
        g = field.make_grid(pl, 4 * 0.02 ** -0.25, 0.25)
        q, qp = extract_peaks(anz.ansatz(bump, prof2, pl, g).fields, 0.02)
        assert math.dist(q, pl.Q) <= 0.02 * g.h
        assert math.dist(qp, pl.Qprime) <= 0.02 * g.h


def test_tangent_basis(ansatz_state, prof2, bump):
    pl, g, _ = ansatz_state
    tb = anz.tangent_basis(pl, bump, prof2, g)
    G = np.array([[field.inner(a, b) for b in tb] for a in tb])
    np.testing.assert_allclose(G, np.eye(2), atol=1e-10)
    assert len(tb.raw_norms) == 2 and min(tb.raw_norms) > 1
    # Q on the x1 axis, potentials even in x2: the x2 element is odd in x2
    even = field.FieldPair(np.cos(g.coords[1] - pl.P[1]) + g.coords[0] ** 2,
                           np.exp(-(g.coords[1] - pl.P[1]) ** 2), g)
    even.u[g.boundary_mask] = 0.0
    even.v[g.boundary_mask] = 0.0
    assert abs(field.inner(tb.elements[1], even)) <= 1e-10


def test_tangent_matches_translation(prof2):
    ps = PotentialSet.from_strings(J1="2 - exp(-(x1^2+x2^2))", dim=2)
    out = []
    for eps in (0.04, 0.02, 0.01):
        pl = anz.place((0.3, 0.1), eps)
        g = field.make_grid(pl, 4 * eps ** -0.25, 0.25)
        tb = anz.tangent_basis(pl, ps, prof2, g)
        cd = anz.center_directions(anz.ansatz(ps, prof2, pl, g), 0.05 * g.h)
        out.append((eps, field.norm(tb.raw[0] - (cd[0] + cd[2]))))
    assert fit_slope(out)[0] == pytest.approx(1.0, abs=0.1)


def test_pair_at_centers(prof2, bump, ansatz_state):
    pl, g, pair = ansatz_state
    other = anz.pair_at_centers(bump, prof2, pl.P, pl.Pprime, 0.01, g)
    # u is generated by J at Q in both constructions
    np.testing.assert_allclose(other.fields.u, pair.fields.u, atol=1e-14)
