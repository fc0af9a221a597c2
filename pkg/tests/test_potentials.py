import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twopeak import potentials as pot
from twopeak.potentials import (ExpressionDomainError, ExpressionSyntaxError, GammaKind,
                                ParameterError, PotentialSet)


def test_literal_and_arithmetic():
    assert pot.evaluate(pot.parse("1", 3), (0, 0, 0)) == 1.0
    t = pot.parse("2 + 0.5*sin(x1)", 3)
    assert pot.evaluate(t, (math.pi / 2, 0, 0)) == pytest.approx(2.5, abs=1e-15)


def test_precedence():
    t = pot.parse("2*3^2 - 8/4/2 + -x1^2", 1)
    assert pot.evaluate(t, (3.0,)) == pytest.approx(18 - 1 - 9)


def test_syntax_error_offset():
    with pytest.raises(ExpressionSyntaxError) as ei:
        pot.parse("2 +", 3)
    assert ei.value.offset == 3


@pytest.mark.parametrize("text", ["foo(x1)", "x4", "y1 + 1", "x1^x2"])
def test_rejected_input(text):
    with pytest.raises((ExpressionSyntaxError, ParameterError, ValueError)):
        pot.parse(text, 3)


def test_evaluate_examples():
    assert pot.evaluate(pot.parse("x1^2 + x2^2", 2), (3, 4)) == 25
    assert pot.evaluate(pot.parse("exp(0*x1)", 2), (7.5, -1)) == 1
    with pytest.raises(ExpressionDomainError):
        pot.evaluate(pot.parse("sqrt(x1)", 2), (-1, 0))
    with pytest.raises(ExpressionDomainError):
        pot.evaluate(pot.parse("1/x1", 1), (0.0,))


def test_gradient_examples():
    np.testing.assert_allclose(pot.gradient(pot.parse("x1^2", 1), (3,)), [6])
    np.testing.assert_allclose(pot.gradient(pot.parse("5", 2), (1, 2)), [0, 0])
    np.testing.assert_allclose(pot.gradient(pot.parse("sin(x1)*x2", 2), (0, 2)), [2, 0])


def _fd_grad(tree, x, h=1e-5):
    g = []
    for i in range(len(x)):
        e = np.zeros(len(x))
        e[i] = h
        g.append((pot.evaluate(tree, x + e) - pot.evaluate(tree, x - e)) / (2 * h))
    return np.array(g)


def test_gradient_corpus():
    rng = np.random.default_rng(7)
    for _ in range(20):
        t = pot.random_tree(rng, 3)
        x = rng.uniform(-1, 1, 3)
        g = pot.gradient(t, x)
        fd = _fd_grad(t, x)
        scale = max(np.linalg.norm(fd), 1.0)
        assert np.linalg.norm(g - fd) / scale <= 1e-6, str(t)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_roundtrip(seed):
    rng = np.random.default_rng(seed)
    t = pot.random_tree(rng, 2)
    t2 = pot.parse(pot.to_string(t.root), 2)
    pts = rng.uniform(-2, 2, (100, 2))
    a = np.array([pot.evaluate(t, p) for p in pts])
    b = np.array([pot.evaluate(t2, p) for p in pts])
    np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_derivative_stays_in_grammar(seed):
    rng = np.random.default_rng(seed)
    t = pot.random_tree(rng, 2)
    for d in pot.gradient_trees(t):
        again = pot.parse(pot.to_string(d.root), 2)
        x = rng.uniform(-1, 1, 2)
        assert pot.evaluate(again, x) == pytest.approx(pot.evaluate(d, x), rel=1e-12, abs=1e-12)


def test_vectorised_evaluation_matches_scalar():
    t = pot.parse("1.5 - 0.5*exp(-(x1^2+2*x2^2))", 2)
    X, Y = np.meshgrid(np.linspace(-1, 1, 5), np.linspace(-1, 1, 4), indexing="ij")
    v = pot.evaluate(t, [X, Y])
    for i in range(5):
        for j in range(4):
            assert v[i, j] == pot.evaluate(t, (X[i, j], Y[i, j]))


def test_validate_hypotheses():
    ok = pot.validate_hypotheses(
        PotentialSet.from_strings(J1="1+0.5*sin(x1)", dim=1,
                                  bounds=[(0.4, 10), (0.5, 10), (0.5, 10), (0.5, 10)]),
        [(-4, 4)], 41)
    assert ok.passed and ok.minima["J1"] == pytest.approx(0.5, abs=2e-3)
    bad = pot.validate_hypotheses(
        PotentialSet.from_strings(J1="x1", dim=1, bounds=[(0.1, 10)] + [(0.5, 10)] * 3),
        [(-1, 1)], 21)
    assert not bad.passed
    assert all(v[1][0] <= 0.1 for v in bad.violations)
    const = pot.validate_hypotheses(PotentialSet.from_strings(dim=2), [(-1, 1)] * 2, 5)
    assert const.passed and const.minima["J1"] == const.maxima["J1"] == 1.0
    assert const.max_grad_norm["J1"] == 0.0
    with pytest.raises(ParameterError):
        pot.validate_hypotheses(PotentialSet.from_strings(dim=2), [(-1, 1)] * 2, 1)


def test_gamma_examples():
    assert pot.gamma(PotentialSet.from_strings(dim=3), (0.3, 0, 1)) == 2.0
    assert pot.gamma(PotentialSet.from_strings("4", "1", "1", "2", dim=3), (0, 0, 0)) == 2.5
    ps = PotentialSet.from_strings(J1="1+x1^2", dim=3)
    assert pot.gamma(ps, (0, 0, 0)) == 2.0
    assert pot.gamma(ps, (1, 0, 0)) == pytest.approx(math.sqrt(2) + 1)
    with pytest.raises(ExpressionDomainError):
        pot.gamma(PotentialSet.from_strings(J1="x1", dim=1), (-1.0,))


def test_gamma_bar():
    assert pot.gamma_bar(PotentialSet.from_strings("4", dim=3), (0, 0, 0), 2.0, 3) == 3.0
    for p, N in [(2.0, 2), (1.5, 3), (3.0, 1), (2.5, 2)]:
        assert pot.gamma_bar(PotentialSet.from_strings(dim=N), (0.0,) * N, p, N) == 2.0
    with pytest.raises(ParameterError):
        pot.gamma_bar(PotentialSet.from_strings(dim=3), (0, 0, 0), 3.0, 3)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.05, 20.0), min_size=4, max_size=4))
def test_gamma_bar_p2_n3_is_gamma(vals):
    ps = PotentialSet.from_strings(*[repr(v) for v in vals], dim=3)
    a = pot.gamma_bar(ps, (0, 0, 0), 2.0, 3)
    b = pot.gamma(ps, (0, 0, 0))
    assert abs(a - b) <= 1e-12 * abs(b)


def test_landscape_gradient_matches_differences():
    ps = PotentialSet.from_strings(J1="1.5 - 0.5*exp(-(x1^2+2*x2^2))", K2="1+0.2*x1", dim=2)
    kind = GammaKind("general", 2.0, 2)
    q = np.array([0.3, -0.2])
    g = pot.landscape_gradient(ps, q, kind)
    fd = [(pot.landscape_value(ps, q + e, kind) - pot.landscape_value(ps, q - e, kind)) / 2e-6
          for e in 1e-6 * np.eye(2)]
    np.testing.assert_allclose(g, fd, rtol=1e-6)


def test_single_minimum():
    ps = PotentialSet.from_strings(J1="1+x1^2+x2^2+x3^2", dim=3)
    rep = pot.find_critical_points(ps, [(-1, 1)] * 3)
    assert len(rep.critical_points) == 1
    c = rep.critical_points[0]
    assert c.kind == "min"
    np.testing.assert_allclose(c.Q, 0, atol=1e-8)


def test_constant_is_degenerate():
    rep = pot.find_critical_points(PotentialSet.from_strings(dim=2), [(-1, 1)] * 2)
    assert rep.degenerate and rep.critical_points == []


def test_double_well_2d():
    ps = PotentialSet.from_strings(J1="1+(x1^2-0.25)^2+x2^2", dim=2)
    rep = pot.find_critical_points(ps, [(-1, 1)] * 2)
    kinds = sorted(c.kind for c in rep.critical_points)
    assert kinds == ["min", "min", "saddle"]
    mins = sorted(c.Q[0] for c in rep.critical_points if c.kind == "min")
    np.testing.assert_allclose(mins, [-0.5, 0.5], atol=1e-6)


def test_double_well_3d_flat_directions():
    # the landscape does not depend on x2, x3: every critical point is degenerate
    ps = PotentialSet.from_strings(J1="1+(x1^2-0.25)^2", dim=3)
    rep = pot.find_critical_points(ps, [(-1, 1)] * 3)
    assert rep.extrema() == []
    assert rep.degenerate_count >= 1


def test_minima_are_strict_on_probe_sphere():
    ps = PotentialSet.from_strings(J1="1+(x1^2-0.25)^2+2*x2^2", dim=2)
    kind = GammaKind("general", 2.0, 2)
    rep = pot.find_critical_points(ps, [(-1, 1)] * 2, kind)
    for c in rep.extrema():
        assert c.grad_norm <= 1e-8
        q = np.array(c.Q)
        for d in pot.sphere_probes(2, 12):
            assert pot.landscape_value(ps, q + 0.5 * c.isolation_radius * d, kind) > c.value


def test_families():
    b = pot.parse(pot.family("bump", 2, base=1, amp=0.5), 2)
    assert pot.evaluate(b, (0, 0)) == 1.5
    h = pot.parse(pot.family("harmonic", 2, base=1, amp=2, center=[1.0, 0.0]), 2)
    assert pot.evaluate(h, (2, 1)) == 5.0
    w = pot.parse(pot.family("double_well", 2), 2)
    assert pot.evaluate(w, (0.5, 0)) == 1.0
    with pytest.raises(ParameterError):
        pot.family("nope", 2)


def test_landscape_json():
    rep = pot.find_critical_points(PotentialSet.from_strings(J1="1+x1^2", dim=1), [(-1, 1)])
    js = rep.to_json()
    assert set(js["critical_points"][0]) == {"Q", "value", "kind", "isolation_radius"}
