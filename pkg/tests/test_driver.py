import json

import numpy as np
import pytest

from twopeak import driver as D
from twopeak import field
from twopeak.potentials import ParameterError, PotentialSet
from twopeak.reduction import ReductionConfig

JK = PotentialSet.from_strings(J1=D.BUMP, K1=D.BUMP, dim=2)
CFG = ReductionConfig(h=0.25)


@pytest.fixture(scope="module")
def solved(prof2):
    return D.solve_at(JK, prof2, (0.0, 0.0), 0.01, CFG)


def test_fit_slope_examples():
    e = [0.04, 0.02, 0.01, 0.005]
    s, _, hw = D.fit_slope([(x, x) for x in e])
    assert s == pytest.approx(1.0, abs=1e-12) and hw < 1e-12
    assert D.fit_slope([(x, x ** 0.5) for x in e])[0] == pytest.approx(0.5, abs=1e-12)
    assert D.fit_slope([(x, 7.0) for x in e])[0] == pytest.approx(0.0, abs=1e-12)
    s, _, hw = D.fit_slope([(x, x * (1 + 0.1 * (-1) ** i)) for i, x in enumerate(e)])
    assert hw > 0
    with pytest.raises(ValueError):
        D.fit_slope([(0.1, 1.0), (0.2, 2.0)])
    with pytest.raises(ValueError):
        D.fit_slope([(0.1, 1.0), (0.2, -2.0), (0.3, 1.0)])


def test_solution_contract(solved):
    rec, rr = solved
    assert rr.converged
    assert rec.status == "converged"
    assert rec.newton_iters <= 15
    assert rec.grad_norm <= 1e-9 and rec.grad_max <= 1e-9
    assert rec.min_value > 0
    g = field.grad(rec.fields, JK, 0.01, -1.0)
    inner = (slice(1, -1),) * 2
    assert np.abs(g.u[inner]).max() <= 1e-9 and np.abs(g.v[inner]).max() <= 1e-9
    # peaks straddle the landscape minimum along e1
    assert rec.Q_eps[0] < 0 < rec.Qprime_eps[0]
    assert abs(rec.Q_eps[1]) < 1e-6
    json.dumps(rec.to_json())


def test_newton_from_solution_is_immediate(solved):
    rec, _ = solved
    again = D.newton_solve(rec.fields, JK, 0.01, -1.0)
    assert again.newton_iters <= 1


def test_newton_from_zero_is_flagged(solved, prof2):
    rec, _ = solved
    zero = field.FieldPair.zeros(rec.fields.grid)
    out = D.newton_solve(zero, JK, 0.01, -1.0, ref_amplitude=prof2.shoot_amplitude)
    assert out.newton_iters == 0
    assert out.status.startswith("collapsed")
    assert out.Q_eps is None


def test_extract_peaks_errors():
    g = field.Grid((0.0, 0.0), 0.5, (30, 30))
    x, y = g.coords
    bump = np.exp(-((x - 7) ** 2 + (y - 7) ** 2))
    twin = bump + np.exp(-((x - 10) ** 2 + (y - 7) ** 2))
    with pytest.raises(D.PeakError) as ei:
        D.extract_peaks(field.FieldPair(twin, bump, g), 0.01)
    assert len(ei.value.locations) == 2
    with pytest.raises(D.PeakError):
        D.extract_peaks(field.FieldPair(np.ones(g.shape), bump, g), 0.01)
    edge = np.exp(-((x - 0.5) ** 2 + (y - 7) ** 2))
    with pytest.raises(D.PeakError):
        D.extract_peaks(field.FieldPair(edge, bump, g), 0.01)
    q, qp = D.extract_peaks(field.FieldPair(np.exp(-((x - 7.2) ** 2 + (y - 7) ** 2)), bump, g), 0.1)
    assert q[0] == pytest.approx(0.72, abs=0.01) and qp == pytest.approx((0.7, 0.7))


def test_run_config_invariants():
    with pytest.raises(ParameterError):
        D.RunConfig(beta=1.0)
    with pytest.raises(ParameterError):
        D.RunConfig(eps=[0.01, 0.02, 0.005])
    with pytest.raises(ParameterError):
        D.RunConfig(dim=3, box=[[-1, 1]] * 3, Q=[0, 0, 0], p=3.0)
    cfg = D.RunConfig()
    assert cfg.reduction().h == cfg.h
    assert cfg.reduction(True).relative_modes


def test_sweep_record(prof2):
    cfg = D.RunConfig(h=0.25, eps=[0.04, 0.02, 0.01], relative_modes=True)
    sw = D.epsilon_sweep(cfg, prof2)
    assert [r["epsilon"] for r in sw.rows] == cfg.eps
    assert all(set(r) == set(D.SWEEP_COLUMNS) for r in sw.rows)
    assert sw.slopes["grad_norm"][0] > 0.45
    assert sw.slopes["sep"][0] == pytest.approx(0.5, abs=1e-9)
    assert sw.slopes["sep_over_eps"][0] == pytest.approx(-0.5, abs=1e-9)
    ov = [r["overlap_over_eps"] for r in sw.rows]
    assert all(b < a for a, b in zip(ov, ov[1:]))
    with pytest.raises(ValueError):
        D.epsilon_sweep(D.RunConfig(eps=[0.04, 0.02]), prof2)


def test_field_distance(solved):
    rec, _ = solved
    assert D.field_distance(rec.fields, rec.fields) == 0.0
    shifted = field.FieldPair(np.roll(rec.fields.u, 8, axis=0), rec.fields.v, rec.fields.grid)
    assert D.field_distance(rec.fields, shifted) > 0.1


def test_scan_constant_potentials(prof2):
    scan = D.multiplicity_scan(PotentialSet.from_strings(dim=2), prof2, 0.01, [[-1, 1]] * 2, CFG)
    assert scan.solutions == [] and scan.extrema_count == 0
    assert "degenerate" in scan.status


def test_scan_single_bump(prof2):
    scan = D.multiplicity_scan(JK, prof2, 0.02, [[-1, 1]] * 2, CFG)
    assert scan.extrema_count == 1
    assert len(scan.solutions) == 1


def test_criterion_result_line():
    r = D.CriterionResult(3, "title", True, {}, "x", seconds=1.0)
    assert r.line().startswith("[PASS]  3 title")
