import math
import warnings

import numpy as np
import pytest

from gibbslab.analysis import (
    DefectCurve,
    DefectRow,
    EntropyCurve,
    consistency_check,
    defect_curve,
    entropy_density_curve,
    fit_boundary_correction,
    relative_entropy_box,
    window,
)
from gibbslab.interaction import Interaction, Term, ising_ferro, zero
from gibbslab.lattice import ALTERNATING, CHECKERBOARD2X2, MINUS, PLUS, RandomPattern, box, strip
from gibbslab.specification import Empirical, Gibbs, product_model
from gibbslab.twolayer import TimeEvolved


def test_window_shapes():
    assert window(2, 1) == box(2, 1)
    assert window(3, 2, width=4) == strip(3, 4)
    with pytest.raises(ValueError):
        window(2, 1, width=3)


def test_defect_zero_for_product():
    curve = defect_curve(TimeEvolved(zero(1), 0.5), ALTERNATING, range(0, 4), 5)
    assert curve.deltas == [0.0] * 4


def test_defect_markov_shielding():
    model = Gibbs(ising_ferro(0.8, d=2))
    curve = defect_curve(model, CHECKERBOARD2X2, range(1, 3), 3)
    assert curve.deltas == [0.0, 0.0]
    assert defect_curve(model, CHECKERBOARD2X2, [0], 3).deltas[0] > 0


def test_defect_time_evolved_dual_engine_and_decay():
    model = TimeEvolved(ising_ferro(1.0), 2.0)
    a = defect_curve(model, ALTERNATING, range(0, 5), 6, engine="enum")
    b = defect_curve(model, ALTERNATING, range(0, 5), 6, engine="strip")
    assert np.allclose(a.deltas, b.deltas, atol=1e-10, rtol=0)
    assert all(x > y for x, y in zip(a.deltas, a.deltas[1:]))


def test_defect_curve_argument_checks():
    model = Gibbs(ising_ferro(0.5))
    with pytest.raises(ValueError):
        defect_curve(model, PLUS, [], 3)
    with pytest.raises(ValueError):
        defect_curve(model, PLUS, [0, 3], 3)
    with pytest.raises(ValueError):
        DefectCurve([DefectRow(1, 2, 1.5, 0.0)])


def test_defect_empirical_rare_event_is_missing():
    vol = box(3, 1)
    samples = np.ones((10, len(vol)), dtype=np.int64)
    emp = Empirical(samples, vol, min_count=2)
    curve = defect_curve(emp, PLUS, [0, 1], 2)
    assert curve.deltas == [None, None]
    assert all(math.isnan(r.err) for r in curve.rows)


def test_relative_entropy_examples():
    mu = Gibbs(ising_ferro(0.4), box(2, 1), PLUS)
    assert relative_entropy_box(mu, mu, box(1, 1)) == 0.0
    point = product_model([0.0, 1.0])
    for n in (1, 3, 5):
        vol = box((n - 1) // 2, 1) if n % 2 else None
        assert relative_entropy_box(point, product_model(), vol) == pytest.approx(len(vol) * math.log(2), abs=1e-12)


def test_relative_entropy_generic_path_matches_product_path():
    nu = product_model([0.3, 0.7])
    mu = Gibbs(ising_ferro(0.5, 0.1))
    vol = box(2, 1)
    fast = relative_entropy_box(nu, mu, vol)
    lnu = nu.log_marginal(vol)
    lmu = mu.log_marginal(vol)
    slow = float(np.sum(np.exp(lnu) * (lnu - lmu)))
    assert fast == pytest.approx(slow, abs=1e-12)


def test_relative_entropy_infinite():
    plus_only = Interaction([Term([(0,)], [math.inf, 0.0])], 1, label="pinned")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        h = relative_entropy_box(product_model(), Gibbs(plus_only), box(1, 1))
    assert h == math.inf
    assert any(issubclass(w.category, RuntimeWarning) for w in caught)


def test_entropy_density_curve_examples():
    mu = Gibbs(ising_ferro(0.7))
    same = entropy_density_curve(mu, mu, n_max=3)
    assert same.values.tolist() == [0.0] * 4
    zero_beta = entropy_density_curve(product_model(), Gibbs(ising_ferro(0.0)), ns=[1, 4])
    assert np.allclose(zero_beta.values, 0.0, atol=1e-14)
    curve = entropy_density_curve(product_model(), mu, ns=[2, 8, 32, 128])
    target = math.log(math.cosh(0.7))
    errs = np.abs(curve.values - target)
    assert all(a > b for a, b in zip(errs, errs[1:]))
    with pytest.raises(ValueError):
        entropy_density_curve(mu, mu)
    with pytest.raises(ValueError):
        EntropyCurve([(1, -0.5)])


def test_fit_boundary_correction_recovers_constant():
    ns = np.array([1, 2, 4, 8])
    vals = 0.3 + 0.25 / (2 * ns + 1)
    assert fit_boundary_correction(ns, vals, 0.3) == pytest.approx(0.25, abs=1e-14)


def test_consistency_gibbs_is_exact():
    phi = ising_ferro(0.6, d=2)
    curve = consistency_check(Gibbs(phi), phi, [1, 2], [PLUS, ALTERNATING, RandomPattern(0.5, 3)])
    assert [v for _, v in curve.rows] == pytest.approx([0.0, 0.0], abs=1e-14)


def test_consistency_detects_wrong_model():
    phi = ising_ferro(0.6)
    curve = consistency_check(Gibbs(ising_ferro(0.2)), phi, [1, 2], [PLUS, MINUS])
    assert all(v > 0.1 for _, v in curve.rows)
