import itertools
import math

import numpy as np
import pytest

from gibbslab.engines import CapacityError
from gibbslab.interaction import ising_afm, ising_ferro, zero
from gibbslab.lattice import ALTERNATING, MINUS, PLUS, Configuration, Volume, box, fill
from gibbslab.specification import (
    ConditionalQuery,
    Empirical,
    Gibbs,
    UndefinedConditional,
    conditional_with_error,
    gamma,
    log_partition_function,
    partition_function,
    pressure,
    product_model,
)


def site(x, v=1):
    return Configuration(Volume([x]), [v])


def test_partition_function_examples():
    assert partition_function(zero(1), box(2, 1), PLUS) == pytest.approx(32.0)
    for beta in (0.0, 0.4, 1.3):
        assert partition_function(ising_ferro(beta), box(0, 1), PLUS) == pytest.approx(
            math.exp(2 * beta) + math.exp(-2 * beta)
        )


@pytest.mark.parametrize("engine", ["enum", "strip"])
def test_log_partition_brute_force(engine):
    phi = ising_ferro(0.6, 0.2, d=2)
    vol = box(1, 2)
    from gibbslab.interaction import energy

    ws = [
        -energy(phi, Configuration(vol, np.array(c)), ALTERNATING)
        for c in itertools.product((-1, 1), repeat=len(vol))
    ]
    exact = float(np.log(np.sum(np.exp(ws))))
    assert log_partition_function(phi, vol, ALTERNATING, engine) == pytest.approx(exact, abs=1e-12)


def test_gamma_beta_zero_is_uniform():
    target = Configuration(box(1, 1), [1, -1, 1])
    assert gamma(zero(1), ConditionalQuery(target, None, PLUS)) == pytest.approx(1 / 8)


def test_gamma_single_site_closed_form():
    beta = 0.8
    p = gamma(ising_ferro(beta), ConditionalQuery(site((0,)), None, PLUS))
    assert p == pytest.approx(1 / (1 + math.exp(-4 * beta)), abs=1e-14)


def test_gamma_consistency_over_target_states():
    phi = ising_afm(0.5, d=2)
    tv = Volume([(0, 0), (1, 0)])
    total = sum(
        gamma(phi, ConditionalQuery(Configuration(tv, list(v)), None, ALTERNATING))
        for v in itertools.product((-1, 1), repeat=2)
    )
    assert total == pytest.approx(1.0, abs=1e-14)


def test_gamma_capacity_error():
    q = ConditionalQuery(fill(box(3, 2), PLUS), None, PLUS)
    with pytest.raises(CapacityError):
        gamma(ising_ferro(0.3, d=2), q, "enum")
    assert 0 < gamma(ising_ferro(0.3, d=2), q, "strip") < 1
    with pytest.raises(CapacityError):
        gamma(ising_ferro(0.3, d=2), ConditionalQuery(fill(box(8, 2), PLUS), None, PLUS), "strip")


def test_query_overlap_rejected():
    with pytest.raises(ValueError, match="overlap"):
        ConditionalQuery(site((0,)), fill(box(1, 1), PLUS))


def test_pressure_examples():
    assert pressure(zero(1)) == pytest.approx(math.log(2), abs=1e-12)
    for beta in (0.2, 0.7, 1.5):
        assert pressure(ising_ferro(beta)) == pytest.approx(math.log(2 * math.cosh(beta)), abs=1e-10)


def test_gibbs_conditional_matches_gamma():
    phi = ising_ferro(0.9)
    model = Gibbs(phi, box(3, 1), MINUS)
    q = ConditionalQuery(site((0,)), fill(box(1, 1).difference(box(0, 1)), PLUS))
    # the chain is Markov, so conditioning on both neighbours fixes the law
    assert model.conditional(q) == pytest.approx(gamma(phi, ConditionalQuery(site((0,)), None, PLUS)), abs=1e-13)


def test_gibbs_marginal_normalised():
    model = Gibbs(ising_ferro(0.5, 0.1, d=2), box(1, 2), PLUS)
    lm = model.log_marginal(Volume([(0, 0), (1, 1)]))
    assert np.exp(lm).sum() == pytest.approx(1.0, abs=1e-13)


def test_product_model_is_product():
    m = product_model([0.25, 0.75])
    assert m.is_product()
    assert m.conditional(ConditionalQuery(site((0,)), fill(Volume([(1,)]), MINUS))) == pytest.approx(0.75)
    assert product_model().conditional(ConditionalQuery(site((0,)))) == pytest.approx(0.5)


def test_empirical_conditional_and_undefined():
    vol = box(1, 1)
    samples = np.array([[1, 1, 1], [1, -1, 1], [-1, -1, 1], [-1, 1, -1]])
    emp = Empirical(samples, vol)
    q = ConditionalQuery(site((0,)), fill(Volume([(-1,)]), PLUS))
    p, err = conditional_with_error(emp, q)
    assert p == pytest.approx(0.5)
    assert err == pytest.approx(math.sqrt(0.25 / 2))
    never = ConditionalQuery(site((0,)), Configuration(Volume([(-1,), (1,)]), [1, -1]))
    with pytest.raises(UndefinedConditional):
        emp.conditional(never)
    assert np.exp(emp.log_marginal(Volume([(1,)]))).tolist() == pytest.approx([0.25, 0.75])


def test_conditional_with_error_exact_model_has_zero_error():
    _, err = conditional_with_error(Gibbs(ising_ferro(0.3), box(2, 1), PLUS), ConditionalQuery(site((0,))))
    assert err == 0.0
