import math

import numpy as np
import pytest
from scipy.linalg import expm

from gibbslab.dynamics import (
    TrajectoryConfig,
    evolve,
    evolve_exclusion,
    evolve_exclusion_batch,
    evolve_glauber,
    evolve_glauber_batch,
    gibbs_chain,
    glauber_rate,
    heat_kernel,
    nearest_neighbor_bonds,
    rng_for,
    sample_gibbs,
    sample_gibbs_batch,
)
from gibbslab.interaction import ising_ferro, zero
from gibbslab.lattice import PLUS, Configuration, RandomPattern, box, fill, rect


def test_glauber_rate_examples():
    c = fill(box(1, 1), PLUS)
    assert glauber_rate(zero(), (0,), c, PLUS) == 1.0
    assert glauber_rate(ising_ferro(0.7), (0,), c, PLUS) == pytest.approx(math.exp(-1.4))


def test_heat_kernel_examples():
    k0 = heat_kernel(0)
    assert (k0.p_same, k0.p_diff) == (1.0, 0.0)
    kinf = heat_kernel(math.inf)
    assert (kinf.p_same, kinf.p_diff) == (0.5, 0.5)
    k = heat_kernel(math.log(3) / 2)
    assert k.p_same == pytest.approx(2 / 3, abs=1e-14)
    assert k.p_diff == pytest.approx(1 / 3, abs=1e-14)


@pytest.mark.parametrize("t", [0.01, 0.5, 2.0, 7.5])
def test_heat_kernel_matches_generator_exponential(t):
    gen = np.array([[-1.0, 1.0], [1.0, -1.0]])
    assert np.allclose(heat_kernel(t).matrix(), expm(gen * t), atol=1e-13)


def test_heat_kernel_small_t_precision():
    k = heat_kernel(1e-12)
    assert k.p_diff == pytest.approx(1e-12, rel=1e-9)


def test_heat_kernel_rejects_negative():
    with pytest.raises(ValueError):
        heat_kernel(-0.1)


def test_rng_streams_distinct_and_reproducible():
    a = rng_for(5, 0).random(4)
    assert np.array_equal(a, rng_for(5, 0).random(4))
    assert not np.array_equal(a, rng_for(5, 1).random(4))
    assert not np.array_equal(a, rng_for(6, 0).random(4))


def test_evolve_identity_at_time_zero():
    c = fill(box(3, 2), RandomPattern(0.5, 1))
    assert evolve_glauber(c, TrajectoryConfig("glauber", 0.0)) is c
    assert evolve_exclusion(c, TrajectoryConfig("exclusion", 0.0)) is c


def test_trajectory_config_validation():
    with pytest.raises(ValueError):
        TrajectoryConfig("kawasaki", 1.0)
    with pytest.raises(ValueError):
        TrajectoryConfig("glauber", -1.0)
    with pytest.raises(ValueError):
        evolve_glauber(fill(box(1, 1), PLUS), TrajectoryConfig("exclusion", 1.0))


def test_glauber_deterministic():
    c = fill(box(4, 2), RandomPattern(0.5, 3))
    cfg = TrajectoryConfig("glauber", 0.8, PLUS, 11, ising_ferro(0.4, d=2))
    a = evolve_glauber(c, cfg, replica=2)
    b = evolve_glauber(c, cfg, replica=2)
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(evolve(c, cfg, 2).values, a.values)


def test_infinite_temperature_single_site_law():
    # zero interaction: each spin is a rate-one flip process
    t = 0.3
    init = np.ones((20000, 1), dtype=np.int64)
    out = evolve_glauber_batch(init, TrajectoryConfig("glauber", t, seed=4), volume=box(0, 1))
    p = (out == 1).mean()
    k = heat_kernel(t)
    assert abs(p - k.p_same) < 4 * math.sqrt(k.p_same * k.p_diff / 20000)


def test_exclusion_conserves_density():
    vol = rect((6, 6))
    init = sample_gibbs_batch(zero(2), vol, None, 1, 2, reps=5)
    out = evolve_exclusion_batch(init, TrajectoryConfig("exclusion", 3.0, seed=9, periodic=True), volume=vol)
    assert np.array_equal((out == 1).sum(axis=1), (init == 1).sum(axis=1))


def test_nearest_neighbor_bonds_counts():
    a, b = nearest_neighbor_bonds(rect((3, 4)))
    assert len(a) == 2 * 4 + 3 * 3
    a, b = nearest_neighbor_bonds(rect((3, 4)), periodic=True)
    assert len(a) == 3 * 4 * 2
    # extent two: the wrap would duplicate the open bond
    a, _ = nearest_neighbor_bonds(rect((2,)), periodic=True)
    assert len(a) == 1


def test_sample_gibbs_reproducible():
    a = sample_gibbs(ising_ferro(0.4, d=2), box(2, 2), PLUS, 20, seed=8)
    b = sample_gibbs(ising_ferro(0.4, d=2), box(2, 2), PLUS, 20, seed=8)
    assert np.array_equal(a.values, b.values)
    assert isinstance(a, Configuration)


def test_sample_gibbs_beta_zero_is_uniform():
    vals = sample_gibbs_batch(zero(2), box(1, 2), PLUS, 3, seed=1, reps=4000)
    m = (vals == 1).mean(axis=0)
    assert np.all(np.abs(m - 0.5) < 4 * math.sqrt(0.25 / 4000))


def test_gibbs_chain_shape():
    chain = gibbs_chain(ising_ferro(0.3), box(2, 1), PLUS, sweeps=50, seed=0, burn_in=10)
    assert chain.shape == (50, 5)
    assert chain.dtype == np.int8
