"""Property-based checks of the exact engines and kernels."""

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from gibbslab.dynamics import heat_kernel
from gibbslab.interaction import energy, flip_delta, ising_afm, ising_ferro
from gibbslab.lattice import Configuration, RandomPattern, box
from gibbslab.specification import ConditionalQuery, gamma, log_partition_function
from gibbslab.transforms import decimation_recursion
from gibbslab.twolayer import effective_field

betas = st.floats(0.0, 2.0)
fields = st.floats(-1.0, 1.0)
seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=40, deadline=None)
@given(betas, fields, seeds, st.sampled_from([1, 2]))
def test_engines_agree(beta, h, seed, d):
    phi = ising_ferro(beta, h, d)
    vol = box(2 if d == 1 else 1, d)
    omega = RandomPattern(0.5, seed)
    a = log_partition_function(phi, vol, omega, "enum")
    b = log_partition_function(phi, vol, omega, "strip")
    assert abs(a - b) <= 1e-10 * max(1.0, abs(a))


@settings(max_examples=40, deadline=None)
@given(betas, fields, seeds)
def test_flip_delta_is_energy_difference(beta, h, seed):
    phi = ising_afm(beta, d=2) + ising_ferro(0.0, h, d=2)
    vol = box(1, 2)
    c = Configuration(vol, RandomPattern(0.5, seed).values(vol.sites))
    omega = RandomPattern(0.5, seed + 1)
    x = tuple(vol.sites[seed % len(vol)])
    expected = energy(phi, c.flipped(x), omega) - energy(phi, c, omega)
    assert math.isclose(flip_delta(phi, c, omega, x), expected, abs_tol=1e-12)


@settings(max_examples=30, deadline=None)
@given(betas, seeds)
def test_gamma_is_a_probability_kernel(beta, seed):
    phi = ising_ferro(beta, 0.0, 2)
    tv = box(0, 2)
    omega = RandomPattern(0.5, seed)
    p = gamma(phi, ConditionalQuery(Configuration(tv, [1]), None, omega))
    q = gamma(phi, ConditionalQuery(Configuration(tv, [-1]), None, omega))
    assert 0 < p < 1 and math.isclose(p + q, 1.0, abs_tol=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 20.0), st.floats(0.0, 20.0))
def test_heat_kernel_semigroup(t, s):
    lhs = heat_kernel(t).compose(heat_kernel(s))
    rhs = heat_kernel(t + s)
    assert math.isclose(lhs.p_same, rhs.p_same, abs_tol=1e-12)
    assert math.isclose(lhs.p_diff, rhs.p_diff, abs_tol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(1e-3, 30.0))
def test_effective_field_identity(t):
    f = effective_field(t)
    k = heat_kernel(t)
    assert math.isclose(math.exp(f.log_p(1, 1)), k.p_same, rel_tol=1e-12)
    assert math.isclose(math.exp(f.log_p(1, -1)), k.p_diff, rel_tol=1e-9)


@settings(max_examples=40, deadline=None)
@given(betas, st.integers(1, 3))
def test_decimation_recursion_contracts(beta, ell):
    b = decimation_recursion(beta, ell)
    assert 0 <= b <= beta + 1e-12
    assert np.isclose(np.tanh(b), np.tanh(beta) ** ell, atol=1e-12)
