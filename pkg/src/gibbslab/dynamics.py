"""Continuous-time spin dynamics and heat-bath sampling on finite volumes.

Spins outside the simulation volume are frozen to the boundary pattern.
Every run owns one Philox stream keyed by ``(seed, replica)``; random numbers
are drawn in numpy and handed to the kernels, so the compiled and pure-Python
paths produce identical trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .factors import compile_factors
from .interaction import Interaction, b1_norm, flip_delta, zero
from .kernels import exclusion_events, glauber_events, heat_bath_sweeps
from .lattice import Configuration, Pattern, Volume

SWEEP_CHUNK = 1 << 16


def rng_for(seed: int, replica: int = 0) -> np.random.Generator:
    """Independent stream for run ``replica`` of experiment ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed) & (2**64 - 1), int(replica)])))


def glauber_rate(psi: Interaction, x, sigma: Configuration, omega: Pattern | None) -> float:
    """Flip rate exp(-dH/2) of the spin at ``x``."""
    return math.exp(-0.5 * flip_delta(psi, sigma, omega, x))


@dataclass(frozen=True)
class HeatKernel:
    """Two-state transition probabilities of a rate-one spin flip after time ``t``."""

    t: float
    p_same: float
    p_diff: float

    def matrix(self) -> np.ndarray:
        return np.array([[self.p_same, self.p_diff], [self.p_diff, self.p_same]])

    def compose(self, other: "HeatKernel") -> "HeatKernel":
        same = self.p_same * other.p_same + self.p_diff * other.p_diff
        diff = self.p_same * other.p_diff + self.p_diff * other.p_same
        return HeatKernel(self.t + other.t, same, diff)

    def log_prob(self, a, b):
        """log p_t(a, b) for symbols a, b in {-1, +1} (arrays allowed)."""
        with np.errstate(divide="ignore"):
            return np.where(np.asarray(a) == np.asarray(b), math.log(self.p_same), np.log(self.p_diff))


def heat_kernel(t: float) -> HeatKernel:
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    if math.isinf(t):
        return HeatKernel(t, 0.5, 0.5)
    decay = -math.expm1(-2.0 * t)  # 1 - e^{-2t}, accurate for small t
    p_diff = 0.5 * decay
    return HeatKernel(t, 1.0 - p_diff, p_diff)


@dataclass(frozen=True)
class TrajectoryConfig:
    kind: str = "glauber"
    t: float = 0.0
    boundary: Pattern | None = None
    seed: int = 0
    psi: Interaction = field(default_factory=lambda: zero(1))
    periodic: bool = False

    def __post_init__(self):
        if self.kind not in ("glauber", "exclusion"):
            raise ValueError(f"unknown dynamics {self.kind!r}; expected glauber or exclusion")
        if not self.t >= 0:
            raise ValueError(f"horizon must be nonnegative, got {self.t}")


def _as_states(initial, volume: Volume | None, alphabet):
    if isinstance(initial, Configuration):
        return initial.volume, initial.alphabet, initial.indices[None, :].astype(np.int64)
    arr = np.atleast_2d(np.asarray(initial))
    return volume, alphabet, alphabet.indices(arr).astype(np.int64)


def _psi_for(cfg: TrajectoryConfig, d: int) -> Interaction:
    psi = cfg.psi
    if psi.d != d:
        if psi.terms:
            raise ValueError(f"dynamics interaction lives in d={psi.d}, configuration in d={d}")
        psi = zero(d)
    return psi


def evolve_glauber_batch(initial, cfg: TrajectoryConfig, volume: Volume | None = None, alphabet=None,
                         first_replica: int = 0, return_counts: bool = False):
    """Run replica ``first_replica + r`` from row ``r`` of ``initial``.

    ``initial`` is an (R, n) array of symbols on ``volume`` or a single
    Configuration.  Returns symbol arrays of the same shape, plus per-site
    flip counts when ``return_counts`` is set.
    """
    from .lattice import ISING

    volume, alphabet, states = _as_states(initial, volume, alphabet or ISING)
    if alphabet.size != 2:
        raise ValueError("Glauber spin flips need a two-symbol alphabet")
    psi = _psi_for(cfg, volume.d)
    n = len(volume)
    fg = compile_factors(psi, volume, {}, cfg.boundary)
    flat = fg.flat()
    bound = math.exp(b1_norm(psi))
    counts = np.zeros((states.shape[0], n), dtype=np.int64)
    if cfg.t > 0 and n:
        for r in range(states.shape[0]):
            g = rng_for(cfg.seed, first_replica + r)
            k = g.poisson(n * bound * cfg.t)
            sites = g.integers(0, n, size=k)
            u = g.random(k)
            glauber_events(states[r], sites, u, bound, *flat, counts[r])
    out = alphabet.to_symbols(states)
    return (out, counts) if return_counts else out


def evolve_glauber(initial: Configuration, cfg: TrajectoryConfig, replica: int = 0) -> Configuration:
    """Exact continuous-time Glauber evolution up to ``cfg.t``."""
    if cfg.kind != "glauber":
        raise ValueError("configuration describes exclusion dynamics")
    if cfg.t == 0:
        return initial
    out = evolve_glauber_batch(initial, cfg, first_replica=replica)
    return Configuration(initial.volume, out[0], initial.alphabet)


def nearest_neighbor_bonds(volume: Volume, periodic: bool = False):
    """Unordered nearest-neighbour bonds inside ``volume`` as index arrays.

    With ``periodic`` the volume must be a full box; bonds wrap along every
    axis whose extent exceeds 2.
    """
    lo, hi = volume.bounding_box
    lo, hi = np.asarray(lo), np.asarray(hi)
    extent = hi - lo + 1
    if periodic and len(volume) != int(np.prod(extent)):
        raise ValueError("periodic bonds need a full rectangular volume")
    a, b = [], []
    for i, s in enumerate(volume):
        for k in range(volume.d):
            nb = list(s)
            nb[k] += 1
            nb = tuple(nb)
            if nb in volume:
                a.append(i)
                b.append(volume.index(nb))
            elif periodic and extent[k] > 2:
                nb = list(s)
                nb[k] = int(lo[k])
                a.append(i)
                b.append(volume.index(tuple(nb)))
    return np.array(a, dtype=np.int64), np.array(b, dtype=np.int64)


def evolve_exclusion_batch(initial, cfg: TrajectoryConfig, volume: Volume | None = None, alphabet=None, first_replica: int = 0):
    """Simple symmetric exclusion: every bond exchanges its two spins at rate 1."""
    from .lattice import ISING

    volume, alphabet, states = _as_states(initial, volume, alphabet or ISING)
    if alphabet.size != 2:
        raise ValueError("exclusion dynamics needs a two-symbol alphabet")
    bond_a, bond_b = nearest_neighbor_bonds(volume, cfg.periodic)
    nb = bond_a.shape[0]
    if cfg.t > 0 and nb:
        for r in range(states.shape[0]):
            g = rng_for(cfg.seed, first_replica + r)
            k = g.poisson(nb * cfg.t)
            exclusion_events(states[r], bond_a, bond_b, g.integers(0, nb, size=k))
    return alphabet.to_symbols(states)


def evolve_exclusion(initial: Configuration, cfg: TrajectoryConfig, replica: int = 0) -> Configuration:
    if initial.alphabet.size != 2:
        raise ValueError("exclusion dynamics needs a two-symbol alphabet")
    if cfg.t == 0:
        return initial
    out = evolve_exclusion_batch(initial, cfg, first_replica=replica)
    return Configuration(initial.volume, out[0], initial.alphabet)


def evolve(initial: Configuration, cfg: TrajectoryConfig, replica: int = 0) -> Configuration:
    if cfg.kind == "glauber":
        return evolve_glauber(initial, cfg, replica)
    return evolve_exclusion(initial, cfg, replica)


# ------------------------------------------------------------------ heat bath


def _heat_bath(flat, q, sweeps, g, state, record_all):
    n = state.shape[0]
    rec = np.zeros((sweeps if record_all else 0, n), dtype=np.int8)
    done = 0
    while done < sweeps:
        m = min(SWEEP_CHUNK, sweeps - done)
        u = g.random(m * n)
        sub = rec[done : done + m] if record_all else np.zeros((0, n), dtype=np.int8)
        heat_bath_sweeps(state, u, m, q, *flat, sub)
        done += m
    return rec


def sample_gibbs(phi: Interaction, volume: Volume, omega: Pattern | None, sweeps: int, seed: int,
                 replica: int = 0) -> Configuration:
    """Heat-bath sampler in lexicographic scan order, started from i.i.d. uniform spins."""
    flat = compile_factors(phi, volume, {}, omega).flat()
    g = rng_for(seed, replica)
    state = g.integers(0, phi.alphabet.size, size=len(volume)).astype(np.int64)
    _heat_bath(flat, phi.alphabet.size, sweeps, g, state, False)
    return Configuration(volume, phi.alphabet.to_symbols(state), phi.alphabet)


def sample_gibbs_batch(phi: Interaction, volume: Volume, omega: Pattern | None, sweeps: int, seed: int,
                       reps: int, first_replica: int = 0) -> np.ndarray:
    """(reps, n) symbols; row r equals ``sample_gibbs(..., replica=first_replica + r)``."""
    flat = compile_factors(phi, volume, {}, omega).flat()
    q = phi.alphabet.size
    out = np.empty((reps, len(volume)), dtype=np.int64)
    for r in range(reps):
        g = rng_for(seed, first_replica + r)
        state = g.integers(0, q, size=len(volume)).astype(np.int64)
        _heat_bath(flat, q, sweeps, g, state, False)
        out[r] = state
    return phi.alphabet.to_symbols(out)


def gibbs_chain(phi: Interaction, volume: Volume, omega: Pattern | None, sweeps: int, seed: int,
                burn_in: int = 0, replica: int = 0) -> np.ndarray:
    """Symbol indices after each of ``sweeps`` recorded sweeps, shape (sweeps, n), int8."""
    flat = compile_factors(phi, volume, {}, omega).flat()
    q = phi.alphabet.size
    g = rng_for(seed, replica)
    state = g.integers(0, q, size=len(volume)).astype(np.int64)
    if burn_in:
        _heat_bath(flat, q, burn_in, g, state, False)
    return _heat_bath(flat, q, sweeps, g, state, True)
