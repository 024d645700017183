"""Gibbsian specification kernels, exact partition functions and measure models."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Mapping

import numpy as np
from scipy.special import logsumexp

from .engines import (
    STRIP_MAX_WIDTH,
    CapacityError,
    check_capacity,
    check_engine,
    log_partition,
    marginal_log_probs,
)
from .factors import FactorGraph, compile_factors
from .interaction import Interaction
from .lattice import Alphabet, Configuration, Pattern, Volume

MARGINAL_MAX_SITES = 20


class UndefinedConditional(ValueError):
    """Conditioning event never observed (empirical models)."""


@dataclass(frozen=True, eq=False)
class ConditionalQuery:
    """P(target | given) inside a finite window.

    ``boundary`` is the configuration outside ``target`` and ``given`` used by
    :func:`gamma`; ``None`` is the free boundary.  Measure models carry their
    own boundary and ignore this field.
    """

    target: Configuration
    given: Configuration | None = None
    boundary: Pattern | None = None

    def __post_init__(self):
        if self.given is not None:
            overlap = [s for s in self.target.volume if s in self.given.volume]
            if overlap:
                raise ValueError(f"target and conditioning overlap at {overlap[:3]}")

    @property
    def sites(self) -> Volume:
        if self.given is None:
            return self.target.volume
        return self.target.volume.union(self.given.volume)

    def known(self) -> dict:
        if self.given is None:
            return {}
        return {s: int(i) for s, i in zip(self.given.volume, self.given.indices)}

    def with_target(self, target: Configuration) -> "ConditionalQuery":
        return ConditionalQuery(target, self.given, self.boundary)


def _target_states(volume: Volume, alphabet: Alphabet):
    for idx in product(range(alphabet.size), repeat=len(volume)):
        yield idx


def _state_index(indices, q) -> int:
    k = 0
    for i in indices:
        k = k * q + int(i)
    return k


# ------------------------------------------------------------------ specification


def log_partition_function(phi: Interaction, volume: Volume, omega: Pattern | None, engine: str = "enum") -> float:
    fg = compile_factors(phi, volume, {}, omega)
    check_capacity(fg, engine)
    return log_partition(fg, engine)


def partition_function(phi: Interaction, volume: Volume, omega: Pattern | None, engine: str = "enum") -> float:
    """Z = sum over configurations on ``volume`` of exp(-energy)."""
    return math.exp(log_partition_function(phi, volume, omega, engine))


def _gamma_log_probs(phi, target_volume, known, boundary, engine, unary=None) -> np.ndarray:
    fg = compile_factors(phi, target_volume, known, boundary, unary)
    check_capacity(fg, engine)
    return marginal_log_probs(fg, range(fg.n), engine)


def _kernel_prob(phi, target: Configuration, known, boundary, engine, unary=None) -> float:
    fg = compile_factors(phi, target.volume, known, boundary, unary)
    check_capacity(fg, engine)
    state = np.asarray(target.indices, dtype=np.int64)[None, :]
    return float(np.exp(-fg.energy(state)[0] - log_partition(fg, engine)))


def gamma(phi: Interaction, query: ConditionalQuery, engine: str = "enum") -> float:
    """gamma_Lambda(sigma_Lambda | omega) for the Gibbsian specification of ``phi``."""
    return _kernel_prob(phi, query.target, query.known(), query.boundary, engine)


# ------------------------------------------------------------------ pressure


def _column_energy(phi: Interaction, width: int, periodic: bool):
    """Energy of each column state (unary + transverse bonds) and the horizontal pair table."""
    q = phi.alphabet.size
    d = phi.d
    states = np.array(list(product(range(q), repeat=width)), dtype=np.int64)
    col = np.zeros(states.shape[0])
    horiz = np.zeros((q, q))
    zero = (0,) * d
    for t in phi.terms:
        if t.size == 1:
            col += t.table[states].sum(axis=1)
            continue
        axis = t.shape[1].index(1)
        if axis == 0:
            horiz += t.table
        elif d == 2 and axis == 1:
            pairs = [(r, r + 1) for r in range(width - 1)]
            if periodic and width > 2:
                pairs.append((width - 1, 0))
            for a, b in pairs:
                col += t.table[states[:, a], states[:, b]]
        else:
            raise ValueError(f"term {t.shape} not supported by the strip transfer matrix")
        assert t.shape[0] == zero
    return col, horiz


def pressure(phi: Interaction, geometry: str | tuple = "line", *, periodic: bool = True, tol: float = 1e-12, max_iter: int = 200_000) -> float:
    """Per-site log of the leading transfer-matrix eigenvalue.

    ``geometry`` is ``"line"`` (d = 1) or ``("strip", width)`` (d = 2, columns of
    ``width`` sites, periodic in the transverse direction by default).  The
    eigenvalue comes from power iteration with relative tolerance ``tol``.
    """
    if not phi.is_nearest_neighbor():
        raise ValueError("pressure via transfer matrices needs a nearest-neighbour interaction")
    if geometry == "line":
        if phi.d != 1:
            raise ValueError("line geometry needs d = 1")
        width = 1
    else:
        kind, width = geometry
        if kind != "strip" or phi.d != 2:
            raise ValueError("strip geometry needs d = 2 and ('strip', width)")
        if not 1 <= width <= STRIP_MAX_WIDTH:
            raise CapacityError(f"strip width must be in 1..{STRIP_MAX_WIDTH}")
    q = phi.alphabet.size
    col, horiz = _column_energy(phi, width, periodic)
    shift_c = col.min()
    shift_h = horiz.min()
    half = np.exp(-0.5 * (col - shift_c)).reshape((q,) * width)
    h = np.exp(-(horiz - shift_h))
    symmetric = np.allclose(h, h.T, rtol=0, atol=0)

    def apply(v):
        w = v * half
        for ax in range(width):
            w = np.moveaxis(np.tensordot(w, h, axes=([ax], [0])), -1, ax)
        return w * half

    v = np.ones((q,) * width) / math.sqrt(q**width)
    lam_old = 0.0
    for _ in range(max_iter):
        w = apply(v)
        lam = float(np.vdot(v, w)) if symmetric else float(np.linalg.norm(w))
        v = w / np.linalg.norm(w)
        if abs(lam - lam_old) <= tol * abs(lam):
            break
        lam_old = lam
    else:
        raise RuntimeError("power iteration did not converge")
    log_lam = math.log(lam) - shift_c - width * shift_h
    return log_lam / width


# ------------------------------------------------------------------ measure models


class MeasureModel:
    """A finite-window measure with computable conditionals and marginals.

    ``window=None`` means the window is the set of sites a query mentions,
    enlarged by ``margin``; this is the usual way to treat a model as a
    translation-invariant family evaluated on growing boxes.
    """

    alphabet: Alphabet
    d: int
    window: Volume | None = None
    margin: int = 0
    exact = True

    def window_for(self, sites: Volume) -> Volume:
        if self.window is None:
            return sites.expand(self.margin)
        if not sites.issubset(self.window):
            raise ValueError("query sites fall outside the model window")
        return self.window

    # subclasses provide the log partition function of the window with some
    # sites clamped (symbol indices)
    def clamped_log_partition(self, window: Volume, clamp: Mapping, engine: str) -> float:
        raise NotImplementedError

    def check_query(self, query: ConditionalQuery, engine: str) -> None:
        """Raise CapacityError before any work if ``query`` cannot be evaluated."""
        window = self.window_for(query.sites)
        known = query.known()
        known.update({s: 0 for s in query.target.volume})
        self.check_clamped(window, known, engine)

    def check_clamped(self, window: Volume, clamp: Mapping, engine: str) -> None:
        raise NotImplementedError

    def conditional(self, query: ConditionalQuery, engine: str = "enum") -> float:
        check_engine(engine)
        window = self.window_for(query.sites)
        given = query.known()
        q = self.alphabet.size
        logs = []
        for idx in _target_states(query.target.volume, self.alphabet):
            clamp = dict(given)
            clamp.update(zip(query.target.volume, idx))
            logs.append(self.clamped_log_partition(window, clamp, engine))
        logs = np.array(logs)
        k = _state_index(query.target.indices, q)
        return float(np.exp(logs[k] - logsumexp(logs)))

    def log_marginal(self, volume: Volume, engine: str = "enum") -> np.ndarray:
        """Normalised log-probabilities of all configurations on ``volume``."""
        if len(volume) > MARGINAL_MAX_SITES:
            raise CapacityError(f"marginal over {len(volume)} sites exceeds {MARGINAL_MAX_SITES}")
        window = self.window_for(volume)
        logs = np.array(
            [
                self.clamped_log_partition(window, dict(zip(volume, idx)), engine)
                for idx in _target_states(volume, self.alphabet)
            ]
        )
        return logs - logsumexp(logs)


class Gibbs(MeasureModel):
    """Finite-volume Gibbs measure of ``phi`` with boundary pattern outside the window.

    ``fields`` adds single-site energies (site -> vector over the alphabet); it
    is how constrained first-layer models and hidden-layer readouts enter.
    """

    def __init__(self, phi: Interaction, window: Volume | None = None, boundary: Pattern | None = None,
                 fields: Mapping | None = None, margin: int = 0, label: str | None = None):
        self.phi = phi
        self.window = window
        self.boundary = boundary
        self.fields = {tuple(s): np.asarray(v, dtype=np.float64) for s, v in (fields or {}).items()}
        self.margin = margin
        self.alphabet = phi.alphabet
        self.d = phi.d
        self.label = label or phi.label

    def __repr__(self):
        return f"Gibbs({self.label}, window={self.window!r}, boundary={self.boundary})"

    def __eq__(self, other):
        return (
            type(other) is type(self)
            and self.phi == other.phi
            and self.window == other.window
            and self.boundary == other.boundary
            and self.margin == other.margin
            and self.fields.keys() == other.fields.keys()
            and all(np.array_equal(self.fields[k], other.fields[k]) for k in self.fields)
        )

    __hash__ = None

    def is_product(self) -> bool:
        return self.phi.singleton_only()

    def factor_graph(self, window: Volume, clamp: Mapping | None = None, extra_fields: Mapping | None = None) -> FactorGraph:
        fields = self.fields
        if extra_fields:
            fields = dict(fields)
            for s, v in extra_fields.items():
                fields[s] = fields[s] + v if s in fields else np.asarray(v, dtype=np.float64)
        return compile_factors(self.phi, window, clamp or {}, self.boundary, fields)

    def clamped_log_partition(self, window, clamp, engine, extra_fields=None):
        fg = self.factor_graph(window, clamp, extra_fields)
        check_capacity(fg, engine)
        return log_partition(fg, engine)

    def check_clamped(self, window, clamp, engine):
        check_capacity(self.factor_graph(window, clamp), engine)

    def log_partition(self, engine: str = "enum", window: Volume | None = None) -> float:
        window = window or self.window
        if window is None:
            raise ValueError("model has no window; pass one")
        return self.clamped_log_partition(window, {}, engine)

    def conditional(self, query: ConditionalQuery, engine: str = "enum") -> float:
        window = self.window_for(query.sites)
        if window == query.sites:
            # nothing to marginalise: this is the specification kernel itself
            return _kernel_prob(self.phi, query.target, query.known(), self.boundary, engine, self.fields)
        return super().conditional(query, engine)

    def log_marginal(self, volume: Volume, engine: str = "enum") -> np.ndarray:
        window = self.window_for(volume)
        if window == volume:
            return _gamma_log_probs(self.phi, volume, {}, self.boundary, engine, self.fields)
        return super().log_marginal(volume, engine)

    def site_marginals(self, volume: Volume) -> np.ndarray:
        """Per-site probabilities (n, q) of a product model on ``volume``."""
        if not self.is_product():
            raise ValueError("site marginals are only exact for product models")
        fg = self.factor_graph(volume)
        en = np.zeros((fg.n, fg.q))
        for vs, table in fg.factors:
            en[vs[0]] += table
        p = np.exp(-(en - en.min(axis=1, keepdims=True)))
        return p / p.sum(axis=1, keepdims=True)


def product_model(probs=None, d: int = 1, alphabet=None) -> Gibbs:
    """I.i.d. spins; ``probs=None`` is the uniform product measure."""
    from .interaction import Term, zero
    from .lattice import ISING

    if probs is None:
        return Gibbs(zero(d), label="uniform")
    probs = np.asarray(probs, dtype=np.float64)
    alphabet = alphabet or ISING
    with np.errstate(divide="ignore"):
        phi = Interaction([Term([(0,) * d], -np.log(probs))], d, alphabet, label=f"product:{probs.tolist()}")
    return Gibbs(phi, label=phi.label)


class Empirical(MeasureModel):
    """Empirical law of sample configurations on a common volume."""

    exact = False

    def __init__(self, samples, volume: Volume | None = None, alphabet: Alphabet | None = None, min_count: int = 1, label: str = "empirical"):
        if isinstance(samples, np.ndarray):
            if volume is None:
                raise ValueError("array samples need a volume")
            alphabet = alphabet or Alphabet((-1, 1))
            arr = np.asarray(samples, dtype=np.int64)
        else:
            samples = list(samples)
            if not samples:
                raise ValueError("an empirical model needs at least one sample")
            volume = samples[0].volume
            alphabet = samples[0].alphabet
            if any(s.volume != volume for s in samples):
                raise ValueError("all samples must live on the same volume")
            arr = np.stack([s.values for s in samples])
        if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] != len(volume):
            raise ValueError("samples must have shape (n_samples, n_sites) with n_samples >= 1")
        self.indices = alphabet.indices(arr).astype(np.int8)
        self.volume = volume
        self.alphabet = alphabet
        self.d = volume.d
        self.min_count = min_count
        self.label = label

    def __repr__(self):
        return f"Empirical({self.indices.shape[0]} samples on {self.volume!r})"

    def window_for(self, sites):
        if not sites.issubset(self.volume):
            raise ValueError("query sites fall outside the sampled volume")
        return self.volume

    def check_clamped(self, window, clamp, engine):
        return None

    def _columns(self, volume):
        return [self.volume.index(s) for s in volume]

    def conditional_stats(self, query: ConditionalQuery):
        """(probability, standard error, conditioning count)."""
        self.window_for(query.sites)
        mask = np.ones(self.indices.shape[0], dtype=bool)
        if query.given is not None:
            cols = self._columns(query.given.volume)
            mask &= (self.indices[:, cols] == query.given.indices[None, :]).all(axis=1)
        count = int(mask.sum())
        if count < max(self.min_count, 1):
            raise UndefinedConditional(f"conditioning event observed {count} times (need {max(self.min_count, 1)})")
        cols = self._columns(query.target.volume)
        hit = (self.indices[mask][:, cols] == query.target.indices[None, :]).all(axis=1)
        p = float(hit.mean())
        return p, math.sqrt(p * (1 - p) / count), count

    def conditional(self, query, engine="enum"):
        return self.conditional_stats(query)[0]

    def log_marginal(self, volume, engine="enum"):
        if len(volume) > MARGINAL_MAX_SITES:
            raise CapacityError(f"marginal over {len(volume)} sites exceeds {MARGINAL_MAX_SITES}")
        cols = self._columns(volume)
        q = self.alphabet.size
        codes = np.zeros(self.indices.shape[0], dtype=np.int64)
        for c in cols:
            codes = codes * q + self.indices[:, c]
        counts = np.bincount(codes, minlength=q ** len(cols)).astype(np.float64)
        with np.errstate(divide="ignore"):
            return np.log(counts / counts.sum())


def conditional(model: MeasureModel, query: ConditionalQuery, engine: str = "enum") -> float:
    """Model conditional probability of ``query.target`` given ``query.given``."""
    return model.conditional(query, engine)


def conditional_with_error(model: MeasureModel, query: ConditionalQuery, engine: str = "enum"):
    """(probability, error); the error is 0 for exact models."""
    if isinstance(model, Empirical):
        p, err, _ = model.conditional_stats(query)
        return p, err
    return model.conditional(query, engine), 0.0
