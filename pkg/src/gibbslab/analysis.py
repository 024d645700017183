"""Quasilocality defect curves, relative entropy densities and consistency diagnostics.

Finite windows cannot witness a discontinuity, so everything here returns a
curve over growing windows and leaves interpretation to the caller.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .engines import check_capacity, log_partition
from .interaction import Interaction
from .lattice import MINUS, PLUS, Configuration, Pattern, Volume, box, fill, merge, strip
from .specification import (
    ConditionalQuery,
    Gibbs,
    MeasureModel,
    UndefinedConditional,
    conditional_with_error,
    gamma,
)


def window(n: int, d: int, width: int | None = None) -> Volume:
    """``box(n, d)``, or ``strip(n, width)`` when a strip width is given (d = 2)."""
    if width is None:
        return box(n, d)
    if d != 2:
        raise ValueError("strip windows need d = 2")
    return strip(n, width)


# ------------------------------------------------------------------ defect curves


@dataclass(frozen=True)
class DefectRow:
    n: int
    N: int
    delta: float | None  # None: conditioning event too rare (empirical models)
    err: float


@dataclass
class DefectCurve:
    rows: list[DefectRow]
    model: str = ""
    eta: str = ""
    engine: str = ""
    boundary_pair: tuple[str, str] = ("plus", "minus")

    def __post_init__(self):
        self.rows = sorted(self.rows, key=lambda r: r.n)
        for r in self.rows:
            if r.n >= r.N:
                raise ValueError("inner radius must be below the outer radius")
            if r.delta is not None and not 0.0 <= r.delta <= 1.0:
                raise ValueError(f"defect {r.delta} outside [0, 1]")

    @property
    def ns(self) -> list[int]:
        return [r.n for r in self.rows]

    @property
    def deltas(self) -> list[float | None]:
        return [r.delta for r in self.rows]


def defect_queries(model: MeasureModel, eta: Pattern, n: int, N: int, boundary_pair, width=None, origin=None):
    """The two conditional queries compared at inner radius ``n``."""
    d = model.d
    origin = tuple(origin) if origin is not None else (0,) * d
    target = Configuration(Volume([origin]), [1], model.alphabet)
    inner_v = window(n, d, width)
    outer_v = window(N, d, width).difference(inner_v)
    ring = inner_v.difference(target.volume)
    inner = fill(ring, eta, model.alphabet) if ring is not None else None
    out = []
    for b in boundary_pair:
        given = merge(inner, fill(outer_v, b, model.alphabet) if outer_v is not None else None)
        out.append(ConditionalQuery(target, given))
    return out


def defect_curve(model: MeasureModel, eta: Pattern, n_range, N: int, boundary_pair=(PLUS, MINUS),
                 width: int | None = None, engine: str = "enum") -> DefectCurve:
    """Delta_n = |P(origin = +1 | eta on the inner ring, first boundary outside)
    - P(... second boundary ...)| on the window of radius ``N``."""
    ns = sorted(int(n) for n in n_range)
    if not ns:
        raise ValueError("empty range of inner radii")
    if N <= ns[-1]:
        raise ValueError(f"outer radius N={N} must exceed every inner radius (max {ns[-1]})")
    for q in defect_queries(model, eta, ns[-1], N, boundary_pair, width):
        model.check_query(q, engine)
    rows = []
    for n in ns:
        qa, qb = defect_queries(model, eta, n, N, boundary_pair, width)
        try:
            pa, ea = conditional_with_error(model, qa, engine)
            pb, eb = conditional_with_error(model, qb, engine)
        except UndefinedConditional:
            rows.append(DefectRow(n, N, None, math.nan))
            continue
        rows.append(DefectRow(n, N, abs(pa - pb), math.hypot(ea, eb)))
    return DefectCurve(rows, getattr(model, "label", ""), str(eta), engine, tuple(str(b) for b in boundary_pair))


# ------------------------------------------------------------------ relative entropy


def _product_site_probs(nu: Gibbs, volume: Volume) -> np.ndarray:
    return nu.site_marginals(volume)


def _expected_energy(mu: Gibbs, volume: Volume, probs: np.ndarray) -> float:
    fg = mu.factor_graph(mu.window_for(volume))
    e = fg.const
    for vs, table in fg.factors:
        t = table
        for v in reversed(vs):
            t = t @ probs[v]
        e += float(t)
    return e


def relative_entropy_box(nu: MeasureModel, mu: MeasureModel, volume: Volume, engine: str = "enum") -> float:
    """H_volume(nu | mu) = sum nu log(nu / mu) over configurations on ``volume``.

    Returns +inf (with a warning) when ``mu`` gives zero mass to a configuration
    that ``nu`` charges.
    """
    if nu is mu or (type(nu) is type(mu) and nu == mu):
        return 0.0
    if (
        isinstance(nu, Gibbs)
        and isinstance(mu, Gibbs)
        and nu.is_product()
        and nu.window_for(volume) == volume
        and mu.window_for(volume) == volume
    ):
        # nu product: H = -S(nu) + E_nu[H_mu] + log Z_mu
        probs = _product_site_probs(nu, volume)
        with np.errstate(divide="ignore", invalid="ignore"):
            neg_entropy = float(np.sum(np.where(probs > 0, probs * np.log(probs), 0.0)))
        fg = mu.factor_graph(volume)
        check_capacity(fg, engine)
        with np.errstate(invalid="ignore"):
            e_mu = _expected_energy(mu, volume, probs)
        if not math.isfinite(e_mu):
            warnings.warn("mu vanishes where nu has mass; relative entropy is infinite", RuntimeWarning, stacklevel=2)
            return math.inf
        value = neg_entropy + e_mu + log_partition(fg, engine)
    else:
        lnu = nu.log_marginal(volume, engine)
        lmu = mu.log_marginal(volume, engine)
        p = np.exp(lnu)
        charged = p > 0
        if np.any(np.isneginf(lmu[charged])):
            warnings.warn("mu vanishes where nu has mass; relative entropy is infinite", RuntimeWarning, stacklevel=2)
            return math.inf
        value = float(np.sum(p[charged] * (lnu[charged] - lmu[charged])))
    if -1e-12 < value < 0:
        value = 0.0
    return value


@dataclass
class EntropyCurve:
    rows: list[tuple[int, float]]
    nu: str = ""
    mu: str = ""

    def __post_init__(self):
        for n, h in self.rows:
            if not h >= 0:
                raise ValueError(f"negative relative entropy density {h} at n={n}")

    @property
    def ns(self):
        return [n for n, _ in self.rows]

    @property
    def values(self):
        return np.array([h for _, h in self.rows])


def entropy_density_curve(nu: MeasureModel, mu: MeasureModel, ns=None, n_max: int | None = None,
                          engine: str = "strip", width: int | None = None) -> EntropyCurve:
    """Per-site relative entropy on the nested windows of radius ``n``."""
    if ns is None:
        if n_max is None:
            raise ValueError("give ns or n_max")
        ns = range(0, n_max + 1)
    rows = []
    for n in ns:
        v = window(n, mu.d, width)
        rows.append((int(n), relative_entropy_box(nu, mu, v, engine) / len(v)))
    return EntropyCurve(rows, getattr(nu, "label", ""), getattr(mu, "label", ""))


def fit_boundary_correction(ns, values, limit: float) -> float:
    """Least-squares C in |value_n - limit| ~ C / (2n + 1)."""
    x = 1.0 / (2 * np.asarray(ns, dtype=np.float64) + 1)
    y = np.abs(np.asarray(values) - limit)
    return float(np.dot(x, y) / np.dot(x, x))


# ------------------------------------------------------------------ consistency


@dataclass
class ConsistencyCurve:
    rows: list[tuple[int, float]]  # (n, sup over omegas of d_n)


def consistency_check(model: MeasureModel, phi: Interaction, n_range, omegas, engine: str = "enum") -> ConsistencyCurve:
    """sup over ``omegas`` of |model(omega_0 | omega on box(n) minus 0) - gamma(phi, omega_0 | omega)|."""
    d = model.d
    origin = Volume([(0,) * d])
    rows = []
    for n in sorted(n_range):
        ring = box(n, d).difference(origin)
        worst = 0.0
        for om in omegas:
            target = fill(origin, om, model.alphabet)
            given = fill(ring, om, model.alphabet) if ring is not None else None
            p_model = model.conditional(ConditionalQuery(target, given), engine)
            p_spec = gamma(phi, ConditionalQuery(target, None, om), engine)
            worst = max(worst, abs(p_model - p_spec))
        rows.append((int(n), worst))
    return ConsistencyCurve(rows)


__all__ = [
    "DefectRow",
    "DefectCurve",
    "defect_queries",
    "defect_curve",
    "relative_entropy_box",
    "EntropyCurve",
    "entropy_density_curve",
    "fit_boundary_correction",
    "ConsistencyCurve",
    "consistency_check",
    "window",
]
