"""Double-layer representation of Gibbs measures evolved by independent spin flips.

Let ``sigma`` be drawn from the Gibbs measure of ``phi`` and let each spin
flip independently at rate one for time ``t``, producing ``eta``.  The pair
has weight ``exp(-H_phi(sigma)) * prod_x p_t(sigma_x, eta_x)``, and for the
Ising alphabet ``log p_t(s, e) = c_t + h_t * s * e``.  Conditioning on
``eta`` therefore leaves a first-layer Ising-type model in the site-wise field
``h_t * eta_x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import heat_kernel
from .interaction import Interaction
from .lattice import Configuration, Pattern, Volume, fill
from .specification import ConditionalQuery, Gibbs, MeasureModel, gamma


@dataclass(frozen=True)
class EffectiveField:
    t: float
    h: float
    const: float  # c_t = log sqrt(p_same * p_diff)

    def log_p(self, s, e):
        return self.const + self.h * np.asarray(s) * np.asarray(e)


def effective_field(t: float) -> EffectiveField:
    if not t > 0:
        raise ValueError(f"effective field needs t > 0 (it diverges as t -> 0), got {t}")
    k = heat_kernel(t)
    if math.isinf(t):
        return EffectiveField(t, 0.0, math.log(0.5))
    # p_same / p_diff = coth t
    h = 0.5 * (math.log(k.p_same) - math.log(k.p_diff))
    return EffectiveField(t, h, 0.5 * (math.log(k.p_same) + math.log(k.p_diff)))


def _check_ising(phi: Interaction):
    if tuple(phi.alphabet.symbols) != (-1, 1):
        raise ValueError("the double-layer field form needs the Ising alphabet {-1, +1}")


def _field_vectors(sites, etas, h: float):
    s = np.array([-1.0, 1.0])
    return {tuple(x): -h * float(e) * s for x, e in zip(sites, etas)}


class ConstrainedModel(Gibbs):
    """First layer given the second: ``phi`` plus the field ``h_t * eta_x``.

    ``eta`` is a Configuration (field only where it is specified) or a Pattern
    (field on every window site).  The additive constant of ``-log p_t`` is
    left out; see :func:`two_layer_log_weight` for the full weight.
    """

    def __init__(self, phi: Interaction, eta, t: float, window: Volume, sigma_boundary: Pattern | None = None):
        _check_ising(phi)
        self.eta = eta
        self.t = t
        self.effective = effective_field(t)
        if isinstance(eta, Pattern):
            eta_conf = fill(window, eta)
        else:
            eta_conf = eta
            if not eta.volume.issubset(window):
                raise ValueError("eta must be specified inside the first-layer window")
        fields = _field_vectors(eta_conf.volume, eta_conf.values, self.effective.h)
        super().__init__(phi, window, sigma_boundary, fields, label=f"{phi.label}|eta,t={t:g}")


def constrained_model(phi: Interaction, eta, t: float, window: Volume, sigma_boundary: Pattern | None = None) -> ConstrainedModel:
    return ConstrainedModel(phi, eta, t, window, sigma_boundary)


def two_layer_log_weight(phi: Interaction, sigma: Configuration, eta: Configuration, t: float,
                         sigma_boundary: Pattern | None = None) -> float:
    """log of exp(-H_phi(sigma)) * prod_x p_t(sigma_x, eta_x), straight from the heat kernel."""
    from .interaction import energy

    if sigma.volume != eta.volume:
        raise ValueError("both layers must live on the same window")
    k = heat_kernel(t)
    return -energy(phi, sigma, sigma_boundary) + float(np.sum(k.log_prob(sigma.values, eta.values)))


class TimeEvolved(MeasureModel):
    """Law of the second layer ``eta`` at time ``t``, by exact first-layer summation.

    The first-layer window is ``window`` if given, otherwise the query sites
    enlarged by ``margin``; spins outside it follow ``sigma_boundary``
    (``None`` = free).
    """

    def __init__(self, phi: Interaction, t: float, window: Volume | None = None,
                 sigma_boundary: Pattern | None = None, margin: int = 0):
        if t < 0:
            raise ValueError(f"time must be nonnegative, got {t}")
        _check_ising(phi)
        self.phi = phi
        self.t = t
        self.window = window
        self.sigma_boundary = sigma_boundary
        self.margin = margin
        self.alphabet = phi.alphabet
        self.d = phi.d
        self.label = f"{phi.label}@t={t:g}"
        self._gibbs = Gibbs(phi, window, sigma_boundary, margin=margin)
        self.effective = effective_field(t) if t > 0 else None

    def __repr__(self):
        return f"TimeEvolved({self.phi.label}, t={self.t:g}, window={self.window!r}, sigma_boundary={self.sigma_boundary})"

    def _fields(self, clamp):
        sym = self.alphabet.symbols
        return _field_vectors(clamp.keys(), [sym[i] for i in clamp.values()], self.effective.h)

    def clamped_log_partition(self, window, clamp, engine):
        if self.t == 0:
            return self._gibbs.clamped_log_partition(window, clamp, engine)
        lz = self._gibbs.clamped_log_partition(window, {}, engine, extra_fields=self._fields(clamp))
        return lz + len(clamp) * self.effective.const

    def check_clamped(self, window, clamp, engine):
        if self.t == 0:
            return self._gibbs.check_clamped(window, clamp, engine)
        from .engines import check_capacity

        check_capacity(self._gibbs.factor_graph(window), engine)

    def conditional(self, query, engine="enum"):
        if self.t == 0:
            return self._gibbs.conditional(query, engine)
        if self.phi.singleton_only() and query.given is not None:
            # product law: the conditioning drops out exactly
            query = ConditionalQuery(query.target)
        return super().conditional(query, engine)

    def log_marginal(self, volume, engine="enum"):
        if self.t == 0:
            return self._gibbs.log_marginal(volume, engine)
        return super().log_marginal(volume, engine)


def evolved_conditional(phi: Interaction, t: float, eta_inner: Configuration | None, eta0: int, engine: str = "enum",
                        sigma_boundary: Pattern | None = None, margin: int = 0, origin=None) -> float:
    """nu_t(eta at the origin = eta0 | eta_inner) on the window origin + eta_inner sites.

    At ``t = 0`` this is the specification kernel itself.
    """
    origin = tuple(origin) if origin is not None else (0,) * phi.d
    target = Configuration(Volume([origin]), [eta0], phi.alphabet)
    if t == 0:
        return gamma(phi, ConditionalQuery(target, eta_inner, sigma_boundary), engine)
    model = TimeEvolved(phi, t, sigma_boundary=sigma_boundary, margin=margin)
    return model.conditional(ConditionalQuery(target, eta_inner), engine)


__all__ = [
    "EffectiveField",
    "effective_field",
    "ConstrainedModel",
    "constrained_model",
    "two_layer_log_weight",
    "TimeEvolved",
    "evolved_conditional",
]
