"""Single-site transformations of configurations and of measure models.

Four kinds: decimation (read every ``ell``-th site), deterministic symbol
projection, a noisy channel read independently at every site, and restriction
to a coordinate hyperplane.  :func:`image_model` turns any of them into a
:class:`Transformed` model whose conditionals are exact preimage sums over a
finite base window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .lattice import (
    ALTERNATING,
    ISING,
    PLUS,
    Alphabet,
    Alternating,
    Checkerboard2x2,
    Configuration,
    Decimated,
    Pattern,
    Uniform,
    Volume,
)
from .specification import Gibbs, MeasureModel

CHANNEL_MIN = 0.0


# ------------------------------------------------------------------ transform kinds


@dataclass(frozen=True)
class Decimation:
    ell: int

    def __post_init__(self):
        if int(self.ell) != self.ell or self.ell < 1:
            raise ValueError(f"decimation spacing must be a positive integer, got {self.ell}")

    def __str__(self):
        return f"dec:{self.ell}"


@dataclass(frozen=True)
class Projection:
    """Deterministic symbol map ``mapping[s]`` from ``source`` onto ``target``."""

    mapping: tuple  # ((symbol, image), ...) in source order
    source: Alphabet = ISING
    target: Alphabet = ISING

    def __post_init__(self):
        m = dict(self.mapping)
        if set(m) != set(self.source.symbols):
            raise ValueError("projection map must be total on the source alphabet")
        images = set(m.values())
        if not images <= set(self.target.symbols):
            raise ValueError("projection images must lie in the target alphabet")
        if images != set(self.target.symbols):
            raise ValueError("projection map must be onto the target alphabet")
        identity = m == {s: s for s in self.source.symbols}
        if not identity and self.target.size >= self.source.size:
            raise ValueError("a non-identity projection must merge symbols")

    @classmethod
    def from_dict(cls, mapping: Mapping, source: Alphabet | None = None, target: Alphabet | None = None):
        source = source or Alphabet(tuple(mapping))
        target = target or Alphabet(tuple(sorted(set(mapping.values()))))
        return cls(tuple((s, mapping[s]) for s in source.symbols if s in mapping), source, target)

    def index_map(self) -> np.ndarray:
        m = dict(self.mapping)
        return np.array([self.target.index(m[s]) for s in self.source.symbols], dtype=np.int64)

    def compose(self, after: "Projection") -> "Projection":
        """``after`` applied to the output of ``self``."""
        m, g = dict(self.mapping), dict(after.mapping)
        return Projection(tuple((s, g[m[s]]) for s in self.source.symbols), self.source, after.target)

    def __str__(self):
        return "proj:" + ",".join(f"{a}>{b}" for a, b in self.mapping)


@dataclass(frozen=True, eq=False)
class Channel:
    """Kernel ``T[i, j]`` = P(output symbol j | input symbol i), all entries > 0."""

    kernel: np.ndarray
    source: Alphabet = ISING
    target: Alphabet = ISING
    label: str = "chan"

    def __post_init__(self):
        k = np.array(self.kernel, dtype=np.float64)
        if k.shape != (self.source.size, self.target.size):
            raise ValueError(f"kernel shape {k.shape} does not match alphabets")
        if not np.all(k > CHANNEL_MIN):
            raise ValueError("channel kernel entries must be strictly positive")
        if not np.allclose(k.sum(axis=1), 1.0, rtol=0, atol=1e-12):
            raise ValueError("channel kernel rows must sum to 1")
        k.setflags(write=False)
        object.__setattr__(self, "kernel", k)

    def __eq__(self, other):
        return isinstance(other, Channel) and np.array_equal(self.kernel, other.kernel) and self.source == other.source

    def __hash__(self):
        return hash((self.kernel.tobytes(), self.source, self.target))

    def __str__(self):
        return self.label


def binary_symmetric(eps: float) -> Channel:
    """Flip each spin independently with probability ``eps``."""
    return Channel(np.array([[1 - eps, eps], [eps, 1 - eps]]), label=f"chan:{eps:g}")


@dataclass(frozen=True)
class Layer:
    """Hyperplane ``x[axis - 1] == offset`` (axes numbered from 1)."""

    axis: int
    offset: int = 0

    def __post_init__(self):
        if self.axis < 1:
            raise ValueError("layer axis is numbered from 1")

    def __str__(self):
        return f"layer:{self.axis}:{self.offset}"


Transform = Decimation | Projection | Channel | Layer


def parse_transform(text: str) -> Transform:
    """``dec:<l>``, ``proj:<a>><b>,...``, ``chan:<eps>`` or ``layer:<axis>:<offset>``."""
    kind, _, rest = text.strip().partition(":")
    try:
        if kind == "dec":
            return Decimation(int(rest))
        if kind == "chan":
            return binary_symmetric(float(rest))
        if kind == "layer":
            axis, _, off = rest.partition(":")
            return Layer(int(axis), int(off or 0))
        if kind == "proj":
            pairs = [p.split(">") for p in rest.split(",") if p]
            return Projection.from_dict({int(a): int(b) for a, b in pairs})
    except ValueError as exc:
        raise ValueError(f"bad transform {text!r}: {exc}") from None
    raise ValueError(f"unknown transform {text!r}; use dec:<l>, proj:<table>, chan:<eps> or layer:<axis>:<offset>")


# ------------------------------------------------------------------ configurations


def _decimate_pattern(p: Pattern, ell: int) -> Pattern:
    if ell == 1 or isinstance(p, Uniform):
        return p
    if isinstance(p, Alternating):
        return PLUS if ell % 2 == 0 else p
    if isinstance(p, Checkerboard2x2) and ell % 2 == 0:
        return PLUS if ell % 4 == 0 else ALTERNATING
    if isinstance(p, Decimated):
        return _decimate_pattern(p.base, p.ell * ell)
    return Decimated(p, ell)


def decimate(x, ell: int):
    """Read the input at ``ell * n``; works on configurations and patterns."""
    ell = Decimation(ell).ell
    if isinstance(x, Pattern):
        return _decimate_pattern(x, ell)
    keep = [s for s in x.volume if all(c % ell == 0 for c in s)]
    if not keep:
        raise ValueError("no site of the volume lies on the decimated sublattice")
    sites = [tuple(c // ell for c in s) for s in keep]
    return Configuration(Volume(sites), [x[s] for s in keep], x.alphabet)


def project(x: Configuration, mapping) -> Configuration:
    if not isinstance(mapping, Projection):
        mapping = Projection.from_dict(dict(mapping), x.alphabet)
    if mapping.source != x.alphabet:
        raise ValueError("projection source alphabet differs from the configuration alphabet")
    idx = mapping.index_map()[x.indices]
    return Configuration(x.volume, mapping.target.to_symbols(idx), mapping.target)


def channel_apply(x: Configuration, kernel: Channel, seed: int) -> Configuration:
    """Independent site-wise readout through ``kernel``, reproducible from ``seed``."""
    from .dynamics import rng_for

    if not isinstance(kernel, Channel):
        kernel = Channel(np.asarray(kernel), x.alphabet, x.alphabet)
    cum = np.cumsum(kernel.kernel, axis=1)
    u = rng_for(seed).random(len(x))
    rows = cum[x.indices]
    out = (u[:, None] >= rows[:, :-1]).sum(axis=1) if rows.shape[1] > 1 else np.zeros(len(x), dtype=np.int64)
    return Configuration(x.volume, kernel.target.to_symbols(out), kernel.target)


def restrict_layer(x: Configuration, axis: int, offset: int = 0) -> Configuration:
    d = x.volume.d
    if d < 2:
        raise ValueError("layer restriction needs d >= 2")
    Layer(axis, offset)
    if axis > d:
        raise ValueError(f"axis {axis} exceeds dimension {d}")
    k = axis - 1
    keep = [s for s in x.volume if s[k] == offset]
    if not keep:
        raise ValueError(f"offset {offset} on axis {axis} is outside the volume")
    sites = [s[:k] + s[k + 1 :] for s in keep]
    return Configuration(Volume(sites), [x[s] for s in keep], x.alphabet)


def apply(x: Configuration, transform: Transform, seed: int = 0) -> Configuration:
    if isinstance(transform, Decimation):
        return decimate(x, transform.ell)
    if isinstance(transform, Projection):
        return project(x, transform)
    if isinstance(transform, Channel):
        return channel_apply(x, transform, seed)
    return restrict_layer(x, transform.axis, transform.offset)


# ------------------------------------------------------------------ image models


class Transformed(MeasureModel):
    """Image of a base model under a site-wise transform, evaluated on finite windows.

    For image sites ``S`` the base window is the preimage of ``S`` (for
    decimation with ``ell > 1``, its full bounding box, so the skipped sites
    are summed over), enlarged by ``margin`` base sites, unless the base model
    has a fixed window.
    """

    def __init__(self, base: Gibbs, transform: Transform, margin: int = 0):
        if not isinstance(base, Gibbs):
            raise TypeError("image models need an exact Gibbs-type base model")
        self.base = base
        self.transform = transform
        self.margin = margin
        self.window = None
        self.d = base.d
        self.alphabet = base.alphabet
        if isinstance(transform, Layer):
            if base.d < 2:
                raise ValueError("layer restriction needs d >= 2")
            if transform.axis > base.d:
                raise ValueError(f"axis {transform.axis} exceeds dimension {base.d}")
            self.d = base.d - 1
        elif isinstance(transform, (Projection, Channel)):
            if transform.source != base.alphabet:
                raise ValueError("transform source alphabet differs from the base alphabet")
            self.alphabet = transform.target
        self.label = f"{base.label}|{transform}"

    def __repr__(self):
        return f"Transformed({self.base!r}, {self.transform})"

    def window_for(self, sites: Volume) -> Volume:
        return sites

    def _embed(self, site) -> tuple:
        t = self.transform
        if isinstance(t, Decimation):
            return tuple(c * t.ell for c in site)
        if isinstance(t, Layer):
            k = t.axis - 1
            return tuple(site[:k]) + (t.offset,) + tuple(site[k:])
        return tuple(site)

    def base_window(self, window: Volume) -> Volume:
        pre = Volume([self._embed(s) for s in window])
        if isinstance(self.transform, Decimation) and self.transform.ell > 1:
            lo, hi = pre.bounding_box
            grids = np.meshgrid(*[np.arange(a, b + 1) for a, b in zip(lo, hi)], indexing="ij")
            pre = Volume(np.stack([g.ravel() for g in grids], axis=1))
        pre = pre.expand(self.margin)
        if self.base.window is not None:
            if not pre.issubset(self.base.window):
                raise ValueError("preimage window falls outside the base model window")
            return self.base.window
        return pre

    def _lift(self, clamp: Mapping):
        """Base clamp and extra unary energies representing an image clamp."""
        t = self.transform
        if isinstance(t, (Decimation, Layer)):
            return {self._embed(s): i for s, i in clamp.items()}, None
        fields = {}
        if isinstance(t, Projection):
            imap = t.index_map()
            for s, i in clamp.items():
                fields[self._embed(s)] = np.where(imap == i, 0.0, np.inf)
        else:
            with np.errstate(divide="ignore"):
                logk = np.log(t.kernel)
            for s, i in clamp.items():
                fields[self._embed(s)] = -logk[:, i]
        return {}, fields

    def clamped_log_partition(self, window, clamp, engine):
        base_clamp, fields = self._lift(clamp)
        return self.base.clamped_log_partition(self.base_window(window), base_clamp, engine, extra_fields=fields)

    def check_clamped(self, window, clamp, engine):
        base_clamp, _ = self._lift(clamp)
        self.base.check_clamped(self.base_window(window), base_clamp, engine)


def image_model(base: Gibbs, transform: Transform, margin: int = 0) -> Transformed:
    return Transformed(base, transform, margin)


def decimation_recursion(beta: float, ell: int = 2) -> float:
    """Coupling of the decimated 1D Ising chain, from the ell-th power of its transfer matrix."""
    ell = Decimation(ell).ell
    t = np.array([[math.exp(beta), math.exp(-beta)], [math.exp(-beta), math.exp(beta)]])
    tl = np.linalg.matrix_power(t / t.max(), ell)
    return 0.5 * math.log(tl[0, 0] / tl[0, 1])
