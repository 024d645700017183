"""Finite-range translation-invariant interactions.

Weights are ``exp(-H)`` throughout.  ``ising_ferro`` therefore carries the
pair energy ``-beta s_x s_y`` and ``ising_afm`` carries ``+beta s_x s_y``, so
that ``beta > 0`` always means the named physics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .factors import compile_factors
from .lattice import ISING, Alphabet, Configuration, Pattern


@dataclass(frozen=True)
class ModelParams:
    beta: float = 0.0
    h: float = 0.0

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0 (use ising_afm for antiferromagnets), got {self.beta}")


class Term:
    """One canonical shape with its energy table.

    ``shape`` is a tuple of sites sorted lexicographically whose smallest
    element is the origin; ``table`` has one axis per site, in that order.
    """

    __slots__ = ("shape", "table")

    def __init__(self, shape: Sequence[Sequence[int]], table):
        sites = np.array(shape, dtype=np.int64)
        if sites.ndim != 2 or sites.shape[0] == 0:
            raise ValueError("a term needs a nonempty list of sites")
        table = np.asarray(table, dtype=np.float64)
        if table.ndim != sites.shape[0]:
            raise ValueError(f"table has {table.ndim} axes for a shape of {sites.shape[0]} sites")
        order = np.lexsort(sites.T[::-1])
        sites = sites[order] - sites[order][0]
        if len({tuple(s) for s in sites.tolist()}) != len(sites):
            raise ValueError("shape sites must be distinct")
        table = np.transpose(table, order).copy()
        table.setflags(write=False)
        self.shape = tuple(tuple(s) for s in sites.tolist())
        self.table = table

    @property
    def size(self) -> int:
        return len(self.shape)

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.table)))

    @property
    def spread(self) -> int:
        s = np.array(self.shape)
        return int((s.max(axis=0) - s.min(axis=0)).max())

    def __repr__(self):
        return f"Term({self.shape})"


class Interaction:
    """Finite set of terms over a common alphabet and dimension."""

    def __init__(self, terms: Sequence[Term], d: int, alphabet: Alphabet = ISING, label: str = "custom"):
        merged: dict = {}
        q = alphabet.size
        for t in terms:
            if len(t.shape[0]) != d:
                raise ValueError(f"term {t} does not live in dimension {d}")
            if any(n != q for n in t.table.shape):
                raise ValueError(f"term table shape {t.table.shape} does not match alphabet size {q}")
            if t.shape in merged:
                merged[t.shape] = merged[t.shape] + t.table
            else:
                merged[t.shape] = np.array(t.table)
        self.terms = tuple(Term(s, tab) for s, tab in merged.items() if np.any(tab != 0))
        self.d = d
        self.alphabet = alphabet
        self.label = label

    def __repr__(self):
        return f"Interaction({self.label!r}, d={self.d}, shapes={[t.shape for t in self.terms]})"

    def __str__(self):
        return self.label

    def __eq__(self, other):
        if not isinstance(other, Interaction):
            return NotImplemented
        if (self.d, self.alphabet, len(self.terms)) != (other.d, other.alphabet, len(other.terms)):
            return False
        mine = {t.shape: t.table for t in self.terms}
        return all(t.shape in mine and np.array_equal(mine[t.shape], t.table) for t in other.terms)

    def __hash__(self):
        return hash((self.d, self.alphabet, tuple(sorted(t.shape for t in self.terms))))

    @property
    def range(self) -> int:
        return max((t.spread for t in self.terms), default=0)

    def is_nearest_neighbor(self) -> bool:
        """Only singletons and pairs {0, e_i}."""
        units = {tuple(int(i == k) for i in range(self.d)) for k in range(self.d)}
        zero = (0,) * self.d
        for t in self.terms:
            if t.size == 1:
                continue
            if t.size != 2 or t.shape[0] != zero or t.shape[1] not in units:
                return False
        return True

    def singleton_only(self) -> bool:
        return all(t.size == 1 for t in self.terms)

    def __add__(self, other: "Interaction") -> "Interaction":
        if self.d != other.d or self.alphabet != other.alphabet:
            raise ValueError("can only add interactions on the same lattice and alphabet")
        return Interaction(self.terms + other.terms, self.d, self.alphabet, f"{self.label}+{other.label}")


def _unit(k, d):
    return tuple(int(i == k) for i in range(d))


def _ising(pair_sign: float, params: ModelParams, d: int, label: str) -> Interaction:
    s = np.array(ISING.symbols, dtype=np.float64)
    terms = []
    if params.h != 0:
        terms.append(Term([(0,) * d], -params.h * s))
    pair = pair_sign * params.beta * np.outer(s, s)
    for k in range(d):
        terms.append(Term([(0,) * d, _unit(k, d)], pair))
    return Interaction(terms, d, ISING, label)


def builtin(name: str, params: ModelParams = ModelParams(), d: int = 1) -> Interaction:
    """``ising_ferro``, ``ising_afm`` or ``zero``."""
    if d not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2 or 3, got {d}")
    hs = f":h={params.h:g}" if params.h else ""
    if name == "ising_ferro":
        return _ising(-1.0, params, d, f"ising:{params.beta:g}{hs}")
    if name == "ising_afm":
        return _ising(+1.0, params, d, f"afm:{params.beta:g}{hs}")
    if name == "zero":
        return Interaction([], d, ISING, "zero")
    raise ValueError(f"unknown interaction {name!r}; expected ising_ferro, ising_afm or zero")


def ising_ferro(beta: float, h: float = 0.0, d: int = 1) -> Interaction:
    return builtin("ising_ferro", ModelParams(beta, h), d)


def ising_afm(beta: float, h: float = 0.0, d: int = 1) -> Interaction:
    return builtin("ising_afm", ModelParams(beta, h), d)


def zero(d: int = 1) -> Interaction:
    return builtin("zero", ModelParams(), d)


def parse_interaction(text: str, d: int = 1) -> Interaction:
    """``ising:<beta>[:h=<h>]``, ``afm:<beta>[:h=<h>]`` or ``zero``."""
    parts = text.strip().split(":")
    if parts == ["zero"]:
        return zero(d)
    if parts[0] not in ("ising", "afm") or len(parts) < 2:
        raise ValueError(f"bad potential {text!r}; use ising:<beta>[:h=<h>], afm:<beta> or zero")
    beta = float(parts[1])
    h = 0.0
    for extra in parts[2:]:
        key, _, val = extra.partition("=")
        if key != "h" or not val:
            raise ValueError(f"bad potential option {extra!r} in {text!r}")
        h = float(val)
    name = "ising_ferro" if parts[0] == "ising" else "ising_afm"
    return builtin(name, ModelParams(beta, h), d)


def b1_norm(phi: Interaction) -> float:
    """sum over shapes A containing the origin of sup |phi(A, .)|."""
    return float(sum(t.size * t.sup for t in phi.terms))


def alpha_norm(psi: Interaction, alpha: float) -> float:
    """sum over A containing the origin of exp(alpha |A|) sup |psi(A, .)|."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    return float(sum(t.size * math.exp(alpha * t.size) * t.sup for t in psi.terms))


def energy(phi: Interaction, sigma: Configuration, omega: Pattern | None) -> float:
    """Energy of all terms meeting the volume of ``sigma``; outside spins from ``omega``.

    ``omega=None`` is the free boundary: terms reaching outside are dropped.
    """
    fg = compile_factors(phi, sigma.volume, {}, omega)
    return float(fg.energy(sigma.indices))


def flip_delta(phi: Interaction, sigma: Configuration, omega: Pattern | None, x) -> float:
    """H(sigma^x) - H(sigma), summed over the terms containing ``x``."""
    x = tuple(x)
    if x not in sigma.volume:
        raise ValueError(f"site {x} is outside the configuration volume")
    if phi.alphabet.size != 2:
        raise ValueError("spin flips need a two-symbol alphabet")
    known = {s: int(i) for s, i in zip(sigma.volume, sigma.indices) if s != x}
    fg = compile_factors(phi, [x], known, omega)
    cur = sigma.alphabet.index(sigma[x])
    e = fg.energy(np.array([[cur], [1 - cur]]))
    return float(e[1] - e[0])
