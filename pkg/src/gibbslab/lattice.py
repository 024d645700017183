"""Lattice geometry: alphabets, finite volumes, configurations and boundary patterns."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

Site = tuple  # tuple[int, ...]

MAX_DIMENSION = 3


@dataclass(frozen=True)
class Alphabet:
    """Ordered single-spin space; position in ``symbols`` is the spin index."""

    symbols: tuple = (-1, 1)

    def __post_init__(self):
        symbols = tuple(int(s) for s in self.symbols)
        if len(symbols) < 2:
            raise ValueError("an alphabet needs at least two symbols")
        if len(set(symbols)) != len(symbols):
            raise ValueError(f"alphabet symbols must be distinct, got {symbols}")
        object.__setattr__(self, "symbols", symbols)

    @property
    def size(self) -> int:
        return len(self.symbols)

    def index(self, symbol) -> int:
        try:
            return self.symbols.index(int(symbol))
        except ValueError:
            raise ValueError(f"symbol {symbol} not in alphabet {self.symbols}") from None

    def indices(self, values) -> np.ndarray:
        """Vectorised symbol -> index map."""
        values = np.asarray(values)
        out = np.full(values.shape, -1, dtype=np.int64)
        for i, s in enumerate(self.symbols):
            out[values == s] = i
        if (out < 0).any():
            bad = np.unique(values[out < 0])
            raise ValueError(f"values {bad.tolist()} not in alphabet {self.symbols}")
        return out

    def to_symbols(self, indices) -> np.ndarray:
        return np.asarray(self.symbols, dtype=np.int64)[np.asarray(indices)]


ISING = Alphabet((-1, 1))


def _check_dimension(d):
    if d not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2 or 3, got {d}")


class Volume:
    """Finite set of lattice sites, stored in lexicographic order."""

    __slots__ = ("_sites", "_index", "_key")

    def __init__(self, sites: Iterable[Sequence[int]]):
        tuples = sorted({tuple(int(c) for c in s) for s in sites})
        if not tuples:
            raise ValueError("a volume must contain at least one site")
        d = len(tuples[0])
        _check_dimension(d)
        if any(len(s) != d for s in tuples):
            raise ValueError("all sites of a volume must have the same dimension")
        arr = np.array(tuples, dtype=np.int64).reshape(len(tuples), d)
        arr.setflags(write=False)
        self._sites = arr
        self._index = {s: i for i, s in enumerate(tuples)}
        self._key = tuple(tuples)

    @property
    def sites(self) -> np.ndarray:
        return self._sites

    @property
    def d(self) -> int:
        return self._sites.shape[1]

    def __len__(self):
        return self._sites.shape[0]

    def __iter__(self):
        return iter(self._key)

    def __contains__(self, site):
        return tuple(site) in self._index

    def __eq__(self, other):
        return isinstance(other, Volume) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        lo, hi = self.bounding_box
        return f"Volume({len(self)} sites, box {lo}..{hi})"

    def index(self, site) -> int:
        return self._index[tuple(site)]

    def site(self, i) -> Site:
        return self._key[i]

    @property
    def bounding_box(self):
        return tuple(self._sites.min(axis=0).tolist()), tuple(self._sites.max(axis=0).tolist())

    def issubset(self, other: "Volume") -> bool:
        return all(s in other._index for s in self._key)

    def difference(self, other) -> "Volume | None":
        rest = [s for s in self._key if s not in other]
        return Volume(rest) if rest else None

    def union(self, other: "Volume") -> "Volume":
        return Volume(self._key + other._key)

    def expand(self, margin: int) -> "Volume":
        """All sites within sup-distance ``margin`` of the volume."""
        if margin <= 0:
            return self
        offsets = np.array(np.meshgrid(*[np.arange(-margin, margin + 1)] * self.d, indexing="ij"))
        offsets = offsets.reshape(self.d, -1).T
        pts = (self._sites[:, None, :] + offsets[None, :, :]).reshape(-1, self.d)
        return Volume(map(tuple, pts))


def box(n: int, d: int) -> Volume:
    """The cube [-n, n]^d."""
    _check_dimension(d)
    if n < 0:
        raise ValueError(f"box radius must be nonnegative, got {n}")
    axis = range(-n, n + 1)
    grid = np.array(np.meshgrid(*[axis] * d, indexing="ij")).reshape(d, -1).T
    return Volume(map(tuple, grid))


def strip_rows(width: int) -> range:
    """Transverse coordinates of a width-``width`` strip; the origin row is included."""
    return range(-(width // 2), width - width // 2)


def strip(n: int, width: int) -> Volume:
    """Two-dimensional strip [-n, n] x (``width`` rows) containing the origin."""
    if n < 0 or width < 1:
        raise ValueError("strip needs n >= 0 and width >= 1")
    return Volume((x, y) for x in range(-n, n + 1) for y in strip_rows(width))


def rect(shape: Sequence[int]) -> Volume:
    """The rectangle [0, L_1) x ... x [0, L_d)."""
    shape = tuple(int(s) for s in shape)
    _check_dimension(len(shape))
    if min(shape) < 1:
        raise ValueError(f"rectangle sides must be positive, got {shape}")
    grid = np.array(np.meshgrid(*[range(s) for s in shape], indexing="ij")).reshape(len(shape), -1).T
    return Volume(map(tuple, grid))


# --------------------------------------------------------------------------- patterns

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        x = x + np.uint64(0x9E3779B97F4A7C15)
        z = x
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


class Pattern:
    """Procedural infinite configuration, evaluable at any site."""

    name = "pattern"

    def values(self, sites) -> np.ndarray:
        raise NotImplementedError

    def value(self, site) -> int:
        return int(self.values(np.asarray(site, dtype=np.int64)[None, :])[0])

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Uniform(Pattern):
    symbol: int = 1

    @property
    def name(self):
        return {1: "plus", -1: "minus"}.get(self.symbol, f"uniform:{self.symbol}")

    def values(self, sites):
        sites = np.asarray(sites)
        return np.full(sites.shape[0], self.symbol, dtype=np.int64)


@dataclass(frozen=True)
class Alternating(Pattern):
    """(-1)^(sum |x_i|)."""

    name = "alternating"

    def values(self, sites):
        s = np.abs(np.asarray(sites, dtype=np.int64)).sum(axis=1)
        return np.where(s % 2 == 0, 1, -1).astype(np.int64)


@dataclass(frozen=True)
class Checkerboard2x2(Pattern):
    """(-1)^(sum floor(x_i / 2)): checkerboard of 2x2 blocks."""

    name = "checkerboard2x2"

    def values(self, sites):
        s = np.floor_divide(np.asarray(sites, dtype=np.int64), 2).sum(axis=1)
        return np.where(s % 2 == 0, 1, -1).astype(np.int64)


@dataclass(frozen=True)
class Periodic(Pattern):
    """Periodic tiling of a finite cell; ``cell`` is a nested tuple of symbols."""

    cell: tuple = ((1,),)

    def __post_init__(self):
        arr = np.asarray(self.cell, dtype=np.int64)
        if arr.size == 0:
            raise ValueError("periodic cell must be nonempty")

    @property
    def name(self):
        arr = np.asarray(self.cell)
        if arr.ndim == 1:
            rows = [arr]
        else:
            rows = list(arr.reshape(arr.shape[0], -1))
        enc = "/".join("".join("+" if v == 1 else "-" if v == -1 else f"({v})" for v in r) for r in rows)
        return f"periodic:{enc}"

    def values(self, sites):
        sites = np.asarray(sites, dtype=np.int64)
        cell = np.asarray(self.cell, dtype=np.int64)
        d = sites.shape[1]
        if cell.ndim < d:
            cell = cell.reshape(cell.shape + (1,) * (d - cell.ndim))
        elif cell.ndim > d:
            raise ValueError(f"periodic cell has {cell.ndim} axes but sites have {d}")
        idx = tuple(np.mod(sites[:, i], cell.shape[i]) for i in range(d))
        return cell[idx]


@dataclass(frozen=True)
class RandomPattern(Pattern):
    """I.i.d. +1 with probability p, else -1; a pure function of (seed, site)."""

    p: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"random pattern needs 0 <= p <= 1, got {self.p}")

    @property
    def name(self):
        return f"random:{self.p:g}:{self.seed}"

    def uniforms(self, sites) -> np.ndarray:
        sites = np.asarray(sites, dtype=np.int64)
        h = np.full(sites.shape[0], np.uint64(self.seed & 0xFFFFFFFFFFFFFFFF), dtype=np.uint64)
        h = _splitmix64(h)
        for i in range(sites.shape[1]):
            h = _splitmix64(h ^ sites[:, i].astype(np.uint64))
        return (h >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)

    def values(self, sites):
        return np.where(self.uniforms(sites) < self.p, 1, -1).astype(np.int64)


@dataclass(frozen=True)
class Decimated(Pattern):
    """Pattern read on the sublattice ell * Z^d."""

    base: Pattern = field(default_factory=Uniform)
    ell: int = 1

    @property
    def name(self):
        return f"dec{self.ell}({self.base})"

    def values(self, sites):
        return self.base.values(np.asarray(sites, dtype=np.int64) * self.ell)


PLUS = Uniform(1)
MINUS = Uniform(-1)
ALTERNATING = Alternating()
CHECKERBOARD2X2 = Checkerboard2x2()


def pattern_value(p: Pattern, x) -> int:
    return p.value(x)


def parse_pattern(text: str) -> Pattern:
    """Parse ``plus``, ``minus``, ``alternating``, ``checkerboard2x2``,
    ``periodic:<cell>`` (rows of ``+``/``-`` separated by ``/``) or
    ``random:<p>:<seed>``."""
    text = text.strip()
    simple = {"plus": PLUS, "minus": MINUS, "alternating": ALTERNATING, "checkerboard2x2": CHECKERBOARD2X2}
    if text in simple:
        return simple[text]
    head, _, rest = text.partition(":")
    if head == "periodic" and rest:
        rows = []
        for row in rest.split("/"):
            if not row or any(c not in "+-" for c in row):
                raise ValueError(f"bad periodic cell {rest!r}; use rows of '+'/'-' separated by '/'")
            rows.append(tuple(1 if c == "+" else -1 for c in row))
        if len({len(r) for r in rows}) != 1:
            raise ValueError(f"periodic cell rows must have equal length: {rest!r}")
        cell = rows[0] if len(rows) == 1 else tuple(rows)
        return Periodic(cell)
    if head == "random":
        parts = rest.split(":")
        if len(parts) != 2:
            raise ValueError(f"random pattern syntax is random:<p>:<seed>, got {text!r}")
        return RandomPattern(float(parts[0]), int(parts[1]))
    raise ValueError(f"unknown pattern {text!r}")


# --------------------------------------------------------------------------- configurations


class Configuration:
    """Spin values on a finite volume.  ``values`` holds symbols, not indices."""

    __slots__ = ("volume", "alphabet", "_values")

    def __init__(self, volume: Volume, values, alphabet: Alphabet = ISING):
        values = np.array(values, dtype=np.int64).reshape(-1)
        if values.shape[0] != len(volume):
            raise ValueError(f"{values.shape[0]} values for a volume of {len(volume)} sites")
        alphabet.indices(values)  # validates
        values.setflags(write=False)
        self.volume = volume
        self.alphabet = alphabet
        self._values = values

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def indices(self) -> np.ndarray:
        return self.alphabet.indices(self._values)

    def __getitem__(self, site) -> int:
        return int(self._values[self.volume.index(site)])

    def __len__(self):
        return len(self.volume)

    def __eq__(self, other):
        return (
            isinstance(other, Configuration)
            and self.volume == other.volume
            and self.alphabet == other.alphabet
            and np.array_equal(self._values, other._values)
        )

    def __hash__(self):
        return hash((self.volume, self.alphabet, self._values.tobytes()))

    def __repr__(self):
        return f"Configuration({self.volume!r}, {self._values.tolist()})"

    def as_dict(self) -> dict:
        return {s: int(v) for s, v in zip(self.volume, self._values)}

    def restrict(self, volume: Volume) -> "Configuration":
        idx = [self.volume.index(s) for s in volume]
        return Configuration(volume, self._values[idx], self.alphabet)

    def flipped(self, site=None) -> "Configuration":
        """Spin flip at ``site`` (or globally), for two-symbol alphabets."""
        if self.alphabet.size != 2:
            raise ValueError("spin flips need a two-symbol alphabet")
        a, b = self.alphabet.symbols
        vals = self._values.copy()
        sel = slice(None) if site is None else self.volume.index(site)
        vals[sel] = np.where(vals[sel] == a, b, a)
        return Configuration(self.volume, vals, self.alphabet)


def fill(v: Volume, p: Pattern, alphabet: Alphabet = ISING) -> Configuration:
    return Configuration(v, p.values(v.sites), alphabet)


def merge(*configs: Configuration | None) -> Configuration:
    """Union of configurations on disjoint volumes."""
    configs = [c for c in configs if c is not None]
    if not configs:
        raise ValueError("nothing to merge")
    values = {}
    for c in configs:
        for s, v in zip(c.volume, c.values):
            if s in values:
                raise ValueError(f"site {s} assigned twice")
            values[s] = int(v)
    vol = Volume(values)
    return Configuration(vol, [values[s] for s in vol], configs[0].alphabet)
