"""Summation engines over a :class:`FactorGraph`.

``enum``
    brute-force enumeration of all ``q**n`` states, the reference oracle.
``strip``
    transfer matrices along the lexicographic site order: sites are added one
    at a time to a frontier tensor and summed out as soon as no later factor
    needs them.  On a strip of width ``w`` with nearest-neighbour terms the
    frontier never holds more than ``w`` sites.

Both work in log space with max-shift normalisation.  Enumeration blocks are
reduced in a fixed left-to-right order, so results do not depend on how many
workers evaluate the blocks.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.special import logsumexp

from . import _accel, kernels
from .factors import FactorGraph

ENUM_MAX_STATES = 2**24
STRIP_MAX_WIDTH = 14
BLOCK_STATES = 2**16

ENGINES = ("enum", "strip")


class CapacityError(ValueError):
    """A request exceeds what an exact engine is allowed to evaluate."""


def check_engine(engine: str) -> str:
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}; expected one of {ENGINES}")
    return engine


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("GIBBSLAB_WORKERS", "1")))
    except ValueError:
        return 1


# ------------------------------------------------------------------ enumeration


def _n_states(fg: FactorGraph) -> int:
    states = fg.q**fg.n
    if states > ENUM_MAX_STATES:
        raise CapacityError(
            f"enumeration of {fg.n} sites over {fg.q} symbols needs {states} states "
            f"(limit {ENUM_MAX_STATES})"
        )
    return states


def _blocks(total):
    return [(lo, min(lo + BLOCK_STATES, total)) for lo in range(0, total, BLOCK_STATES)]


def _combine(parts):
    m = -np.inf
    s = 0.0
    for pm, ps in parts:
        if pm == -np.inf:
            continue
        if pm > m:
            s = s * math.exp(m - pm) + ps
            m = pm
        else:
            s += ps * math.exp(pm - m)
    return m, s


def enum_log_partition(fg: FactorGraph, workers: int = 1) -> float:
    total = _n_states(fg)
    if fg.n == 0:
        return -fg.const
    if _accel.USE_NUMBA:
        flat = fg.flat()[:4]

        def block(b):
            return kernels.enum_block_lse(b[0], b[1], fg.n, fg.q, *flat)

    else:

        def block(b):
            lw = -kernels.enum_block_energy_numpy(b[0], b[1], fg.n, fg.q, fg.factors)
            m = float(lw.max())
            if m == -np.inf:
                return m, 0.0
            return m, float(np.exp(lw - m).sum())

    blocks = _blocks(total)
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(block, blocks))
    else:
        parts = [block(b) for b in blocks]
    m, s = _combine(parts)
    if m == -np.inf or s == 0.0:
        return -np.inf
    return m + math.log(s) - fg.const


def enum_energies(fg: FactorGraph) -> np.ndarray:
    """Energy of every state (lexicographic, variable 0 most significant)."""
    total = _n_states(fg)
    if fg.n == 0:
        return np.array([fg.const])
    if _accel.USE_NUMBA:
        out = np.empty(total, dtype=np.float64)
        flat = fg.flat()[:4]
        for lo, hi in _blocks(total):
            kernels.enum_block_energy(lo, hi, fg.n, fg.q, *flat, out[lo:hi])
    else:
        out = np.concatenate(
            [kernels.enum_block_energy_numpy(lo, hi, fg.n, fg.q, fg.factors) for lo, hi in _blocks(total)]
        )
    return out + fg.const


# ------------------------------------------------------------------ strip transfer


def _last_use(fg: FactorGraph) -> list[int]:
    last = list(range(fg.n))
    for vs, _ in fg.factors:
        hi = max(vs)
        for v in vs:
            last[v] = max(last[v], hi)
    return last


def strip_width(fg: FactorGraph) -> int:
    """Largest frontier the strip engine keeps between site insertions."""
    last = _last_use(fg)
    live = 0
    widest = 0
    ends = [0] * (fg.n + 1)
    for v in range(fg.n):
        ends[last[v]] += 1
    for k in range(fg.n):
        live += 1
        widest = max(widest, live)
        live -= ends[k]
    return max(widest - 1, 0) if fg.n else 0


def check_strip_capacity(fg: FactorGraph) -> int:
    w = strip_width(fg)
    if fg.q ** (w + 1) > 2 ** (STRIP_MAX_WIDTH + 1) or w > STRIP_MAX_WIDTH:
        raise CapacityError(f"strip engine frontier of {w} sites exceeds width limit {STRIP_MAX_WIDTH}")
    return w


def strip_log_partition(fg: FactorGraph) -> float:
    check_strip_capacity(fg)
    if fg.n == 0:
        return -fg.const
    last = _last_use(fg)
    by_top: list[list] = [[] for _ in range(fg.n)]
    for vs, table in fg.factors:
        by_top[max(vs)].append((vs, table))
    front: list[int] = []
    L = np.zeros(())
    for k in range(fg.n):
        front.append(k)
        L = L[..., None] + np.zeros(fg.q)
        for vs, table in by_top[k]:
            L = L - _broadcast(table, vs, front)
        done = [ax for ax, v in enumerate(front) if last[v] <= k]
        if done:
            L = logsumexp(L, axis=tuple(done))
            front = [v for v in front if last[v] > k]
    return float(L) - fg.const


def _broadcast(table, vs, front):
    """View ``table`` (axes ordered as ``vs``) against the frontier axes."""
    pos = [front.index(v) for v in vs]
    order = np.argsort(pos)
    t = np.transpose(table, order) if len(vs) > 1 else table
    shape = [1] * len(front)
    for v in vs:
        shape[front.index(v)] = table.shape[0]
    return t.reshape(shape)


# ------------------------------------------------------------------ dispatch


def log_partition(fg: FactorGraph, engine: str = "enum", workers: int = 1) -> float:
    check_engine(engine)
    if engine == "enum":
        return enum_log_partition(fg, workers)
    return strip_log_partition(fg)


def check_capacity(fg: FactorGraph, engine: str) -> None:
    check_engine(engine)
    if engine == "enum":
        _n_states(fg)
    else:
        check_strip_capacity(fg)


def log_weights(fg: FactorGraph) -> np.ndarray:
    """Unnormalised log weights of all states (enumeration)."""
    return -enum_energies(fg)


def marginal_log_probs(fg: FactorGraph, keep, engine: str = "enum") -> np.ndarray:
    """Normalised log-probabilities of the joint states of variables ``keep``.

    States are indexed lexicographically in the order given by ``keep``.
    """
    keep = list(keep)
    q = fg.q
    others = [v for v in range(fg.n) if v not in keep]
    if q ** len(keep) > ENUM_MAX_STATES:
        raise CapacityError(f"marginal over {len(keep)} sites is too large")
    if not others:
        if engine == "enum":
            lw = log_weights(fg)
            if len(keep) > 1:
                lw = np.transpose(lw.reshape((q,) * len(keep)), keep).reshape(-1)
            return lw - logsumexp(lw)
        states = np.array(np.unravel_index(np.arange(q ** len(keep)), (q,) * len(keep))).T
        full = np.zeros((states.shape[0], fg.n), dtype=np.int64)
        full[:, keep] = states
        lw = -fg.energy(full)
        return lw - strip_log_partition(fg)
    out = np.empty(q ** len(keep))
    for k, state in enumerate(np.ndindex(*(q,) * len(keep))):
        out[k] = log_partition(fg.clamp(dict(zip(keep, state))), engine)
    return out - logsumexp(out)
