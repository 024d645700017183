"""Clamped finite-volume energy functions.

Every exact computation in the package reduces to a :class:`FactorGraph`: a
list of free variables (lattice sites, in lexicographic order) and energy
tables over small groups of them, plus a constant collecting the terms whose
sites are all fixed.  The weight of a state ``s`` is ``exp(-const - sum_f
table_f[s_f])``.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .lattice import Pattern


class FactorGraph:
    __slots__ = ("sites", "q", "factors", "const")

    def __init__(self, sites, q: int, factors, const: float = 0.0):
        sites = np.asarray(sites, dtype=np.int64)
        if sites.ndim == 1:
            sites = sites.reshape(-1, 1) if sites.size else sites.reshape(0, 1)
        self.sites = sites
        self.q = int(q)
        self.factors = tuple((tuple(int(v) for v in vs), np.asarray(t, dtype=np.float64)) for vs, t in factors)
        self.const = float(const)

    @property
    def n(self) -> int:
        return self.sites.shape[0]

    def __repr__(self):
        return f"FactorGraph(n={self.n}, q={self.q}, factors={len(self.factors)}, const={self.const:g})"

    def energy(self, states) -> np.ndarray:
        """Energy of index states, shape (..., n)."""
        states = np.asarray(states, dtype=np.int64)
        e = np.full(states.shape[:-1], self.const, dtype=np.float64)
        for vs, table in self.factors:
            e = e + table[tuple(states[..., v] for v in vs)]
        return e

    def clamp(self, assign: Mapping[int, int]) -> "FactorGraph":
        """Fix some variables to index values and renumber the rest."""
        if not assign:
            return self
        keep = [v for v in range(self.n) if v not in assign]
        renum = {v: i for i, v in enumerate(keep)}
        const = self.const
        merged: dict = {}
        for vs, table in self.factors:
            sel = tuple(assign[v] if v in assign else slice(None) for v in vs)
            sub = table[sel]
            free = tuple(renum[v] for v in vs if v not in assign)
            if not free:
                const += float(sub)
            else:
                _accumulate(merged, free, sub)
        return FactorGraph(self.sites[keep], self.q, merged.items(), const)

    def with_unary(self, unary: Mapping[int, np.ndarray]) -> "FactorGraph":
        """Add single-variable energies (may contain +inf for forbidden symbols)."""
        factors = list(self.factors)
        for v in sorted(unary):
            factors.append(((v,), np.asarray(unary[v], dtype=np.float64)))
        return FactorGraph(self.sites, self.q, factors, self.const)

    def flat(self):
        """Flat arrays for the compiled kernels.

        Returns ``(fac_ptr, fac_vars, tab_ptr, tab_vals, inc_ptr, inc_fac, inc_pos)``
        where ``inc_*`` list, per variable, the factors containing it and the
        position of the variable inside each such factor.
        """
        nf = len(self.factors)
        fac_ptr = np.zeros(nf + 1, dtype=np.int64)
        tab_ptr = np.zeros(nf + 1, dtype=np.int64)
        for i, (vs, t) in enumerate(self.factors):
            fac_ptr[i + 1] = fac_ptr[i] + len(vs)
            tab_ptr[i + 1] = tab_ptr[i] + t.size
        fac_vars = np.array([v for vs, _ in self.factors for v in vs], dtype=np.int64)
        tab_vals = (
            np.concatenate([t.ravel() for _, t in self.factors]) if nf else np.zeros(0, dtype=np.float64)
        )
        per_var: list[list[tuple[int, int]]] = [[] for _ in range(self.n)]
        for f, (vs, _) in enumerate(self.factors):
            for pos, v in enumerate(vs):
                per_var[v].append((f, pos))
        inc_ptr = np.zeros(self.n + 1, dtype=np.int64)
        for v in range(self.n):
            inc_ptr[v + 1] = inc_ptr[v] + len(per_var[v])
        inc_fac = np.array([f for lst in per_var for f, _ in lst], dtype=np.int64)
        inc_pos = np.array([p for lst in per_var for _, p in lst], dtype=np.int64)
        return fac_ptr, fac_vars, tab_ptr, tab_vals.astype(np.float64), inc_ptr, inc_fac, inc_pos


def _accumulate(merged: dict, free: tuple, table: np.ndarray):
    order = np.argsort(free, kind="stable")
    key = tuple(free[i] for i in order)
    table = np.transpose(table, order) if len(free) > 1 else table
    if key in merged:
        merged[key] = merged[key] + table
    else:
        merged[key] = np.array(table, dtype=np.float64)


def compile_factors(
    phi,
    active: Sequence,
    known: Mapping | None = None,
    boundary: Pattern | None = None,
    unary: Mapping | None = None,
) -> FactorGraph:
    """Energy of ``phi`` restricted to the terms touching ``active`` sites.

    Sites in ``active`` not listed in ``known`` become free variables (in
    lexicographic order).  Values elsewhere come from ``known`` (symbol
    indices), then from ``boundary``; with ``boundary=None`` (free boundary)
    any term reaching an unassigned site is dropped.  ``unary`` maps sites to
    extra single-site energy vectors.
    """
    known = dict(known or {})
    active = sorted({tuple(int(c) for c in s) for s in active})
    alphabet = phi.alphabet
    free_sites = [s for s in active if s not in known]
    var = {s: i for i, s in enumerate(free_sites)}
    const = 0.0
    merged: dict = {}
    if active:
        act = np.array(active, dtype=np.int64)
        for term in phi.terms:
            offs = np.array(term.shape, dtype=np.int64)
            cands = (act[:, None, :] - offs[None, :, :]).reshape(-1, act.shape[1])
            origins = np.unique(cands, axis=0)
            all_sites = origins[:, None, :] + offs[None, :, :]
            bvals = None
            if boundary is not None:
                bvals = alphabet.indices(boundary.values(all_sites.reshape(-1, act.shape[1]))).reshape(
                    all_sites.shape[:2]
                )
            for ti in range(origins.shape[0]):
                sel = []
                free = []
                dropped = False
                for j in range(offs.shape[0]):
                    s = tuple(all_sites[ti, j].tolist())
                    if s in var:
                        sel.append(slice(None))
                        free.append(var[s])
                    elif s in known:
                        sel.append(known[s])
                    elif bvals is not None:
                        sel.append(int(bvals[ti, j]))
                    else:
                        dropped = True
                        break
                if dropped:
                    continue
                sub = term.table[tuple(sel)]
                if free:
                    _accumulate(merged, tuple(free), sub)
                else:
                    const += float(sub)
    active_set = set(active)
    for s in sorted(unary or {}):
        s_t = tuple(s)
        vec = np.asarray(unary[s], dtype=np.float64)
        if s_t in var:
            _accumulate(merged, (var[s_t],), vec)
        elif s_t in known and s_t in active_set:
            const += float(vec[known[s_t]])
    sites = np.array(free_sites, dtype=np.int64).reshape(len(free_sites), phi.d)
    return FactorGraph(sites, alphabet.size, merged.items(), const)
