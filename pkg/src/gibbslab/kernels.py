"""Hot loops.

Each kernel is plain Python over numpy arrays so that it runs unchanged when
numba is disabled; :func:`gibbslab._accel.jit` compiles it otherwise.  Random
numbers are always drawn outside the kernels (numpy ``Philox`` streams) and
passed in, so both paths consume identical streams.

Factor structures use the flat layout of :meth:`FactorGraph.flat`.
"""

import math

import numpy as np

from ._accel import jit

# ------------------------------------------------------------------ enumeration


@jit
def enum_block_lse(lo, hi, n, q, fac_ptr, fac_vars, tab_ptr, tab_vals):
    """(max, scaled sum) of exp(-E) over states lo..hi-1, running max-shift.

    State index k is read in base q with variable 0 most significant.
    """
    digits = np.zeros(n, dtype=np.int64)
    rem = lo
    for v in range(n - 1, -1, -1):
        digits[v] = rem % q
        rem //= q
    nf = fac_ptr.shape[0] - 1
    m = -np.inf
    s = 0.0
    for _ in range(lo, hi):
        e = 0.0
        for f in range(nf):
            idx = 0
            for j in range(fac_ptr[f], fac_ptr[f + 1]):
                idx = idx * q + digits[fac_vars[j]]
            e += tab_vals[tab_ptr[f] + idx]
        lw = -e
        if lw > m:
            s = s * math.exp(m - lw) + 1.0
            m = lw
        elif lw > -np.inf:
            s += math.exp(lw - m)
        # odometer increment
        v = n - 1
        while v >= 0:
            digits[v] += 1
            if digits[v] < q:
                break
            digits[v] = 0
            v -= 1
    return m, s


@jit
def enum_block_energy(lo, hi, n, q, fac_ptr, fac_vars, tab_ptr, tab_vals, out):
    """Energies of states lo..hi-1 written to out[0 : hi-lo]."""
    digits = np.zeros(n, dtype=np.int64)
    rem = lo
    for v in range(n - 1, -1, -1):
        digits[v] = rem % q
        rem //= q
    nf = fac_ptr.shape[0] - 1
    for k in range(hi - lo):
        e = 0.0
        for f in range(nf):
            idx = 0
            for j in range(fac_ptr[f], fac_ptr[f + 1]):
                idx = idx * q + digits[fac_vars[j]]
            e += tab_vals[tab_ptr[f] + idx]
        out[k] = e
        v = n - 1
        while v >= 0:
            digits[v] += 1
            if digits[v] < q:
                break
            digits[v] = 0
            v -= 1


def enum_block_energy_numpy(lo, hi, n, q, factors):
    """Vectorised counterpart of :func:`enum_block_energy` (no numba)."""
    k = np.arange(lo, hi, dtype=np.int64)
    powers = q ** np.arange(n - 1, -1, -1, dtype=np.int64)
    digits = (k[:, None] // powers[None, :]) % q
    e = np.zeros(hi - lo, dtype=np.float64)
    for vs, table in factors:
        e += table[tuple(digits[:, v] for v in vs)]
    return e


# ------------------------------------------------------------------ dynamics


@jit
def local_energies(i, state, q, fac_ptr, fac_vars, tab_ptr, tab_vals, inc_ptr, inc_fac, inc_pos, out):
    """out[s] = energy of the factors containing variable i with state[i] = s."""
    for s in range(q):
        out[s] = 0.0
    for a in range(inc_ptr[i], inc_ptr[i + 1]):
        f = inc_fac[a]
        pos = inc_pos[a]
        base = 0
        stride = 1
        my_stride = 1
        k = fac_ptr[f + 1] - fac_ptr[f]
        # index with var i contributing 0, plus stride of var i
        for j in range(k - 1, -1, -1):
            if j == pos:
                my_stride = stride
            else:
                base += state[fac_vars[fac_ptr[f] + j]] * stride
            stride *= q
        for s in range(q):
            out[s] += tab_vals[tab_ptr[f] + base + s * my_stride]


@jit
def heat_bath_sweeps(state, uniforms, sweeps, q, fac_ptr, fac_vars, tab_ptr, tab_vals, inc_ptr, inc_fac, inc_pos, record):
    """Heat-bath updates in lexicographic scan order.

    ``uniforms`` holds sweeps * n numbers.  When ``record`` has ``sweeps`` rows
    the state after each sweep is stored there.
    """
    n = state.shape[0]
    en = np.zeros(q, dtype=np.float64)
    w = np.zeros(q, dtype=np.float64)
    rec = record.shape[0] == sweeps
    u_i = 0
    for sw in range(sweeps):
        for i in range(n):
            local_energies(i, state, q, fac_ptr, fac_vars, tab_ptr, tab_vals, inc_ptr, inc_fac, inc_pos, en)
            emin = en[0]
            for s in range(1, q):
                if en[s] < emin:
                    emin = en[s]
            tot = 0.0
            for s in range(q):
                w[s] = math.exp(-(en[s] - emin))
                tot += w[s]
            u = uniforms[u_i] * tot
            u_i += 1
            acc = 0.0
            new = q - 1
            for s in range(q):
                acc += w[s]
                if u < acc:
                    new = s
                    break
            state[i] = new
        if rec:
            for i in range(n):
                record[sw, i] = state[i]


@jit
def glauber_events(state, sites, uniforms, rate_bound, fac_ptr, fac_vars, tab_ptr, tab_vals, inc_ptr, inc_fac, inc_pos, counts):
    """Apply thinned single-spin-flip events in order (two-symbol alphabet).

    Event k proposes a flip at sites[k]; it is accepted when
    uniforms[k] * rate_bound < exp(-dE/2).  Accepted flips are tallied in counts.
    """
    en = np.zeros(2, dtype=np.float64)
    for k in range(sites.shape[0]):
        i = sites[k]
        local_energies(i, state, 2, fac_ptr, fac_vars, tab_ptr, tab_vals, inc_ptr, inc_fac, inc_pos, en)
        cur = state[i]
        de = en[1 - cur] - en[cur]
        if uniforms[k] * rate_bound < math.exp(-0.5 * de):
            state[i] = 1 - cur
            counts[i] += 1


@jit
def exclusion_events(state, bond_a, bond_b, choice):
    """Exchange the spins across bond choice[k], for every event k in order."""
    for k in range(choice.shape[0]):
        b = choice[k]
        i = bond_a[b]
        j = bond_b[b]
        tmp = state[i]
        state[i] = state[j]
        state[j] = tmp
