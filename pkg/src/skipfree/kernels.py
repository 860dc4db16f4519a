"""Inner loops: lattice propagation of the walk law and lock-step trajectory
simulation.

Each kernel exists twice, as an ``@njit`` loop and as vectorised numpy. Both
variants perform the same floating-point operations in the same order (and
consume random words in the same order), so they agree bit for bit on
masses and tallies. ``propagate`` and ``run_walk_block`` dispatch on
:data:`skipfree._accel.BACKEND`.
"""

from __future__ import annotations

import numpy as np

from . import _accel
from ._accel import njit

# tally slots filled by the trajectory kernel; the C_* slots count retired
# trajectories whose event was still open and not provably out of reach
HIT, HIT_ODD, NONPOS, RET0, RET0_ODD, NEG, EVEN, ODD, BOTH = range(9)
C_HIT, C_NONPOS, C_NEG, C_EVEN, C_ODD, C_BOTH = range(9, 15)
N_COUNTS = 15

# per-trajectory flag bits
F_NONPOS = 1
F_HIT = 2
F_NEG = 4
F_EVEN = 8
F_ODD = 16

GUIDE_BITS = 12
_LOW32 = np.uint64(0xFFFFFFFF)
_THIRTYTWO = np.uint64(32)


# -----------------------------------------------------------------------------
# lattice propagation
# -----------------------------------------------------------------------------

def _check_geometry(min_support, kmax, n, hi):
    d = -min_support
    top = min(hi + n * d, n * kmax)
    if top < 0 or hi < n * min_support:
        raise ValueError("window unreachable")
    return n * min_support, top


@njit(cache=True, nogil=True)
def _propagate_nb(probs, min_support, n, hi, record_level, base, top):
    d = -min_support
    kmax = min_support + probs.size - 1
    size = top - base + 1
    old = np.zeros(size)
    new = np.zeros(size)
    old[-base] = 1.0
    psum = 0.0
    for i in range(probs.size):
        psum += probs[i]
    rec = np.zeros(n)
    dropped = 0.0
    lost = 0.0
    mass_in = 1.0
    lo_o = 0
    up_o = 0
    for j in range(1, n + 1):
        lo_n = j * min_support
        up_n = min(j * kmax, hi + (n - j) * d)
        for x in range(lo_n - base, up_n - base + 1):
            new[x] = 0.0
        for i in range(probs.size):
            p = probs[i]
            if p == 0.0:
                continue
            s = min_support + i
            xmax = min(up_o, up_n - s)
            if xmax < lo_o:
                continue
            # contiguous views let LLVM vectorise the update
            dst = new[lo_o + s - base: xmax + s - base + 1]
            src = old[lo_o - base: xmax - base + 1]
            for t in range(src.size):
                dst[t] += p * src[t]
        mass_out = 0.0
        for x in range(lo_n - base, up_n - base + 1):
            mass_out += new[x]
        lost += mass_in * (1.0 - psum)
        dropped += max(mass_in * psum - mass_out, 0.0)
        mass_in = mass_out  # the next step starts from this window
        if lo_n <= record_level <= up_n:
            rec[j - 1] = new[record_level - base]
        old, new = new, old
        lo_o = lo_n
        up_o = up_n
    out = old[lo_o - base: up_o - base + 1].copy()
    return out, dropped, lost, rec


def _propagate_np(probs, min_support, n, hi, record_level, base, top):
    d = -min_support
    kmax = min_support + probs.size - 1
    size = top - base + 1
    old = np.zeros(size)
    old[-base] = 1.0
    psum = 0.0
    for p in probs:
        psum += p
    rec = np.zeros(n)
    dropped = 0.0
    lost = 0.0
    mass_in = 1.0
    lo_o = up_o = 0
    for j in range(1, n + 1):
        lo_n = j * min_support
        up_n = min(j * kmax, hi + (n - j) * d)
        new = np.zeros(size)
        for i, p in enumerate(probs):
            if p == 0.0:
                continue
            s = min_support + i
            xmax = min(up_o, up_n - s)
            if xmax < lo_o:
                continue
            new[lo_o + s - base: xmax + s - base + 1] += p * old[lo_o - base: xmax - base + 1]
        # cumsum adds left to right, matching the compiled loop bit for bit
        mass_out = float(np.cumsum(new[lo_n - base: up_n - base + 1])[-1])
        lost += mass_in * (1.0 - psum)
        dropped += max(mass_in * psum - mass_out, 0.0)
        mass_in = mass_out  # the next step starts from this window
        if lo_n <= record_level <= up_n:
            rec[j - 1] = new[record_level - base]
        old = new
        lo_o, up_o = lo_n, up_n
    return old[lo_o - base: up_o - base + 1].copy(), dropped, lost, rec


def propagate(probs, min_support, n, hi, record_level=None, backend=None):
    """Law of S_n restricted to positions <= ``hi``.

    Mass that climbs so high it can no longer return to ``hi`` within the
    remaining steps is discarded as it leaves, so entries at or below ``hi``
    are exact. Returns ``(masses, offset, dropped, lost, record)`` where
    ``masses[i]`` is P(S_n = offset + i), ``dropped`` the mass that ended
    above ``hi``, ``lost`` the mass absorbed by the law's truncation defect,
    and ``record[j-1]`` the mass at ``record_level`` after j steps.
    """
    probs = np.ascontiguousarray(probs, dtype=np.float64)
    kmax = min_support + probs.size - 1
    base, top = _check_geometry(min_support, kmax, n, hi)
    level = np.iinfo(np.int64).min if record_level is None else int(record_level)
    fn = _propagate_nb if (backend or _accel.BACKEND) == "numba" else _propagate_np
    masses, dropped, lost, rec = fn(probs, int(min_support), int(n), int(hi), level, int(base), int(top))
    return masses, n * min_support, float(dropped), float(lost), rec


# -----------------------------------------------------------------------------
# trajectory simulation
# -----------------------------------------------------------------------------

def sampling_table(probs):
    """32-bit inverse-CDF thresholds plus a guide table for O(1) lookup.

    Index i is drawn when ``thr[i-1] <= u < thr[i]`` for a uniform 32-bit
    word u. The last threshold is 2**32, which puts the truncation defect on
    the largest stored support point.
    """
    cdf = np.cumsum(np.asarray(probs, dtype=np.float64))
    thr = np.floor(np.minimum(cdf, 1.0) * 2.0**32).astype(np.uint64)
    thr[-1] = np.uint64(1 << 32)
    shift = np.uint64(32 - GUIDE_BITS)
    starts = np.arange(1 << GUIDE_BITS, dtype=np.uint64) << shift
    guide = np.minimum(np.searchsorted(thr, starts, side="right"), thr.size - 1).astype(np.int64)
    return thr, guide, shift


def split_words(raw, n):
    """The first ``n`` 32-bit uniforms carried by 64-bit words, low half first."""
    u = np.empty(2 * raw.size, dtype=np.uint64)
    u[0::2] = raw & _LOW32
    u[1::2] = raw >> _THIRTYTWO
    return u[:n]


@njit(cache=True, nogil=True)
def _walk_step_nb(pos, flags, n_active, raw, thr, guide, shift, steps, t, horizon, k, max_down, cut, counts):
    m = thr.size
    last = t == horizon
    neg_level = -k - 1
    odd = (t & 1) == 1
    budget = max_down * (horizon - t)
    w = 0
    for j in range(n_active):
        word = raw[j >> 1]
        if j & 1:
            u = word >> np.uint64(32)
        else:
            u = word & np.uint64(0xFFFFFFFF)
        i = guide[u >> shift]
        while i < m - 1 and thr[i] <= u:
            i += 1
        v = pos[j] + steps[i]
        f = np.int64(flags[j])
        if v <= 0 and (f & F_NONPOS) == 0:
            f |= F_NONPOS
            counts[NONPOS] += 1
            if v == 0:
                counts[RET0] += 1
                if odd:
                    counts[RET0_ODD] += 1
        if v <= -1 and (f & F_HIT) == 0:
            f |= F_HIT
            counts[HIT] += 1
            if odd:
                counts[HIT_ODD] += 1
        if v <= neg_level:
            if (f & F_NEG) == 0:
                f |= F_NEG
                counts[NEG] += 1
            if odd:
                if (f & F_ODD) == 0:
                    f |= F_ODD
                    counts[ODD] += 1
                    if f & F_EVEN:
                        counts[BOTH] += 1
            elif (f & F_EVEN) == 0:
                f |= F_EVEN
                counts[EVEN] += 1
                if f & F_ODD:
                    counts[BOTH] += 1
        if (f & F_EVEN) and (f & F_ODD):
            continue
        if f & F_HIT:
            level = neg_level
        elif f & F_NONPOS:
            level = -1
        else:
            level = 0
        gap = v - level
        if gap >= cut:
            continue
        if last or gap > budget:
            if (f & F_HIT) == 0 and v + 1 < cut:
                counts[C_HIT] += 1
            if (f & F_NONPOS) == 0 and v < cut:
                counts[C_NONPOS] += 1
            if v - neg_level < cut:
                if (f & F_NEG) == 0:
                    counts[C_NEG] += 1
                if (f & F_EVEN) == 0:
                    counts[C_EVEN] += 1
                if (f & F_ODD) == 0:
                    counts[C_ODD] += 1
                counts[C_BOTH] += 1
            continue
        pos[w] = v
        flags[w] = f
        w += 1
    return w


def _walk_step_np(pos, flags, n_active, raw, thr, guide, shift, steps, t, horizon, k, max_down, cut, counts):
    u = split_words(raw, n_active)
    i = np.minimum(np.searchsorted(thr, u, side="right"), thr.size - 1)
    v = pos[:n_active] + steps[i]
    f = flags[:n_active].copy()
    odd = (t & 1) == 1
    neg_level = -k - 1

    first = (v <= 0) & ((f & F_NONPOS) == 0)
    f[first] |= F_NONPOS
    counts[NONPOS] += np.count_nonzero(first)
    ret = first & (v == 0)
    counts[RET0] += np.count_nonzero(ret)
    if odd:
        counts[RET0_ODD] += np.count_nonzero(ret)

    first = (v <= -1) & ((f & F_HIT) == 0)
    f[first] |= F_HIT
    counts[HIT] += np.count_nonzero(first)
    if odd:
        counts[HIT_ODD] += np.count_nonzero(first)

    below = v <= neg_level
    first = below & ((f & F_NEG) == 0)
    f[first] |= F_NEG
    counts[NEG] += np.count_nonzero(first)
    this_bit, other_bit = (F_ODD, F_EVEN) if odd else (F_EVEN, F_ODD)
    first = below & ((f & this_bit) == 0)
    f[first] |= this_bit
    counts[ODD if odd else EVEN] += np.count_nonzero(first)
    counts[BOTH] += np.count_nonzero(first & ((f & other_bit) != 0))

    done = ((f & F_EVEN) != 0) & ((f & F_ODD) != 0)
    level = np.where((f & F_HIT) != 0, neg_level, np.where((f & F_NONPOS) != 0, -1, 0))
    gap = v - level
    live = ~done & (gap < cut)
    keep = live & (gap <= max_down * (horizon - t))
    if t == horizon:
        keep[:] = False
    gone = live & ~keep
    counts[C_HIT] += np.count_nonzero(gone & ((f & F_HIT) == 0) & (v + 1 < cut))
    counts[C_NONPOS] += np.count_nonzero(gone & ((f & F_NONPOS) == 0) & (v < cut))
    near = gone & (v - neg_level < cut)
    counts[C_NEG] += np.count_nonzero(near & ((f & F_NEG) == 0))
    counts[C_EVEN] += np.count_nonzero(near & ((f & F_EVEN) == 0))
    counts[C_ODD] += np.count_nonzero(near & ((f & F_ODD) == 0))
    counts[C_BOTH] += np.count_nonzero(near)
    w = int(np.count_nonzero(keep))
    pos[:w] = v[keep]
    flags[:w] = f[keep]
    return w


def run_walk_block(bitgen, table, steps, k, horizon, n_traj, max_down, cut=0, backend=None):
    """Simulate ``n_traj`` walks from 0 in lock-step; return the tally vector.

    At step t every still-active trajectory consumes one 32-bit uniform, taken
    in trajectory order from ``bitgen.random_raw``. A trajectory retires once
    it has been negative (below ``-k``) at both an even and an odd time, or
    once it sits too high to reach any still-undecided level before the
    horizon; retiring for that reason never changes a tally. A trajectory
    that climbs ``cut`` or more steps above every open level retires as
    escaped, and all survivors retire at the horizon. A retired trajectory
    that has not escaped is counted as censored for each open event it sits
    fewer than ``cut`` steps above. ``cut=0`` disables the escape rule.
    """
    thr, guide, shift = table
    cut = np.iinfo(np.int64).max // 4 if cut <= 0 else int(cut)
    steps = np.ascontiguousarray(steps, dtype=np.int64)
    pos = np.zeros(n_traj, dtype=np.int64)
    flags = np.zeros(n_traj, dtype=np.uint8)
    counts = np.zeros(N_COUNTS, dtype=np.int64)
    step = _walk_step_nb if (backend or _accel.BACKEND) == "numba" else _walk_step_np
    n = n_traj
    for t in range(1, horizon + 1):
        if n == 0:
            break
        raw = bitgen.random_raw((n + 1) // 2)
        n = step(pos, flags, n, raw, thr, guide, shift, steps, t, horizon, k, max_down, cut, counts)
    return counts
