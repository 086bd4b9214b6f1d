"""Hot loops over the profile space, each with a numba and a numpy version.

Encoding shared by every kernel: a ballot is an integer in ``[0, 2**m)`` whose
most significant bit is issue 1; a profile is an integer in ``[0, 2**(n*m))``
made of the voters' ballots, voter 1 most significant. Coalitions are bit masks
with voter ``i`` (0-based) at bit ``i``.

Payoff arrays hold integers (payoffs pre-scaled by a common denominator). int64
arrays may take the numba path; object arrays of Python ints always use numpy.
"""

from __future__ import annotations

import numpy as np

from ._accel import HAVE_NUMBA, njit

INT64_SAFE = 2**61


def _use_numba(*arrays) -> bool:
    return HAVE_NUMBA and all(a.dtype != object for a in arrays)


# -- outcome table ---------------------------------------------------------


@njit(cache=True)
def _outcomes_nb(n, m, accept):
    k_mask = (1 << m) - 1
    total = 1 << (n * m)
    out = np.empty(total, np.int64)
    for p in range(total):
        o = 0
        for j in range(m):
            acc = 0
            bit = m - 1 - j
            for i in range(n):
                ballot = (p >> ((n - 1 - i) * m)) & k_mask
                if (ballot >> bit) & 1:
                    acc |= 1 << i
            if accept[j, acc]:
                o |= 1 << bit
        out[p] = o
    return out


def _outcomes_np(n, m, accept):
    p = np.arange(1 << (n * m), dtype=np.int64)
    out = np.zeros_like(p)
    for j in range(m):
        acc = np.zeros_like(p)
        for i in range(n):
            acc |= ((p >> ((n - 1 - i) * m + (m - 1 - j))) & 1) << i
        out |= accept[j][acc].astype(np.int64) << (m - 1 - j)
    return out


def outcome_table(n: int, m: int, accept: np.ndarray) -> np.ndarray:
    """Collective ballot of every profile.

    ``accept[j, mask]`` tells whether issue ``j`` passes when exactly the
    voters in ``mask`` accept it.
    """
    accept = np.ascontiguousarray(accept, dtype=np.bool_)
    if HAVE_NUMBA:
        return _outcomes_nb(n, m, accept)
    return _outcomes_np(n, m, accept)


# -- Nash equilibria -------------------------------------------------------


@njit(cache=True)
def _nash_mask_nb(n, m, outcome, sat, pay):
    k = 1 << m
    total = outcome.shape[0]
    mask = np.ones(total, np.bool_)
    for p in range(total):
        o = outcome[p]
        for i in range(n):
            shift = (n - 1 - i) * m
            cur = (p >> shift) & (k - 1)
            base = p - (cur << shift)
            s0 = sat[i, o]
            v0 = pay[i, p]
            for b in range(k):
                if b == cur:
                    continue
                q = base | (b << shift)
                s = sat[i, outcome[q]]
                if (s and not s0) or (s == s0 and pay[i, q] > v0):
                    mask[p] = False
                    break
            if not mask[p]:
                break
    return mask


def best_response_mask(n, m, i, sat_p, val_p):
    """Profiles where voter ``i``'s ballot is a best response.

    ``sat_p`` and ``val_p`` are voter ``i``'s goal flag and payoff per profile.
    """
    k = 1 << m
    shape = (k**i, k, k ** (n - 1 - i))
    s = sat_p.reshape(shape)
    v = val_p.reshape(shape)
    s_best = s.max(axis=1, keepdims=True)
    top = s == s_best
    floor = v.min() - 1
    v_best = np.where(top, v, floor).max(axis=1, keepdims=True)
    return (top & (v == v_best)).reshape(-1)


def _nash_mask_np(n, m, outcome, sat, pay):
    mask = np.ones(outcome.shape[0], dtype=bool)
    for i in range(n):
        mask &= best_response_mask(n, m, i, sat[i][outcome], pay[i])
    return mask


def nash_mask(n: int, m: int, outcome: np.ndarray, sat: np.ndarray, pay: np.ndarray) -> np.ndarray:
    """Boolean mask of pure Nash equilibria.

    ``sat[i, o]`` is voter ``i``'s goal evaluated on outcome ``o``; ``pay[i, p]``
    the scaled payoff at profile ``p``.
    """
    if _use_numba(pay):
        return _nash_mask_nb(n, m, outcome, np.ascontiguousarray(sat), np.ascontiguousarray(pay))
    return _nash_mask_np(n, m, outcome, sat, pay)


# -- grid sweep ------------------------------------------------------------


@njit(cache=True)
def _grid_select_nb(n, m, outcome, sat, base, deltas, sizes, last):
    n_payers = sizes.shape[0]
    total_t = 1
    for c in sizes:
        total_t *= c
    total = outcome.shape[0]
    sel = np.full(total_t, -1, np.int64)
    vals = np.zeros((total_t, n), np.int64)
    pay = np.empty_like(base)
    k = 1 << m
    for t in range(total_t):
        pay[:, :] = base
        rest = t
        for a in range(n_payers - 1, -1, -1):
            c = rest % sizes[a]
            rest //= sizes[a]
            if c:
                pay += deltas[a, c]
        for step in range(total):
            p = total - 1 - step if last else step
            o = outcome[p]
            ok = True
            for i in range(n):
                shift = (n - 1 - i) * m
                cur = (p >> shift) & (k - 1)
                base_p = p - (cur << shift)
                s0 = sat[i, o]
                v0 = pay[i, p]
                for b in range(k):
                    if b == cur:
                        continue
                    q = base_p | (b << shift)
                    s = sat[i, outcome[q]]
                    if (s and not s0) or (s == s0 and pay[i, q] > v0):
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                sel[t] = p
                for i in range(n):
                    vals[t, i] = pay[i, p]
                break
    return sel, vals


def _grid_select_np(n, m, outcome, sat, base, deltas, sizes, last):
    total_t = int(np.prod(sizes))
    sel = np.full(total_t, -1, dtype=np.int64)
    vals = np.zeros((total_t, n), dtype=base.dtype)
    for t, choice in enumerate(np.ndindex(*sizes)):
        pay = base.copy()
        for a, c in enumerate(choice):
            if c:
                pay = pay + deltas[a, c]
        hits = np.flatnonzero(_nash_mask_np(n, m, outcome, sat, pay))
        if hits.size:
            p = int(hits[-1] if last else hits[0])
            sel[t] = p
            vals[t] = pay[:, p]
    return sel, vals


def grid_select(n, m, outcome, sat, base, deltas, sizes, last=False):
    """Selected equilibrium for every joint menu choice.

    ``deltas[a, c]`` is the payoff change (n x profiles) caused by payer ``a``
    picking option ``c``; option 0 must be the zero transfer. Joint choices
    are enumerated in row-major order over ``sizes``. Returns the selected
    profile per choice (-1 when no pure equilibrium exists) and the payoff
    vector at that profile.
    """
    sizes = np.asarray(sizes, dtype=np.int64)
    if _use_numba(base, deltas):
        return _grid_select_nb(
            n, m, outcome, np.ascontiguousarray(sat), np.ascontiguousarray(base),
            np.ascontiguousarray(deltas), sizes, last,
        )
    return _grid_select_np(n, m, outcome, sat, base, deltas, sizes, last)


def fits_int64(*arrays) -> bool:
    return all(a.size == 0 or int(np.abs(a).max()) < INT64_SAFE for a in arrays)
