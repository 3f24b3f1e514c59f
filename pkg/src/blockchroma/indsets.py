"""Typed independent sets: queries, first-moment counts, search and exact oracles.

Vertex sets are boolean masks of length ``n`` (index arrays are accepted
wherever a set is read).  The type of a set is the vector of its
intersection sizes with the parts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .model import BlockModel, g_value
from .sampler import BlockGraph

MAX_ORACLE_N = 30
EARLY_RESTARTS = 5


@dataclass(frozen=True)
class SearchBudget:
    max_restarts: int = 50
    max_steps: int = 1_000_000
    lookahead: int = 8
    ils_steps: int = 4000

    def __post_init__(self):
        if self.max_restarts < 1 or self.max_steps < 1 or self.lookahead < 1:
            raise ValueError("search budget fields must be positive")
        if self.ils_steps < 0:
            raise ValueError("ils_steps must be nonnegative")


def as_mask(g: BlockGraph, s) -> np.ndarray:
    s = np.asarray(s)
    if s.dtype == bool:
        if s.shape != (g.n,):
            raise ValueError("vertex mask has wrong length")
        return s
    mask = np.zeros(g.n, dtype=bool)
    mask[s.astype(int)] = True
    return mask


def is_independent(g: BlockGraph, s) -> bool:
    idx = np.flatnonzero(as_mask(g, s))
    if idx.size < 2:
        return True
    return not g.rows(idx)[:, idx].any()


def type_of(g: BlockGraph, s) -> np.ndarray:
    return np.bincount(g.part_of[as_mask(g, s)], minlength=g.k)


# ---------------------------------------------------------------------------
# first moment


def log_binom(n, k):
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def log_expected_count(model: BlockModel, s, t) -> float:
    """Natural log of the expected number of independent ``t``-sets inside an ``s``-set.

    Capacities ``s`` may be real (binomials go through log-gamma).
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if s.shape != (model.k,) or t.shape != (model.k,):
        raise ValueError(f"s and t must have length {model.k}")
    if np.any(t < 0) or np.any(t > s):
        raise ValueError("need 0 <= t <= s coordinate-wise")
    L = model.log_nonedge
    pairs = 0.5 * (t @ L @ t) - 0.5 * float(np.diag(L) @ t)
    return float(np.sum(log_binom(s, t)) + pairs)


def exponent_gap(model: BlockModel, c, n: int) -> float:
    """``ln E[X] / ln^2 n - g(c, supp c)`` for ``t = round(c ln n)`` inside ``s = alpha n``."""
    if n < 3:
        raise ValueError("n must be >= 3")
    c = np.asarray(c, dtype=float)
    if np.any(c < 0):
        raise ValueError("c must be nonnegative")
    support = np.flatnonzero(c > 0)
    if support.size == 0:
        return 0.0
    ln_n = math.log(n)
    s = model.alpha * n
    t = np.round(c * ln_n)
    if np.any(t > s):
        raise ValueError("rounded type exceeds the part capacity")
    return log_expected_count(model, s, t) / ln_n**2 - g_value(model, c, support)


# ---------------------------------------------------------------------------
# search


def _part_counts(g: BlockGraph, masks: np.ndarray) -> np.ndarray:
    """Per-part popcounts of each row of a boolean matrix (parts are contiguous)."""
    out = np.add.reduceat(masks, g.starts, axis=-1)
    out[..., g.sizes == 0] = 0
    return out


def find_typed_set(g: BlockGraph, available, t, budget: SearchBudget | None = None, seed=0):
    """Search for an independent set of exact type ``t`` inside ``available``.

    Randomised part-interleaved greedy with restarts: each step serves the
    part with the largest remaining deficit and keeps the best of a few
    sampled candidates (the one leaving most common non-neighbours in the
    parts still needed).  A short exhaustive backtrack runs when a restart
    ends at most three vertices short.  After the first few restarts an
    iterated local search continues from the best partial set; the rest of
    the restarts run only if it fails.  Returns a boolean mask, or ``None``
    when the budget runs out.
    """
    found, _ = search_typed_set(g, available, t, budget, seed)
    return found


def search_typed_set(g: BlockGraph, available, t, budget: SearchBudget | None = None, seed=0):
    """Like :func:`find_typed_set`, also returning the largest independent
    set of type at most ``t`` seen along the way (a mask, possibly empty)."""
    budget = budget or SearchBudget()
    avail = as_mask(g, available)
    t = np.asarray(t, dtype=np.int64)
    if t.shape != (g.k,) or np.any(t < 0):
        raise ValueError(f"t must be a nonnegative vector of length {g.k}")
    if np.any(t > type_of(g, avail)):
        raise ValueError("t exceeds the available vertices in some part")
    if t.sum() == 0:
        empty = np.zeros(g.n, dtype=bool)
        return empty, empty
    rng = np.random.default_rng(seed)
    state = {"steps": 0, "best": []}
    early = min(budget.max_restarts, EARLY_RESTARTS)
    found = _greedy_restarts(g, avail, t, budget, rng, early, state)
    if found is None:
        ils_budget = min(budget.ils_steps, budget.max_steps - state["steps"])
        if ils_budget > 0:
            found = _local_search(g, avail, t, state, rng, ils_budget)
            state["steps"] += ils_budget
    if found is None:
        found = _greedy_restarts(g, avail, t, budget, rng, budget.max_restarts - early, state)
    if found is not None:
        mask = as_mask(g, found)
        return mask, mask
    return None, as_mask(g, state["best"])


def _greedy_restarts(g: BlockGraph, avail, t, budget: SearchBudget, rng, restarts: int, state: dict):
    part_of = g.part_of
    for _ in range(restarts):
        if state["steps"] >= budget.max_steps:
            return None
        rem = t.copy()
        cand = avail & (rem[part_of] > 0)
        chosen: list[int] = []
        history: list[np.ndarray] = []
        while rem.sum() > 0:
            part = _pick_part(g, cand, rem)
            pool = np.flatnonzero(cand & (part_of == part))
            if pool.size < rem[part]:
                break
            m = min(budget.lookahead, pool.size)
            picks = rng.choice(pool, size=m, replace=False) if m < pool.size else pool
            state["steps"] += m
            rows = ~g.rows(picks) & cand
            rows[np.arange(m), picks] = False
            after = rem.copy()
            after[part] -= 1
            need = after > 0
            rows &= need[part_of]
            if need.any():
                counts = _part_counts(g, rows)[:, need]
                score = np.min(counts / after[need], axis=1) * 1e6 + counts.sum(axis=1)
                best = int(np.argmax(score))
            else:
                best = 0
            history.append(cand)
            chosen.append(int(picks[best]))
            cand = rows[best]
            rem = after
        if rem.sum() == 0:
            return chosen
        if len(chosen) > len(state["best"]):
            state["best"] = chosen
        if rem.sum() <= 3 and chosen:
            found, used = _backtrack(g, chosen, history, t, budget.max_steps - state["steps"])
            state["steps"] += used
            if found is not None:
                return found
    return None


class _SwapState:
    """Independent set inside ``avail`` with per-vertex tightness counts."""

    def __init__(self, g: BlockGraph, avail: np.ndarray, t: np.ndarray):
        self.g = g
        self.avail = avail
        self.inside = np.zeros(g.n, dtype=bool)
        self.tight = np.zeros(g.n, dtype=np.int32)
        self.rem = t.copy()

    def add(self, v: int):
        self.inside[v] = True
        self.tight += self.g.neighbors(v)
        self.rem[self.g.part_of[v]] -= 1

    def remove(self, v: int):
        self.inside[v] = False
        self.tight -= self.g.neighbors(v)
        self.rem[self.g.part_of[v]] += 1

    def members(self) -> list[int]:
        return [int(v) for v in np.flatnonzero(self.inside)]

    def reset(self, vertices):
        for v in self.members():
            self.remove(v)
        for v in vertices:
            self.add(v)


def _local_search(g: BlockGraph, avail, t, state: dict, rng, max_steps: int):
    """Iterated local search for an independent ``t``-set.

    Fills free vertices, applies (1,2)-swaps (drop one member, insert two
    non-adjacent vertices whose only member neighbour it was), and perturbs
    by forcing in a random outside vertex when stuck.  Types never exceed
    ``t`` along the way.
    """
    part_of = g.part_of
    st = _SwapState(g, avail, t)
    for v in state["best"]:
        st.add(v)
    best = st.members()
    steps = 0
    it = 0
    tenure = 7
    tabu = np.zeros(g.n, dtype=np.int64)
    while steps < max_steps:
        while True:
            free = np.flatnonzero(avail & ~st.inside & (st.tight == 0) & (st.rem[part_of] > 0))
            if free.size == 0:
                break
            st.add(int(rng.choice(free)))
            steps += 1
        if st.rem.sum() == 0:
            return st.members()
        size = int(st.inside.sum())
        if size > len(best):
            best = st.members()
            if size > len(state["best"]):
                state["best"] = best
        elif size < len(best) - 1:
            st.reset(best)
            steps += 2 * size
            continue
        if _two_swap(g, st, rng):
            steps += 3
            continue
        outside = np.flatnonzero(avail & ~st.inside & (t[part_of] > 0) & (tabu <= it))
        if outside.size == 0:
            break
        tight = st.tight[outside]
        low = outside[tight == tight.min()]
        v = int(rng.choice(low if rng.random() < 0.9 else outside))
        for x in np.flatnonzero(st.inside & g.neighbors(v)):
            st.remove(int(x))
            tabu[x] = it + tenure
            steps += 1
        pv = part_of[v]
        if st.rem[pv] == 0:
            x = int(rng.choice(np.flatnonzero(st.inside & (part_of == pv))))
            st.remove(x)
            tabu[x] = it + tenure
            steps += 1
        st.add(v)
        steps += 1
        it += 1
    return None


def _two_swap(g: BlockGraph, st: _SwapState, rng) -> bool:
    part_of = g.part_of
    one = st.avail & ~st.inside & (st.tight == 1)
    if np.count_nonzero(one) < 2:
        return False
    members = np.flatnonzero(st.inside)
    rng.shuffle(members)
    for x in members:
        L = np.flatnonzero(one & g.neighbors(x))
        if L.size < 2:
            continue
        rem = st.rem.copy()
        rem[part_of[x]] += 1
        L = L[rem[part_of[L]] > 0]
        if L.size < 2:
            continue
        sub = g.rows(L)[:, L]
        a, b = np.nonzero(np.triu(~sub, 1))
        if a.size == 0:
            continue
        pa, pb = part_of[L[a]], part_of[L[b]]
        ok = (pa != pb) | (rem[pa] >= 2)
        if not ok.any():
            continue
        j = int(np.flatnonzero(ok)[rng.integers(np.count_nonzero(ok))])
        st.remove(int(x))
        st.add(int(L[a[j]]))
        st.add(int(L[b[j]]))
        return True
    return False


def _pick_part(g: BlockGraph, cand: np.ndarray, rem: np.ndarray) -> int:
    avail = _part_counts(g, cand[None, :])[0]
    needy = rem > 0
    # largest deficit first, then the scarcer part
    keys = np.where(needy, rem * (g.n + 1) - avail, -np.inf)
    return int(np.argmax(keys))


def _backtrack(g: BlockGraph, chosen, history, t, step_limit, undo: int = 2, per_pass: int = 4000):
    """Exhaustive completion after undoing up to ``undo`` greedy picks."""
    used = 0
    for back in range(0, min(undo, len(chosen)) + 1):
        keep = chosen[: len(chosen) - back]
        cand = history[len(keep)] if len(keep) < len(history) else None
        if cand is None:
            continue
        rem = t - np.bincount(g.part_of[keep], minlength=g.k)
        budget = [min(per_pass, max(step_limit - used, 0))]
        res = _dfs_complete(g, cand, rem, budget)
        used += min(per_pass, max(step_limit - used, 0)) - budget[0]
        if res is not None:
            return keep + res, used
        if used >= step_limit:
            break
    return None, used


def _dfs_complete(g: BlockGraph, cand: np.ndarray, rem: np.ndarray, budget: list[int]):
    if rem.sum() == 0:
        return []
    counts = _part_counts(g, cand[None, :])[0]
    if np.any(counts < rem):
        return None
    part = int(np.argmax(np.where(rem > 0, rem * (g.n + 1) - counts, -np.inf)))
    pool = np.flatnonzero(cand & (g.part_of == part))
    for v in pool:
        if budget[0] <= 0:
            return None
        budget[0] -= 1
        nxt = cand & ~g.neighbors(v)
        nxt[: v + 1] &= g.part_of[: v + 1] != part  # only larger indices within the served part
        after = rem.copy()
        after[part] -= 1
        nxt &= (after > 0)[g.part_of]
        res = _dfs_complete(g, nxt, after, budget)
        if res is not None:
            return [int(v)] + res
    return None


# ---------------------------------------------------------------------------
# exact oracles on small graphs


def _check_small(g: BlockGraph, limit: int = MAX_ORACLE_N):
    if g.n > limit:
        raise ValueError(f"exact oracle limited to n <= {limit}, got n={g.n}")


def _type_of_bits(bits: int, starts, sizes) -> tuple[int, ...]:
    return tuple(
        ((bits >> int(s)) & ((1 << int(z)) - 1)).bit_count() for s, z in zip(starts, sizes)
    )


def enumerate_max_types(g: BlockGraph) -> set[tuple[int, ...]]:
    """Types of all maximal independent sets (Bron-Kerbosch on the complement)."""
    _check_small(g)
    n = g.n
    full = (1 << n) - 1
    nonadj = [full & ~nb & ~(1 << v) for v, nb in enumerate(g.bitsets())]
    types: set[tuple[int, ...]] = set()

    def expand(R: int, P: int, X: int):
        if not P and not X:
            types.add(_type_of_bits(R, g.starts, g.sizes))
            return
        pivot_pool = P | X
        pivot = max(_bits(pivot_pool), key=lambda u: (P & nonadj[u]).bit_count())
        for v in _bits(P & ~nonadj[pivot]):
            expand(R | (1 << v), P & nonadj[v], X & nonadj[v])
            P &= ~(1 << v)
            X |= 1 << v

    expand(0, full, 0)
    return types


def _bits(x: int):
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


def count_typed_sets(g: BlockGraph, t) -> int:
    """Exact number of independent sets of type ``t`` (depth-first enumeration)."""
    _check_small(g, 64)
    t = tuple(int(x) for x in t)
    adj = g.bitsets()
    part_of = [int(p) for p in g.part_of]
    allowed = sum(1 << v for v in range(g.n) if t[part_of[v]] > 0)

    def rec(cand: int, rem: list[int]) -> int:
        if not any(rem):
            return 1
        # branch on the lowest-index part with a deficit, in increasing vertex order
        part = next(i for i, r in enumerate(rem) if r)
        total = 0
        pool = cand & _part_bits(g, part)
        if pool.bit_count() < rem[part]:
            return 0
        for v in _bits(pool):
            rem[part] -= 1
            nxt = cand & ~adj[v] & ~((1 << (v + 1)) - 1 & _part_bits(g, part))
            if rem[part] == 0:
                nxt &= ~_part_bits(g, part)
            total += rec(nxt, rem)
            rem[part] += 1
        return total

    return rec(allowed, list(t))


def _part_bits(g: BlockGraph, i: int) -> int:
    a, b = g.part_ranges[i]
    return ((1 << (b - a)) - 1) << a


def has_typed_set(g: BlockGraph, available, t) -> bool:
    """Exact existence check for an independent ``t``-set inside ``available``."""
    avail = as_mask(g, available)
    t = np.asarray(t, dtype=np.int64)
    if np.any(t > type_of(g, avail)):
        return False
    cand = avail & (t[g.part_of] > 0)
    return _dfs_complete(g, cand, t.copy(), [1 << 62]) is not None
