"""Constructive colorings of block graphs and the baselines used to judge them.

The constructive engine follows the two-regime greedy scheme: typed
independent sets shrunk by a factor ``1 - eps`` are extracted according to
a plan (one type when ``c* alpha`` is admissible, otherwise the certificate
types with counts proportional to their weights), leftovers are cleaned up
part by part, and the last few vertices get singleton colors.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .indsets import SearchBudget, find_typed_set, search_typed_set, type_of
from .model import BlockModel, natural_class_size, region_contains
from .region import CStarResult
from .sampler import BlockGraph, part_sizes

DEFAULT_EPSILON_CAP = 0.35
EXACT_DP_LIMIT = 16
EXACT_BB_LIMIT = 30


class PlanError(ValueError):
    """The shrink factor leaves an empty extraction target."""


@dataclass
class ColoringPlan:
    regime: str
    schedule: list[tuple[np.ndarray, int]]
    epsilon: float
    cleanup_threshold: np.ndarray
    n: int
    cstar: float

    @property
    def scale(self) -> float:
        return (1.0 - self.epsilon) * math.log(self.n)


@dataclass
class Coloring:
    color_of: np.ndarray

    @property
    def num_colors(self) -> int:
        return int(self.color_of.max()) + 1 if self.color_of.size else 0

    def classes(self) -> list[np.ndarray]:
        order = np.argsort(self.color_of, kind="stable")
        cuts = np.flatnonzero(np.diff(self.color_of[order])) + 1
        return np.split(order, cuts) if order.size else []


@dataclass
class ColoringReport:
    colors_used: int
    histogram: dict[tuple[int, ...], int]
    cleanup_colors: int
    singleton_colors: int
    predicted: float
    ratio: float
    notes: list[str] = field(default_factory=list)

    @property
    def phase1_colors(self) -> int:
        return sum(self.histogram.values())


def schedule_epsilon(n: int, epsilon_cap: float = DEFAULT_EPSILON_CAP) -> float:
    """``min(epsilon_cap, 7 ln ln n / ln n)``."""
    ln_n = math.log(n)
    return min(epsilon_cap, 7.0 * math.log(ln_n) / ln_n) if ln_n > 1 else epsilon_cap


def predicted_chi(model: BlockModel, n: int, cstar: CStarResult) -> float:
    """``n / (c* ln n)`` using the lower end of the bracket."""
    if n < 3:
        raise ValueError("n must be >= 3")
    return n / (cstar.lower * math.log(n))


def predicted_chi_range(model: BlockModel, n: int, cstar: CStarResult) -> tuple[float, float]:
    """``(n / (upper ln n), n / (lower ln n))``."""
    ln_n = math.log(n)
    return n / (cstar.upper * ln_n), n / (cstar.lower * ln_n)


def build_plan(
    model: BlockModel,
    n: int,
    cstar: CStarResult,
    epsilon_cap: float = DEFAULT_EPSILON_CAP,
    epsilon: float | None = None,
) -> ColoringPlan:
    """Extraction schedule for ``G(n, alpha, P)``.

    Parameters
    ----------
    model, n, cstar
        The model, the graph size and its chromatic-constant bracket.
    epsilon_cap : float
        Cap on the shrink factor ``7 ln ln n / ln n``.
    epsilon : float, optional
        Use this shrink factor verbatim instead of the capped schedule.

    Returns
    -------
    ColoringPlan
        ``single_type`` when ``c* alpha`` is admissible, else a
        ``convex_schedule`` over the certificate points.

    Raises
    ------
    PlanError
        If the shrunk targets are all empty.
    """
    if n < 3:
        raise ValueError("n must be >= 3")
    eps = schedule_epsilon(n, epsilon_cap) if epsilon is None else float(epsilon)
    if not 0.0 <= eps < 1.0:
        raise PlanError(f"epsilon={eps} must lie in [0, 1)")
    ln_n = math.log(n)
    scale = (1.0 - eps) * ln_n
    sizes = part_sizes(model.alpha, n)
    threshold = np.maximum(1, np.floor(model.alpha * n / ln_n**2)).astype(np.int64)
    cs = cstar.lower
    if region_contains(model, cs * model.alpha, 1e-9):
        target = np.floor(scale * cs * model.alpha + 1e-9).astype(np.int64)
        if target.sum() == 0:
            raise PlanError(f"epsilon={eps:.3f} leaves an empty target at n={n}")
        need = target > 0
        count = int(np.min((sizes[need] - threshold[need]) // target[need]))
        return ColoringPlan("single_type", [(target, max(count, 0))], eps, threshold, n, cs)
    schedule = []
    for weight, point in cstar.certificate:
        target = np.floor(scale * point + 1e-9).astype(np.int64)
        count = int(round(weight * n / (cs * ln_n)))
        if target.sum() == 0 or count == 0:
            continue
        schedule.append((target, count))
    if not schedule:
        raise PlanError(f"epsilon={eps:.3f} leaves every certificate target empty at n={n}")
    return ColoringPlan("convex_schedule", schedule, eps, threshold, n, cs)


def execute_plan(g: BlockGraph, plan: ColoringPlan, model: BlockModel, budget: SearchBudget | None = None, seed=0):
    """Run the plan on ``g``; returns ``(Coloring, ColoringReport)``.

    Failing targets shrink by one vertex in each part the search could not
    serve (never below half the scheduled size) and the shrink persists for
    later classes of that entry.  One-part targets shrink straight to the
    largest partial set the failed search produced.
    """
    budget = budget or SearchBudget()
    if g.n != plan.n or g.k != model.k:
        raise ValueError("plan was built for a different graph size or model")
    ss = np.random.SeedSequence(int(seed))
    color_of = np.full(g.n, -1, dtype=np.int64)
    uncolored = np.ones(g.n, dtype=bool)
    histogram: Counter = Counter()
    next_color = 0
    notes = []

    def assign(mask):
        nonlocal next_color
        color_of[mask] = next_color
        uncolored[mask] = False
        next_color += 1

    reached = np.full(g.k, np.iinfo(np.int64).max)
    for target, count in plan.schedule:
        floor_target = (target + 1) // 2
        current = target.copy()
        made = 0
        while made < count:
            avail = type_of(g, uncolored)
            if np.any(current > avail):
                break
            s, best = search_typed_set(g, uncolored, current, budget, ss.spawn(1)[0])
            if s is None and np.count_nonzero(current) == 1:
                # one-part target: jump to the best partial set instead of
                # walking down one vertex at a time
                got = type_of(g, best)
                shrunk = np.maximum(np.minimum(current - (current > 0), got), floor_target * (current > 0))
                if np.array_equal(shrunk, current):
                    notes.append(f"target {target.tolist()} stalled at {current.tolist()}")
                    break
                current = shrunk
                if not np.array_equal(got, current):
                    continue
                s = best
            elif s is None:
                short = _short_parts(g, uncolored, current, budget, ss)
                shrunk = np.where(short & (current > floor_target), current - 1, current)
                if np.array_equal(shrunk, current):
                    notes.append(f"target {target.tolist()} stalled at {current.tolist()}")
                    break
                current = shrunk
                continue
            assign(s)
            histogram[tuple(int(x) for x in type_of(g, s))] += 1
            made += 1
        if made and np.count_nonzero(current) == 1:
            i = int(np.flatnonzero(current)[0])
            reached[i] = min(reached[i], current[i] + 1)

    cleanup = 0
    ln_n = math.log(g.n)
    for i in range(g.k):
        # start at the phase-one scale; sizes below c(p_i) ln n / 2 only after repeated failures
        size = max(1, min(math.floor(natural_class_size(model.P[i, i]) * plan.scale), reached[i]))
        pmask = g.part_mask(i)
        while True:
            left = int(np.count_nonzero(uncolored & pmask))
            if left < plan.cleanup_threshold[i] or left == 0:
                break
            size = min(size, left)
            t = np.zeros(g.k, dtype=np.int64)
            t[i] = size
            s, best = search_typed_set(g, uncolored & pmask, t, budget, ss.spawn(1)[0])
            if s is None:
                got = int(best.sum())
                if got < size - 1 or got == 0:
                    size -= 1
                    if size == 0:
                        break
                    continue
                # one short of the target: keep it rather than search again
                s = best
                size = got
            assign(s)
            cleanup += 1

    singles = 0
    for v in np.flatnonzero(uncolored):
        assign(np.array([v]))
        singles += 1
    if singles > cleanup + sum(histogram.values()):
        notes.append("singleton colors dominate")

    coloring = Coloring(color_of)
    predicted = g.n / (plan.cstar * ln_n)
    report = ColoringReport(
        colors_used=coloring.num_colors,
        histogram=dict(histogram),
        cleanup_colors=cleanup,
        singleton_colors=singles,
        predicted=predicted,
        ratio=coloring.num_colors / predicted,
        notes=notes,
    )
    return coloring, report


def _short_parts(g, uncolored, current, budget, ss) -> np.ndarray:
    """Parts whose single-part share of ``current`` cannot be found on its own.

    Falls back to every needed part when each share is individually findable.
    """
    short = np.zeros(g.k, dtype=bool)
    if g.k == 1:
        return current > 0
    for i in np.flatnonzero(current > 0):
        t = np.zeros(g.k, dtype=np.int64)
        t[i] = current[i]
        small = SearchBudget(max(1, budget.max_restarts // 5), budget.max_steps, budget.lookahead)
        if find_typed_set(g, uncolored, t, small, ss.spawn(1)[0]) is None:
            short[i] = True
    return short if short.any() else current > 0


# ---------------------------------------------------------------------------
# baselines and oracles


def dsatur(g: BlockGraph) -> Coloring:
    """DSATUR greedy: highest saturation first, ties by degree then index."""
    n = g.n
    color_of = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return Coloring(color_of)
    deg = g.degrees().astype(np.int64)
    sat = np.zeros(n, dtype=np.int64)
    seen = np.zeros((n, 64), dtype=bool)
    uncolored = np.ones(n, dtype=bool)
    for _ in range(n):
        key = np.where(uncolored, sat * (n + 1) + deg, -1)
        v = int(np.argmax(key))
        free = np.flatnonzero(~seen[v])
        c = int(free[0]) if free.size else seen.shape[1]
        if c >= seen.shape[1]:
            seen = np.hstack([seen, np.zeros_like(seen)])
        color_of[v] = c
        uncolored[v] = False
        nb = g.neighbors(v)
        fresh = nb & ~seen[:, c]
        sat[fresh] += 1
        seen[nb, c] = True
    return Coloring(color_of)


def validate(g: BlockGraph, coloring: Coloring) -> bool:
    """Every vertex colored and every edge bichromatic."""
    col = np.asarray(coloring.color_of)
    if col.shape != (g.n,) or np.any(col < 0):
        return False
    for cls in coloring.classes():
        if cls.size > 1 and g.rows(cls)[:, cls].any():
            return False
    return True


def average_type(g: BlockGraph, coloring: Coloring) -> np.ndarray:
    """Mean type over the color classes."""
    classes = coloring.classes()
    total = sum(type_of(g, c) for c in classes)
    return np.asarray(total, dtype=float) / len(classes)


def exact_chromatic(g: BlockGraph) -> int:
    """Exact chromatic number: subset counting up to 16 vertices, branch and bound up to 30."""
    if g.n > EXACT_BB_LIMIT:
        raise ValueError(f"exact chromatic number limited to n <= {EXACT_BB_LIMIT}")
    if g.n == 0:
        return 0
    if g.n <= EXACT_DP_LIMIT:
        return chromatic_by_covers(g)
    return chromatic_branch_and_bound(g)


def chromatic_by_covers(g: BlockGraph) -> int:
    """Smallest ``k`` with a positive count of ``k``-tuples of independent sets covering ``V``.

    Uses the inclusion-exclusion formula over vertex subsets with exact
    integer arithmetic.
    """
    n = g.n
    if n > EXACT_DP_LIMIT:
        raise ValueError(f"cover counting limited to n <= {EXACT_DP_LIMIT}")
    adj = g.bitsets()
    size = 1 << n
    ind = np.zeros(size, dtype=np.int64)
    ind[0] = 1
    for mask in range(1, size):
        low = (mask & -mask).bit_length() - 1
        rest = mask & (mask - 1)
        ind[mask] = ind[rest] and not (adj[low] & rest)
    # subset-sum (zeta) transform: number of independent subsets of each mask
    for i in range(n):
        step = 1 << i
        view = ind.reshape(-1, 2 * step)
        view[:, step:] += view[:, :step]
    parity = np.array([(n - int(m).bit_count()) & 1 for m in range(size)])
    counts = [int(x) for x in ind]
    signs = [-1 if p else 1 for p in parity]
    powers = [1] * size
    for k in range(1, n + 1):
        powers = [p * c for p, c in zip(powers, counts)]
        if sum(s * p for s, p in zip(signs, powers)) > 0:
            return k
    return n


def chromatic_branch_and_bound(g: BlockGraph) -> int:
    """DSATUR-order branch and bound with a greedy clique lower bound."""
    n = g.n
    adj = g.bitsets()
    lower = _greedy_clique(adj, n)
    best = [dsatur(g).num_colors]
    if best[0] == lower:
        return lower
    color = [-1] * n
    nbr_colors = [0] * n

    def rec(colored: int, used: int):
        if used >= best[0]:
            return
        if colored == n:
            best[0] = used
            return
        v = max(
            (u for u in range(n) if color[u] < 0),
            key=lambda u: (nbr_colors[u].bit_count(), (adj[u]).bit_count(), -u),
        )
        for c in range(min(used + 1, best[0] - 1)):
            if (nbr_colors[v] >> c) & 1:
                continue
            color[v] = c
            saved = [(u, nbr_colors[u]) for u in _iter_bits(adj[v])]
            for u, _ in saved:
                nbr_colors[u] |= 1 << c
            rec(colored + 1, max(used, c + 1))
            for u, old in saved:
                nbr_colors[u] = old
            color[v] = -1
            if best[0] == lower:
                return

    rec(0, 0)
    return best[0]


def _greedy_clique(adj: list[int], n: int) -> int:
    best = 0
    for start in range(n):
        clique = 1
        cand = adj[start]
        while cand:
            v = max(_iter_bits(cand), key=lambda u: (adj[u] & cand).bit_count())
            clique += 1
            cand &= adj[v]
        best = max(best, clique)
    return best


def _iter_bits(x: int):
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low
