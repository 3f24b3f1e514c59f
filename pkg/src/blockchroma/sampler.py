"""Sampling ``G(n, alpha, P)`` with reproducible, order-independent randomness.

Parts are laid out contiguously in block order.  The uniform variate that
decides the pair ``{u, v}`` (``v < u``) comes from a Philox stream keyed by
the master seed with the row index ``u`` in the counter, so each edge is a
pure function of ``(seed, u, v, model)`` no matter how rows are scheduled.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .model import BlockModel

SEED_MASK = (1 << 64) - 1


def part_sizes(alpha, n: int) -> np.ndarray:
    """``floor(alpha_i n)`` for all but the last part, which takes the remainder."""
    alpha = np.asarray(alpha, dtype=float)
    sizes = np.floor(alpha[:-1] * n).astype(np.int64)
    return np.append(sizes, n - sizes.sum())


@dataclass(eq=False)
class BlockGraph:
    """Sampled block graph with packed bit-row adjacency.

    ``adjacency[u]`` holds the neighbourhood of ``u`` as little-endian packed
    bits (``np.packbits(..., bitorder="little")``).
    """

    n: int
    sizes: np.ndarray
    adjacency: np.ndarray
    seed: int = 0

    def __post_init__(self):
        self.sizes = np.asarray(self.sizes, dtype=np.int64)
        bounds = np.concatenate([[0], np.cumsum(self.sizes)])
        if bounds[-1] != self.n:
            raise ValueError("part sizes must sum to n")
        self.starts = bounds[:-1]
        self.part_of = np.repeat(np.arange(len(self.sizes)), self.sizes)

    @property
    def k(self) -> int:
        return len(self.sizes)

    @property
    def part_ranges(self) -> list[tuple[int, int]]:
        return [(int(s), int(s + z)) for s, z in zip(self.starts, self.sizes)]

    def part_mask(self, i: int) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        a, b = self.part_ranges[i]
        mask[a:b] = True
        return mask

    def neighbors(self, v: int) -> np.ndarray:
        return np.unpackbits(self.adjacency[v], count=self.n, bitorder="little").view(bool)

    def rows(self, vs) -> np.ndarray:
        """Boolean adjacency rows for the vertices ``vs``."""
        return np.unpackbits(self.adjacency[vs], axis=1, count=self.n, bitorder="little").view(bool)

    def dense(self) -> np.ndarray:
        return self.rows(np.arange(self.n))

    def has_edge(self, u: int, v: int) -> bool:
        return bool((self.adjacency[u, v >> 3] >> (v & 7)) & 1)

    def degrees(self) -> np.ndarray:
        return np.unpackbits(self.adjacency, axis=1, count=self.n, bitorder="little").sum(axis=1)

    def edges(self) -> Iterator[tuple[int, int]]:
        for u in range(self.n):
            for v in np.flatnonzero(self.neighbors(u)[:u]):
                yield int(v), u

    def num_edges(self) -> int:
        return int(self.degrees().sum() // 2)

    def bitsets(self) -> list[int]:
        """Neighbourhoods as Python integers (bit ``v`` of entry ``u``)."""
        return [int.from_bytes(row.tobytes(), "little") for row in self.adjacency]

    @classmethod
    def from_dense(cls, A, sizes=None, seed: int = 0) -> "BlockGraph":
        A = np.asarray(A).astype(bool)
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError("adjacency must be square")
        if np.any(A != A.T) or np.any(np.diag(A)):
            raise ValueError("adjacency must be symmetric with zero diagonal")
        sizes = [n] if sizes is None else sizes
        return cls(n, np.asarray(sizes), np.packbits(A, axis=1, bitorder="little"), seed)

    def to_text(self) -> str:
        """Header ``n k seed``, part sizes, then one hex row per vertex.

        Row ``u`` is the hex value of ``sum_{v < u, uv in E} 2**v``.
        """
        lines = [f"{self.n} {self.k} {self.seed}", " ".join(str(int(s)) for s in self.sizes)]
        for u, row in enumerate(self.bitsets()):
            lines.append(format(row & ((1 << u) - 1), "x"))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "BlockGraph":
        lines = text.strip("\n").split("\n")
        n, k, seed = (int(x) for x in lines[0].split())
        sizes = [int(x) for x in lines[1].split()]
        if len(sizes) != k or len(lines) != n + 2:
            raise ValueError("malformed graph file")
        A = np.zeros((n, n), dtype=bool)
        for u in range(n):
            bits = int(lines[u + 2], 16)
            if bits >> u:
                raise ValueError(f"row {u} has bits at or above the diagonal")
            for v in range(u):
                if (bits >> v) & 1:
                    A[u, v] = A[v, u] = True
        return cls.from_dense(A, sizes, seed)


def _row_uniforms(seed: int, u: int) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(key=seed & SEED_MASK, counter=[0, u, 0, 0]))
    return gen.random(u)


def pair_uniform(seed: int, u: int, v: int) -> float:
    """The variate that decides the pair ``{u, v}``."""
    if u < v:
        u, v = v, u
    if u == v:
        raise ValueError("no variate for a loop")
    return float(_row_uniforms(seed, u)[v])


def sample(model: BlockModel, n: int, seed: int, threads: int = 1, row_order=None) -> BlockGraph:
    """Draw ``G(n, alpha, P)``.

    ``row_order`` only changes the order rows are generated in (the output
    does not depend on it, nor on ``threads``).
    """
    n = int(n)
    if n < model.k:
        raise ValueError(f"n={n} is smaller than k={model.k}")
    sizes = part_sizes(model.alpha, n)
    if np.any(sizes < 1):
        raise ValueError(f"n={n} leaves an empty part (sizes {sizes.tolist()})")
    seed = int(seed) & SEED_MASK
    part_of = np.repeat(np.arange(model.k), sizes)
    A = np.zeros((n, n), dtype=bool)

    def fill(rows):
        for u in rows:
            if u == 0:
                continue
            A[u, :u] = _row_uniforms(seed, u) < model.P[part_of[u], part_of[:u]]

    order = np.arange(n) if row_order is None else np.asarray(row_order)
    if threads <= 1:
        fill(order)
    else:
        chunks = np.array_split(order, threads * 4)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, chunks))
    A |= A.T
    return BlockGraph(n, sizes, np.packbits(A, axis=1, bitorder="little"), seed)


def part_subgraph(g: BlockGraph, i: int) -> BlockGraph:
    """Induced subgraph on part ``i`` as a one-part graph."""
    if not 0 <= i < g.k:
        raise ValueError(f"part index {i} out of range")
    a, b = g.part_ranges[i]
    sub = g.rows(np.arange(a, b))[:, a:b]
    return BlockGraph(b - a, [b - a], np.packbits(sub, axis=1, bitorder="little"), g.seed)
