"""Shared brute-force oracles for the test suite.

These stay deliberately independent of the library code paths they check:
plain loops and heapq, no reuse of the kernels under test.
"""
from __future__ import annotations

import heapq
import math

import numpy as np
import pytest

EIGHT = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def brute_force_distance(seed: np.ndarray, domain: np.ndarray) -> np.ndarray:
    """All-pairs min Euclidean distance to the seed set; inf off-domain."""
    h, w = seed.shape
    out = np.full((h, w), np.inf)
    seeds = np.argwhere(seed)
    for r in range(h):
        for c in range(w):
            if not domain[r, c]:
                continue
            best = np.inf
            for sr, sc in seeds:
                d = math.hypot(r - sr, c - sc)
                if d < best:
                    best = d
            out[r, c] = best
    return out


def brute_force_dilate(mask: np.ndarray, radius: float) -> np.ndarray:
    h, w = mask.shape
    out = np.zeros_like(mask, dtype=bool)
    pts = np.argwhere(mask)
    for r in range(h):
        for c in range(w):
            for pr, pc in pts:
                if (r - pr) ** 2 + (c - pc) ** 2 <= radius * radius + 1e-9:
                    out[r, c] = True
                    break
    return out


def dijkstra8(free: np.ndarray, seeds) -> np.ndarray:
    """8-connected Dijkstra with edge weights 1 and sqrt(2)."""
    h, w = free.shape
    dist = np.full((h, w), np.inf)
    pq = []
    for r, c in seeds:
        dist[r, c] = 0.0
        heapq.heappush(pq, (0.0, r, c))
    while pq:
        d, r, c = heapq.heappop(pq)
        if d > dist[r, c] + 1e-12:
            continue
        for dr, dc in EIGHT:
            nr, nc = r + dr, c + dc
            if 0 <= nr < h and 0 <= nc < w and free[nr, nc]:
                nd = d + (1.0 if dr == 0 or dc == 0 else math.sqrt(2.0))
                if nd < dist[nr, nc] - 1e-12:
                    dist[nr, nc] = nd
                    heapq.heappush(pq, (nd, nr, nc))
    return dist


def circular_gaps(bearings):
    """Sorted adjacent circular gaps of a bearing multiset, wraparound included."""
    bs = sorted(b % 360.0 for b in bearings)
    n = len(bs)
    return [(bs[(i + 1) % n] - bs[i]) % 360.0 for i in range(n)]


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260811)
