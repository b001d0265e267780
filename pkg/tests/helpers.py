"""Shared generators for the certificate battery and random graphs."""

import random
from fractions import Fraction

from slitlaw.complexes import RationalSurface, TimeCapError, return_data


def slit_battery(count: int, seed: int = 1, cap: int = 10**5):
    """Random rational slit surfaces with a long orbit inside the cut sheet.

    Yields (surface, N) with 1 < N below the longest return time times the
    slit length, so the dichotomy has a second-branch instance to check.
    """
    rng = random.Random(seed)
    for _ in range(count):
        alpha = Fraction(rng.randrange(1, 10**9), 10**9 + 7)
        slit = Fraction(rng.randrange(1, 2**20), 2**20)
        surf = RationalSurface(alpha, slit)
        try:
            rd = return_data(surf, cap=cap)
        except TimeCapError:
            continue
        reach = float(max(rd.L) * slit)
        if reach <= 1.0001:
            continue
        yield surf, 1 + (reach - 1) * rng.random()


def random_valence_two_graph(rng: random.Random):
    """Multigraph (vertices, edges) in which every vertex has valence >= 2."""
    n = rng.randrange(1, 12)
    vertices = list(range(n))
    edges = []
    for v in vertices:
        while sum((a == v) + (b == v) for a, b in edges) < 2:
            edges.append((v, rng.randrange(n)))
    for _ in range(rng.randrange(0, 6)):
        edges.append((rng.randrange(n), rng.randrange(n)))
    rng.shuffle(edges)
    return vertices, edges
