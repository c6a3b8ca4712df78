"""Shared instance corpus for property and acceptance tests."""

import numpy as np
import pytest

from pls import BlockRepresentation, family


def random_instances(count, max_m, max_len, seed, min_m=1):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        m = int(rng.integers(min_m, max_m + 1))
        lengths = tuple(int(x) for x in rng.integers(1, max_len + 1, size=m))
        origin = int(rng.integers(1, 5)) if rng.random() < 0.3 else 0
        out.append(BlockRepresentation(lengths, origin=origin))
    return out


def standard_corpus():
    instances = [family("ones", m=m) for m in (1, 2, 3, 4, 6, 8, 16, 32)]
    instances += [family("geometric", m=m) for m in (1, 2, 3, 5, 8, 10)]
    instances += [family("cantor", k=k) for k in (1, 2, 3, 4)]
    instances += [
        family("separation", k=2, h=1),
        family("separation", k=2, h=2),
        family("separation", k=2, h=3),
        family("separation", k=3, h=2),
        family("separation", k=4, h=1),
    ]
    instances += [
        BlockRepresentation((5,)),
        BlockRepresentation((5, 9)),
        BlockRepresentation((1, 5, 1)),
        BlockRepresentation((1, 5, 1, 2)),
        BlockRepresentation((1, 4), origin=2),
        BlockRepresentation((3, 1, 2), origin=5),
    ]
    instances += random_instances(20, 32, 8, seed=20260810)
    return instances


@pytest.fixture(scope="session")
def corpus():
    return standard_corpus()


@pytest.fixture(scope="session")
def tree_corpus(corpus):
    return [b for b in corpus if b.m >= 2]
