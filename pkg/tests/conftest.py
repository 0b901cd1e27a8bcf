from fractions import Fraction

import numpy as np
import pytest

from pik.commat import CommMatrix


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def random_stochastic(rng):
    """Factory for random rational row-stochastic matrices up to 6x5."""

    def make(count, max_rows=6, max_cols=5, denom=7):
        out = []
        for _ in range(count):
            a, b = int(rng.integers(1, max_rows + 1)), int(rng.integers(1, max_cols + 1))
            rows = []
            for _ in range(a):
                w = rng.integers(0, denom, size=b)
                if w.sum() == 0:
                    w[rng.integers(b)] = 1
                rows.append([Fraction(int(x), int(w.sum())) for x in w])
            out.append(CommMatrix.from_rows(rows))
        return out

    return make
