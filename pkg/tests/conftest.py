import numpy as np
import pytest

from paircorr import Dataset


def triangle_walk(n):
    """Independent oracle: row-major enumeration of the upper triangle."""
    coords = []
    for y in range(n):
        for x in range(y, n):
            coords.append((y, x))
    return coords


def random_dataset(rng, n, l, special_rows=False):
    """Uniform dataset; optionally plant constant, negated and affine rows."""
    values = rng.random((n, l))
    if special_rows and n >= 4:
        values[1] = 3.25  # constant row
        values[2] = -values[0]  # perfectly anti-correlated
        values[3] = 2.5 * values[0] + 1.0  # affinely related
    return Dataset(values=values)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
