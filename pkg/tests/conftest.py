import math

import numpy as np
import pytest

SQ2, SQ3, SQ6 = math.sqrt(2), math.sqrt(3), math.sqrt(6)

# post-selected CZ on two vacuum auxiliary wires, success probability 1/9
CZ_POST = np.array([
    [SQ3, 0, 0, 0, 0, -SQ6],
    [0, SQ3, 0, -SQ6, 0, 0],
    [0, 0, SQ3, 0, SQ6, 0],
    [0, SQ6, 0, SQ3, 0, 0],
    [0, 0, -SQ6, 0, SQ3, 0],
    [-SQ6, 0, 0, 0, 0, -SQ3],
]) / 3


def heralded_cz() -> np.ndarray:
    """Heralded CZ on two single-photon auxiliary wires, success probability 2/27.

    Entries (5, 2) and (6, 4) carry sqrt(3 + sqrt 6) / 3; with sqrt(3 - sqrt 6)
    there, as sometimes printed, the matrix is not unitary.
    """
    p = math.sqrt(3 + SQ6) / 3
    m = math.sqrt(3 - SQ6) / 3
    b = math.sqrt(3 + SQ6) / (3 * SQ2)
    c = math.sqrt(1 / 6 - 1 / (3 * SQ6))
    k = np.array([
        [-1 / 3, -SQ2 / 3, SQ2 / 3, 2 / 3],
        [SQ2 / 3, -1 / 3, -2 / 3, SQ2 / 3],
        [-p, m, -b, c],
        [-m, -p, -c, -b],
    ])
    u = np.eye(6)
    idx = [1, 3, 4, 5]
    u[np.ix_(idx, idx)] = k
    return u


CZ_HERALDED = heralded_cz()


def random_unitary(m: int, rng: np.random.Generator, real: bool = False) -> np.ndarray:
    a = rng.normal(size=(m, m))
    if not real:
        a = a + 1j * rng.normal(size=(m, m))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
