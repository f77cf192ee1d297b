import itertools

import numpy as np
import pytest

import maxfilt as mf
from maxfilt.analysis import sample_point


def permutation_matrices(d):
    mats = []
    for perm in itertools.permutations(range(d)):
        m = np.zeros((d, d))
        for i, j in enumerate(perm):
            m[i, j] = 1.0
        mats.append(m)
    return mats


def sign_group(d):
    return mf.Enumerated((np.eye(d), -np.eye(d)))


@pytest.fixture(scope="session")
def property_groups():
    """Ten structurally distinct group instances for the product-property suite."""
    return [
        sign_group(3),
        mf.Enumerated(tuple(permutation_matrices(3))),
        mf.CyclicShift(8),
        mf.FullPermutation(5),
        mf.SignedPermutation(4),
        mf.SignFlips(6),
        mf.FullOrthogonal(3),
        mf.PhaseCircle(3),
        mf.ColumnPermutation(2, 5),
        mf.SlidingWindowShift(2, 3, 4),
    ]


def draw_operand(group, rng):
    return sample_point(group, rng)


def draw_window_template(group, rng):
    """Single-slice tensors double as templates for the sliding-window group."""
    z = np.zeros(group.shape)
    z[:, :, int(rng.integers(group.t))] = rng.standard_normal((group.c, group.w))
    return z
