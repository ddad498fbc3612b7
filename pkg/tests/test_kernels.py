import itertools

import numpy as np
import pytest

from unrectify import _kernels
from unrectify._kernels import _pairwise_np


def brute_max_dist(x):
    best = 0.0
    for i, j in itertools.combinations(range(len(x)), 2):
        best = max(best, float(np.linalg.norm(x[i] - x[j])))
    return best


def brute_max_gain(y, x):
    best = 0.0
    for i, j in itertools.combinations(range(len(x)), 2):
        den = np.linalg.norm(x[i] - x[j])
        if den == 0.0:
            continue
        best = max(best, float(np.linalg.norm(y[i] - y[j]) / den))
    return best


@pytest.fixture(params=["numpy", "compiled"])
def kernels(request):
    if request.param == "numpy":
        return _pairwise_np
    if _kernels.BACKEND != "cython":
        pytest.skip("compiled kernels not built")
    from unrectify._kernels import _pairwise_cy

    return _pairwise_cy


class TestMaxPairwiseDist:
    def test_small_cases(self, kernels):
        x = np.array([[0.0, 0.0], [3.0, 4.0], [1.0, 1.0]])
        assert kernels.max_pairwise_dist(x) == pytest.approx(5.0)

    def test_degenerate(self, kernels):
        assert kernels.max_pairwise_dist(np.zeros((1, 3))) == 0.0
        assert kernels.max_pairwise_dist(np.zeros((0, 3))) == 0.0

    def test_against_brute_force(self, kernels):
        rng = np.random.default_rng(1)
        for n in (2, 7, 40, 300):
            x = rng.normal(size=(n, 5))
            assert kernels.max_pairwise_dist(x) == pytest.approx(
                brute_max_dist(x), rel=1e-12
            )


class TestMaxPairGain:
    def test_linear_map_gain(self, kernels):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(60, 4))
        w = rng.normal(size=(3, 4))
        y = x @ w.T
        assert kernels.max_pair_gain(y, x) == pytest.approx(
            brute_max_gain(y, x), rel=1e-12
        )

    def test_duplicate_rows_skipped(self, kernels):
        x = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        y = np.array([[0.0], [5.0], [0.0]])
        # the duplicated x pair is ignored even though outputs differ
        expected = max(5.0 / np.sqrt(2), 0.0 / np.sqrt(2))
        assert kernels.max_pair_gain(y, x) == pytest.approx(expected)

    def test_degenerate(self, kernels):
        assert kernels.max_pair_gain(np.zeros((1, 2)), np.zeros((1, 2))) == 0.0


def test_backends_agree():
    if _kernels.BACKEND != "cython":
        pytest.skip("compiled kernels not built")
    from unrectify._kernels import _pairwise_cy

    rng = np.random.default_rng(3)
    x = rng.normal(size=(200, 6))
    y = rng.normal(size=(200, 9))
    assert _pairwise_cy.max_pairwise_dist(x) == pytest.approx(
        _pairwise_np.max_pairwise_dist(x), rel=1e-12
    )
    assert _pairwise_cy.max_pair_gain(y, x) == pytest.approx(
        _pairwise_np.max_pair_gain(y, x), rel=1e-12
    )
