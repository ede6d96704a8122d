import os
import subprocess
import sys
from itertools import product

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from eaqmac import _kernels_py, kernels

CASES = [(1, 2), (3, 2), (4, 3), (2, 5), (6, 2)]


def brute_counts(n, d):
    return np.array([[seq.count(a) for a in range(d)] for seq in product(range(d), repeat=n)])


@pytest.mark.parametrize("n,d", CASES)
class TestAgainstBruteForce:
    def test_letter_counts(self, n, d):
        assert_array_equal(kernels.letter_counts(n, d), brute_counts(n, d))
        assert_array_equal(_kernels_py.letter_counts(n, d), brute_counts(n, d))

    def test_count_keys(self, n, d):
        expected = brute_counts(n, d) @ ((n + 1) ** np.arange(d - 1, -1, -1))
        assert_array_equal(kernels.count_keys(n, d), expected)
        assert_array_equal(_kernels_py.count_keys(n, d), expected)


def test_key_order_matches_lexicographic():
    n, d = 4, 3
    keys = kernels.count_keys(n, d)
    counts = kernels.letter_counts(n, d)
    by_key = sorted({(int(k), tuple(c)) for k, c in zip(keys, counts)}, reverse=True)
    assert [c for _, c in by_key] == sorted({tuple(c) for c in counts}, reverse=True)


def test_backend_flag():
    assert kernels.BACKEND in ("cython", "python")


def test_pure_python_override():
    env = dict(os.environ, EAQMAC_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from eaqmac import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
