"""Pure-Python (numpy) versions of the compiled sequence kernels."""
import numpy as np


def _digits(n: int, d: int) -> np.ndarray:
    idx = np.arange(d**n, dtype=np.int64)
    powers = d ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return (idx[:, None] // powers[None, :]) % d


def letter_counts(n: int, d: int) -> np.ndarray:
    digits = _digits(n, d)
    return np.stack([(digits == a).sum(axis=1) for a in range(d)], axis=1).astype(np.int64)


def count_keys(n: int, d: int) -> np.ndarray:
    weight = (n + 1) ** np.arange(d - 1, -1, -1, dtype=np.int64)
    return letter_counts(n, d) @ weight

