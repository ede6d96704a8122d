"""Method of types and typical subspaces.

A length-n sequence over an alphabet of size d is identified with its index
in base d, first letter most significant, so sequence ``x`` labels the
product basis vector ``|x_1> (x) ... (x) |x_n>`` under the package's tensor
convention.  Type classes are ordered by count vector, descending
lexicographically: the class of the all-zero sequence comes first.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

from . import kernels
from .channels import validate_distribution
from .entropy import entropy_of_spectrum
from .errors import AlphabetError, DimensionCap
from .qmath import DIM_CAP, DensityOperator, as_matrix, eig_hermitian, kron_all

ENUM_CAP = DIM_CAP
TYPICAL_TOL = 1e-12


@dataclass(frozen=True)
class TypeVector:
    counts: tuple[int, ...]

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def alphabet_size(self) -> int:
        return len(self.counts)

    @property
    def freq(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.n

    def class_size(self) -> int:
        """Multinomial coefficient n! / prod(count!)."""
        out = math.factorial(self.n)
        for c in self.counts:
            out //= math.factorial(c)
        return out

    def log2_prob(self, p) -> float:
        """log2 p^n(x) for any x of this type (``-inf`` if a used letter has p = 0)."""
        total = 0.0
        for c, pa in zip(self.counts, p):
            if c:
                if pa <= 0:
                    return -math.inf
                total += c * math.log2(pa)
        return total

    def is_typical(self, p, delta: float) -> bool:
        return bool(np.all(np.abs(self.freq - np.asarray(p)) <= delta + TYPICAL_TOL))


@dataclass(frozen=True, eq=False)
class TypeClass:
    type: TypeVector
    index: int

    @property
    def size(self) -> int:
        return self.type.class_size()

    def members(self) -> np.ndarray:
        """Sequence indices of this class, ascending."""
        labels, _ = class_structure(self.type.n, self.type.alphabet_size)
        return np.flatnonzero(labels == self.index)


def _check_enum(n: int, d: int) -> None:
    if n < 1 or d < 1:
        raise ValueError("n and alphabet size must be positive")
    if d**n > ENUM_CAP:
        raise DimensionCap(f"{d}^{n} sequences exceed enumeration cap {ENUM_CAP}")


@lru_cache(maxsize=64)
def class_structure(n: int, d: int) -> tuple[np.ndarray, tuple[TypeVector, ...]]:
    """Per-sequence class label and the ordered list of types."""
    _check_enum(n, d)
    keys = kernels.count_keys(n, d)
    uniq, inverse = np.unique(-keys, return_inverse=True)
    base = n + 1
    types = []
    for key in -uniq:
        key = int(key)
        counts = [(key // base ** (d - 1 - a)) % base for a in range(d)]
        types.append(TypeVector(tuple(counts)))
    labels = inverse.reshape(-1)
    labels.setflags(write=False)
    return labels, tuple(types)


def type_of_sequence(x: Sequence[int], alphabet_size: int) -> TypeVector:
    x = list(x)
    if any(not 0 <= int(a) < alphabet_size for a in x):
        raise AlphabetError(f"letters of {x} not in range [0, {alphabet_size})")
    return TypeVector(tuple(int(c) for c in np.bincount(np.asarray(x, dtype=int), minlength=alphabet_size)))


def enumerate_type_classes(n: int, alphabet_size: int) -> list[TypeClass]:
    _, types = class_structure(n, alphabet_size)
    return [TypeClass(t, i) for i, t in enumerate(types)]


@dataclass(frozen=True, eq=False)
class TypicalSet:
    n: int
    delta: float
    p: np.ndarray
    types: tuple[TypeVector, ...]
    indices: np.ndarray

    @property
    def mass(self) -> float:
        """p^n probability of the set."""
        return float(sum(t.class_size() * 2.0 ** t.log2_prob(self.p) for t in self.types))


def typical_types(p, n: int, delta: float) -> list[TypeVector]:
    _, types = class_structure(n, len(p))
    return [t for t in types if t.is_typical(p, delta)]


def typical_mask(p, n: int, delta: float) -> np.ndarray:
    labels, types = class_structure(n, len(p))
    ok = np.array([t.is_typical(p, delta) for t in types])
    return ok[labels]


def typical_set(p, n: int, delta: float) -> TypicalSet:
    p = validate_distribution(p, tol=1e-9)
    return TypicalSet(n, delta, p, tuple(typical_types(p, n, delta)),
                      np.flatnonzero(typical_mask(p, n, delta)))


def _basis_power(v: np.ndarray, n: int) -> np.ndarray | None:
    """v^{(x) n}, or None when v is the identity."""
    if np.array_equal(v, np.eye(v.shape[0])):
        return None
    return kron_all([v] * n)


def _project(mask: np.ndarray, w: np.ndarray | None) -> np.ndarray:
    if w is None:
        return np.diag(mask.astype(complex))
    cols = w[:, mask]
    return cols @ cols.conj().T


def type_projector(t: TypeVector, basis: np.ndarray | None = None) -> np.ndarray:
    """Projector onto span{|x^n> : x^n of type t}, in ``basis`` (columns) if given."""
    labels, types = class_structure(t.n, t.alphabet_size)
    mask = labels == types.index(t)
    w = None if basis is None else _basis_power(np.asarray(basis, dtype=complex), t.n)
    return _project(mask, w)


@dataclass(frozen=True, eq=False)
class TypicalProjector:
    """Typical projector of ``rho`` in its sorted eigenbasis.

    ``mask`` marks typical sequences in eigen-index coordinates; ``matrix``
    is the projector in computational coordinates.
    """

    n: int
    delta: float
    spectrum: np.ndarray
    basis: np.ndarray
    types: tuple[TypeVector, ...]
    mask: np.ndarray

    @property
    def rank(self) -> int:
        return int(self.mask.sum())

    @cached_property
    def basis_power(self) -> np.ndarray | None:
        return _basis_power(self.basis, self.n)

    @cached_property
    def matrix(self) -> np.ndarray:
        return _project(self.mask, self.basis_power)


def typical_projector(rho, n: int, delta: float) -> TypicalProjector:
    m = as_matrix(rho)
    d = m.shape[0]
    _check_enum(n, d)
    p, v = eig_hermitian(m)
    p = np.clip(p, 0.0, None)
    p = p / p.sum()
    types = tuple(typical_types(p, n, delta))
    return TypicalProjector(n, delta, p, v, types, typical_mask(p, n, delta))


# property verification -------------------------------------------------------

def verify_typical_properties(rho, n: int, delta: float, eps: float) -> dict:
    """Exact evaluation of the typical-subspace properties at fixed (n, delta).

    All quantities follow from the type structure: eigenvalues of
    ``Pi rho^n Pi`` are ``p^n(x)`` on typical x and zero elsewhere.
    """
    tp = typical_projector(rho, n, delta)
    p = tp.spectrum
    h = entropy_of_spectrum(p)
    rows = [(t, t.class_size(), t.log2_prob(p)) for t in tp.types]
    mass = float(sum(size * 2.0**lp for _, size, lp in rows))
    log_eigs = [lp / n for _, _, lp in rows]
    rank = sum(size for _, size, _ in rows)
    report: dict = {"n": n, "delta": delta, "eps": eps, "entropy": h, "rank": rank,
                    "types": [list(t.counts) for t, _, _ in rows]}
    report["q1"] = {"value": mass, "bound": 1.0 - eps, "margin": mass - (1.0 - eps),
                    "pass": mass >= 1.0 - eps}
    if not rows:
        report["q2"] = {"value": None, "bound": None, "margin": None, "tightest_c": None, "pass": True}
        report["q3"] = {"value": 0, "bound": None, "margin": None, "tightest_c": None, "pass": True}
        report["cc7"] = {"value": None, "bound": None, "margin": None, "eta": None, "pass": True}
        report["pass"] = True
        return report
    finite = all(np.isfinite(log_eigs))
    if finite:
        lo, hi = min(log_eigs), max(log_eigs)
        c = max((-lo - h) / delta, (h + hi) / delta, 0.0)
        q2_ok = (lo >= -(h + c * delta) - 1e-12) and (hi <= -(h - c * delta) + 1e-12)
        report["q2"] = {"value": [2.0 ** (n * lo), 2.0 ** (n * hi)],
                        "bound": [2.0 ** (-n * (h + c * delta)), 2.0 ** (-n * (h - c * delta))],
                        "margin": min(lo + h + c * delta, -h + c * delta - hi) * n,
                        "tightest_c": c, "pass": bool(q2_ok)}
        log_rank = math.log2(rank)
        q3_bound = n * (h + c * delta)
        report["q3"] = {"value": rank, "bound": 2.0**q3_bound, "margin": q3_bound - log_rank,
                        "tightest_c": c, "pass": log_rank <= q3_bound + 1e-12}
    else:
        # a typical sequence carries zero probability: no finite c exists
        report["q2"] = {"value": None, "bound": None, "margin": None, "tightest_c": None, "pass": False}
        report["q3"] = {"value": rank, "bound": None, "margin": None, "tightest_c": None, "pass": False}
    dims_log = [math.log2(size) / n for _, size, _ in rows]
    eta = max(h - x for x in dims_log)
    min_dim = min(size for _, size, _ in rows)
    report["cc7"] = {"value": min_dim, "bound": 2.0 ** (n * (h - eta)),
                     "margin": [x - (h - eta) for x in dims_log], "eta": eta,
                     "pass": math.log2(min_dim) >= n * (h - eta) - 1e-12}
    report["pass"] = bool(report["q2"]["pass"] and report["q3"]["pass"] and report["cc7"]["pass"])
    return report


def verify_typicality_suite(rho, ns: Sequence[int], delta: float, eps: float) -> dict:
    """Reports for several n plus whether Tr rho^n Pi is non-decreasing along ``ns``."""
    reports = [verify_typical_properties(rho, n, delta, eps) for n in ns]
    masses = [r["q1"]["value"] for r in reports]
    monotone = all(b >= a - 1e-12 for a, b in zip(masses, masses[1:]))
    return {"delta": delta, "eps": eps, "ns": list(ns), "reports": reports, "q1_values": masses,
            "q1_monotone": monotone, "pass": all(r["pass"] for r in reports)}
