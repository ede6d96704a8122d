"""Dense linear algebra and quantum-state primitives.

Index convention used everywhere in the package: in a tensor product the
left factor is the most significant, i.e. composite index
``i_left * dim_right + i_right``.  This is what ``numpy.kron`` and a
row-major ``reshape`` both produce.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionCap,
    DimensionMismatch,
    FactorError,
    InvalidState,
    NotHermitian,
)

DIM_CAP = 2**20
HERM_TOL = 1e-9
TRACE_TOL = 1e-9
PSD_TOL = 1e-9


def _prod(xs: Iterable[int]) -> int:
    return int(reduce(lambda a, b: a * b, xs, 1))


def check_cap(*dims: int) -> None:
    for d in dims:
        if d > DIM_CAP:
            raise DimensionCap(f"dimension {d} exceeds cap {DIM_CAP}")


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, positive, unit-trace matrix with a declared factorization.

    ``dims`` lists the factor dimensions, left factor most significant.
    ``repaired`` is set when tiny negative eigenvalues were clipped by
    :meth:`from_matrix`.
    """

    mat: np.ndarray
    dims: tuple[int, ...] = ()
    repaired: bool = False

    def __post_init__(self):
        mat = np.asarray(self.mat, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise InvalidState(f"expected a square matrix, got shape {mat.shape}")
        dims = tuple(int(d) for d in self.dims) or (mat.shape[0],)
        if _prod(dims) != mat.shape[0]:
            raise FactorError(f"factor dims {dims} do not multiply to {mat.shape[0]}")
        if not np.all(np.isfinite(mat)):
            raise InvalidState("non-finite entries")
        if np.max(np.abs(mat - mat.conj().T), initial=0.0) > HERM_TOL:
            raise NotHermitian("density matrix is not Hermitian")
        if abs(np.trace(mat).real - 1.0) > TRACE_TOL:
            raise InvalidState(f"trace {np.trace(mat).real!r} is not 1")
        object.__setattr__(self, "mat", mat)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def from_matrix(cls, m, dims: Sequence[int] = (), repair: bool = True) -> "DensityOperator":
        """Validate ``m`` fully, including positivity.

        Eigenvalues in ``[-PSD_TOL, 0)`` are clipped and the state is
        renormalized; anything more negative raises :class:`InvalidState`.
        """
        m = np.asarray(m, dtype=complex)
        if np.max(np.abs(m - m.conj().T), initial=0.0) > HERM_TOL:
            raise NotHermitian("density matrix is not Hermitian")
        m = (m + m.conj().T) / 2
        w, v = np.linalg.eigh(m)
        if w[0] < -PSD_TOL:
            raise InvalidState(f"minimum eigenvalue {w[0]:.3e} below tolerance")
        repaired = False
        if w[0] < 0 and repair:
            w = np.clip(w, 0.0, None)
            w = w / w.sum()
            m = (v * w) @ v.conj().T
            repaired = True
        return cls(m, tuple(dims), repaired)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.mat if dtype is None else self.mat.astype(dtype)


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray
    dims: tuple[int, ...] = ()

    def __post_init__(self):
        psi = np.asarray(self.amplitudes, dtype=complex).ravel()
        if abs(np.linalg.norm(psi) - 1.0) > 1e-12:
            raise InvalidState(f"state vector norm {np.linalg.norm(psi)!r} is not 1")
        dims = tuple(int(d) for d in self.dims) or (psi.size,)
        if _prod(dims) != psi.size:
            raise FactorError(f"factor dims {dims} do not multiply to {psi.size}")
        object.__setattr__(self, "amplitudes", psi)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> DensityOperator:
        psi = self.amplitudes
        return DensityOperator(np.outer(psi, psi.conj()), self.dims)


def as_matrix(x) -> np.ndarray:
    if isinstance(x, DensityOperator):
        return x.mat
    if isinstance(x, PureState):
        return x.density().mat
    return np.asarray(x, dtype=complex)


def tensor(a, b) -> np.ndarray:
    """Kronecker product, left factor most significant."""
    a, b = as_matrix(a), as_matrix(b)
    a2 = a if a.ndim == 2 else a.reshape(-1, 1)
    b2 = b if b.ndim == 2 else b.reshape(-1, 1)
    check_cap(a2.shape[0] * b2.shape[0], a2.shape[1] * b2.shape[1])
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("non-finite entries")
    return np.kron(a, b)


def kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(tensor, mats)


def tensor_states(*states: DensityOperator) -> DensityOperator:
    mat = kron_all([s.mat for s in states])
    dims = sum((s.dims for s in states), ())
    return DensityOperator(mat, dims)


def _ptrace_array(mat: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    dims = list(dims)
    n = len(dims)
    keep = sorted(keep)
    drop = [i for i in range(n) if i not in keep]
    t = mat.reshape(dims + dims)
    perm = keep + drop
    t = t.transpose(perm + [n + i for i in perm])
    dk = _prod(dims[i] for i in keep)
    dd = _prod(dims[i] for i in drop)
    return np.einsum("ijkj->ik", t.reshape(dk, dd, dk, dd))


def partial_trace(rho, keep: Iterable[int], dims: Sequence[int] | None = None):
    """Reduced state on the factors listed in ``keep`` (kept in their original order).

    ``rho`` may be a :class:`DensityOperator` (dims taken from it) or a raw
    matrix together with ``dims``; the return type follows the input.
    """
    keep = sorted(set(int(k) for k in keep))
    if isinstance(rho, DensityOperator):
        dims = rho.dims
        mat = rho.mat
    else:
        if dims is None:
            raise FactorError("a raw matrix needs explicit subsystem dims")
        mat = np.asarray(rho, dtype=complex)
    dims = tuple(dims)
    if _prod(dims) != mat.shape[0]:
        raise FactorError(f"factor dims {dims} do not multiply to {mat.shape[0]}")
    if any(k < 0 or k >= len(dims) for k in keep):
        raise FactorError(f"keep {keep} not within {len(dims)} declared subsystems")
    reduced = _ptrace_array(mat, dims, keep)
    if isinstance(rho, DensityOperator):
        return DensityOperator(reduced, tuple(dims[k] for k in keep))
    return reduced


def permute_subsystems(mat: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors of an operator (or a state vector) so factor
    ``perm[i]`` of the input becomes factor ``i`` of the output."""
    dims = list(dims)
    n = len(dims)
    perm = list(perm)
    if mat.ndim == 1:
        return mat.reshape(dims).transpose(perm).reshape(-1)
    t = mat.reshape(dims + dims).transpose(perm + [n + p for p in perm])
    d = _prod(dims)
    return t.reshape(d, d)


def permutation_operator(dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Unitary P with P v == permute_subsystems(v, dims, perm) for every vector v."""
    d = _prod(dims)
    idx = np.arange(d).reshape(list(dims)).transpose(list(perm)).reshape(-1)
    p = np.zeros((d, d), dtype=complex)
    p[np.arange(d), idx] = 1.0
    return p


def _fix_phases(v: np.ndarray) -> np.ndarray:
    for j in range(v.shape[1]):
        col = v[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size:
            ph = col[nz[0]] / abs(col[nz[0]])
            v[:, j] = col / ph
    return v


def eig_hermitian(m, tol: float = HERM_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition with eigenvalues sorted descending.

    Each eigenvector's first non-negligible component is made real positive,
    so decompositions are reproducible.  Exactly diagonal inputs keep the
    computational basis (stable order among equal eigenvalues).
    """
    m = as_matrix(m)
    if np.max(np.abs(m - m.conj().T), initial=0.0) > tol:
        raise NotHermitian("matrix is not Hermitian within tolerance")
    m = (m + m.conj().T) / 2
    diag = np.diag(m).real
    if np.count_nonzero(m - np.diag(np.diag(m))) == 0:
        order = np.argsort(-diag, kind="stable")
        v = np.eye(m.shape[0], dtype=complex)[:, order]
        return diag[order], v
    w, v = np.linalg.eigh(m)
    order = np.argsort(-w, kind="stable")
    return w[order], _fix_phases(v[:, order].copy())


def purify(rho) -> PureState:
    """Purification sum_i sqrt(p_i) |v_i>^A |i>^R with eigenvalues sorted descending."""
    mat = as_matrix(rho)
    p, v = eig_hermitian(mat)
    p = np.clip(p, 0.0, None)
    p = p / p.sum()
    psi = v * np.sqrt(p)[None, :]
    d = mat.shape[0]
    return PureState(psi.reshape(-1) / np.linalg.norm(psi), (d, d))


def trace_distance(a, b) -> float:
    """Trace norm of ``a - b`` (range [0, 2] for states)."""
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")
    diff = a - b
    diff = (diff + diff.conj().T) / 2
    return float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def pure_state_distance(psi: np.ndarray, phi: np.ndarray) -> float:
    """Trace distance between two pure states, 2 sqrt(1 - |<psi|phi>|^2)."""
    f = abs(np.vdot(psi, phi)) ** 2
    return float(2.0 * np.sqrt(max(0.0, 1.0 - f)))


def maximally_mixed(d: int) -> DensityOperator:
    return DensityOperator(np.eye(d, dtype=complex) / d, (d,))


def maximally_entangled(d: int) -> PureState:
    return PureState(np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d), (d, d))


def basis_state(i: int, d: int) -> np.ndarray:
    e = np.zeros(d, dtype=complex)
    e[i] = 1.0
    return e


def diag_state(p: Sequence[float]) -> DensityOperator:
    p = np.asarray(p, dtype=float)
    return DensityOperator(np.diag(p).astype(complex), (p.size,))


# random sampling -----------------------------------------------------------

def random_density(dim: int, rng: np.random.Generator, rank: int | None = None,
                   dims: Sequence[int] = ()) -> DensityOperator:
    """Ginibre-ensemble mixed state G G^dag / Tr."""
    k = dim if rank is None else rank
    g = rng.standard_normal((dim, k)) + 1j * rng.standard_normal((dim, k))
    m = g @ g.conj().T
    m = m / np.trace(m).real
    return DensityOperator((m + m.conj().T) / 2, tuple(dims) or (dim,))


def random_pure(dim: int, rng: np.random.Generator, dims: Sequence[int] = ()) -> PureState:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return PureState(v / np.linalg.norm(v), tuple(dims) or (dim,))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar unitary via QR of a complex Gaussian matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph[None, :]


def random_isometry(dim_in: int, dim_out: int, rng: np.random.Generator) -> np.ndarray:
    if dim_out < dim_in:
        raise DimensionMismatch("isometry needs dim_out >= dim_in")
    return random_unitary(dim_out, rng)[:, :dim_in]


def is_psd(m: np.ndarray, tol: float = PSD_TOL) -> bool:
    m = (m + m.conj().T) / 2
    return bool(np.linalg.eigvalsh(m)[0] >= -tol)


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Independent PCG64 generator for ``(seed, *keys)``, e.g. one per trial index."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *(int(k) for k in keys)]))
