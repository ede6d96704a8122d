"""CPTP maps in Kraus form, dilations, complements and standard constructors.

Kraus operators are stored stacked as a complex array of shape
``(num_kraus, dim_out, dim_in)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import product as iproduct
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import BadDistribution, DimensionMismatch, InvalidChannel
from .qmath import (
    DensityOperator,
    _prod,
    as_matrix,
    check_cap,
    eig_hermitian,
    maximally_entangled,
    permutation_operator,
    random_isometry,
    trace_distance,
)

COMPLETENESS_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """Kraus representation ``rho -> sum_k K_k rho K_k^dag``.

    ``in_dims`` / ``out_dims`` declare tensor factorizations; a two-sender
    channel has ``in_dims == (d_A', d_B')``.
    """

    kraus: np.ndarray
    in_dims: tuple[int, ...] = ()
    out_dims: tuple[int, ...] = ()
    name: str = ""

    def __post_init__(self):
        k = np.asarray(self.kraus, dtype=complex)
        if k.ndim == 2:
            k = k[None]
        if k.ndim != 3 or k.shape[0] == 0:
            raise InvalidChannel("kraus must be a non-empty list of matrices")
        if not np.all(np.isfinite(k)):
            raise InvalidChannel("non-finite Kraus entries")
        _, dout, din = k.shape
        check_cap(din, dout)
        in_dims = tuple(int(x) for x in self.in_dims) or (din,)
        out_dims = tuple(int(x) for x in self.out_dims) or (dout,)
        if _prod(in_dims) != din or _prod(out_dims) != dout:
            raise DimensionMismatch(f"declared dims {in_dims}->{out_dims} do not match Kraus shape {dout}x{din}")
        gram = np.einsum("kai,kaj->ij", k.conj(), k)
        err = np.max(np.abs(gram - np.eye(din)))
        if err > COMPLETENESS_TOL:
            raise InvalidChannel(f"sum K^dag K deviates from identity by {err:.3e}")
        object.__setattr__(self, "kraus", k)
        object.__setattr__(self, "in_dims", in_dims)
        object.__setattr__(self, "out_dims", out_dims)

    @property
    def dim_in(self) -> int:
        return self.kraus.shape[2]

    @property
    def dim_out(self) -> int:
        return self.kraus.shape[1]

    @property
    def num_kraus(self) -> int:
        return self.kraus.shape[0]

    def __call__(self, rho):
        return apply_channel(self, rho)


@dataclass(frozen=True, eq=False)
class Isometry:
    """Stinespring isometry ``A -> B E`` (B most significant)."""

    matrix: np.ndarray
    dim_in: int
    dim_b: int
    env_dim: int

    @property
    def dim_out(self) -> int:
        return self.dim_b * self.env_dim

    def apply(self, mat) -> np.ndarray:
        v = self.matrix
        m = as_matrix(mat)
        return v @ m @ v.conj().T if m.ndim == 2 else v @ m


def apply_kraus(kraus: np.ndarray, mat: np.ndarray) -> np.ndarray:
    """Raw ``sum_k K mat K^dag`` without validation."""
    return np.einsum("kab,bc,kdc->ad", kraus, mat, kraus.conj(), optimize=True)


def apply_channel(ch: QuantumChannel, rho) -> DensityOperator:
    m = as_matrix(rho)
    if m.shape != (ch.dim_in, ch.dim_in):
        raise DimensionMismatch(f"state of dim {m.shape[0]} fed to channel with dim_in {ch.dim_in}")
    out = apply_kraus(ch.kraus, m)
    return DensityOperator.from_matrix((out + out.conj().T) / 2, ch.out_dims)


def stinespring_dilation(ch: QuantumChannel) -> Isometry:
    """``V = sum_k K_k (x) |k>^E``."""
    k = ch.kraus
    v = k.transpose(1, 0, 2).reshape(ch.dim_out * ch.num_kraus, ch.dim_in)
    return Isometry(v, ch.dim_in, ch.dim_out, ch.num_kraus)


def complementary_channel(ch: QuantumChannel) -> QuantumChannel:
    """Map to the environment, ``Tr_B V rho V^dag``; env basis follows Kraus order."""
    return QuantumChannel(ch.kraus.transpose(1, 0, 2), ch.in_dims, (ch.num_kraus,), f"{ch.name}^c")


# constructors --------------------------------------------------------------

def shift_operator(d: int, k: int) -> np.ndarray:
    """X(k) = sum_s |s><s+k|."""
    x = np.zeros((d, d), dtype=complex)
    s = np.arange(d)
    x[s, (s + k) % d] = 1.0
    return x


def phase_operator(d: int, l: int) -> np.ndarray:
    """Z(l) = sum_s exp(2 pi i s l / d) |s><s|."""
    return np.diag(np.exp(2j * np.pi * np.arange(d) * l / d))


def make_generalized_pauli(d: int) -> list[np.ndarray]:
    """The d^2 operators U_{l d + k} = Z(l) X(k)."""
    if d < 1:
        raise ValueError("d must be positive")
    return [phase_operator(d, l) @ shift_operator(d, k) for l in range(d) for k in range(d)]


def validate_distribution(p, size: int | None = None, tol: float = 1e-12) -> np.ndarray:
    p = np.asarray(p, dtype=float).ravel()
    if size is not None and p.size != size:
        raise BadDistribution(f"expected {size} probabilities, got {p.size}")
    if p.size == 0 or not np.all(np.isfinite(p)) or np.any(p < 0):
        raise BadDistribution("probabilities must be finite and non-negative")
    if abs(p.sum() - 1.0) > tol:
        raise BadDistribution(f"probabilities sum to {p.sum()!r}, not 1")
    return p


def identity_channel(dims: int | Sequence[int]) -> QuantumChannel:
    dims = (dims,) if isinstance(dims, (int, np.integer)) else tuple(dims)
    d = _prod(dims)
    return QuantumChannel(np.eye(d)[None], dims, dims, "identity")


def make_completely_dephasing(d: int) -> QuantumChannel:
    k = np.zeros((d, d, d), dtype=complex)
    k[np.arange(d), np.arange(d), np.arange(d)] = 1.0
    return QuantumChannel(k, (d,), (d,), "dephasing")


def make_depolarizing(d: int, q: float = 1.0) -> QuantumChannel:
    """``rho -> (1-q) rho + q Tr(rho) I/d`` via a uniform Pauli twirl."""
    if not 0.0 <= q <= 1.0:
        raise BadDistribution("depolarizing parameter must lie in [0, 1]")
    paulis = np.array(make_generalized_pauli(d))
    weights = np.full(d * d, q / (d * d))
    weights[0] += 1.0 - q
    keep = weights > 0
    return QuantumChannel(np.sqrt(weights[keep])[:, None, None] * paulis[keep], (d,), (d,), "depolarizing")


def make_collective_phase_flip(d: int, p) -> QuantumChannel:
    """Two-sender channel with Kraus ops sqrt(p_k) Z(k) (x) Z(k); zero-weight terms dropped."""
    p = validate_distribution(p, d)
    ks = [np.sqrt(pk) * np.kron(phase_operator(d, k), phase_operator(d, k)) for k, pk in enumerate(p) if pk > 0]
    return QuantumChannel(np.array(ks), (d, d), (d, d), "phase-flip")


def make_cq_channel(states: Sequence) -> QuantumChannel:
    """``rho -> sum_x <x|rho|x> sigma_x`` for the given output states."""
    mats = [as_matrix(s) for s in states]
    dout = mats[0].shape[0]
    din = len(mats)
    ks = []
    for x, s in enumerate(mats):
        w, v = eig_hermitian(s)
        for j in range(dout):
            if w[j] > 1e-14:
                k = np.zeros((dout, din), dtype=complex)
                k[:, x] = np.sqrt(w[j]) * v[:, j]
                ks.append(k)
    return QuantumChannel(np.array(ks), (din,), (dout,), "cq")


def random_channel(dim_in: int, dim_out: int, rng: np.random.Generator, num_kraus: int = 2,
                   in_dims: Sequence[int] = ()) -> QuantumChannel:
    """Channel from a Haar-random isometry into ``dim_out * num_kraus``."""
    v = random_isometry(dim_in, dim_out * num_kraus, rng)
    k = v.reshape(dim_out, num_kraus, dim_in).transpose(1, 0, 2)
    return QuantumChannel(k, tuple(in_dims), (dim_out,), "random")


def compose(outer: QuantumChannel, inner: QuantumChannel) -> QuantumChannel:
    """``outer o inner``."""
    if outer.dim_in != inner.dim_out:
        raise DimensionMismatch("composition dims do not chain")
    k = np.einsum("iab,jbc->ijac", outer.kraus, inner.kraus).reshape(-1, outer.dim_out, inner.dim_in)
    return QuantumChannel(k, inner.in_dims, outer.out_dims, f"{outer.name}o{inner.name}")


def tensor_channels(a: QuantumChannel, b: QuantumChannel) -> QuantumChannel:
    check_cap(a.dim_in * b.dim_in, a.dim_out * b.dim_out)
    k = np.array([np.kron(x, y) for x, y in iproduct(a.kraus, b.kraus)])
    return QuantumChannel(k, a.in_dims + b.in_dims, a.out_dims + b.out_dims, f"{a.name}x{b.name}")


def tensor_power_channel(ch: QuantumChannel, n: int) -> QuantumChannel:
    """All n-fold Kronecker products of the Kraus list."""
    if n < 1:
        raise ValueError("n must be >= 1")
    check_cap(ch.dim_in**n, ch.dim_out**n)
    out = ch
    for _ in range(n - 1):
        out = tensor_channels(out, ch)
    return out


def mac_tensor_power(ch: QuantumChannel, n: int) -> QuantumChannel:
    """n uses of a two-sender channel, inputs regrouped as (A'^n, B'^n)."""
    if len(ch.in_dims) != 2:
        raise DimensionMismatch("expected a two-sender channel")
    da, db = ch.in_dims
    pw = tensor_power_channel(ch, n)
    # interleaved (A1 B1 A2 B2 ...) <- grouped (A1 A2 ... B1 B2 ...)
    dims_grouped = [da] * n + [db] * n
    perm = [x for i in range(n) for x in (i, n + i)]
    p = permutation_operator(dims_grouped, perm)
    k = np.einsum("kab,bc->kac", pw.kraus, p)
    return QuantumChannel(k, (da**n, db**n), (ch.dim_out**n,), f"{ch.name}^{n}")


def choi_matrix(ch: QuantumChannel) -> np.ndarray:
    """``(I (x) N)(Phi)`` with the reference factor first."""
    phi = maximally_entangled(ch.dim_in).amplitudes
    k = np.einsum("kab,rb->kra", ch.kraus, phi.reshape(ch.dim_in, ch.dim_in)).reshape(ch.num_kraus, -1)
    return k.T @ k.conj()


def channels_equal(a: QuantumChannel, b: QuantumChannel, tol: float = 1e-9) -> bool:
    if (a.dim_in, a.dim_out) != (b.dim_in, b.dim_out):
        return False
    return trace_distance(choi_matrix(a), choi_matrix(b)) <= tol


def is_generalized_dephasing(ch: QuantumChannel, tol: float = 1e-9) -> bool:
    """True when every computational projector |i><i| is a fixed point."""
    if ch.dim_in != ch.dim_out:
        return False
    for i in range(ch.dim_in):
        e = np.zeros((ch.dim_in, ch.dim_in), dtype=complex)
        e[i, i] = 1.0
        if np.max(np.abs(apply_kraus(ch.kraus, e) - e)) > tol:
            return False
    return True


# serialization -------------------------------------------------------------

def channel_to_dict(ch: QuantumChannel) -> dict:
    return {
        "dim_in": ch.dim_in,
        "dim_out": ch.dim_out,
        "in_dims": list(ch.in_dims),
        "kraus": [[[[float(z.real), float(z.imag)] for z in row] for row in k] for k in ch.kraus],
    }


def channel_from_dict(doc: dict) -> QuantumChannel:
    try:
        din, dout = int(doc["dim_in"]), int(doc["dim_out"])
        kraus = np.array(doc["kraus"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidChannel(f"malformed channel document: {exc}") from exc
    if kraus.ndim != 4 or kraus.shape[1:] != (dout, din, 2):
        raise InvalidChannel(f"kraus array has shape {kraus.shape}, expected (k, {dout}, {din}, 2)")
    in_dims = doc.get("in_dims")
    if not in_dims:
        r = math.isqrt(din)
        in_dims = (r, r) if r * r == din and r > 1 else (din,)
    return QuantumChannel(kraus[..., 0] + 1j * kraus[..., 1], tuple(in_dims), (dout,), doc.get("name", "file"))


def load_channel(path: str | Path) -> QuantumChannel:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidChannel(f"{path}: not valid JSON ({exc})") from exc
    return channel_from_dict(doc)


def save_channel(ch: QuantumChannel, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(channel_to_dict(ch), fh, indent=1)
