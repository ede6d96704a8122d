"""Desk-scale entanglement-assisted codes: block-Pauli encodings and SRM decoding.

Coordinates.  The input state rho = sum_x p_x |v_x><v_x| is purified as
sum_x sqrt(p_x) |v_x> (x) |x>, so the sender's system uses rho's sorted
eigenbasis and the receiver's reference system B' uses the computational
basis.  A block-Pauli unitary is built in eigen-index coordinates (``U_e``);
on the sender's system it acts as ``V^n U_e V^n^dag``, and its transpose
form acts on B' directly as ``U_e^T``.  Channel-output operators live on
``B^n (x) B'^n`` (output first).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import product as iproduct
from typing import Sequence

import numpy as np

from .capacity import build_theta_single, region_for_inputs
from .channels import (
    QuantumChannel,
    apply_kraus,
    make_generalized_pauli,
    tensor_power_channel,
)
from .entropy import entropy_of_spectrum, mutual_information
from .errors import (
    BadOperands,
    ConsistencyError,
    DegenerateDecoder,
    DimensionCap,
    DimensionMismatch,
)
from .qmath import (
    DensityOperator,
    PureState,
    as_matrix,
    eig_hermitian,
    kron_all,
    maximally_entangled,
    permutation_operator,
    pure_state_distance,
    purify,
    random_density,
    substream,
    trace_distance,
)
from .typicality import TypeClass, class_structure, enumerate_type_classes, typical_projector

CODESIM_CAP = 4096
PINV_TOL = 1e-10
POVM_TOL = 1e-8


def check_codesim_cap(dim_out: int, dim_in: int, n: int) -> None:
    if (dim_out * dim_in) ** n > CODESIM_CAP:
        raise DimensionCap(f"(d_out*d_in)^n = {(dim_out * dim_in) ** n} exceeds {CODESIM_CAP}; reduce n")


# block-Pauli encodings -----------------------------------------------------------

@dataclass(frozen=True)
class BlockPauliIndex:
    """Per-class Pauli index g_alpha in [d_alpha^2] and sign bit b_alpha."""

    g: tuple[int, ...]
    b: tuple[int, ...]


@lru_cache(maxsize=None)
def _paulis(d: int) -> np.ndarray:
    return np.array(make_generalized_pauli(d))


def class_members(classes: Sequence[TypeClass]) -> list[np.ndarray]:
    return [c.members() for c in classes]


def build_block_pauli(idx: BlockPauliIndex, classes: Sequence[TypeClass]) -> np.ndarray:
    """Direct sum over type classes of (-1)^{b_alpha} U_{g_alpha}, in sequence coordinates."""
    if len(idx.g) != len(classes) or len(idx.b) != len(classes):
        raise IndexError(f"index has {len(idx.g)} entries for {len(classes)} classes")
    members = class_members(classes)
    dim = sum(m.size for m in members)
    u = np.zeros((dim, dim), dtype=complex)
    for m, g, b in zip(members, idx.g, idx.b):
        da = m.size
        if not 0 <= g < da * da or b not in (0, 1):
            raise IndexError(f"block index (g={g}, b={b}) out of range for class dimension {da}")
        u[np.ix_(m, m)] = (-1) ** b * _paulis(da)[g]
    return u


def index_space_size(classes: Sequence[TypeClass]) -> int:
    """|S| = prod_alpha d_alpha^2 * 2^a."""
    return math.prod(c.size**2 for c in classes) * 2 ** len(classes)


def iterate_indices(classes: Sequence[TypeClass]):
    sizes = [c.size for c in classes]
    for g in iproduct(*[range(s * s) for s in sizes]):
        for b in iproduct((0, 1), repeat=len(sizes)):
            yield BlockPauliIndex(tuple(g), tuple(b))


def random_index(classes: Sequence[TypeClass], rng: np.random.Generator) -> BlockPauliIndex:
    g = tuple(int(rng.integers(c.size**2)) for c in classes)
    b = tuple(int(x) for x in rng.integers(0, 2, size=len(classes)))
    return BlockPauliIndex(g, b)


# resource state ------------------------------------------------------------------

def resource_decomposition(rho, n: int) -> tuple[np.ndarray, list[np.ndarray]]:
    """Class weights p_alpha and the class-wise maximally entangled vectors Phi_alpha."""
    p, v = eig_hermitian(as_matrix(rho))
    p = np.clip(p, 0.0, None)
    p = p / p.sum()
    d = p.size
    labels, types = class_structure(n, d)
    vn = kron_all([v] * n)
    weights, vecs = [], []
    for a, t in enumerate(types):
        m = np.flatnonzero(labels == a)
        weights.append(2.0 ** t.log2_prob(p) * m.size)
        mat = np.zeros((d**n, d**n), dtype=complex)
        mat[:, m] = vn[:, m]
        vecs.append(mat.reshape(-1) / np.sqrt(m.size))
    return np.asarray(weights), vecs


def build_entangled_resource(rho, n: int, check: bool = True) -> PureState:
    """phi^{(x) n} on (A'^n, B'^n); optionally checks it equals sum_alpha sqrt(p_alpha) Phi_alpha."""
    rho_m = as_matrix(rho)
    d = rho_m.shape[0]
    if d ** (2 * n) > CODESIM_CAP:
        raise DimensionCap(f"d^(2n) = {d ** (2 * n)} exceeds {CODESIM_CAP}")
    phi = purify(rho_m).amplitudes
    vec = kron_all([phi] * n) if n > 1 else phi
    perm = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))
    vec = vec.reshape([d] * (2 * n)).transpose(perm).reshape(-1)
    if check:
        w, phis = resource_decomposition(rho_m, n)
        target = sum(np.sqrt(wa) * f for wa, f in zip(w, phis))
        overlap = abs(np.vdot(target, vec)) ** 2
        if overlap < 1 - 1e-10:
            raise ConsistencyError(f"resource overlap {overlap} with its type decomposition")
    return PureState(vec, (d**n, d**n))


# code setup --------------------------------------------------------------------------

@dataclass(eq=False)
class CodeSetup:
    """Everything derived from (N, rho, n, delta) that codebooks share."""

    channel: QuantumChannel
    rho: np.ndarray
    n: int
    delta: float
    delta_theta: float | None = None

    def __post_init__(self):
        self.rho = as_matrix(self.rho)
        self.d = self.rho.shape[0]
        if self.channel.dim_in != self.d:
            raise DimensionMismatch(f"state dim {self.d} vs channel dim_in {self.channel.dim_in}")
        self.dout = self.channel.dim_out
        check_codesim_cap(self.dout, self.d, self.n)
        self.delta_theta = self.delta if self.delta_theta is None else self.delta_theta
        p, v = eig_hermitian(self.rho)
        p = np.clip(p, 0.0, None)
        self.p = p / p.sum()
        self.v = v
        self.classes = enumerate_type_classes(self.n, self.d)
        self.members = class_members(self.classes)
        self.class_weights = np.array([c.size * 2.0 ** c.type.log2_prob(self.p) for c in self.classes])
        self.vn = kron_all([v] * self.n)
        self.chn = tensor_power_channel(self.channel, self.n)
        self.psi = build_entangled_resource(self.rho, self.n)
        self.dn = self.d**self.n
        self.don = self.dout**self.n

    # states

    def sender_unitary(self, u_e: np.ndarray) -> np.ndarray:
        return self.vn @ u_e @ self.vn.conj().T

    def encoded_vector(self, u_e: np.ndarray) -> np.ndarray:
        """Amplitudes T[k, b, r] of the dilated output, Kraus branch k."""
        psi = self.psi.amplitudes.reshape(self.dn, self.dn)
        encoded = self.sender_unitary(u_e) @ psi
        return np.einsum("kba,ar->kbr", self.chn.kraus, encoded)

    def encoded_state(self, u_e: np.ndarray) -> np.ndarray:
        t = self.encoded_vector(u_e).reshape(self.chn.num_kraus, -1)
        m = t.T @ t.conj()
        return (m + m.conj().T) / 2

    @cached_property
    def theta_n(self) -> np.ndarray:
        return self.encoded_state(np.eye(self.dn, dtype=complex))

    def transpose_form(self, u_e: np.ndarray) -> np.ndarray:
        w = np.kron(np.eye(self.don), u_e.T)
        return w @ self.theta_n @ w.conj().T

    # projectors

    @cached_property
    def theta1(self) -> np.ndarray:
        """Single-copy theta on (B, B')."""
        th = build_theta_single(self.channel, DensityOperator.from_matrix(self.rho)).state
        # build_theta_single orders (reference, output); swap to (output, reference)
        p = permutation_operator((self.d, self.dout), (1, 0))
        return p @ th.state.mat @ p.conj().T

    @cached_property
    def pi_output(self) -> np.ndarray:
        out = apply_kraus(self.channel.kraus, self.rho)
        return typical_projector(out, self.n, self.delta).matrix

    @cached_property
    def pi_reference(self) -> np.ndarray:
        return typical_projector(np.diag(self.p), self.n, self.delta).matrix

    @cached_property
    def pi(self) -> np.ndarray:
        return np.kron(self.pi_output, self.pi_reference)

    @cached_property
    def pi_theta(self) -> np.ndarray:
        """Typical projector of theta^{(x) n} reordered to B^n B'^n."""
        tp = typical_projector(self.theta1, self.n, self.delta_theta).matrix
        dims = [self.dout, self.d] * self.n
        perm = list(range(0, 2 * self.n, 2)) + list(range(1, 2 * self.n, 2))
        p = permutation_operator(dims, perm)
        return p @ tp @ p.conj().T

    def message_projector(self, u_e: np.ndarray) -> np.ndarray:
        w = np.kron(np.eye(self.don), u_e.T)
        return w @ self.pi_theta @ w.conj().T

    @cached_property
    def average_closed_form(self) -> np.ndarray:
        """sum_alpha p_alpha N^n(pi_alpha) (x) pi_alpha."""
        out = np.zeros((self.don * self.dn, self.don * self.dn), dtype=complex)
        for w, m in zip(self.class_weights, self.members):
            if w == 0:
                continue
            proj = np.zeros(self.dn)
            proj[m] = 1.0 / m.size
            sender = self.vn @ np.diag(proj) @ self.vn.conj().T
            out += w * np.kron(apply_kraus(self.chn.kraus, sender), np.diag(proj))
        return out

    def block_pauli(self, idx: BlockPauliIndex) -> np.ndarray:
        return build_block_pauli(idx, self.classes)


def encoded_output_state(setup: CodeSetup, idx: BlockPauliIndex, tol: float = 1e-9) -> DensityOperator:
    """sigma_s on B^n B'^n, cross-checked against the transpose form."""
    u = setup.block_pauli(idx)
    direct = setup.encoded_state(u)
    other = setup.transpose_form(u)
    gap = trace_distance(direct, other)
    if gap > tol:
        raise ConsistencyError(f"transpose form differs by {gap:.3e}")
    return DensityOperator.from_matrix(direct, (setup.don, setup.dn))


def average_output_state(setup: CodeSetup, exact_limit: int = 5000, samples: int = 2000,
                         seed: int = 0) -> dict:
    """Average of sigma_s over S (exact when |S| <= exact_limit), versus the closed form."""
    size = index_space_size(setup.classes)
    avg = np.zeros_like(setup.average_closed_form)
    if size <= exact_limit:
        count = 0
        for idx in iterate_indices(setup.classes):
            avg += setup.encoded_state(setup.block_pauli(idx))
            count += 1
        mode = "exact"
    else:
        rng = substream(seed, 17)
        for _ in range(samples):
            avg += setup.encoded_state(setup.block_pauli(random_index(setup.classes, rng)))
        count = samples
        mode = "sampled"
    avg /= count
    labels, _ = class_structure(setup.n, setup.d)
    ref_class = np.tile(labels, setup.don)
    off_block = ref_class[:, None] != ref_class[None, :]
    cross = float(np.max(np.abs(avg[off_block]), initial=0.0))
    return {"mode": mode, "count": count, "average": avg,
            "closed_form_distance": trace_distance(avg, setup.average_closed_form),
            "max_cross_block": cross}


# decoding ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DecoderPOVM:
    elements: tuple[np.ndarray, ...]

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    def completion(self) -> np.ndarray:
        """I - sum Lambda_k, the 'no decision' element."""
        rest = np.eye(self.dim) - sum(self.elements)
        return (rest + rest.conj().T) / 2

    def check(self, tol: float = POVM_TOL) -> bool:
        ok = all(np.linalg.eigvalsh((e + e.conj().T) / 2)[0] >= -1e-9 for e in self.elements)
        return ok and np.linalg.eigvalsh(self.completion())[0] >= -tol


def _psd_power(m: np.ndarray, power: float, tol: float = PINV_TOL) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    keep = w > tol
    wp = np.zeros_like(w)
    wp[keep] = w[keep] ** power
    return (v * wp[None, :]) @ v.conj().T


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return (v * np.sqrt(np.clip(w, 0.0, None))[None, :]) @ v.conj().T


def build_srm_decoder(pi: np.ndarray | None, message_projectors: Sequence[np.ndarray]) -> DecoderPOVM:
    """Square-root measurement for Upsilon_k = Pi Pi_k Pi (Pi = I when ``pi`` is None)."""
    ups = [pk if pi is None else pi @ pk @ pi for pk in message_projectors]
    total = sum(ups)
    if np.max(np.abs(total), initial=0.0) < PINV_TOL:
        raise DegenerateDecoder("sum of Upsilon operators vanishes")
    s = _psd_power(total, -0.5)
    return DecoderPOVM(tuple(s @ u @ s for u in ups))


def success_probabilities(states: Sequence[np.ndarray], povm: DecoderPOVM) -> np.ndarray:
    return np.array([float(np.real(np.trace(s @ lam))) for s, lam in zip(states, povm.elements)])


def hayashi_nagaoka_check(s_op, t_op, tol: float = 1e-9) -> float:
    """Minimum eigenvalue of 2(I - S) + 4T - (I - (S+T)^{-1/2} S (S+T)^{-1/2})."""
    s_op, t_op = as_matrix(s_op), as_matrix(t_op)
    if s_op.shape != t_op.shape or s_op.shape[0] != s_op.shape[1]:
        raise BadOperands("S and T must be square and of equal shape")
    for name, m in (("S", s_op), ("T", t_op)):
        if np.max(np.abs(m - m.conj().T)) > tol:
            raise BadOperands(f"{name} is not Hermitian")
    eye = np.eye(s_op.shape[0])
    if np.linalg.eigvalsh(s_op)[0] < -tol or np.linalg.eigvalsh(eye - s_op)[0] < -tol:
        raise BadOperands("S must satisfy 0 <= S <= I")
    if np.linalg.eigvalsh(t_op)[0] < -tol:
        raise BadOperands("T must be positive semidefinite")
    r = _psd_power(s_op + t_op, -0.5)
    lhs = 2 * (eye - s_op) + 4 * t_op
    rhs = eye - r @ s_op @ r
    diff = lhs - rhs
    return float(np.linalg.eigvalsh((diff + diff.conj().T) / 2)[0])


def random_hn_operands(dim: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Random 0 <= S <= I (scaled Ginibre) and T >= 0."""
    s = random_density(dim, rng).mat
    s = s / np.linalg.eigvalsh(s)[-1] * rng.uniform(0.0, 1.0)
    t = random_density(dim, rng, rank=int(rng.integers(1, dim + 1))).mat * rng.uniform(0.0, 2.0)
    return s, t


def hayashi_nagaoka_run(trials: int, max_dim: int = 8, seed: int = 0) -> dict:
    margins = []
    for t in range(trials):
        rng = substream(seed, 18, t)
        s, tt = random_hn_operands(int(rng.integers(1, max_dim + 1)), rng)
        margins.append(hayashi_nagaoka_check(s, tt))
    worst = min(margins) if margins else None
    return {"trials": trials, "seed": seed, "min_margin": worst,
            "pass": worst is None or worst >= -1e-8}


def measurement_isometry(povm: DecoderPOVM) -> np.ndarray:
    """D = sum_j sqrt(Lambda_j) (x) |j>, with a final branch sqrt(I - sum Lambda)."""
    branches = [_psd_sqrt(lam) for lam in povm.elements] + [_psd_sqrt(povm.completion())]
    d = povm.dim
    # rows indexed (system, j)
    return np.stack(branches, axis=1).reshape(d * len(branches), d)


def gentle_measurement_check(states: Sequence, povm: DecoderPOVM) -> dict:
    """Disturbance || (I (x) D) phi_k - phi_k (x) |k><k| || against sqrt(8 eps_k) per state."""
    dmat = measurement_isometry(povm)
    nb = len(povm.elements) + 1
    rows = []
    for k, st in enumerate(states):
        rho = as_matrix(st)
        eps = max(0.0, 1.0 - float(np.real(np.trace(rho @ povm.elements[k]))))
        phi = purify(rho).amplitudes.reshape(rho.shape[0], rho.shape[0])  # (system, reference)
        out = (dmat @ phi).reshape(rho.shape[0], nb, rho.shape[0])
        target = np.zeros_like(out)
        target[:, k, :] = phi
        dist = pure_state_distance(out.reshape(-1), target.reshape(-1))
        rows.append({"eps": eps, "disturbance": dist, "bound": math.sqrt(8 * eps),
                     "pass": dist <= math.sqrt(8 * eps) + 1e-9})
    return {"states": rows, "pass": all(r["pass"] for r in rows)}


# superdense coding ---------------------------------------------------------------------

def superdense_states(d: int) -> list[np.ndarray]:
    phi = maximally_entangled(d).amplitudes
    out = []
    for u in make_generalized_pauli(d):
        v = np.kron(u, np.eye(d)) @ phi
        out.append(np.outer(v, v.conj()))
    return out


def superdense_check(d: int = 2) -> dict:
    """Pauli-encoded halves of Phi_d decoded by the SRM with Pi = I, Pi_k = sigma_k."""
    states = superdense_states(d)
    povm = build_srm_decoder(None, states)
    succ = success_probabilities(states, povm)
    return {"d": d, "codewords": len(states), "min_success": float(succ.min()),
            "pass": bool(succ.min() >= 1 - 1e-9)}


def codeword_overlap(setup: CodeSetup, a: BlockPauliIndex, b: BlockPauliIndex) -> complex:
    """<Psi| U_a^dag U_b (x) I |Psi> = sum_alpha p_alpha (-1)^{b_a+b_b} Tr(U_ga^dag U_gb) / d_alpha."""
    total = 0.0j
    for w, c, ga, gb, ba, bb in zip(setup.class_weights, setup.classes, a.g, b.g, a.b, b.b):
        da = c.size
        ua, ub = _paulis(da)[ga], _paulis(da)[gb]
        total += w * (-1) ** (ba + bb) * np.trace(ua.conj().T @ ub) / da
    return total


def orthogonal_codebook(setup: CodeSetup, size: int, tol: float = 1e-12) -> list[BlockPauliIndex]:
    """Greedy search over S for ``size`` indices with mutually orthogonal encoded resource states."""
    chosen: list[BlockPauliIndex] = []
    for idx in iterate_indices(setup.classes):
        if all(abs(codeword_overlap(setup, c, idx)) <= tol for c in chosen):
            chosen.append(idx)
            if len(chosen) == size:
                return chosen
    raise ValueError(f"only {len(chosen)} mutually orthogonal block-Pauli codewords exist at this n")


# packing simulation ----------------------------------------------------------------------

def packing_bound(eps: float, gamma: float) -> float:
    return 1.0 - 4.0 * (eps + math.sqrt(8.0 * eps)) - 8.0 * gamma


def evaluate_codebook(setup: CodeSetup, code: Sequence[BlockPauliIndex]) -> dict:
    unitaries = [setup.block_pauli(idx) for idx in code]
    states = [setup.encoded_state(u) for u in unitaries]
    povm = build_srm_decoder(setup.pi, [setup.message_projector(u) for u in unitaries])
    succ = success_probabilities(states, povm)
    eps_pi = max(1.0 - float(np.real(np.trace(s @ setup.pi))) for s in states)
    return {"success": succ, "povm": povm, "states": states, "unitaries": unitaries, "eps_pi": eps_pi}


def simulate_packing(m: QuantumChannel, rho, n: int, rate: float, gamma: float, delta: float,
                     trials: int, seed: int = 0, codebook: str = "random",
                     delta_theta: float | None = None, num_codewords: int | None = None) -> dict:
    """Random block-Pauli codebooks with SRM decoding, compared with the packing bound.

    ``codebook="superdense"`` replaces random sampling by a greedy orthogonal
    codebook (one deterministic trial).
    """
    setup = CodeSetup(m, rho, n, delta, delta_theta)
    size = num_codewords if num_codewords is not None else 2 ** int(math.floor(n * rate + 1e-12))
    if size < 1:
        raise ValueError("codebook needs at least one codeword")
    # trace of the message projectors and the inverse operator norm of Pi sigma Pi
    d_pack = float(np.real(np.trace(setup.pi_theta)))
    if np.real(np.trace(setup.pi)) < 0.5 or d_pack < 0.5:
        raise DegenerateDecoder(f"typical projector is empty at n={n}, delta={delta}; increase delta")
    sand = setup.pi @ setup.average_closed_form @ setup.pi
    lam_max = float(np.linalg.eigvalsh((sand + sand.conj().T) / 2)[-1])
    big_d = 1.0 / lam_max
    eps_theta = 1.0 - float(np.real(np.trace(setup.theta_n @ setup.pi_theta)))
    runs = []
    if codebook == "superdense":
        codes = [orthogonal_codebook(setup, size)]
    elif codebook == "random":
        codes = []
        for t in range(trials):
            rng = substream(seed, 16, t)
            codes.append([random_index(setup.classes, rng) for _ in range(size)])
    else:
        raise ValueError(f"unknown codebook kind {codebook!r}")
    for code in codes:
        runs.append(evaluate_codebook(setup, code))
    eps_pi = max([r["eps_pi"] for r in runs], default=0.0)
    eps = max(eps_pi, eps_theta, 0.0)
    bound = packing_bound(eps, gamma)
    gamma_eff = size * d_pack / big_d
    per = []
    for r in runs:
        s = r["success"]
        per.append({"min_success": float(s.min()), "avg_success": float(s.mean()),
                    "pass": bool(s.mean() >= bound)})
    best = max(range(len(runs)), key=lambda i: (per[i]["avg_success"], -i)) if runs else None
    post = None
    if best is not None:
        s = np.sort(runs[best]["success"])[::-1]
        kept = s[: max(1, (s.size + 1) // 2)]
        post = float(1.0 - kept.min())
    passes = sum(p["pass"] for p in per)
    props = projector_properties(setup, codes[0] if codes else (), lam_max)
    return {
        "n": n, "R": rate, "gamma": gamma, "delta": delta, "delta_theta": setup.delta_theta,
        "seed": seed, "codebook": codebook, "num_codewords": size,
        "nominal_num_codewords": int(math.floor(gamma * big_d / d_pack)) if d_pack > 0 else 0,
        "d": d_pack, "D": big_d, "gamma_effective": gamma_eff,
        "eps_measured": eps, "eps_pi": eps_pi, "eps_theta": eps_theta,
        "bound": bound, "bound_effective_gamma": packing_bound(eps, gamma_eff),
        "mutual_information_n": n * mutual_information(build_theta_single(m, DensityOperator.from_matrix(setup.rho)).state, "A", "B"),
        "min_success": min((p["min_success"] for p in per), default=None),
        "avg_success": float(np.mean([p["avg_success"] for p in per])) if per else None,
        "best_codebook": best,
        "post_expurgation_max_error": post,
        "trials_passing": passes,
        "pass_fraction": passes / len(per) if per else None,
        "projector_properties": props,
        "codebooks": [{"entries": [[list(i.g), list(i.b)] for i in code], **p} for code, p in zip(codes, per)],
        "_runs": runs, "_setup": setup, "_codes": codes,
    }


def condition_two_gap(setup: CodeSetup, idx: BlockPauliIndex) -> float:
    """Trace distance between U rho^n U^dag and rho^n for the sender's encoding."""
    u = setup.sender_unitary(setup.block_pauli(idx))
    rho_n = kron_all([setup.rho] * setup.n)
    return trace_distance(u @ rho_n @ u.conj().T, rho_n)


def _tightest_c(excess: float, delta: float) -> float:
    """Smallest c >= 0 with excess <= c * delta (inf when delta = 0 and excess > 0)."""
    if excess <= 1e-12:
        return 0.0
    return excess / delta if delta > 0 else math.inf


def _slack(c: float, delta: float) -> float:
    return c * delta if 0 < c < math.inf else 0.0


def _top_log2_eig(spectrum: np.ndarray, types) -> float:
    lps = [t.log2_prob(spectrum) for t in types]
    return max(lps, default=-math.inf)


def projector_properties(setup: CodeSetup, code: Sequence[BlockPauliIndex] = (),
                         lam_max: float | None = None, tol: float = 1e-9) -> dict:
    """Trace of the message projectors and the top eigenvalue of Pi sigma Pi against their bounds.

    Message projectors: Tr Pi_s must equal Tr Pi_theta, and log2 Tr Pi_theta is compared
    with n [H(theta) + c delta_theta] at the tightest c. Sandwiched average: the largest
    eigenvalue of Pi sigma Pi is bounded by 2^{-n [H(rho) + H(N(rho)) - c delta - eta]}
    where c comes from the output projector's largest eigenvalue and eta from the
    smallest typical type class of rho.
    """
    n = setup.n
    d_theta = float(np.real(np.trace(setup.pi_theta)))
    gaps = [abs(float(np.real(np.trace(setup.message_projector(setup.block_pauli(i))))) - d_theta)
            for i in code]
    h_theta = entropy_of_spectrum(np.linalg.eigvalsh(setup.theta1))
    c3 = _tightest_c(math.log2(d_theta) / n - h_theta, setup.delta_theta) if d_theta >= 0.5 else 0.0
    p3 = {"trace": d_theta, "max_trace_gap": max(gaps, default=0.0), "entropy": h_theta, "tightest_c": c3,
          "log2_bound": n * h_theta + n * _slack(c3, setup.delta_theta),
          "pass": max(gaps, default=0.0) <= tol}

    out = typical_projector(apply_kraus(setup.channel.kraus, setup.rho), n, setup.delta)
    ref = typical_projector(np.diag(setup.p), n, setup.delta)
    h_out, h_in = entropy_of_spectrum(out.spectrum), entropy_of_spectrum(setup.p)
    top = _top_log2_eig(out.spectrum, out.types) / n
    c4 = _tightest_c(h_out + top, setup.delta) if math.isfinite(top) else 0.0
    eta = max((h_in - math.log2(t.class_size()) / n for t in ref.types), default=0.0)
    if lam_max is None:
        sand = setup.pi @ setup.average_closed_form @ setup.pi
        lam_max = float(np.linalg.eigvalsh((sand + sand.conj().T) / 2)[-1])
    log2_bound = -n * (h_in + h_out - eta) + n * _slack(c4, setup.delta)
    log2_lam = math.log2(lam_max) if lam_max > 0 else -math.inf
    p4 = {"max_eigenvalue": lam_max, "bound": 2.0**log2_bound, "tightest_c": c4, "eta": eta,
          "log2_margin": log2_bound - log2_lam, "pass": log2_lam <= log2_bound + tol}
    return {"p3": p3, "p4": p4, "pass": p3["pass"] and p4["pass"]}


def condition_three_check(setup: CodeSetup, code: Sequence[BlockPauliIndex]) -> dict:
    """Decode, undo the Pauli on B', and compare with the unencoded dilated output.

    Retains the environment, so only small n are allowed.
    """
    if setup.n > 2:
        raise DimensionCap("condition iii check keeps E^n and is limited to n <= 2")
    unitaries = [setup.block_pauli(idx) for idx in code]
    povm = build_srm_decoder(setup.pi, [setup.message_projector(u) for u in unitaries])
    dmat = measurement_isometry(povm)
    nb = len(code) + 1
    big = setup.don * setup.dn
    baseline = setup.encoded_vector(np.eye(setup.dn, dtype=complex))  # (k, b, r)
    rows = []
    for k, u in enumerate(unitaries):
        t = setup.encoded_vector(u)  # (env, b, r)
        sigma = setup.encoded_state(u)
        eps = max(0.0, 1.0 - float(np.real(np.trace(sigma @ povm.elements[k]))))
        # apply D to the (b, r) register of every env branch: result (env, b, r, j)
        flat = t.reshape(t.shape[0], big)
        out = np.einsum("xj,kj->kx", dmat, flat).reshape(t.shape[0], big, nb)
        out = out.transpose(0, 2, 1).reshape(t.shape[0], nb, setup.don, setup.dn)
        for j in range(nb - 1):
            corr = unitaries[j].conj()
            out[:, j] = np.einsum("kbr,sr->kbs", out[:, j], corr)
        target = np.zeros_like(out)
        target[:, k] = baseline
        dist = pure_state_distance(out.reshape(-1), target.reshape(-1))
        rows.append({"eps": eps, "distance": dist, "bound": math.sqrt(8 * eps) + 1e-6,
                     "pass": dist <= math.sqrt(8 * eps) + 1e-6})
    return {"codewords": rows, "pass": all(r["pass"] for r in rows)}


# successive decoding --------------------------------------------------------------

def successive_decode_rates(m: QuantumChannel, rho1, rho2, tol: float = 1e-9) -> dict:
    """Effective channels N1, N1-hat, N2 and the corner rates (I(A;C), I(B;C|A))."""
    rho1, rho2 = as_matrix(rho1), as_matrix(rho2)
    d1, d2 = rho1.shape[0], rho2.shape[0]
    if len(m.in_dims) != 2 or tuple(m.in_dims) != (d1, d2):
        raise DimensionMismatch(f"channel inputs {m.in_dims} vs states ({d1}, {d2})")
    k = m.kraus.reshape(m.num_kraus, m.dim_out, d1, d2)
    q, w = eig_hermitian(rho2)
    q = np.clip(q, 0.0, None)
    n1 = np.einsum("kcab,bj->kjca", k, w * np.sqrt(q)[None, :]).reshape(-1, m.dim_out, d1)
    n1 = n1[np.linalg.norm(n1, axis=(1, 2)) > 1e-14]
    phi2 = purify(rho2).amplitudes.reshape(d2, d2)  # (system, reference)
    n1_hat = np.einsum("kcab,br->krca", k, phi2).reshape(m.num_kraus, d2 * m.dim_out, d1)
    phi1 = purify(rho1).amplitudes.reshape(d1, d1)
    n2 = np.einsum("kcab,ar->krcb", k, phi1).reshape(m.num_kraus, d1 * m.dim_out, d2)
    ch1 = QuantumChannel(n1, (d1,), (m.dim_out,), "N1")
    ch1_hat = QuantumChannel(n1_hat, (d1,), (d2, m.dim_out), "N1hat")
    ch2 = QuantumChannel(n2, (d2,), (d1, m.dim_out), "N2")
    s1 = build_theta_single(ch1, DensityOperator.from_matrix(rho1)).state
    s2 = build_theta_single(ch2, DensityOperator.from_matrix(rho2)).state
    rate1 = mutual_information(s1, "A", "B")
    rate2 = mutual_information(s2, "A", "B")
    region = region_for_inputs(m, DensityOperator.from_matrix(rho1), DensityOperator.from_matrix(rho2))
    gap1 = abs(rate1 - (region.rsum - region.r2))
    gap2 = abs(rate2 - region.r2)
    if gap1 > tol or gap2 > tol:
        raise ConsistencyError(f"successive rates ({rate1}, {rate2}) disagree with pentagon {region}")
    return {"N1": ch1, "N1_hat": ch1_hat, "N2": ch2, "rates": (rate1, rate2), "region": region,
            "chain_rule_gap": gap1}

