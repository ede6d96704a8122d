"""Entanglement-assisted rate regions: theta states, pentagons, optimizers.

System names: for a two-sender channel ``M: A'B' -> C`` the theta state
lives on ``A B C`` (references of the two inputs, then the output), plus
``E`` when the channel environment is retained.  For a single-sender
channel ``N: A' -> B`` it lives on ``A B`` (plus ``E``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .channels import (
    QuantumChannel,
    apply_kraus,
    complementary_channel,
    is_generalized_dephasing,
    make_completely_dephasing,
    validate_distribution,
)
from .entropy import (
    LabeledState,
    coherent_information,
    conditional_mutual_information,
    entropy_of_spectrum,
    mutual_information,
)
from .errors import ConsistencyError, DimensionMismatch, NotDephasing
from .qmath import (
    DensityOperator,
    as_matrix,
    maximally_mixed,
    permute_subsystems,
    purify,
    random_density,
    substream,
    trace_distance,
)

VERTEX_TOL = 1e-12


# theta states ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ThetaState:
    state: LabeledState
    channel: QuantumChannel
    inputs: tuple[DensityOperator, ...]

    @property
    def purified(self) -> bool:
        return "E" in self.state.labels


def _as_state(rho) -> DensityOperator:
    return rho if isinstance(rho, DensityOperator) else DensityOperator.from_matrix(rho)


def _theta_tensor(m: QuantumChannel, refs_by_inputs: np.ndarray) -> np.ndarray:
    """T[r, c, k] = sum_x refs_by_inputs[r, x] K_k[c, x]: the pure output on (refs, C, E)."""
    return np.einsum("rx,kcx->rck", refs_by_inputs, m.kraus)


def _theta_from_tensor(t: np.ndarray, ref_dims: tuple[int, ...], out_dims: tuple[int, ...],
                       names: Sequence[str], purified: bool) -> LabeledState:
    r, c, k = t.shape
    if purified:
        vec = t.reshape(-1)
        mat = np.outer(vec, vec.conj())
        dims = ref_dims + out_dims + (k,)
        names = tuple(names) + ("E",)
    else:
        flat = t.reshape(r * c, k)
        mat = flat @ flat.conj().T
        dims = ref_dims + out_dims
    mat = (mat + mat.conj().T) / 2
    return LabeledState(DensityOperator(mat / np.trace(mat).real, dims), tuple(names))


def _out_dims(m: QuantumChannel) -> tuple[int, ...]:
    return (m.dim_out,)


def build_theta(m: QuantumChannel, rho1, rho2, purified: bool = False) -> ThetaState:
    """theta on A B C (and E) from purifications of the two inputs."""
    rho1, rho2 = _as_state(rho1), _as_state(rho2)
    d1, d2 = rho1.dim, rho2.dim
    if m.dim_in != d1 * d2 or (len(m.in_dims) == 2 and tuple(m.in_dims) != (d1, d2)):
        raise DimensionMismatch(f"channel inputs {m.in_dims} do not match input dims ({d1}, {d2})")
    # purify() returns vectors on (system, reference)
    phi = np.kron(purify(rho1).amplitudes, purify(rho2).amplitudes)
    psi = permute_subsystems(phi, (d1, d1, d2, d2), (1, 3, 0, 2))
    t = _theta_tensor(m, psi.reshape(d1 * d2, d1 * d2))
    state = _theta_from_tensor(t, (d1, d2), _out_dims(m), ("A", "B", "C"), purified)
    return ThetaState(state, m, (rho1, rho2))


def build_theta_single(n: QuantumChannel, rho, purified: bool = False) -> ThetaState:
    """theta on A B (and E) for a single-sender channel."""
    rho = _as_state(rho)
    if n.dim_in != rho.dim:
        raise DimensionMismatch(f"state dim {rho.dim} vs channel dim_in {n.dim_in}")
    d = rho.dim
    psi = purify(rho).amplitudes.reshape(d, d).T  # rows: reference, cols: system
    t = _theta_tensor(n, psi)
    state = _theta_from_tensor(t, (d,), _out_dims(n), ("A", "B"), purified)
    return ThetaState(state, n, (rho,))


# pentagons ------------------------------------------------------------------

def pentagon_vertices(r1: float, r2: float, rsum: float) -> list[tuple[float, float]]:
    raw = [(0.0, 0.0), (r1, 0.0), (r1, rsum - r1), (rsum - r2, r2), (0.0, r2)]
    out: list[tuple[float, float]] = []
    for x, y in raw:
        pt = (max(0.0, x), max(0.0, y))
        if not any(abs(pt[0] - q[0]) <= VERTEX_TOL and abs(pt[1] - q[1]) <= VERTEX_TOL for q in out):
            out.append(pt)
    return out


@dataclass(frozen=True)
class RegionPentagon:
    """{R1 <= r1, R2 <= r2, R1 + R2 <= rsum, R >= 0}."""

    r1: float
    r2: float
    rsum: float
    vertices: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self):
        if not self.vertices:
            object.__setattr__(self, "vertices", tuple(pentagon_vertices(self.r1, self.r2, self.rsum)))

    def is_consistent(self, tol: float = 1e-9) -> bool:
        return (min(self.r1, self.r2) >= -tol and max(self.r1, self.r2) <= self.rsum + tol
                and self.rsum <= self.r1 + self.r2 + tol)

    def contains(self, pt, tol: float = 1e-9) -> bool:
        x, y = pt
        return x >= -tol and y >= -tol and x <= self.r1 + tol and y <= self.r2 + tol and x + y <= self.rsum + tol

    def as_dict(self) -> dict:
        return {"r1": self.r1, "r2": self.r2, "rsum": self.rsum,
                "vertices": [list(v) for v in self.vertices],
                "corners": {k: list(v) for k, v in corner_points(self).items()}}


def region_from_theta(theta: ThetaState) -> RegionPentagon:
    s = theta.state
    return RegionPentagon(conditional_mutual_information(s, "A", "C", "B"),
                          conditional_mutual_information(s, "B", "C", "A"),
                          mutual_information(s, "AB", "C"))


def region_for_inputs(m: QuantumChannel, rho1, rho2) -> RegionPentagon:
    return region_from_theta(build_theta(m, rho1, rho2))


def corner_points(p: RegionPentagon) -> dict[str, tuple[float, float]]:
    return {"O": (0.0, 0.0), "P": (p.r1, p.rsum - p.r1), "Q": (p.rsum - p.r2, p.r2), "R": (0.0, p.r2)}


def phase_flip_region_closed_form(d: int, p) -> RegionPentagon:
    p = validate_distribution(p, d)
    r = 2.0 * math.log2(d)
    return RegionPentagon(r, r, 2.0 * r - entropy_of_spectrum(p))


# fast objectives ------------------------------------------------------------

def _h(mat: np.ndarray) -> float:
    return entropy_of_spectrum(np.linalg.eigvalsh((mat + mat.conj().T) / 2))


def single_sender_mi(ch: QuantumChannel, rho) -> float:
    """I(A;B)_theta = H(rho) + H(N(rho)) - H(N^c(rho))."""
    m = as_matrix(rho)
    return _h(m) + _h(apply_kraus(ch.kraus, m)) - _h(apply_kraus(ch.kraus.transpose(1, 0, 2), m))


def sum_rate_objective(ch: QuantumChannel, rho1, rho2) -> float:
    """I(AB;C)_theta = H(rho1) + H(rho2) + H(M(rho1 rho2)) - H(M^c(rho1 rho2))."""
    a, b = as_matrix(rho1), as_matrix(rho2)
    ab = np.kron(a, b)
    return _h(a) + _h(b) + _h(apply_kraus(ch.kraus, ab)) - _h(apply_kraus(ch.kraus.transpose(1, 0, 2), ab))


# optimizer ------------------------------------------------------------------

@dataclass(frozen=True)
class OptimizerConfig:
    starts: int = 8
    step: float = 0.1
    tol: float = 1e-9
    max_iters: int = 5000
    seed: int = 0
    fd_step: float = 1e-5

    def __post_init__(self):
        if self.starts < 0 or self.step <= 0 or self.tol <= 0 or self.max_iters < 1 or self.fd_step <= 0:
            raise ValueError("optimizer settings must be positive")


@dataclass(frozen=True, eq=False)
class OptimizeResult:
    value: float
    argmax: tuple[DensityOperator, ...]
    converged: bool
    iterations: int
    start_index: int
    start_values: tuple[float, ...]

    def as_dict(self) -> dict:
        return {"value": self.value, "converged": self.converged, "iterations": self.iterations,
                "start_index": self.start_index, "start_values": list(self.start_values),
                "argmax": [[[[float(z.real), float(z.imag)] for z in row] for row in r.mat] for r in self.argmax]}


def _rho_of(x: np.ndarray, d: int) -> np.ndarray:
    g = (x[: d * d] + 1j * x[d * d:]).reshape(d, d)
    m = g @ g.conj().T
    return m / np.trace(m).real


def _params_of(g: np.ndarray) -> np.ndarray:
    g = g / np.linalg.norm(g)
    return np.concatenate([g.real.ravel(), g.imag.ravel()])


def ascend(f: Callable[[np.ndarray], float], d: int, g0: np.ndarray, cfg: OptimizerConfig,
           max_iters: int | None = None) -> tuple[float, np.ndarray, bool, int]:
    """Gradient ascent of ``f(rho)`` over rho = G G^dag / Tr, central differences in G.

    A step that fails to improve halves the step size; the run converges once
    the step or the per-step gain drops below ``cfg.tol``.
    """
    x = _params_of(np.asarray(g0, dtype=complex))
    fx = f(_rho_of(x, d))
    step = cfg.step
    h = cfg.fd_step
    max_iters = cfg.max_iters if max_iters is None else max_iters
    for it in range(1, max_iters + 1):
        grad = np.empty_like(x)
        for i in range(x.size):
            e = np.zeros_like(x)
            e[i] = h
            grad[i] = (f(_rho_of(x + e, d)) - f(_rho_of(x - e, d))) / (2 * h)
        gnorm = np.linalg.norm(grad)
        if gnorm < cfg.tol:
            return fx, _rho_of(x, d), True, it
        while True:
            cand = x + step * grad / gnorm
            fc = f(_rho_of(cand, d))
            if fc > fx:
                gain = fc - fx
                x, fx = _params_of((cand[: d * d] + 1j * cand[d * d:]).reshape(d, d)), fc
                if gain < cfg.tol:
                    return fx, _rho_of(x, d), True, it
                break
            step /= 2
            if step < cfg.tol:
                return fx, _rho_of(x, d), True, it
    return fx, _rho_of(x, d), False, max_iters


def _start_matrices(d: int, cfg: OptimizerConfig, stream: int) -> list[np.ndarray]:
    mats = [np.eye(d, dtype=complex)]
    for s in range(cfg.starts):
        rng = substream(cfg.seed, stream, s)
        mats.append(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
    return mats


def _pick_best(results: list[tuple]) -> int:
    # first index wins ties
    best = 0
    for i, r in enumerate(results):
        if r[0] > results[best][0]:
            best = i
    return best


def ea_capacity_single(ch: QuantumChannel, cfg: OptimizerConfig = OptimizerConfig()) -> OptimizeResult:
    """max_rho I(A;B)_theta by multi-start ascent; value re-evaluated on the full theta state."""
    d = ch.dim_in
    f = lambda rho: single_sender_mi(ch, rho)  # noqa: E731
    runs = [ascend(f, d, g, cfg) for g in _start_matrices(d, cfg, 11)]
    k = _pick_best(runs)
    value, rho, converged, iters = runs[k]
    state = DensityOperator.from_matrix(rho)
    direct = mutual_information(build_theta_single(ch, state).state, "A", "B")
    if abs(direct - value) > 1e-8:
        raise ConsistencyError(f"objective routes disagree: {value} vs {direct}")
    return OptimizeResult(direct, (state,), converged, iters, k, tuple(r[0] for r in runs))


def sum_rate_bound(m: QuantumChannel, cfg: OptimizerConfig = OptimizerConfig(),
                   max_rounds: int = 50) -> OptimizeResult:
    """max over product inputs of I(AB;C)_theta by alternating ascent in rho1 and rho2."""
    if len(m.in_dims) != 2:
        raise DimensionMismatch("sum_rate_bound needs a two-sender channel")
    d1, d2 = m.in_dims
    starts = list(zip(_start_matrices(d1, cfg, 12), _start_matrices(d2, cfg, 13)))
    runs = []
    for g1, g2 in starts:
        r1 = _rho_of(_params_of(g1), d1)
        r2 = _rho_of(_params_of(g2), d2)
        fx = sum_rate_objective(m, r1, r2)
        converged, iters = False, 0
        for _ in range(max_rounds):
            prev = fx
            fx, r1, c1, i1 = ascend(lambda r: sum_rate_objective(m, r, r2), d1, _sqrt_factor(r1), cfg)
            fx, r2, c2, i2 = ascend(lambda r: sum_rate_objective(m, r1, r), d2, _sqrt_factor(r2), cfg)
            iters += i1 + i2
            if fx - prev < cfg.tol and c1 and c2:
                converged = True
                break
        runs.append((fx, r1, r2, converged, iters))
    k = _pick_best(runs)
    value, r1, r2, converged, iters = runs[k]
    s1, s2 = DensityOperator.from_matrix(r1), DensityOperator.from_matrix(r2)
    direct = region_for_inputs(m, s1, s2).rsum
    if abs(direct - value) > 1e-8:
        raise ConsistencyError(f"objective routes disagree: {value} vs {direct}")
    return OptimizeResult(direct, (s1, s2), converged, iters, k, tuple(r[0] for r in runs))


def _sqrt_factor(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    return v * np.sqrt(np.clip(w, 0.0, None))[None, :]


# union of regions -----------------------------------------------------------

def union_region_sample(m: QuantumChannel, samples: int, cfg: OptimizerConfig = OptimizerConfig(),
                        seed: int = 0, refine: bool = True) -> list[RegionPentagon]:
    """Pentagons at pi x pi, at ``samples`` random product inputs, and at the sum-rate maximizer."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    d1, d2 = m.in_dims
    out = [region_for_inputs(m, maximally_mixed(d1), maximally_mixed(d2))]
    for i in range(samples - 1):
        rng = substream(seed, 14, i)
        out.append(region_for_inputs(m, random_density(d1, rng), random_density(d2, rng)))
    if refine:
        best = sum_rate_bound(m, cfg)
        out.append(region_for_inputs(m, *best.argmax))
    return out


def convex_hull(points: Sequence[tuple[float, float]], tol: float = 1e-12) -> list[tuple[float, float]]:
    """Counter-clockwise monotone-chain hull starting from the lowest-left point."""
    pts = sorted(set((float(x), float(y)) for x, y in points))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= tol:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= tol:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def union_hull(pentagons: Sequence[RegionPentagon]) -> list[tuple[float, float]]:
    pts = [(0.0, 0.0)] + [v for p in pentagons for v in p.vertices]
    return convex_hull(pts)


# corner-rate bundles --------------------------------------------------------

def resource_corner_rates(m: QuantumChannel, rho1, rho2) -> dict:
    """Rates of the corner-point protocols, evaluated on the purified theta state."""
    s = build_theta(m, rho1, rho2, purified=True).state
    mi = lambda a, b: mutual_information(s, a, b)  # noqa: E731
    ci = lambda a, b: coherent_information(s, a, b)  # noqa: E731
    half = lambda x: 0.5 * x  # noqa: E731
    return {
        "ebits": {"E1": s.entropy("A"), "E2": s.entropy("B")},
        "classical": {"Q": [mi("A", "C"), mi("B", "CA")], "P": [mi("A", "CB"), mi("B", "C")]},
        "father": {
            "Q": {"consumed": [half(mi("A", "BE")), half(mi("B", "E"))],
                  "quantum": [half(mi("A", "C")), half(mi("B", "CA"))]},
            "P": {"consumed": [half(mi("A", "E")), half(mi("B", "AE"))],
                  "quantum": [half(mi("A", "CB")), half(mi("B", "C"))]},
        },
        "quantum": {"Q": [ci("A", "C"), ci("B", "CA")], "P": [ci("A", "BC"), ci("B", "C")]},
        "hybrid": {"classical_A": mi("A", "C"), "quantum_B": ci("B", "CA"), "E1": s.entropy("A")},
    }


# generalized dephasing ------------------------------------------------------

def dephasing_closed_form(ch: QuantumChannel, r) -> float:
    """2 H(r) - H(sum_i r_i phi_i) with phi_i = N^c(|i><i|)."""
    r = np.asarray(r, dtype=float)
    comp = complementary_channel(ch)
    env = np.zeros((comp.dim_out, comp.dim_out), dtype=complex)
    for i, ri in enumerate(r):
        e = np.zeros((ch.dim_in, ch.dim_in), dtype=complex)
        e[i, i] = 1.0
        env += ri * apply_kraus(comp.kraus, e)
    return 2 * entropy_of_spectrum(r) - _h(env)


def verify_dephasing_maximizer(ch: QuantumChannel, trials: int, seed: int = 0) -> dict:
    """Dephasing the input never lowers I(A;B); closed form matches on diagonal inputs."""
    if not is_generalized_dephasing(ch):
        raise NotDephasing("channel does not fix the computational basis projectors")
    delta = make_completely_dephasing(ch.dim_in)
    gain_min = math.inf
    closed_err = 0.0
    for t in range(trials):
        rng = substream(seed, 15, t)
        rho = random_density(ch.dim_in, rng)
        deph = DensityOperator.from_matrix(apply_kraus(delta.kraus, rho.mat))
        i_rho = mutual_information(build_theta_single(ch, rho).state, "A", "B")
        i_deph = mutual_information(build_theta_single(ch, deph).state, "A", "B")
        gain_min = min(gain_min, i_deph - i_rho)
        closed_err = max(closed_err, abs(i_deph - dephasing_closed_form(ch, np.diag(deph.mat).real)))
    gain_min = None if trials == 0 else gain_min
    return {"trials": trials, "seed": seed, "min_gain": gain_min, "closed_form_max_error": closed_err,
            "pass": (gain_min is None or gain_min >= -1e-8) and closed_err <= 1e-8}


def lagrange_residual(ch: QuantumChannel, h: float = 1e-5) -> float:
    """Norm of the simplex-projected gradient of the closed form at the uniform point.

    The closed form is evaluated off the simplex too (entropies of unnormalized
    spectra), which is what central differences need.
    """
    d = ch.dim_in
    r0 = np.full(d, 1.0 / d)
    grad = np.empty(d)
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        grad[i] = (dephasing_closed_form(ch, r0 + e) - dephasing_closed_form(ch, r0 - e)) / (2 * h)
    return float(np.linalg.norm(grad - grad.mean()))


def trace_distance_to_product(argmax: Sequence[DensityOperator], target: Sequence[DensityOperator]) -> float:
    a = np.kron(argmax[0].mat, argmax[1].mat)
    b = np.kron(target[0].mat, target[1].mat)
    return trace_distance(a, b)

