"""Von Neumann entropy and the mutual-information family, in bits."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import LabelError
from .qmath import (
    DensityOperator,
    PureState,
    as_matrix,
    partial_trace,
    random_density,
    random_pure,
    substream,
)

EIG_FLOOR = 1e-12


def entropy_of_spectrum(w) -> float:
    w = np.asarray(w, dtype=float)
    w = w[w > EIG_FLOOR]
    return float(-np.sum(w * np.log2(w)))


def von_neumann_entropy(rho) -> float:
    m = as_matrix(rho)
    return entropy_of_spectrum(np.linalg.eigvalsh((m + m.conj().T) / 2))


@dataclass(frozen=True, eq=False)
class LabeledState:
    """Density operator whose tensor factors carry names such as A, B, C, E."""

    state: DensityOperator
    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(self.labels)
        if len(labels) != len(self.state.dims):
            raise LabelError(f"{len(labels)} labels for {len(self.state.dims)} subsystems")
        if len(set(labels)) != len(labels):
            raise LabelError("duplicate labels")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_pure(cls, psi: PureState, labels: Sequence[str]) -> "LabeledState":
        return cls(psi.density(), tuple(labels))

    def _index(self, part: Iterable[str]) -> list[int]:
        try:
            return [self.labels.index(x) for x in part]
        except ValueError as exc:
            raise LabelError(f"unknown label in {list(part)}; have {self.labels}") from exc

    def marginal(self, part: Iterable[str]) -> DensityOperator:
        return partial_trace(self.state, self._index(_labels(part)))

    def entropy(self, part: Iterable[str]) -> float:
        part = _labels(part)
        if not part:
            return 0.0
        return von_neumann_entropy(self.marginal(part))


def _labels(part) -> tuple[str, ...]:
    # "AB" is shorthand for ("A", "B")
    return tuple(part)


def _disjoint(*parts) -> list[tuple[str, ...]]:
    parts = [_labels(p) for p in parts]
    seen: set[str] = set()
    for p in parts:
        if seen & set(p):
            raise LabelError(f"label sets overlap: {parts}")
        seen |= set(p)
    return parts


def conditional_entropy(s: LabeledState, a, b) -> float:
    """H(A|B) = H(AB) - H(B)."""
    a, b = _disjoint(a, b)
    return s.entropy(a + b) - s.entropy(b)


def mutual_information(s: LabeledState, a, b) -> float:
    """I(A;B) = H(A) + H(B) - H(AB)."""
    a, b = _disjoint(a, b)
    return s.entropy(a) + s.entropy(b) - s.entropy(a + b)


def conditional_mutual_information(s: LabeledState, a, c, b) -> float:
    """I(A;C|B) = H(AB) + H(BC) - H(ABC) - H(B)."""
    a, c, b = _disjoint(a, c, b)
    return s.entropy(a + b) + s.entropy(b + c) - s.entropy(a + b + c) - s.entropy(b)


def coherent_information(s: LabeledState, a, c) -> float:
    """I(A>C) = I(A;C) - H(A)."""
    a, c = _disjoint(a, c)
    return mutual_information(s, a, c) - s.entropy(a)


# lemma checks ---------------------------------------------------------------

def _random_dims(rng: np.random.Generator, max_dim: int) -> tuple[int, int, int]:
    return tuple(int(x) for x in rng.integers(2, max(2, max_dim) + 1, size=3))


def duality_violation(psi: PureState) -> float:
    """|H(B|E) + H(B|A)| for a pure state on A B E."""
    s = LabeledState.from_pure(psi, "ABE")
    return abs(conditional_entropy(s, "B", "E") + conditional_entropy(s, "B", "A"))


def bound_slack(s: LabeledState) -> float:
    """H(B) + H(B|E) - I(A;B); non-negative for every state on A B E."""
    return s.entropy("B") + conditional_entropy(s, "B", "E") - mutual_information(s, "A", "B")


def verify_entropy_lemmas(trials: int, max_dim: int = 3, seed: int = 0,
                          ssa_trials: int | None = None) -> dict:
    """Seeded property run of the pure-state duality, the mixed-state bound and SSA.

    Trial ``t`` of each check draws from its own substream, so results do not
    depend on execution order.
    """
    ssa_trials = trials if ssa_trials is None else ssa_trials
    dual = [0.0]
    slack = [np.inf]
    ssa = [np.inf]
    for t in range(trials):
        rng = substream(seed, 4, t)
        dims = _random_dims(rng, max_dim)
        dual.append(duality_violation(random_pure(int(np.prod(dims)), rng, dims)))
        rng = substream(seed, 5, t)
        dims = _random_dims(rng, max_dim)
        # low ranks reach the tight end of the bound (pure AB saturates it)
        rank = int(rng.integers(1, int(np.prod(dims)) + 1))
        s = LabeledState(random_density(int(np.prod(dims)), rng, rank=rank, dims=dims), ("A", "B", "E"))
        slack.append(bound_slack(s))
    for t in range(ssa_trials):
        rng = substream(seed, 6, t)
        dims = _random_dims(rng, max_dim)
        if t % 4 == 3:
            # rho_AB (x) rho_C has I(A;C|B) = 0 exactly
            ab = random_density(dims[0] * dims[1], rng)
            mat = np.kron(ab.mat, random_density(dims[2], rng).mat)
            s = LabeledState(DensityOperator(mat, dims), ("A", "B", "C"))
        else:
            rank = int(rng.integers(1, int(np.prod(dims)) + 1))
            s = LabeledState(random_density(int(np.prod(dims)), rng, rank=rank, dims=dims), ("A", "B", "C"))
        ssa.append(conditional_mutual_information(s, "A", "C", "B"))
    dual_max = float(max(dual))
    slack_min = float(min(slack)) if trials else None
    ssa_min = float(min(ssa)) if ssa_trials else None
    return {
        "trials": trials,
        "ssa_trials": ssa_trials,
        "max_dim": max_dim,
        "seed": seed,
        "duality": {"max_violation": dual_max, "tolerance": 1e-8, "pass": dual_max <= 1e-8},
        "bound": {"min_slack": slack_min, "tolerance": -1e-9,
                  "pass": slack_min is None or slack_min >= -1e-9},
        "ssa": {"min_value": ssa_min, "tolerance": -1e-9, "pass": ssa_min is None or ssa_min >= -1e-9},
    }
