"""Hidden-state calculus on densities and quantum chains.

Hidden states are an orthogonal resolution of the identity (projectors
attached to labels).  A density assigns each hidden state a weight; under
a generalized density some weights may be negative, which models states
that cannot be measured.  Information functions map hidden states to
observable values and induce signed distributions; joint observability,
the two-observable inequality check on product expectations, and
maximum-weight hidden paths through a chain all build on those weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .config import DEFAULTS
from .errors import (
    DimensionMismatchError,
    UnsupportedChainError,
    ValidationError,
)
from .hermitian import Density, require_hermitian, spectral_decompose
from .chain import QuantumChain
from .process import as_word

__all__ = [
    "HiddenStateBasis",
    "InformationFunction",
    "composite_function",
    "product_function",
    "ObservabilityReport",
    "hidden_state_weights",
    "induced_distribution",
    "expectation",
    "joint_observability",
    "BellCheck",
    "bell_check",
    "ViterbiResult",
    "viterbi_hidden_path",
]

_PROJECTOR_TOL = 1e-9


@dataclass(frozen=True)
class HiddenStateBasis:
    """Labeled orthogonal projectors summing to the identity."""

    labels: tuple[str, ...]
    projectors: tuple[np.ndarray, ...]

    def __post_init__(self):
        labels = tuple(str(label) for label in self.labels)
        if not labels or len(set(labels)) != len(labels):
            raise ValidationError("hidden-state labels must be non-empty and distinct")
        if len(labels) != len(self.projectors):
            raise DimensionMismatchError("one projector per label required")
        projectors = tuple(require_hermitian(p, _PROJECTOR_TOL) for p in self.projectors)
        dim = projectors[0].shape[0]
        total = np.zeros((dim, dim), dtype=complex)
        for i, proj in enumerate(projectors):
            if proj.shape != (dim, dim):
                raise DimensionMismatchError("projectors differ in dimension")
            if np.max(np.abs(proj @ proj - proj)) > _PROJECTOR_TOL:
                raise ValidationError(f"projector for {labels[i]!r} is not idempotent")
            total += proj
        for i in range(len(projectors)):
            for j in range(i + 1, len(projectors)):
                overlap = float(np.max(np.abs(projectors[i] @ projectors[j])))
                if overlap > _PROJECTOR_TOL:
                    raise ValidationError(
                        f"projectors {labels[i]!r} and {labels[j]!r} overlap ({overlap:.3e})"
                    )
        if np.max(np.abs(total - np.eye(dim))) > _PROJECTOR_TOL:
            raise ValidationError("projectors do not resolve the identity")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "projectors", projectors)

    @property
    def dim(self) -> int:
        return int(self.projectors[0].shape[0])

    @property
    def size(self) -> int:
        return len(self.labels)

    @classmethod
    def standard(cls, dim: int, labels: Sequence[str] | None = None) -> "HiddenStateBasis":
        """Coordinate-axis projectors, one hidden state per basis vector."""
        if labels is None:
            labels = tuple(f"w{i + 1}" for i in range(dim))
        projectors = []
        for i in range(dim):
            proj = np.zeros((dim, dim), dtype=complex)
            proj[i, i] = 1.0
            projectors.append(proj)
        return cls(tuple(labels), tuple(projectors))

    @classmethod
    def from_density(
        cls, density: Density | np.ndarray, labels: Sequence[str] | None = None
    ) -> "HiddenStateBasis":
        """Rank-one projectors onto the eigenvectors of a reference density.

        Within a degenerate eigenvalue cluster the individual projectors
        depend on the eigensolver's basis choice; only their sums are
        canonical.
        """
        matrix = density.matrix if isinstance(density, Density) else density
        decomposition = spectral_decompose(matrix)
        if labels is None:
            labels = tuple(f"w{i + 1}" for i in range(decomposition.dim))
        projectors = tuple(decomposition.projector(i) for i in range(decomposition.dim))
        return cls(tuple(labels), projectors)


@dataclass(frozen=True)
class InformationFunction:
    """A total map from hidden-state labels to observable values."""

    name: str
    mapping: dict[str, Any]
    codomain: tuple = ()

    def __post_init__(self):
        mapping = dict(self.mapping)
        object.__setattr__(self, "mapping", mapping)
        codomain = tuple(self.codomain)
        if not codomain:
            seen: list = []
            for value in mapping.values():
                if value not in seen:
                    seen.append(value)
            codomain = tuple(seen)
        if len(set(codomain)) != len(codomain):
            raise ValidationError("codomain values must be distinct")
        missing = [v for v in mapping.values() if v not in codomain]
        if missing:
            raise ValidationError(f"codomain does not cover values {missing}")
        object.__setattr__(self, "codomain", codomain)

    def __call__(self, label: str):
        try:
            return self.mapping[label]
        except KeyError:
            raise ValidationError(f"information function {self.name!r} undefined on {label!r}") from None

    def check_total(self, basis: HiddenStateBasis) -> None:
        missing = [label for label in basis.labels if label not in self.mapping]
        if missing:
            raise ValidationError(
                f"information function {self.name!r} is not total; missing {missing}"
            )

    @property
    def is_real(self) -> bool:
        return all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in self.codomain)


def composite_function(functions: Sequence[InformationFunction]) -> InformationFunction:
    """Tuple-valued composite of several information functions on one domain."""
    if not functions:
        raise ValidationError("need at least one information function")
    labels = set(functions[0].mapping)
    for f in functions[1:]:
        if set(f.mapping) != labels:
            raise ValidationError("information functions must share a domain")
    name = "(" + ",".join(f.name for f in functions) + ")"
    mapping = {label: tuple(f(label) for f in functions) for label in functions[0].mapping}
    import itertools

    codomain = tuple(itertools.product(*(f.codomain for f in functions)))
    return InformationFunction(name, mapping, codomain)


def product_function(first: InformationFunction, second: InformationFunction) -> InformationFunction:
    """Pointwise product of two real-valued information functions."""
    if not (first.is_real and second.is_real):
        raise ValidationError("products need real-valued information functions")
    if set(first.mapping) != set(second.mapping):
        raise ValidationError("information functions must share a domain")
    mapping = {label: first(label) * second(label) for label in first.mapping}
    return InformationFunction(f"{first.name}*{second.name}", mapping)


@dataclass(frozen=True)
class ObservabilityReport:
    """Induced (possibly signed) distribution of an information function."""

    function_name: str
    distribution: dict[Any, float]
    observable: bool
    offending: dict[Any, float] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return float(sum(self.distribution.values()))


def hidden_state_weights(density: Density | np.ndarray, basis: HiddenStateBasis) -> np.ndarray:
    """Weights tr(P Q P*) of each hidden state; may be negative for generalized Q."""
    matrix = density.matrix if isinstance(density, Density) else np.asarray(density, dtype=complex)
    if matrix.shape != (basis.dim, basis.dim):
        raise DimensionMismatchError(
            f"density shape {matrix.shape} does not match basis dimension {basis.dim}"
        )
    weights = np.empty(basis.size)
    for i, proj in enumerate(basis.projectors):
        value = complex(np.trace(proj @ matrix @ proj.conj().T))
        weights[i] = value.real
    return weights


def induced_distribution(
    density: Density | np.ndarray,
    basis: HiddenStateBasis,
    function: InformationFunction,
    tol: float = DEFAULTS.eval_tol,
) -> ObservabilityReport:
    """Group hidden-state weights by observed value; flag negative outcomes."""
    function.check_total(basis)
    weights = hidden_state_weights(density, basis)
    distribution = {value: 0.0 for value in function.codomain}
    for label, weight in zip(basis.labels, weights):
        distribution[function(label)] += float(weight)
    offending = {value: p for value, p in distribution.items() if p < -tol}
    return ObservabilityReport(
        function_name=function.name,
        distribution=distribution,
        observable=not offending,
        offending=offending,
    )


def expectation(
    density: Density | np.ndarray,
    basis: HiddenStateBasis,
    function: InformationFunction,
) -> float:
    """Expected value of a real-valued information function under the density."""
    if not function.is_real:
        raise ValidationError(f"information function {function.name!r} is not real-valued")
    report = induced_distribution(density, basis, function)
    return float(sum(value * p for value, p in report.distribution.items()))


def joint_observability(
    density: Density | np.ndarray,
    basis: HiddenStateBasis,
    functions: Sequence[InformationFunction],
    tol: float = DEFAULTS.eval_tol,
) -> ObservabilityReport:
    """Induced distribution of the tuple-valued composite of the functions."""
    composite = composite_function(tuple(functions))
    return induced_distribution(density, basis, composite, tol)


@dataclass(frozen=True)
class BellCheck:
    """Product expectations of three sign-valued observables and the bound."""

    expectations: dict[str, float]
    lhs: float
    rhs: float
    satisfied: bool
    jointly_observable: bool
    pair_observable: dict[str, bool]
    joint_report: ObservabilityReport


def bell_check(
    density: Density | np.ndarray,
    basis: HiddenStateBasis,
    x: InformationFunction,
    y: InformationFunction,
    z: InformationFunction,
    tol: float = DEFAULTS.eval_tol,
) -> BellCheck:
    """Check |E(XY) - E(YZ)| <= 1 - E(XZ) for sign-valued X, Y, Z.

    Joint observability of the triple (the inequality's hypothesis) is
    reported alongside; with pairwise-only observability the inequality
    can fail.
    """
    for f in (x, y, z):
        if set(f.codomain) != {-1, 1}:
            raise ValidationError(
                f"information function {f.name!r} must take values in {{-1, +1}}"
            )
    e_xy = expectation(density, basis, product_function(x, y))
    e_yz = expectation(density, basis, product_function(y, z))
    e_xz = expectation(density, basis, product_function(x, z))
    lhs = abs(e_xy - e_yz)
    rhs = 1.0 - e_xz
    joint = joint_observability(density, basis, (x, y, z), tol)
    pairs = {
        f"{a.name},{b.name}": joint_observability(density, basis, (a, b), tol).observable
        for a, b in ((x, y), (y, z), (x, z))
    }
    return BellCheck(
        expectations={"XY": e_xy, "YZ": e_yz, "XZ": e_xz},
        lhs=lhs,
        rhs=rhs,
        satisfied=lhs <= rhs + tol,
        jointly_observable=joint.observable,
        pair_observable=pairs,
        joint_report=joint,
    )


@dataclass(frozen=True)
class ViterbiResult:
    """A maximum-weight hidden path and its (possibly signed) weight."""

    path: tuple[str, ...]
    weight: float
    negative_weights: bool


def viterbi_hidden_path(
    chain: QuantumChain,
    basis: HiddenStateBasis,
    word,
    tol: float = DEFAULTS.recon_tol,
) -> ViterbiResult:
    """Maximum-weight sequence of hidden states consistent with a word.

    A path's weight is the trace of alternately projecting onto hidden
    states and applying the word's letter operators, starting from the
    initial density.  Requires rank-one hidden-state projectors that the
    chain's subspace can express (otherwise per-step weights do not
    factorize and the dynamic program is unsound).  Ties prefer the
    lexicographically smallest state-index sequence; with signed weights
    both the largest and smallest partial products are tracked so the
    global maximum survives sign flips.
    """
    symbols = as_word(word, chain.alphabet)
    sub = chain.subspace
    if basis.dim != sub.ambient_dim:
        raise DimensionMismatchError("hidden-state basis does not match the chain's space")
    for label, proj in zip(basis.labels, basis.projectors):
        if abs(float(np.trace(proj).real) - 1.0) > 1e-9:
            raise UnsupportedChainError(
                f"hidden state {label!r} has a projector of rank != 1; "
                "path weights do not factorize"
            )
    coords = []
    for label, proj in zip(basis.labels, basis.projectors):
        try:
            coords.append(sub.expand(proj, check=True, tol=tol))
        except Exception as exc:
            raise UnsupportedChainError(
                f"projector for hidden state {label!r} lies outside the chain's subspace: {exc}"
            ) from exc

    n = basis.size
    init = np.array(
        [float(complex(np.trace(p @ chain.initial.matrix @ p.conj().T)).real) for p in basis.projectors]
    )
    # step_weight[a][j, i]: weight of moving from hidden state j to i on symbol a
    step_weight: dict[str, np.ndarray] = {}
    for a in chain.alphabet:
        mat = np.empty((n, n))
        for j in range(n):
            image = sub.reconstruct(coords[j] @ chain.letter_ops[a].matrix)
            for i, proj in enumerate(basis.projectors):
                mat[j, i] = float(complex(np.trace(proj @ image @ proj.conj().T)).real)
        step_weight[a] = mat
    negative = bool(init.min() < -1e-12 or any(m.min() < -1e-12 for m in step_weight.values()))

    # Each state tracks its best and worst achievable signed weight with paths.
    hi = [(float(v), (i,)) for i, v in enumerate(init)]
    lo = list(hi)
    for symbol in symbols:
        weights = step_weight[symbol]
        new_hi: list[tuple[float, tuple[int, ...]]] = []
        new_lo: list[tuple[float, tuple[int, ...]]] = []
        for i in range(n):
            candidates = []
            for j in range(n):
                factor = weights[j, i]
                for value, path in (hi[j], lo[j]):
                    candidates.append((value * factor, path + (i,)))
            new_hi.append(max(candidates, key=lambda c: (c[0], [-s for s in c[1]])))
            new_lo.append(min(candidates, key=lambda c: (c[0], c[1])))
        hi, lo = new_hi, new_lo
    best_value, best_path = max(hi, key=lambda c: (c[0], [-s for s in c[1]]))
    labels = tuple(basis.labels[i] for i in best_path)
    return ViterbiResult(labels, float(best_value), bool(negative or best_value < 0))
