"""Quantum Markov chains and quantum predictor models.

A chain is a subspace of Hermitian matrices, one real-linear operator per
alphabet symbol (stored as a coordinate matrix over the subspace basis),
and an initial density.  Markov chains additionally require a positive
initial density and positivity-preserving letter operators; predictor
models only require unit trace, trace preservation and word probabilities
in [0, 1].  Word probabilities are traces of the composed letter
operators applied to the initial density, first letter applied first.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Callable, Mapping

import numpy as np
import scipy.linalg

from .config import DEFAULTS
from .errors import (
    BasisInsufficiencyError,
    DimensionMismatchError,
    SubspaceError,
    ValidationError,
    ValidationReport,
)
from .hermitian import Density, DensityKind, as_complex_matrix, require_hermitian
from .models import (
    FinitaryParam,
    HmmParam,
    QrwParam,
    finitary_process,
    hmm_to_finitary,
    validate_hmm,
    validate_qrw,
)
from .process import (
    Alphabet,
    Process,
    Word,
    as_word,
    build_hankel,
    check_process_axioms,
    select_row_basis,
    words_up_to,
)

__all__ = [
    "hermitian_basis",
    "OperatorSubspace",
    "SuperOperator",
    "ChainKind",
    "QuantumChain",
    "chain_eval",
    "chain_process",
    "validate_chain",
    "unitary_to_qmc",
    "povm_to_qmc",
    "qrw_to_qmc",
    "hmm_to_qmc",
    "finitary_to_qpm",
    "qpm_to_finitary",
    "as_qpm",
    "sample_chain_with_rng",
]


def hermitian_basis(n: int) -> list[np.ndarray]:
    """Orthonormal basis of the Hermitian n-by-n matrices (n**2 elements).

    Diagonal units come first, then for each pair i < j the symmetric and
    antisymmetric unit-norm elements.
    """
    out: list[np.ndarray] = []
    for i in range(n):
        unit = np.zeros((n, n), dtype=complex)
        unit[i, i] = 1.0
        out.append(unit)
    root_half = 1.0 / np.sqrt(2.0)
    for i in range(n):
        for j in range(i + 1, n):
            sym = np.zeros((n, n), dtype=complex)
            sym[i, j] = root_half
            sym[j, i] = root_half
            out.append(sym)
            anti = np.zeros((n, n), dtype=complex)
            anti[i, j] = -1j * root_half
            anti[j, i] = 1j * root_half
            out.append(anti)
    return out


class OperatorSubspace:
    """A real-linear subspace of Hermitian matrices, given by an ordered basis.

    Coordinates are row vectors against the basis; expansion solves the
    Gram system and can verify membership by reconstruction error.
    """

    def __init__(self, basis, hermitian_tol: float = DEFAULTS.hermitian_tol):
        mats = [require_hermitian(b, hermitian_tol) for b in basis]
        if not mats:
            raise ValidationError("subspace basis must not be empty")
        shape = mats[0].shape
        for mat in mats:
            if mat.shape != shape:
                raise DimensionMismatchError("basis elements differ in shape")
        self._basis = tuple(mats)
        self._stack = np.stack(mats)
        self._flat_conj = self._stack.conj().reshape(len(mats), -1)
        gram = (self._flat_conj @ self._stack.reshape(len(mats), -1).T).real
        gram = (gram + gram.T) / 2.0
        eigenvalues = np.linalg.eigvalsh(gram)
        if eigenvalues[0] <= 1e-12 * max(eigenvalues[-1], 1.0):
            raise ValidationError("subspace basis is not linearly independent")
        self._gram = gram
        self._cho = scipy.linalg.cho_factor(gram)
        self._traces = np.array([float(np.trace(m).real) for m in mats])

    @classmethod
    def full(cls, n: int) -> "OperatorSubspace":
        return cls(hermitian_basis(n))

    @classmethod
    def diagonal(cls, n: int) -> "OperatorSubspace":
        basis = []
        for i in range(n):
            unit = np.zeros((n, n), dtype=complex)
            unit[i, i] = 1.0
            basis.append(unit)
        return cls(basis)

    @property
    def basis(self) -> tuple[np.ndarray, ...]:
        return self._basis

    @property
    def dim(self) -> int:
        return len(self._basis)

    @property
    def ambient_dim(self) -> int:
        return int(self._basis[0].shape[0])

    @property
    def gram(self) -> np.ndarray:
        return self._gram

    @property
    def traces(self) -> np.ndarray:
        return self._traces

    def expand(self, matrix, check: bool = True, tol: float = DEFAULTS.recon_tol) -> np.ndarray:
        """Coordinates of a Hermitian matrix over the basis.

        With ``check`` the reconstruction error is compared against
        ``tol`` and a :class:`SubspaceError` raised for non-members.
        """
        mat = as_complex_matrix(matrix)
        if mat.shape != self._basis[0].shape:
            raise DimensionMismatchError(
                f"matrix shape {mat.shape} does not match ambient {self._basis[0].shape}"
            )
        rhs = (self._flat_conj @ mat.reshape(-1)).real
        coords = scipy.linalg.cho_solve(self._cho, rhs)
        if check:
            error = float(np.linalg.norm(self.reconstruct(coords) - mat))
            if error > tol:
                raise SubspaceError(
                    f"matrix lies outside the subspace (reconstruction error {error:.3e})"
                )
        return coords

    def reconstruct(self, coords) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        if coords.shape != (self.dim,):
            raise DimensionMismatchError(f"expected {self.dim} coordinates, got {coords.shape}")
        return np.tensordot(coords, self._stack, axes=1)

    def norm(self, coords) -> float:
        """Hermitian-space norm of the element with the given coordinates."""
        coords = np.asarray(coords, dtype=float)
        return float(np.sqrt(max(coords @ self._gram @ coords, 0.0)))

    @cached_property
    def is_unit_diagonal(self) -> bool:
        """True when the basis consists of distinct diagonal unit matrices."""
        seen: set[int] = set()
        for mat in self._basis:
            if np.any(np.abs(mat - np.diag(np.diag(mat))) > 1e-14):
                return False
            diag = np.diag(mat).real
            hot = np.flatnonzero(np.abs(diag) > 1e-14)
            if hot.size != 1 or abs(diag[hot[0]] - 1.0) > 1e-12:
                return False
            if int(hot[0]) in seen:
                return False
            seen.add(int(hot[0]))
        return True

    @property
    def spans_full(self) -> bool:
        return self.dim == self.ambient_dim**2


@dataclass(frozen=True)
class SuperOperator:
    """A real-linear map on an operator subspace, as a coordinate matrix.

    Row ``i`` of ``matrix`` holds the coordinates of the image of the
    i-th basis element, so coordinate row vectors evolve by right
    multiplication.
    """

    subspace: OperatorSubspace
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=float)
        d = self.subspace.dim
        if mat.shape != (d, d):
            raise DimensionMismatchError(f"coordinate matrix must be {d}x{d}, got {mat.shape}")
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_action(
        cls,
        subspace: OperatorSubspace,
        action: Callable[[np.ndarray], np.ndarray],
        tol: float = DEFAULTS.recon_tol,
    ) -> "SuperOperator":
        """Build the coordinate matrix by applying ``action`` to every basis element."""
        rows = [subspace.expand(action(b), check=True, tol=tol) for b in subspace.basis]
        return cls(subspace, np.vstack(rows))

    def apply_coords(self, coords: np.ndarray) -> np.ndarray:
        return np.asarray(coords, dtype=float) @ self.matrix

    def apply(self, matrix, tol: float = DEFAULTS.recon_tol) -> np.ndarray:
        coords = self.subspace.expand(matrix, check=True, tol=tol)
        return self.subspace.reconstruct(self.apply_coords(coords))


class ChainKind(Enum):
    QMC = "qmc"
    QPM = "qpm"


@dataclass(frozen=True)
class QuantumChain:
    """Letter-indexed superoperators over a common subspace plus an initial density."""

    alphabet: Alphabet
    subspace: OperatorSubspace
    letter_ops: dict[str, SuperOperator]
    initial: Density
    kind: ChainKind

    def __post_init__(self):
        for symbol in self.alphabet:
            if symbol not in self.letter_ops:
                raise ValidationError(f"missing operator for symbol {symbol!r}")
            if self.letter_ops[symbol].subspace is not self.subspace:
                raise ValidationError("letter operators must share the chain's subspace")
        extra = set(self.letter_ops) - set(self.alphabet.symbols)
        if extra:
            raise ValidationError(f"operators for unknown symbols: {sorted(extra)}")
        if self.initial.matrix.shape[0] != self.subspace.ambient_dim:
            raise DimensionMismatchError("initial density does not match the ambient dimension")
        if self.kind is ChainKind.QMC and self.initial.kind is not DensityKind.QUANTUM:
            raise ValidationError("a quantum Markov chain needs a quantum initial density")

    @cached_property
    def initial_coords(self) -> np.ndarray:
        return self.subspace.expand(self.initial.matrix)

    @cached_property
    def total_matrix(self) -> np.ndarray:
        return sum(self.letter_ops[a].matrix for a in self.alphabet)

    def letter_matrix(self, symbol: str) -> np.ndarray:
        self.alphabet.index(symbol)
        return self.letter_ops[symbol].matrix


def chain_eval(chain: QuantumChain, word) -> float:
    """tr of the composed letter operators applied to the initial density."""
    symbols = as_word(word, chain.alphabet)
    coords = chain.initial_coords
    for symbol in symbols:
        coords = coords @ chain.letter_ops[symbol].matrix
    return float(coords @ chain.subspace.traces)


def chain_process(chain: QuantumChain) -> Process:
    return Process(chain.alphabet, lambda w: chain_eval(chain, w), dimension=chain.subspace.dim)


# --------------------------------------------------------------------------
# Validation.
# --------------------------------------------------------------------------


def validate_chain(
    chain: QuantumChain,
    horizon: int | None = None,
    trace_tol: float = DEFAULTS.trace_tol,
    psd_tol: float = DEFAULTS.psd_tol,
    eval_tol: float = DEFAULTS.eval_tol,
    preserve_tol: float = DEFAULTS.preserve_tol,
    recon_tol: float = DEFAULTS.recon_tol,
    positivity_samples: int = 1000,
    seed: int = 0,
) -> ValidationReport:
    """Check the chain's defining axioms; report violations and evidence.

    Markov chains get their initial density and letter-operator positivity
    checked (exactly on diagonal-unit bases, via complete positivity plus
    counterexample search on the full Hermitian space, by sampling
    otherwise).  Predictor models get the word-probability window checked
    exhaustively up to ``horizon`` (recorded in the report).
    """
    report = ValidationReport()
    sub = chain.subspace
    try:
        coords = sub.expand(chain.initial.matrix, check=True, tol=recon_tol)
    except SubspaceError as exc:
        report.add("initial-membership", str(exc), ("initial",))
        return report

    trace = float(coords @ sub.traces)
    if abs(trace - 1.0) > trace_tol:
        report.add("initial-trace", f"tr of the initial density is {trace!r}", ("initial",))

    drift = chain.total_matrix @ sub.traces - sub.traces
    for i, value in enumerate(drift):
        if abs(value) > preserve_tol:
            report.add(
                "trace-preservation",
                f"summed operators change the trace of basis element {i} by {value!r}",
                ("operators", i),
            )

    if chain.kind is ChainKind.QMC:
        smallest = float(np.linalg.eigvalsh(chain.initial.matrix).min())
        if smallest < -psd_tol:
            report.add(
                "initial-positivity",
                f"initial density has eigenvalue {smallest!r}",
                ("initial",),
            )
        rng = np.random.default_rng(seed)
        for symbol in chain.alphabet:
            _letter_positivity(chain, symbol, report, rng, positivity_samples, psd_tol)
    else:
        window = DEFAULTS.qpm_horizon if horizon is None else horizon
        report.horizon = window
        for word in words_up_to(chain.alphabet, window):
            value = chain_eval(chain, word)
            if value < -eval_tol or value > 1.0 + eval_tol:
                report.add(
                    "word-probability",
                    f"tr over word {''.join(word) or 'empty'} is {value!r}, outside [0, 1]",
                    ("words", word),
                )
        report.note(f"word probabilities checked exhaustively up to length {window}")
    return report


def _letter_positivity(chain, symbol, report, rng, samples, psd_tol):
    sub = chain.subspace
    op = chain.letter_ops[symbol]
    if sub.is_unit_diagonal:
        worst = float(op.matrix.min())
        if worst < -psd_tol:
            report.add(
                "positivity",
                f"operator {symbol!r} has coordinate entry {worst!r} on a diagonal basis",
                ("operators", symbol),
            )
        else:
            report.note(f"operator {symbol!r}: positivity verified exactly (diagonal basis)")
        return
    if sub.spans_full:
        choi = _choi_matrix(op)
        smallest = float(np.linalg.eigvalsh(choi).min())
        if smallest >= -1e-8:
            report.note(f"operator {symbol!r}: completely positive (Choi PSD), hence positive")
            return
        counterexample = _positivity_counterexample_pure(op, rng, samples)
        if counterexample is not None:
            report.add(
                "positivity",
                f"operator {symbol!r} maps a pure density to eigenvalue {counterexample!r}",
                ("operators", symbol),
            )
        else:
            report.note(
                f"operator {symbol!r}: Choi matrix indefinite (min eigenvalue "
                f"{smallest:.3e}); no positivity counterexample in {samples} samples, "
                "positivity unproven"
            )
        return
    found, tested = _positivity_sampling(chain, op, rng, samples)
    if found is not None:
        report.add(
            "positivity",
            f"operator {symbol!r} maps a nonnegative element to eigenvalue {found!r}",
            ("operators", symbol),
        )
    elif tested == 0:
        report.note(
            f"operator {symbol!r}: could not sample nonnegative subspace elements; "
            "positivity unchecked"
        )
    else:
        report.note(
            f"operator {symbol!r}: no positivity counterexample in {tested} sampled "
            "nonnegative elements (evidence only)"
        )


def _choi_matrix(op: SuperOperator) -> np.ndarray:
    """Choi matrix of the complex-linear extension of a full-space operator."""
    n = op.subspace.ambient_dim
    choi = np.zeros((n * n, n * n), dtype=complex)
    for i in range(n):
        for j in range(n):
            if i == j:
                unit = np.zeros((n, n), dtype=complex)
                unit[i, i] = 1.0
                image = op.apply(unit)
            else:
                sym = np.zeros((n, n), dtype=complex)
                sym[i, j] = 1.0
                sym[j, i] = 1.0
                anti = np.zeros((n, n), dtype=complex)
                anti[i, j] = -1j
                anti[j, i] = 1j
                image = 0.5 * op.apply(sym) + 0.5j * op.apply(anti)
            unit_ij = np.zeros((n, n), dtype=complex)
            unit_ij[i, j] = 1.0
            choi += np.kron(unit_ij, image)
    return (choi + choi.conj().T) / 2.0


def _positivity_counterexample_pure(op, rng, samples):
    n = op.subspace.ambient_dim
    for _ in range(samples):
        vec = rng.normal(size=n) + 1j * rng.normal(size=n)
        vec /= np.linalg.norm(vec)
        image = op.apply(np.outer(vec, vec.conj()))
        smallest = float(np.linalg.eigvalsh(image).min())
        if smallest < -1e-7:
            return smallest
    return None


def _positivity_sampling(chain, op, rng, samples):
    """Search random nonnegative subspace elements for a positivity violation."""
    sub = chain.subspace
    n = sub.ambient_dim
    try:
        identity_coords = sub.expand(np.eye(n), check=True, tol=1e-10)
    except SubspaceError:
        identity_coords = None
    worst = None
    tested = 0
    attempts = 0
    while tested < samples and attempts < 20 * samples:
        attempts += 1
        coords = rng.normal(size=sub.dim)
        element = sub.reconstruct(coords)
        smallest = float(np.linalg.eigvalsh(element).min())
        if identity_coords is not None:
            if smallest < 0.0:
                coords = coords - smallest * identity_coords
                element = sub.reconstruct(coords)
        elif smallest < 0.0:
            continue
        tested += 1
        image = sub.reconstruct(op.apply_coords(coords))
        image_min = float(np.linalg.eigvalsh(image).min())
        scale = max(float(np.linalg.norm(element)), 1.0)
        if image_min < -1e-7 * scale:
            worst = image_min
            break
    return worst, tested


# --------------------------------------------------------------------------
# Constructions.
# --------------------------------------------------------------------------


def unitary_to_qmc(unitary, initial: Density, symbol: str = "a") -> QuantumChain:
    """Single-letter chain conjugating densities by a unitary."""
    u = as_complex_matrix(unitary)
    from .hermitian import is_unitary

    if u.shape[0] != u.shape[1] or not is_unitary(u):
        raise ValidationError("evolution operator must be unitary")
    if initial.kind is not DensityKind.QUANTUM:
        raise ValidationError("unitary evolution starts from a quantum density")
    if initial.dim != u.shape[0]:
        raise DimensionMismatchError("density and unitary dimensions differ")
    sub = OperatorSubspace.full(u.shape[0])
    op = SuperOperator.from_action(sub, lambda q: u @ q @ u.conj().T)
    alphabet = Alphabet((symbol,))
    return QuantumChain(alphabet, sub, {symbol: op}, initial, ChainKind.QMC)


def povm_to_qmc(
    operators: Mapping[str, np.ndarray],
    initial: Density,
    tol: float = DEFAULTS.unitary_tol,
) -> QuantumChain:
    """Repeated-measurement chain from a complete operator family.

    Completeness is checked in the trace-preserving form: the adjoints
    times the operators must sum to the identity, which makes the summed
    branch probabilities equal one on every density.
    """
    labels = tuple(operators)
    if not labels:
        raise ValidationError("measurement needs at least one operator")
    mats = {label: as_complex_matrix(operators[label]) for label in labels}
    n = initial.dim
    total = np.zeros((n, n), dtype=complex)
    for label, mat in mats.items():
        if mat.shape != (n, n):
            raise DimensionMismatchError(f"operator {label!r} must have shape {(n, n)}")
        total += mat.conj().T @ mat
    defect = float(np.linalg.norm(total - np.eye(n)))
    if defect > tol:
        raise ValidationError(
            f"measurement operators are not complete (||sum M*M - I|| = {defect:.3e})"
        )
    if initial.kind is not DensityKind.QUANTUM:
        raise ValidationError("measurement chains start from a quantum density")
    sub = OperatorSubspace.full(n)
    ops = {
        label: SuperOperator.from_action(sub, lambda q, m=mat: m @ q @ m.conj().T)
        for label, mat in mats.items()
    }
    return QuantumChain(Alphabet(labels), sub, ops, initial, ChainKind.QMC)


def qrw_to_qmc(qrw: QrwParam) -> QuantumChain:
    """Embed a quantum random walk: project-after-evolve Kraus operators per node."""
    validate_qrw(qrw).raise_if_invalid("invalid quantum random walk")
    k = qrw.dim
    sub = OperatorSubspace.full(k)
    ops: dict[str, SuperOperator] = {}
    for node in qrw.nodes:
        projector = np.zeros((k, k), dtype=complex)
        block = qrw.block(node)
        projector[block, block] = np.eye(qrw.coin_count)
        kraus = projector @ qrw.unitary
        ops[node] = SuperOperator.from_action(sub, lambda q, m=kraus: m @ q @ m.conj().T)
    initial = Density.quantum(np.outer(qrw.wave, qrw.wave.conj()))
    return QuantumChain(Alphabet(qrw.nodes.symbols), sub, ops, initial, ChainKind.QMC)


def hmm_to_qmc(hmm: HmmParam, tol: float = DEFAULTS.eval_tol) -> QuantumChain:
    """Represent a hidden Markov model on the diagonal-matrix subspace."""
    validate_hmm(hmm, tol).raise_if_invalid("invalid hidden Markov model")
    finitary = hmm_to_finitary(hmm, tol)
    n = hmm.n_states
    sub = OperatorSubspace.diagonal(n)
    ops = {
        a: SuperOperator(sub, finitary.letter_matrices[a]) for a in hmm.alphabet
    }
    initial = Density.quantum(np.diag(hmm.initial.astype(complex)), psd_tol=tol)
    return QuantumChain(hmm.alphabet, sub, ops, initial, ChainKind.QMC)


def finitary_to_qpm(
    param: FinitaryParam,
    horizon: int | None = None,
    eps: float = DEFAULTS.rank_eps,
    residual_tol: float = DEFAULTS.residual_tol,
    eval_tol: float = DEFAULTS.eval_tol,
) -> QuantumChain:
    """Predictor model over a process-function row basis of the Hankel matrix.

    The subspace is spanned by diagonal units, one per selected basis row;
    letter operators carry the shift coefficients fitted by least squares
    over all suffix columns up to ``horizon`` (default: the declared
    dimension).  Residuals above ``residual_tol`` mean the basis cannot
    reproduce the shifted rows and raise
    :class:`BasisInsufficiencyError`.
    """
    window = param.dimension if horizon is None else horizon
    if len(param.alphabet) ** max(window, 1) > 500_000:
        raise ValidationError(
            "working horizon too large for exhaustive column enumeration; pass a smaller one"
        )
    process = finitary_process(param)
    problems = check_process_axioms(process, window, max(eval_tol, 1e-9))
    if problems:
        raise ValidationError(
            "parametrization does not define a process up to the working horizon: "
            + "; ".join(problems[:3])
        )
    hankel = build_hankel(process, window, window)
    basis_words = select_row_basis(hankel, eps)
    d = len(basis_words)
    weights = np.array([process(v) for v in basis_words])
    columns = hankel.col_words
    design = np.empty((len(columns), d))
    for j, v in enumerate(basis_words):
        design[:, j] = [process(v + w) / weights[j] for w in columns]

    def fit(target: np.ndarray, what: str) -> np.ndarray:
        solution, *_ = np.linalg.lstsq(design, target, rcond=None)
        residual = float(np.linalg.norm(design @ solution - target))
        if residual > residual_tol:
            raise BasisInsufficiencyError(
                f"row basis cannot reproduce {what} (residual {residual:.3e})"
            )
        return solution

    sub = OperatorSubspace.diagonal(d) if d else None
    if sub is None:
        raise ValidationError("process has numerical rank 0; nothing to represent")
    ops: dict[str, SuperOperator] = {}
    for a in param.alphabet:
        coeff = np.empty((d, d))
        for i, v in enumerate(basis_words):
            target = np.array([process(v + (a,) + w) / weights[i] for w in columns])
            coeff[i] = fit(target, f"the {a!r}-shift of basis row {i}")
        ops[a] = SuperOperator(sub, coeff)
    root = fit(np.array([process(w) for w in columns]), "the process itself")
    initial = Density.generalized(np.diag(root.astype(complex)), trace_tol=max(residual_tol, 1e-8))
    return QuantumChain(Alphabet(param.alphabet.symbols), sub, ops, initial, ChainKind.QPM)


def qpm_to_finitary(chain: QuantumChain) -> FinitaryParam:
    """Read the chain's coordinates off as a finitary parametrization.

    The initial vector holds the initial density's coordinates, the
    letter matrices are the operators' coordinate matrices and the end
    vector the basis traces, so evaluation is the same arithmetic in a
    different order.
    """
    matrices = {a: chain.letter_ops[a].matrix.copy() for a in chain.alphabet}
    param = FinitaryParam(
        Alphabet(chain.alphabet.symbols),
        matrices,
        chain.initial_coords.copy(),
        chain.subspace.traces.copy(),
        standard_form=False,
    )
    from .models import is_standard_form

    if is_standard_form(param):
        param = FinitaryParam(
            param.alphabet, matrices, param.initial, param.end, standard_form=True
        )
    return param


def as_qpm(chain: QuantumChain) -> QuantumChain:
    """Relabel a Markov chain as a predictor model (every QMC is one)."""
    if chain.kind is ChainKind.QPM:
        return chain
    return QuantumChain(
        chain.alphabet, chain.subspace, dict(chain.letter_ops), chain.initial, ChainKind.QPM
    )


def sample_chain_with_rng(
    chain: QuantumChain,
    length: int,
    rng: np.random.Generator,
    clamp_tol: float = DEFAULTS.clamp_tol,
) -> Word:
    """Sample a word by conditional branch probabilities along the evolution."""
    from .models import _clamp_distribution, _draw

    from .errors import SamplingError

    out: list[str] = []
    coords = chain.initial_coords
    traces = chain.subspace.traces
    for _ in range(length):
        mass = float(coords @ traces)
        if mass <= clamp_tol:
            raise SamplingError(f"remaining trajectory weight {mass!r} is not positive")
        branch_coords = [coords @ chain.letter_ops[a].matrix for a in chain.alphabet]
        branch = np.array([float(c @ traces) for c in branch_coords]) / mass
        distribution = _clamp_distribution(branch, clamp_tol, "branch distribution")
        index = _draw(rng, distribution)
        out.append(chain.alphabet.symbols[index])
        coords = branch_coords[index]
    return tuple(out)
