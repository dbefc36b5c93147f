"""Model files: a single JSON schema for every model family.

Top level: ``schema_version``, ``kind``, ``alphabet`` (null for kinds that
have none) and a kind-specific ``payload``.  Complex scalars are
``[re, im]`` pairs; real matrices are plain nested lists; Hermitian
matrices are stored in full and their redundancy is checked on load.
Unknown fields are rejected.  The canonical writer sorts object keys and
prints floats in their shortest round-tripping form, so saving a loaded
canonical file reproduces it byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .chain import ChainKind, OperatorSubspace, QuantumChain, SuperOperator, validate_chain
from .config import Config, DEFAULTS
from .errors import QpmkitError, SchemaError, ValidationReport
from .hermitian import Density, DensityKind, hermitian_defect
from .hidden import InformationFunction
from .models import (
    FfmcParam,
    FinitaryParam,
    HmmParam,
    QrwParam,
    validate_hmm,
    validate_qrw,
)
from .process import Alphabet

__all__ = [
    "SCHEMA_VERSION",
    "DensityFile",
    "InfoFunctionsFile",
    "canonical_json",
    "load_model",
    "load_model_report",
    "save_model",
    "model_kind",
]

SCHEMA_VERSION = "1"

_TOP_KEYS = {"schema_version", "kind", "alphabet", "payload"}

_PAYLOAD_KEYS = {
    "hmm": ({"states", "emission", "initial", "transition"}, set()),
    "ffmc": ({"states", "observation", "initial", "transition"}, set()),
    "finitary": ({"dimension", "letter_matrices", "initial", "end", "standard_form"}, set()),
    "qrw": ({"edges", "coins", "unitary", "wave"}, set()),
    "qmc": ({"ambient_dim", "basis", "operators", "initial", "initial_kind"}, set()),
    "qpm": ({"ambient_dim", "basis", "operators", "initial", "initial_kind"}, set()),
    "density": ({"matrix", "kind"}, {"labels", "info_functions"}),
    "info_functions": ({"labels", "functions"}, set()),
}


@dataclass(frozen=True)
class DensityFile:
    """A density plus optional hidden-state labels and information functions."""

    density: Density
    labels: tuple[str, ...] | None = None
    functions: dict[str, InformationFunction] | None = None


@dataclass(frozen=True)
class InfoFunctionsFile:
    labels: tuple[str, ...]
    functions: dict[str, InformationFunction]


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, indent=2, allow_nan=False) + "\n"


# --------------------------------------------------------------------------
# Reading.
# --------------------------------------------------------------------------


def load_model(path, config: Config = DEFAULTS):
    """Load and validate a model file; raise :class:`SchemaError` on any problem."""
    model, _, violations = _load(path, config)
    if violations:
        raise SchemaError(violations)
    return model


def load_model_report(path, config: Config = DEFAULTS):
    """Like :func:`load_model` but returns ``(model_or_None, kind, violations)``."""
    return _load(path, config)


def _load(path, config: Config):
    try:
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
    except OSError as exc:
        return None, None, [f"cannot read file: {exc}"]
    except json.JSONDecodeError as exc:
        return None, None, [f"not valid JSON: {exc}"]
    if not isinstance(raw, dict):
        return None, None, ["top level must be a JSON object"]

    violations: list[str] = []
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        violations.append(f"unknown top-level fields: {sorted(unknown)}")
    missing = _TOP_KEYS - set(raw)
    if missing:
        violations.append(f"missing top-level fields: {sorted(missing)}")
        return None, None, violations
    if raw["schema_version"] != SCHEMA_VERSION:
        violations.append(
            f"schema_version {raw['schema_version']!r} unsupported (expected {SCHEMA_VERSION!r})"
        )
        return None, None, violations
    kind = raw["kind"]
    if kind not in _PAYLOAD_KEYS:
        violations.append(f"unknown kind {kind!r}")
        return None, kind, violations
    payload = raw["payload"]
    if not isinstance(payload, dict):
        violations.append("payload must be a JSON object")
        return None, kind, violations
    required, optional = _PAYLOAD_KEYS[kind]
    unknown = set(payload) - required - optional
    if unknown:
        violations.append(f"unknown payload fields for kind {kind!r}: {sorted(unknown)}")
    missing = required - set(payload)
    if missing:
        violations.append(f"missing payload fields for kind {kind!r}: {sorted(missing)}")
    if violations:
        return None, kind, violations

    try:
        model, report = _PARSERS[kind](raw["alphabet"], payload, config)
    except QpmkitError as exc:
        return None, kind, [str(exc)]
    except (TypeError, ValueError, KeyError) as exc:
        return None, kind, [f"malformed payload: {exc}"]
    if report is not None and not report.ok:
        return None, kind, report.messages()
    return model, kind, []


def _need_alphabet(alphabet) -> Alphabet:
    if not isinstance(alphabet, list) or not alphabet:
        raise ValueError("alphabet must be a non-empty list of symbols")
    return Alphabet(tuple(str(s) for s in alphabet))


def _real_matrix(data, what: str) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim not in (1, 2):
        raise ValueError(f"{what} must be a vector or matrix")
    return arr


def _complex_entry(data, what: str) -> complex:
    if not (isinstance(data, list) and len(data) == 2):
        raise ValueError(f"{what}: complex scalars must be [re, im] pairs")
    return complex(float(data[0]), float(data[1]))


def _complex_matrix(data, what: str) -> np.ndarray:
    if not isinstance(data, list) or not data:
        raise ValueError(f"{what} must be a non-empty nested list")
    rows = []
    for i, row in enumerate(data):
        if not isinstance(row, list):
            raise ValueError(f"{what} row {i} is not a list")
        rows.append([_complex_entry(cell, f"{what}[{i}][{j}]") for j, cell in enumerate(row)])
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"{what} rows differ in length")
    return np.array(rows, dtype=complex)


def _complex_vector(data, what: str) -> np.ndarray:
    if not isinstance(data, list):
        raise ValueError(f"{what} must be a list")
    return np.array([_complex_entry(cell, f"{what}[{i}]") for i, cell in enumerate(data)])


def _hermitian_checked(data, what: str, config: Config) -> np.ndarray:
    mat = _complex_matrix(data, what)
    if mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{what} must be square")
    defect = hermitian_defect(mat)
    if defect > config.hermitian_tol:
        raise ValueError(f"{what} is not self-adjoint (defect {defect:.3e})")
    return mat


def _parse_hmm(alphabet, payload, config):
    hmm = HmmParam(
        states=tuple(str(s) for s in payload["states"]),
        alphabet=_need_alphabet(alphabet),
        emission=_real_matrix(payload["emission"], "emission"),
        initial=_real_matrix(payload["initial"], "initial"),
        transition=_real_matrix(payload["transition"], "transition"),
    )
    return hmm, validate_hmm(hmm, config.eval_tol)


def _parse_ffmc(alphabet, payload, config):
    ffmc = FfmcParam(
        states=tuple(str(s) for s in payload["states"]),
        observation={str(k): str(v) for k, v in payload["observation"].items()},
        initial=_real_matrix(payload["initial"], "initial"),
        transition=_real_matrix(payload["transition"], "transition"),
        alphabet=_need_alphabet(alphabet),
    )
    return ffmc, validate_hmm(ffmc.to_hmm(), config.eval_tol)


def _parse_finitary(alphabet, payload, config):
    alpha = _need_alphabet(alphabet)
    dimension = int(payload["dimension"])
    matrices = {
        str(sym): _real_matrix(mat, f"letter matrix {sym!r}")
        for sym, mat in payload["letter_matrices"].items()
    }
    param = FinitaryParam(
        alphabet=alpha,
        letter_matrices=matrices,
        initial=_real_matrix(payload["initial"], "initial"),
        end=_real_matrix(payload["end"], "end"),
        standard_form=bool(payload["standard_form"]),
    )
    report = ValidationReport()
    if param.dimension != dimension:
        report.add("dimension", f"declared dimension {dimension} but vectors have {param.dimension}")
    if param.standard_form:
        from .models import is_standard_form

        if not is_standard_form(param, config.eval_tol):
            report.add("standard-form", "flagged standard form but constraints do not hold")
    return param, report


def _parse_qrw(alphabet, payload, config):
    qrw = QrwParam(
        nodes=_need_alphabet(alphabet),
        edges=tuple((str(a), str(b)) for a, b in payload["edges"]),
        coins=tuple(str(c) for c in payload["coins"]),
        unitary=_complex_matrix(payload["unitary"], "unitary"),
        wave=_complex_vector(payload["wave"], "wave"),
    )
    return qrw, validate_qrw(qrw, config.unitary_tol, config.trace_tol)


def _parse_chain(kind: ChainKind):
    def parse(alphabet, payload, config):
        alpha = _need_alphabet(alphabet)
        ambient = int(payload["ambient_dim"])
        basis = [
            _hermitian_checked(mat, f"basis[{i}]", config)
            for i, mat in enumerate(payload["basis"])
        ]
        for i, mat in enumerate(basis):
            if mat.shape != (ambient, ambient):
                raise ValueError(f"basis[{i}] must be {ambient}x{ambient}")
        subspace = OperatorSubspace(basis, config.hermitian_tol)
        operators = {
            str(sym): SuperOperator(subspace, _real_matrix(mat, f"operator {sym!r}"))
            for sym, mat in payload["operators"].items()
        }
        initial_matrix = _hermitian_checked(payload["initial"], "initial", config)
        wants = str(payload["initial_kind"])
        if wants == DensityKind.QUANTUM.value:
            initial = Density.quantum(
                initial_matrix, config.trace_tol, config.psd_tol, config.hermitian_tol
            )
        elif wants == DensityKind.GENERALIZED.value:
            initial = Density.generalized(initial_matrix, config.trace_tol, config.hermitian_tol)
        else:
            raise ValueError(f"unknown initial_kind {wants!r}")
        chain = QuantumChain(alpha, subspace, operators, initial, kind)
        report = validate_chain(
            chain,
            trace_tol=config.trace_tol,
            psd_tol=config.psd_tol,
            eval_tol=config.eval_tol,
            preserve_tol=config.preserve_tol,
            recon_tol=config.recon_tol,
            horizon=config.qpm_horizon,
        )
        return chain, report

    return parse


def _parse_density(alphabet, payload, config):
    if alphabet is not None:
        raise ValueError("density files take no alphabet (use null)")
    matrix = _hermitian_checked(payload["matrix"], "matrix", config)
    wants = str(payload["kind"])
    if wants == DensityKind.QUANTUM.value:
        density = Density.quantum(matrix, config.trace_tol, config.psd_tol, config.hermitian_tol)
    elif wants == DensityKind.GENERALIZED.value:
        density = Density.generalized(matrix, config.trace_tol, config.hermitian_tol)
    else:
        raise ValueError(f"unknown density kind {wants!r}")
    labels = None
    functions = None
    if "labels" in payload:
        labels = tuple(str(s) for s in payload["labels"])
        if len(labels) != density.dim:
            raise ValueError("one label per matrix dimension required")
    if "info_functions" in payload:
        if labels is None:
            raise ValueError("info_functions require labels")
        functions = _parse_functions(payload["info_functions"], labels)
    return DensityFile(density, labels, functions), None


def _parse_info_functions(alphabet, payload, config):
    if alphabet is not None:
        raise ValueError("info_functions files take no alphabet (use null)")
    labels = tuple(str(s) for s in payload["labels"])
    functions = _parse_functions(payload["functions"], labels)
    return InfoFunctionsFile(labels, functions), None


def _parse_functions(data, labels) -> dict[str, InformationFunction]:
    if not isinstance(data, dict):
        raise ValueError("info functions must map names to label->value tables")
    out: dict[str, InformationFunction] = {}
    for name, table in data.items():
        if not isinstance(table, dict):
            raise ValueError(f"info function {name!r} must be a label->value table")
        missing = [label for label in labels if label not in table]
        if missing:
            raise ValueError(f"info function {name!r} missing labels {missing}")
        extra = set(table) - set(labels)
        if extra:
            raise ValueError(f"info function {name!r} has unknown labels {sorted(extra)}")
        out[str(name)] = InformationFunction(str(name), {str(k): v for k, v in table.items()})
    return out


_PARSERS = {
    "hmm": _parse_hmm,
    "ffmc": _parse_ffmc,
    "finitary": _parse_finitary,
    "qrw": _parse_qrw,
    "qmc": _parse_chain(ChainKind.QMC),
    "qpm": _parse_chain(ChainKind.QPM),
    "density": _parse_density,
    "info_functions": _parse_info_functions,
}


# --------------------------------------------------------------------------
# Writing.
# --------------------------------------------------------------------------


def _dump_complex(value: complex) -> list[float]:
    return [float(value.real), float(value.imag)]


def _dump_cmatrix(matrix: np.ndarray) -> list[list[list[float]]]:
    return [[_dump_complex(cell) for cell in row] for row in np.asarray(matrix, dtype=complex)]


def _dump_rmatrix(matrix: np.ndarray) -> list:
    arr = np.asarray(matrix, dtype=float)
    if arr.ndim == 1:
        return [float(x) for x in arr]
    return [[float(x) for x in row] for row in arr]


def model_kind(model) -> str:
    if isinstance(model, HmmParam):
        return "hmm"
    if isinstance(model, FfmcParam):
        return "ffmc"
    if isinstance(model, FinitaryParam):
        return "finitary"
    if isinstance(model, QrwParam):
        return "qrw"
    if isinstance(model, QuantumChain):
        return model.kind.value
    if isinstance(model, (Density, DensityFile)):
        return "density"
    if isinstance(model, InfoFunctionsFile):
        return "info_functions"
    raise ValueError(f"cannot serialize {type(model).__name__}")


def model_to_dict(model) -> dict:
    kind = model_kind(model)
    if isinstance(model, HmmParam):
        alphabet = list(model.alphabet.symbols)
        payload = {
            "states": list(model.states),
            "emission": _dump_rmatrix(model.emission),
            "initial": _dump_rmatrix(model.initial),
            "transition": _dump_rmatrix(model.transition),
        }
    elif isinstance(model, FfmcParam):
        alphabet = list(model.alphabet.symbols) if model.alphabet else sorted(set(model.observation.values()))
        payload = {
            "states": list(model.states),
            "observation": dict(model.observation),
            "initial": _dump_rmatrix(model.initial),
            "transition": _dump_rmatrix(model.transition),
        }
    elif isinstance(model, FinitaryParam):
        alphabet = list(model.alphabet.symbols)
        payload = {
            "dimension": model.dimension,
            "letter_matrices": {a: _dump_rmatrix(m) for a, m in model.letter_matrices.items()},
            "initial": _dump_rmatrix(model.initial),
            "end": _dump_rmatrix(model.end),
            "standard_form": bool(model.standard_form),
        }
    elif isinstance(model, QrwParam):
        alphabet = list(model.nodes.symbols)
        payload = {
            "edges": [list(e) for e in model.edges],
            "coins": list(model.coins),
            "unitary": _dump_cmatrix(model.unitary),
            "wave": [_dump_complex(c) for c in model.wave],
        }
    elif isinstance(model, QuantumChain):
        alphabet = list(model.alphabet.symbols)
        payload = {
            "ambient_dim": model.subspace.ambient_dim,
            "basis": [_dump_cmatrix(b) for b in model.subspace.basis],
            "operators": {a: _dump_rmatrix(model.letter_ops[a].matrix) for a in model.alphabet},
            "initial": _dump_cmatrix(model.initial.matrix),
            "initial_kind": model.initial.kind.value,
        }
    elif isinstance(model, (Density, DensityFile)):
        bundle = model if isinstance(model, DensityFile) else DensityFile(model)
        alphabet = None
        payload = {
            "matrix": _dump_cmatrix(bundle.density.matrix),
            "kind": bundle.density.kind.value,
        }
        if bundle.labels is not None:
            payload["labels"] = list(bundle.labels)
        if bundle.functions is not None:
            payload["info_functions"] = {
                name: dict(f.mapping) for name, f in bundle.functions.items()
            }
    else:
        alphabet = None
        payload = {
            "labels": list(model.labels),
            "functions": {name: dict(f.mapping) for name, f in model.functions.items()},
        }
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "alphabet": alphabet,
        "payload": payload,
    }


def save_model(model, path=None) -> str:
    """Serialize a model canonically; write to ``path`` when given."""
    text = canonical_json(model_to_dict(model))
    if path is not None:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
    return text
