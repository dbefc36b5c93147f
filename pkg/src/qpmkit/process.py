"""Alphabets, words, process functions and truncated Hankel matrices.

A process function maps words over a finite alphabet to probabilities:
it is nonnegative, marginally consistent (the one-symbol extensions of a
word sum to the word's own value) and assigns 1 to the empty word.  The
Hankel matrix of a process, indexed by prefix and suffix words, has
finite rank exactly for the finitary processes, and its numerical rank
and row bases drive the conversions elsewhere in the package.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import DEFAULTS
from .errors import (
    AlphabetError,
    DegenerateSupportError,
    DimensionMismatchError,
    ValidationError,
)

__all__ = [
    "Alphabet",
    "Word",
    "EPSILON",
    "words_of_length",
    "words_up_to",
    "format_word",
    "parse_word",
    "Process",
    "check_process_axioms",
    "TruncatedHankel",
    "build_hankel",
    "numerical_rank",
    "select_row_basis",
    "processes_equivalent",
]

Word = tuple[str, ...]

EPSILON: Word = ()


@dataclass(frozen=True)
class Alphabet:
    """An ordered collection of distinct symbol tokens."""

    symbols: tuple[str, ...]

    def __post_init__(self):
        symbols = tuple(str(s) for s in self.symbols)
        object.__setattr__(self, "symbols", symbols)
        if not symbols:
            raise ValidationError("alphabet must not be empty")
        if len(set(symbols)) != len(symbols):
            raise ValidationError(f"alphabet has duplicate symbols: {symbols}")

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __contains__(self, symbol) -> bool:
        return symbol in self.symbols

    def index(self, symbol: str) -> int:
        try:
            return self.symbols.index(symbol)
        except ValueError:
            raise AlphabetError(f"symbol {symbol!r} not in alphabet {self.symbols}") from None


def words_of_length(alphabet: Alphabet, length: int) -> list[Word]:
    """All words of exactly ``length`` symbols, in alphabet order."""
    if length < 0:
        raise ValidationError("word length must be >= 0")
    return [tuple(p) for p in itertools.product(alphabet.symbols, repeat=length)]


def words_up_to(alphabet: Alphabet, max_length: int) -> list[Word]:
    """All words of at most ``max_length`` symbols, shortest first."""
    out: list[Word] = []
    for t in range(max_length + 1):
        out.extend(words_of_length(alphabet, t))
    return out


def format_word(word: Word) -> str:
    """Render a word for output: symbols joined, multi-char symbols comma-separated."""
    if all(len(s) == 1 for s in word):
        return "".join(word)
    return ",".join(word)


def parse_word(text: str, alphabet: Alphabet) -> Word:
    """Parse the CLI's word syntax (concatenated chars or comma-separated tokens)."""
    if text == "":
        return EPSILON
    if "," in text:
        parts = tuple(text.split(","))
    elif all(len(s) == 1 for s in alphabet.symbols):
        parts = tuple(text)
    else:
        parts = (text,)
    for symbol in parts:
        alphabet.index(symbol)
    return parts


def as_word(word, alphabet: Alphabet | None = None) -> Word:
    """Normalize str/sequence input to a symbol tuple, optionally validated."""
    if isinstance(word, str):
        if alphabet is None:
            return tuple(word)
        return parse_word(word, alphabet)
    parts = tuple(word)
    if alphabet is not None:
        for symbol in parts:
            alphabet.index(symbol)
    return parts


@dataclass(frozen=True)
class Process:
    """A word-probability function with an optional declared finitary dimension."""

    alphabet: Alphabet
    fn: Callable[[Word], float]
    dimension: int | None = None

    def __call__(self, word) -> float:
        return float(self.fn(as_word(word, self.alphabet)))


def check_process_axioms(
    process: Process, horizon: int, tol: float = DEFAULTS.eval_tol
) -> list[str]:
    """Check nonnegativity, marginal consistency and p() == 1 up to ``horizon``.

    Returns human-readable problem descriptions; empty means the axioms
    hold on every word of length at most ``horizon``.
    """
    problems: list[str] = []
    root = process(EPSILON)
    if abs(root - 1.0) > tol:
        problems.append(f"p(empty word) is {root!r}, expected 1")
    for word in words_up_to(process.alphabet, horizon):
        value = process(word)
        if value < -tol:
            problems.append(f"p({format_word(word) or 'empty'}) is negative: {value!r}")
        if len(word) < horizon:
            extended = sum(process(word + (a,)) for a in process.alphabet)
            if abs(extended - value) > tol:
                problems.append(
                    f"one-symbol extensions of {format_word(word) or 'empty'} "
                    f"sum to {extended!r}, expected {value!r}"
                )
    return problems


@dataclass(frozen=True)
class TruncatedHankel:
    """The matrix [p(vw)] over all prefixes v and suffixes w up to fixed lengths."""

    alphabet: Alphabet
    row_words: tuple[Word, ...]
    col_words: tuple[Word, ...]
    matrix: np.ndarray
    _row_index: dict = field(repr=False, default_factory=dict)
    _col_index: dict = field(repr=False, default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "_row_index", {w: i for i, w in enumerate(self.row_words)})
        object.__setattr__(self, "_col_index", {w: i for i, w in enumerate(self.col_words)})

    def entry(self, row_word: Word, col_word: Word) -> float:
        return float(self.matrix[self._row_index[row_word], self._col_index[col_word]])

    def row(self, row_word: Word) -> np.ndarray:
        return self.matrix[self._row_index[row_word]]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow([""] + [format_word(w) for w in self.col_words])
            for word, row in zip(self.row_words, self.matrix):
                writer.writerow([format_word(word)] + [repr(float(x)) for x in row])


def build_hankel(process: Process, row_length: int, col_length: int) -> TruncatedHankel:
    """Evaluate the process on every prefix/suffix pair up to the given lengths."""
    if row_length < 0 or col_length < 0:
        raise ValidationError("Hankel truncation lengths must be >= 0")
    rows = tuple(words_up_to(process.alphabet, row_length))
    cols = tuple(words_up_to(process.alphabet, col_length))
    matrix = np.empty((len(rows), len(cols)))
    for i, v in enumerate(rows):
        for j, w in enumerate(cols):
            matrix[i, j] = process(v + w)
    return TruncatedHankel(process.alphabet, rows, cols, matrix)


def numerical_rank(hankel: TruncatedHankel, eps: float = DEFAULTS.rank_eps) -> int:
    """Number of singular values above ``eps`` times the largest one."""
    singulars = np.linalg.svd(hankel.matrix, compute_uv=False)
    if singulars.size == 0 or singulars[0] <= 0.0:
        return 0
    return int(np.sum(singulars > eps * singulars[0]))


def select_row_basis(hankel: TruncatedHankel, eps: float = DEFAULTS.rank_eps) -> list[Word]:
    """Greedily pick prefix words whose rows span the Hankel row space.

    Candidates are visited shortest-word-first and must satisfy
    p(v) > eps so that the normalized rows are again process functions.
    Raises :class:`DegenerateSupportError` when the eligible rows cannot
    reach the numerical rank.
    """
    target = numerical_rank(hankel, eps)
    if target == 0:
        return []
    singular_max = float(np.linalg.svd(hankel.matrix, compute_uv=False)[0])
    eps_col = hankel._col_index.get(EPSILON)
    if eps_col is None:
        raise ValidationError("Hankel columns must include the empty word")

    chosen: list[Word] = []
    ortho: list[np.ndarray] = []
    skipped_support = 0
    for i, word in enumerate(hankel.row_words):
        if hankel.matrix[i, eps_col] <= eps:
            skipped_support += 1
            continue
        residual = hankel.matrix[i].astype(float)
        for q in ortho:  # two Gram-Schmidt passes for stability
            residual = residual - np.dot(q, residual) * q
        for q in ortho:
            residual = residual - np.dot(q, residual) * q
        norm = float(np.linalg.norm(residual))
        if norm > eps * singular_max:
            chosen.append(word)
            ortho.append(residual / norm)
            if len(chosen) == target:
                return chosen
    raise DegenerateSupportError(
        f"found {len(chosen)} independent rows with p(v) > {eps:g} but the numerical "
        f"rank is {target} ({skipped_support} rows skipped for insufficient weight)"
    )


def processes_equivalent(
    first: Process,
    second: Process,
    dim_first: int | None = None,
    dim_second: int | None = None,
    tol: float = DEFAULTS.equiv_tol,
) -> bool:
    """Compare two finitary processes on every word up to the sum of their dimensions."""
    if first.alphabet.symbols != second.alphabet.symbols:
        raise DimensionMismatchError("processes must share an alphabet")
    d_first = dim_first if dim_first is not None else first.dimension
    d_second = dim_second if dim_second is not None else second.dimension
    if d_first is None or d_second is None:
        raise ValidationError("both processes need a known finitary dimension")
    horizon = int(d_first) + int(d_second)
    for word in words_up_to(first.alphabet, horizon):
        if abs(first(word) - second(word)) > tol:
            return False
    return True
