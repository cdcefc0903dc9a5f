"""Equilibrium Markov measure of a potential and its diagnostics.

States are the words of length k - 1. State ``i`` may be followed by state ``j``
when the last k - 2 symbols of ``i`` are the first k - 2 symbols of ``j``; the pair
then spells the length-k word ``i * |A| + j % |A|``. The transfer matrix carries
the exponentiated potential of that word on every allowed pair.
"""
import hashlib
import json
from bisect import bisect_right
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
from scipy.special import xlogy

from cdspress.domain import DNA, Alphabet, ParameterVector, Sequence, all_words
from cdspress.exceptions import ConvergenceError, InvalidArgument, ParameterFormatError
from cdspress.literals import POWER_ITERATION_CAP, POWER_ITERATION_TOLERANCE
from cdspress.seqcore import kmer_codes, kmer_digits
from cdspress.utils import PathLike, open_text

STOCHASTIC_TOLERANCE = 1e-9


def incidence(k: int, base: int) -> np.ndarray:
    """Overlap compatibility of the length k - 1 states.

    >>> incidence(2, 2).astype(int).tolist()
    [[1, 1], [1, 1]]
    """
    if k < 2:
        raise InvalidArgument(f"The Markov construction needs k >= 2, got {k}")
    states = base ** (k - 1)
    i = np.arange(states)[:, None]
    j = np.arange(states)[None, :]
    return (i % base ** (k - 2)) == (j // base)


def transfer_matrix(psi: np.ndarray, k: int, base: int) -> np.ndarray:
    psi = np.asarray(psi, dtype=float)
    if len(psi) != base**k:
        raise InvalidArgument(f"Potential must have {base ** k} entries for k={k}")
    allowed = incidence(k, base)
    states = allowed.shape[0]
    words = np.arange(states)[:, None] * base + np.arange(states)[None, :] % base
    return np.where(allowed, np.exp(psi[words]), 0.0)


def _power_iteration(matrix: np.ndarray) -> Tuple[float, np.ndarray]:
    vector = np.full(matrix.shape[0], 1.0 / matrix.shape[0])
    residual = np.inf
    for iteration in range(1, POWER_ITERATION_CAP + 1):
        image = matrix @ vector
        eigenvalue = image.sum()
        residual = np.abs(image - eigenvalue * vector).sum() / eigenvalue
        vector = image / eigenvalue
        if residual < POWER_ITERATION_TOLERANCE:
            return float(eigenvalue), vector
    raise ConvergenceError("Power iteration", POWER_ITERATION_CAP, float(residual))


def perron_data(matrix: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
    """Perron eigenvalue with right and left vectors normalized so that l . r = 1."""
    eigenvalue, right = _power_iteration(matrix)
    _, left = _power_iteration(matrix.T)
    return eigenvalue, right, left / (left @ right)


def _digest(psi: np.ndarray, k: int, alphabet: Alphabet) -> str:
    hasher = hashlib.sha256()
    hasher.update(f"{alphabet.symbols}:{k}:potential:".encode("ascii"))
    hasher.update(np.ascontiguousarray(psi, dtype="<f8").tobytes())
    return hasher.hexdigest()


@dataclass(frozen=True)
class MarkovCandidate:
    """Markov measure on the overlap states given by a transition matrix and initial law."""

    P: np.ndarray
    p: np.ndarray


@dataclass(eq=False)
class EquilibriumMeasure:
    k: int
    alphabet: Alphabet
    psi: np.ndarray = field(repr=False)
    S: np.ndarray = field(repr=False)
    M: np.ndarray = field(repr=False)
    lam: float
    r: np.ndarray = field(repr=False)
    l: np.ndarray = field(repr=False)  # noqa: E741
    P: np.ndarray = field(repr=False)
    p: np.ndarray = field(repr=False)
    source_digest: str
    params: Optional[ParameterVector] = field(default=None, repr=False)

    @classmethod
    def from_potential(
        cls,
        psi: np.ndarray,
        k: int = 3,
        alphabet: Alphabet = DNA,
        params: Optional[ParameterVector] = None,
    ) -> "EquilibriumMeasure":
        psi = np.asarray(psi, dtype=float)
        base = alphabet.size
        M = transfer_matrix(psi, k, base)
        lam, r, l = perron_data(M)  # noqa: E741
        P = np.where(M > 0, M * r[None, :] / (lam * r[:, None]), 0.0)
        P = P / P.sum(axis=1, keepdims=True)
        p = l * r
        return cls(
            k=k,
            alphabet=alphabet,
            psi=psi,
            S=incidence(k, base),
            M=M,
            lam=lam,
            r=r,
            l=l,
            P=P,
            p=p / p.sum(),
            source_digest=params.digest if params else _digest(psi, k, alphabet),
            params=params,
        )

    @property
    def base(self) -> int:
        return self.alphabet.size

    @property
    def states(self) -> List[str]:
        return all_words(self.k - 1, self.alphabet)

    @cached_property
    def sampling_tables(self) -> Tuple[List[float], List[List[float]]]:
        """Cumulative initial law and cumulative next-symbol law of every state."""
        initial = np.cumsum(self.p).tolist()
        transitions = [
            np.cumsum(self.P[s, self.successors(s)]).tolist() for s in range(len(self.p))
        ]
        return initial, transitions

    def successors(self, state: int) -> np.ndarray:
        first = (state % self.base ** (self.k - 2)) * self.base
        return np.arange(first, first + self.base)

    def as_candidate(self) -> MarkovCandidate:
        return MarkovCandidate(P=self.P, p=self.p)

    def to_dict(self) -> Dict[str, Any]:
        document: Dict[str, Any] = {
            "alphabet": self.alphabet.symbols,
            "k": self.k,
            "states": self.states,
            "P": [
                [float(x) for x in self.P[i, self.successors(i)]]
                for i in range(len(self.p))
            ],
            "p": [float(x) for x in self.p],
            "lambda": self.lam,
            "source_digest": self.source_digest,
        }
        if self.params is not None:
            document["parameters"] = self.params.to_dict()
        else:
            document["potential"] = [float(x) for x in self.psi]
        return document

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> "EquilibriumMeasure":
        try:
            if "parameters" in document:
                measure = build_equilibrium_measure(
                    ParameterVector.from_dict(document["parameters"])
                )
            else:
                measure = cls.from_potential(
                    np.array(document["potential"], dtype=float),
                    int(document["k"]),
                    Alphabet(str(document["alphabet"])),
                )
            expected = document["source_digest"]
        except (KeyError, TypeError, ValueError) as e:
            raise ParameterFormatError(f"Invalid measure document: {e}")
        if measure.source_digest != expected:
            raise ParameterFormatError(
                "Measure source digest does not match its embedded parameters"
            )
        return measure

    def write(self, path: PathLike) -> None:
        with open_text(path, "wt") as fid:
            json.dump(self.to_dict(), fid, indent=2)
            fid.write("\n")

    @classmethod
    def read(cls, path: PathLike) -> "EquilibriumMeasure":
        with open_text(path) as fid:
            try:
                document = json.load(fid)
            except json.JSONDecodeError as e:
                raise ParameterFormatError(e.msg, e.lineno)
        if not isinstance(document, dict):
            raise ParameterFormatError("Measure document must be a JSON object")
        return cls.from_dict(document)


def build_equilibrium_measure(v: ParameterVector) -> EquilibriumMeasure:
    """Equilibrium measure of the potential log(v).

    >>> mu = build_equilibrium_measure(ParameterVector.uniform())
    >>> mu.lam, float(mu.P[0, 0]), float(mu.p[0])
    (0.0625, 0.25, 0.0625)
    """
    return EquilibriumMeasure.from_potential(v.psi, v.k, v.alphabet, params=v)


def _word_codes(mu: EquilibriumMeasure, w: Union[Sequence, np.ndarray]) -> np.ndarray:
    if isinstance(w, Sequence):
        if w.alphabet != mu.alphabet:
            raise InvalidArgument("Word alphabet differs from the measure alphabet")
        if w.has_ambiguity():
            raise InvalidArgument("Word holds ambiguous positions")
        codes = w.codes()
    else:
        codes = np.asarray(w, dtype=np.int64)
    if len(codes) < mu.k:
        raise InvalidArgument(f"Word of length {len(codes)} shorter than k={mu.k}")
    return codes


def measure_log_prob(mu: EquilibriumMeasure, w: Union[Sequence, np.ndarray]) -> float:
    """Natural log of the measure of the cylinder of a word."""
    states = kmer_codes(_word_codes(mu, w), mu.k - 1, mu.base)
    with np.errstate(divide="ignore"):
        return float(
            np.log(mu.p[states[0]]) + np.log(mu.P[states[:-1], states[1:]]).sum()
        )


def sample_codes(
    mu: EquilibriumMeasure, length: int, rng: np.random.Generator
) -> np.ndarray:
    if length < mu.k - 1:
        raise InvalidArgument(f"Sample length {length} shorter than k - 1 = {mu.k - 1}")
    base, width = mu.base, mu.k - 1
    initial, transitions = mu.sampling_tables
    suffix_space = base ** (width - 1)

    draws = rng.random(length - width + 1).tolist()
    state = min(bisect_right(initial, draws[0] * initial[-1]), len(initial) - 1)
    symbols = kmer_digits(state, width, base)
    for u in draws[1:]:
        row = transitions[state]
        symbol = min(bisect_right(row, u * row[-1]), base - 1)
        symbols.append(symbol)
        state = (state % suffix_space) * base + symbol
    return np.array(symbols, dtype=np.uint8)


def sample_measure(mu: EquilibriumMeasure, length: int, seed: int = 0) -> Sequence:
    """Draw a word: initial state from p, then transitions from P."""
    codes = sample_codes(mu, length, np.random.default_rng(seed))
    return Sequence.from_codes(codes, alphabet=mu.alphabet)


@dataclass(frozen=True)
class GibbsStatistics:
    n: int
    min_ratio: float
    max_ratio: float

    @property
    def spread(self) -> float:
        return self.max_ratio / self.min_ratio


@dataclass(frozen=True)
class GibbsDiagnostic:
    per_length: List[GibbsStatistics]
    lower_bound: float
    upper_bound: float


def gibbs_ratio(mu: EquilibriumMeasure, codes: np.ndarray, psi: np.ndarray) -> float:
    """mu(w) * lambda^n / exp(sum of the potential along w)."""
    codes = np.asarray(codes, dtype=np.int64)
    potential = psi[kmer_codes(codes, mu.k, mu.base)].sum()
    return float(
        np.exp(measure_log_prob(mu, codes) + len(codes) * np.log(mu.lam) - potential)
    )


def gibbs_diagnostic(
    mu: EquilibriumMeasure,
    v: Optional[ParameterVector] = None,
    n_range: Iterable[int] = range(5, 41),
    samples: int = 1000,
    seed: int = 0,
) -> GibbsDiagnostic:
    """Empirical Gibbs ratio bounds per word length, with the exact bounds.

    The ratio only depends on the first and last state of the word: it equals
    lambda^(k-1) * p(first) * r(last) / r(first).
    """
    psi = mu.psi if v is None else v.psi
    if len(psi) != len(mu.psi):
        raise InvalidArgument("Potential does not match the measure")
    rng = np.random.default_rng(seed)
    per_length = []
    for n in n_range:
        if n < mu.k:
            raise InvalidArgument(f"Word length {n} shorter than k={mu.k}")
        ratios = [gibbs_ratio(mu, sample_codes(mu, n, rng), psi) for _ in range(samples)]
        per_length.append(GibbsStatistics(n, min(ratios), max(ratios)))

    bounds = mu.lam ** (mu.k - 1) * (mu.p / mu.r)[:, None] * mu.r[None, :]
    return GibbsDiagnostic(
        per_length=per_length,
        lower_bound=float(np.min(bounds)),
        upper_bound=float(np.max(bounds)),
    )


def stationary_distribution(P: np.ndarray) -> np.ndarray:
    """Left eigenvector of a stochastic matrix for eigenvalue 1, summing to 1."""
    P = np.asarray(P, dtype=float)
    states = P.shape[0]
    system = np.vstack([P.T - np.eye(states), np.ones((1, states))])
    target = np.concatenate([np.zeros(states), [1.0]])
    p, *_ = np.linalg.lstsq(system, target, rcond=None)
    return p


def variational_gap(
    candidate: MarkovCandidate,
    mu: EquilibriumMeasure,
    psi: Optional[np.ndarray] = None,
) -> float:
    """ln(lambda) minus entropy plus mean potential of a stationary Markov candidate.

    The potential defaults to the one the measure was built from.
    """
    psi = mu.psi if psi is None else np.asarray(psi, dtype=float)
    P, p = np.asarray(candidate.P, dtype=float), np.asarray(candidate.p, dtype=float)
    if P.shape != mu.S.shape or p.shape != (mu.S.shape[0],):
        raise InvalidArgument("Candidate dimensions do not match the state space")
    if np.any(P < 0) or np.any(P[~mu.S] != 0):
        raise InvalidArgument("Candidate transitions must be non-negative on allowed pairs")
    if np.abs(P.sum(axis=1) - 1).max() > STOCHASTIC_TOLERANCE:
        raise InvalidArgument("Candidate transition matrix is not stochastic")
    if np.any(p < 0) or abs(p.sum() - 1) > STOCHASTIC_TOLERANCE:
        raise InvalidArgument("Candidate initial law is not a probability vector")
    if np.abs(p @ P - p).sum() > STOCHASTIC_TOLERANCE:
        raise InvalidArgument("Candidate initial law is not stationary")

    states = mu.S.shape[0]
    words = np.arange(states)[:, None] * mu.base + np.arange(states)[None, :] % mu.base
    flow = p[:, None] * P
    entropy = -float((p[:, None] * xlogy(P, P)).sum())
    mean_potential = float(np.where(mu.S, flow * psi[words], 0.0).sum())
    return float(np.log(mu.lam) - (entropy + mean_potential))


@dataclass(frozen=True)
class NormEntry:
    n: int
    value: float
    gap: float
    ratio: float


def matrix_norm_convergence(
    M: np.ndarray, lam: float, n_max: int, base: int = DNA.size
) -> List[NormEntry]:
    """Normalized growth (1/n) log_base ||M^(n-2)|| for n = 3..n_max.

    The norm is the sum of absolute entries. Powers are renormalized at every
    step and their log scale accumulated. ``ratio`` is ||M^(n-1)|| / ||M^(n-2)||.
    """
    if n_max < 3:
        raise InvalidArgument(f"n_max must be at least 3, got {n_max}")
    M = np.abs(np.asarray(M, dtype=float))
    target = np.log(lam) / np.log(base)
    scale = M.sum()
    power, log_norm = M / scale, np.log(scale)
    entries = []
    for n in range(3, n_max + 1):
        following = power @ M
        ratio = following.sum()
        value = log_norm / (n * np.log(base))
        entries.append(NormEntry(n, float(value), float(abs(value - target)), float(ratio)))
        power, log_norm = following / ratio, log_norm + np.log(ratio)
    return entries
