"""Codon weight training, chromosome-level cross-validation and density evaluation."""
import csv
import logging
from dataclasses import dataclass, field, replace
from threading import Lock
from typing import (
    Any,
    Dict,
    Iterable,
    List,
    Mapping,
    NamedTuple,
    Optional,
    TextIO,
    Tuple,
    Union,
)

import numpy as np
from jinja2 import Template
from scipy.optimize import minimize

from cdspress.domain import (
    DNA,
    Alphabet,
    AnnotationTrack,
    CdsDensitySeries,
    ParameterVector,
    PressureProfile,
    WindowEntry,
)
from cdspress.exceptions import InsufficientData, InvalidArgument, UndefinedCorrelation
from cdspress.genomics_io import cds_density
from cdspress.literals import (
    DEFAULT_MAX_STEPS,
    DEFAULT_RADIUS,
    DEFAULT_TOLERANCE,
    SIMPLEX_STEP,
    SUMMARY_COLUMNS,
)
from cdspress.pressure import Chromosome, SubwordIndex, WindowScanner
from cdspress.signal import smoothed_correlation
from cdspress.utils import WithLogging, format_float, parallel_map

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    tolerance: float = DEFAULT_TOLERANCE
    max_steps: int = DEFAULT_MAX_STEPS
    radius: float = DEFAULT_RADIUS
    seed: int = 0
    initial: Optional[ParameterVector] = None
    restarts: int = 1
    threads: Optional[int] = 1

    def __post_init__(self):
        if not self.tolerance > 0:
            raise InvalidArgument(f"Tolerance must be positive, got {self.tolerance}")
        if self.max_steps < 1:
            raise InvalidArgument(f"max_steps must be at least 1, got {self.max_steps}")
        if not self.radius > 0:
            raise InvalidArgument(f"Radius must be positive, got {self.radius}")
        if self.restarts < 1:
            raise InvalidArgument(f"restarts must be at least 1, got {self.restarts}")


@dataclass(frozen=True)
class TrainResult:
    params: ParameterVector
    correlation: float
    trace: List[float]
    steps: int
    converged: bool
    seed: int = 0
    radius: float = DEFAULT_RADIUS

    @property
    def metadata(self) -> Dict[str, Any]:
        return {
            "correlation": self.correlation,
            "steps": self.steps,
            "seed": self.seed,
            "radius": self.radius,
            "converged": self.converged,
        }


class TrainingDataset:
    """Subword index of the valid windows with their CDS density and chromosome.

    Pressures are cached for the last evaluated parameter vector.
    """

    def __init__(
        self,
        index: SubwordIndex,
        density: np.ndarray,
        chroms: np.ndarray,
        k: int = 3,
        alphabet: Alphabet = DNA,
        counts: Optional[np.ndarray] = None,
    ):
        if len(index) != len(density) or len(density) != len(chroms):
            raise InvalidArgument("Index, density and chromosome labels must align")
        self.index = index
        self.density = np.asarray(density, dtype=float)
        self.chroms = np.asarray(chroms, dtype=object)
        self.k = k
        self.alphabet = alphabet
        self.counts = None if counts is None else np.asarray(counts, dtype=np.int64)
        self._cache: Tuple[Optional[str], Optional[np.ndarray]] = (None, None)
        self._lock = Lock()

    def __len__(self) -> int:
        return len(self.density)

    @property
    def chromosomes(self) -> List[str]:
        return list(dict.fromkeys(self.chroms.tolist()))

    def start_positions(self) -> np.ndarray:
        """Valid-window index of every counted CDS start."""
        if self.counts is None:
            raise InvalidArgument("Dataset carries no CDS counts")
        return np.repeat(np.arange(len(self)), self.counts)

    def pressures(self, v: ParameterVector) -> np.ndarray:
        if v.k != self.k or v.alphabet != self.alphabet:
            raise InvalidArgument("Parameter vector does not match the dataset")
        digest = v.digest
        with self._lock:
            cached_digest, cached = self._cache
            if cached_digest == digest and cached is not None:
                return cached
        values = self.index.pressures(v.psi, v.k)
        with self._lock:
            self._cache = (digest, values)
        return values

    def subset(self, chroms: Iterable[str]) -> "TrainingDataset":
        selected = set(chroms)
        rows = np.flatnonzero([chrom in selected for chrom in self.chroms])
        density = self.density[rows]
        total = density.sum()
        return TrainingDataset(
            self.index.select(rows),
            density / total if total > 0 else density,
            self.chroms[rows],
            self.k,
            self.alphabet,
            None if self.counts is None else self.counts[rows],
        )

    @classmethod
    def build(
        cls,
        chromosomes: List[Chromosome],
        track: AnnotationTrack,
        n: int,
        k: int = 3,
        alphabet: Alphabet = DNA,
        threads: Optional[int] = 1,
    ) -> "TrainingDataset":
        scanner = WindowScanner(n, alphabet, threads)
        specs, valid, index = scanner.index(chromosomes)
        skeleton = PressureProfile(
            window_order=n,
            window_size=scanner.size,
            entries=[
                WindowEntry(s.t, s.chrom, s.window, s.start, s.end, bool(ok))
                for s, ok in zip(specs, valid)
            ],
        )
        series = cds_density(track, skeleton)
        chroms = np.array(
            [s.chrom for s, ok in zip(specs, valid) if ok], dtype=object
        )
        return cls(
            index, series.density[valid], chroms, k, alphabet, series.counts[valid]
        )


def objective(v: ParameterVector, dataset: TrainingDataset, radius: float) -> float:
    """Correlation between the smoothed pressure profile and the smoothed CDS density."""
    return smoothed_correlation(dataset.pressures(v), dataset.density, radius)


def _to_params(x: np.ndarray, k: int, alphabet: Alphabet) -> ParameterVector:
    return ParameterVector.from_raw(np.exp(x - x.max()), k, alphabet)


class Trainer(WithLogging):
    """Maximizes the objective over log-weights with the Nelder-Mead simplex method."""

    def __init__(self, config: TrainConfig = TrainConfig()):
        self.config = config

    def initial_point(self, dataset: TrainingDataset) -> np.ndarray:
        initial = self.config.initial or ParameterVector.uniform(
            dataset.k, dataset.alphabet
        )
        if initial.k != dataset.k or initial.alphabet != dataset.alphabet:
            raise InvalidArgument("Initial parameters do not match the dataset")
        x0 = np.log(initial.weights)
        return x0 - x0.mean()

    def _run(self, dataset: TrainingDataset, x0: np.ndarray) -> TrainResult:
        config = self.config
        best = [-np.inf]
        trace: List[float] = []

        def loss(x: np.ndarray) -> float:
            params = _to_params(x, dataset.k, dataset.alphabet)
            value = objective(params, dataset, config.radius)
            best[0] = max(best[0], value)
            return -value

        def record(_: np.ndarray) -> None:
            trace.append(best[0])
            if len(trace) % 100 == 0:
                self.logger.debug(
                    f"Iteration {len(trace)}: best correlation {best[0]:.6f}"
                )

        simplex = np.vstack([x0, x0 + SIMPLEX_STEP * np.eye(len(x0))])
        result = minimize(
            loss,
            x0,
            method="Nelder-Mead",
            callback=record,
            options={
                "initial_simplex": simplex,
                "xatol": np.inf,
                "fatol": config.tolerance,
                "maxiter": config.max_steps,
                "adaptive": False,
            },
        )
        return TrainResult(
            params=_to_params(result.x, dataset.k, dataset.alphabet),
            correlation=float(np.clip(-result.fun, -1.0, 1.0)),
            trace=trace,
            steps=int(result.nit),
            converged=bool(result.success),
            seed=config.seed,
            radius=config.radius,
        )

    def fit(self, dataset: TrainingDataset) -> TrainResult:
        x0 = self.initial_point(dataset)
        best: Optional[TrainResult] = None
        for restart in range(self.config.restarts):
            start = x0
            if restart > 0:
                rng = np.random.default_rng(self.config.seed + restart)
                start = x0 + rng.normal(0.0, SIMPLEX_STEP, size=len(x0))
            result = self._run(dataset, start)
            self.logger.info(
                f"Run {restart}: correlation {result.correlation:.6f} after "
                f"{result.steps} steps (converged={result.converged})"
            )
            if best is None or result.correlation > best.correlation:
                best = result
        assert best is not None
        return best


def train(dataset: TrainingDataset, config: TrainConfig = TrainConfig()) -> TrainResult:
    return Trainer(config).fit(dataset)


class UndefinedFold(NamedTuple):
    repeat: int
    fold: int
    chromosomes: List[str]
    reason: str


@dataclass
class CrossValidationResult:
    """Held-out correlations; folds whose correlation is undefined hold None."""

    mean: float
    variance: float
    per_repeat: List[float]
    per_fold: List[List[Optional[float]]] = field(default_factory=list)
    folds: int = 7
    repeats: int = 50
    undefined: List[UndefinedFold] = field(default_factory=list)

    def render(self, template_file: str, config: TrainConfig) -> str:
        with open(template_file) as fid:
            template = Template(fid.read(), keep_trailing_newline=True)
        return template.render(result=self, config=config)


class CrossValidator(WithLogging):
    """Repeated k-fold cross-validation over chromosomes.

    A fold whose training or held-out correlation is undefined (a held-out part
    without CDS starts, or with fewer than two valid windows) is recorded and
    left out of its repeat's average.
    """

    def __init__(self, folds: int = 7, repeats: int = 50, config: TrainConfig = TrainConfig()):
        if folds < 2:
            raise InvalidArgument(f"At least two folds are needed, got {folds}")
        if repeats < 1:
            raise InvalidArgument(f"At least one repeat is needed, got {repeats}")
        self.folds = folds
        self.repeats = repeats
        self.config = config

    def partitions(self, chromosomes: List[str]) -> List[List[List[str]]]:
        if len(chromosomes) < self.folds:
            raise InvalidArgument(
                f"{len(chromosomes)} chromosomes cannot fill {self.folds} folds"
            )
        rng = np.random.default_rng(self.config.seed)
        return [
            [
                [chromosomes[i] for i in fold]
                for fold in np.array_split(rng.permutation(len(chromosomes)), self.folds)
            ]
            for _ in range(self.repeats)
        ]

    def run(self, dataset: TrainingDataset) -> CrossValidationResult:
        chromosomes = dataset.chromosomes
        partitions = self.partitions(chromosomes)
        fold_config = replace(self.config, threads=1)

        def evaluate(job: Tuple[int, int]) -> Union[float, UndefinedFold]:
            repeat, fold = job
            held_out = partitions[repeat][fold]
            training = [c for c in chromosomes if c not in held_out]
            try:
                result = train(dataset.subset(training), fold_config)
                score = objective(
                    result.params, dataset.subset(held_out), self.config.radius
                )
            except UndefinedCorrelation as e:
                self.logger.warning(
                    f"Repeat {repeat} fold {fold} holding out {held_out}: "
                    f"correlation undefined ({e})"
                )
                return UndefinedFold(repeat, fold, held_out, str(e))
            self.logger.debug(f"Repeat {repeat} fold {fold}: held-out correlation {score:.6f}")
            return score

        jobs = [(r, f) for r in range(self.repeats) for f in range(self.folds)]
        self.logger.info(
            f"Cross-validating {len(chromosomes)} chromosomes: {self.repeats} repeats of "
            f"{self.folds} folds"
        )
        outcomes = parallel_map(evaluate, jobs, self.config.threads)

        undefined = [o for o in outcomes if isinstance(o, UndefinedFold)]
        scores = [None if isinstance(o, UndefinedFold) else o for o in outcomes]
        per_fold = [
            scores[r * self.folds : (r + 1) * self.folds] for r in range(self.repeats)
        ]
        per_repeat = []
        for repeat, fold_scores in enumerate(per_fold):
            defined = [s for s in fold_scores if s is not None]
            if not defined:
                raise InsufficientData(
                    f"Every held-out fold of repeat {repeat} has an undefined correlation"
                )
            per_repeat.append(float(np.mean(defined)))
        return CrossValidationResult(
            mean=float(np.mean(per_repeat)),
            variance=float(np.var(per_repeat, ddof=1 if self.repeats > 1 else 0)),
            per_repeat=per_repeat,
            per_fold=per_fold,
            folds=self.folds,
            repeats=self.repeats,
            undefined=undefined,
        )


def cross_validate(
    dataset: TrainingDataset,
    folds: int = 7,
    repeats: int = 50,
    config: TrainConfig = TrainConfig(),
) -> CrossValidationResult:
    return CrossValidator(folds, repeats, config).run(dataset)


@dataclass(frozen=True)
class CorrelationSummary:
    """Smoothed correlations of per-window signals with the reference CDS density."""

    rows: List[Tuple[str, float]]
    radius: float

    def write(self, stream: TextIO) -> None:
        writer = csv.writer(stream, delimiter="\t", lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for name, value in self.rows:
            writer.writerow([name, format_float(value)])


def density_summary(
    profile: PressureProfile,
    reference: CdsDensitySeries,
    predicted: Mapping[str, AnnotationTrack],
    radius: float,
) -> CorrelationSummary:
    """Correlate the pressure profile, and every predicted track's per-window interval
    counts, with the reference CDS density over the valid windows.
    """
    target = reference.valid_density
    rows = [("pressure", smoothed_correlation(profile.pressures, target, radius))]
    for name, track in predicted.items():
        counts = cds_density(track, profile).valid_density
        rows.append((name, smoothed_correlation(counts, target, radius)))
    for name, value in rows:
        logger.info(f"Correlation of {name} with CDS density: {value:.6f}")
    return CorrelationSummary(rows=rows, radius=radius)
