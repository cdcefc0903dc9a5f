import io
from dataclasses import replace

import numpy as np
import pytest

from cdspress.domain import (
    AnnotationTrack,
    Defaults,
    Interval,
    ParameterVector,
    PressureProfile,
    Sequence,
    WindowEntry,
)
from cdspress.exceptions import InsufficientData, InvalidArgument, UndefinedCorrelation
from cdspress.genomics_io import cds_density
from cdspress.pressure import WindowScanner, window_size
from cdspress.signal import gaussian_smooth, pearson
from cdspress.training import (
    CrossValidator,
    TrainConfig,
    Trainer,
    TrainingDataset,
    cross_validate,
    density_summary,
    objective,
    train,
)

WINDOWS_PER_CHROMOSOME = 15


@pytest.fixture
def chromosomes():
    """Four chromosomes of windows with varying symbol composition."""
    rng = np.random.default_rng(2)
    size = window_size(3)
    result = []
    for c in range(4):
        codes = np.concatenate(
            [
                rng.choice(4, size=size, p=rng.dirichlet(np.full(4, 0.7)))
                for _ in range(WINDOWS_PER_CHROMOSOME)
            ]
        )
        result.append((f"chr{c + 1}", Sequence.from_codes(codes)))
    return result


@pytest.fixture
def planted_dataset(chromosomes, random_weights):
    """Dataset whose density is an affine image of the pressure under known weights."""
    _, _, index = WindowScanner(3).index(chromosomes)
    values = index.pressures(random_weights.psi, 3)
    density = values - values.min() + 0.1
    chroms = np.repeat([name for name, _ in chromosomes], WINDOWS_PER_CHROMOSOME)
    return TrainingDataset(index, density / density.sum(), chroms)


@pytest.fixture
def quick_config():
    return TrainConfig(tolerance=1e-10, max_steps=150, radius=2.0, seed=3)


def test_objective_of_planted_weights(planted_dataset, random_weights):
    """
    Validates that the objective reaches 1 on the weights the density was built from.
    """
    assert objective(random_weights, planted_dataset, 2.0) >= 0.99


def test_objective_needs_two_windows(planted_dataset, uniform):
    single = TrainingDataset(
        planted_dataset.index.select([0]), np.array([1.0]), np.array(["chr1"])
    )

    with pytest.raises(UndefinedCorrelation):
        objective(uniform, single, 2.0)


def test_pressures_cached(planted_dataset, random_weights):
    first = planted_dataset.pressures(random_weights)

    assert planted_dataset.pressures(random_weights) is first
    with pytest.raises(InvalidArgument):
        planted_dataset.pressures(ParameterVector.uniform(k=2))


def test_train_improves_and_traces(planted_dataset, quick_config, uniform):
    """
    Validates that training never ends below its start and that the trace is monotone.
    """
    start = objective(uniform, planted_dataset, quick_config.radius)

    result = train(planted_dataset, quick_config)

    assert result.correlation >= start
    assert result.correlation == pytest.approx(
        objective(result.params, planted_dataset, quick_config.radius), abs=1e-12
    )
    assert 0 < len(result.trace) <= quick_config.max_steps
    assert all(b >= a for a, b in zip(result.trace, result.trace[1:]))
    assert result.steps <= quick_config.max_steps
    assert result.params.weights.sum() == pytest.approx(1.0)
    assert set(result.metadata) == {"correlation", "steps", "seed", "radius", "converged"}


def test_train_deterministic(planted_dataset, quick_config):
    first = train(planted_dataset, quick_config)
    second = train(planted_dataset, quick_config)

    assert first.params == second.params
    assert first.trace == second.trace


def test_restarts_keep_best(planted_dataset, quick_config):
    single = train(planted_dataset, quick_config)
    several = train(planted_dataset, replace(quick_config, restarts=3))

    assert several.correlation >= single.correlation


def test_initial_point_centered(planted_dataset, random_weights):
    trainer = Trainer(TrainConfig(initial=random_weights))
    x0 = trainer.initial_point(planted_dataset)

    assert x0.mean() == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(
        np.exp(x0) / np.exp(x0).sum(), random_weights.weights, rtol=1e-12
    )

    with pytest.raises(InvalidArgument):
        Trainer(TrainConfig(initial=ParameterVector.uniform(k=2))).initial_point(
            planted_dataset
        )


@pytest.mark.parametrize(
    "kwargs",
    [{"tolerance": 0.0}, {"max_steps": 0}, {"radius": -1.0}, {"restarts": 0}],
)
def test_train_config_validation(kwargs):
    with pytest.raises(InvalidArgument):
        TrainConfig(**kwargs)


def test_subset_renormalizes(planted_dataset):
    subset = planted_dataset.subset(["chr2", "chr4"])

    assert len(subset) == 2 * WINDOWS_PER_CHROMOSOME
    assert subset.chromosomes == ["chr2", "chr4"]
    assert subset.density.sum() == pytest.approx(1.0)
    assert len(subset.index) == len(subset)


def test_start_positions(planted_dataset):
    with pytest.raises(InvalidArgument):
        planted_dataset.start_positions()

    dataset = TrainingDataset(
        planted_dataset.index.select([0, 1, 2]),
        np.array([0.0, 2 / 3, 1 / 3]),
        np.array(["chr1"] * 3),
        counts=np.array([0, 2, 1]),
    )
    assert dataset.start_positions().tolist() == [1, 1, 2]


def test_build_from_annotations(chromosomes):
    """
    Validates that ambiguous windows are dropped and CDS starts counted per window.
    """
    size = window_size(3)
    name, sequence = chromosomes[0]
    mask = sequence.ambiguity()
    mask[size + 3] = True
    genome = [(name, Sequence.from_codes(sequence.codes(), mask))] + chromosomes[1:2]
    track = AnnotationTrack(
        [
            Interval("chr1", 0, 100),
            Interval("chr1", size + 1, size + 30),
            Interval("chr1", 2 * size, 2 * size + 5),
            Interval("chr2", 3 * size + 2, 3 * size + 9),
        ]
    )

    dataset = TrainingDataset.build(genome, track, 3)

    assert len(dataset) == 2 * WINDOWS_PER_CHROMOSOME - 1
    assert dataset.chromosomes == ["chr1", "chr2"]
    assert np.flatnonzero(dataset.counts).tolist() == [0, 1, WINDOWS_PER_CHROMOSOME + 2]
    assert dataset.density.sum() == pytest.approx(1.0)
    assert dataset.start_positions().tolist() == [0, 1, WINDOWS_PER_CHROMOSOME + 2]


def test_partitions_cover_chromosomes(quick_config):
    validator = CrossValidator(folds=3, repeats=4, config=quick_config)
    names = [f"chr{i}" for i in range(7)]

    partitions = validator.partitions(names)

    assert len(partitions) == 4
    for folds in partitions:
        assert len(folds) == 3
        assert sorted(sum(folds, [])) == sorted(names)
    assert partitions == CrossValidator(3, 4, quick_config).partitions(names)

    with pytest.raises(InvalidArgument):
        validator.partitions(names[:2])
    with pytest.raises(InvalidArgument):
        CrossValidator(folds=1)


def test_cross_validation_summary(planted_dataset, quick_config):
    config = replace(quick_config, max_steps=20)

    result = cross_validate(planted_dataset, folds=2, repeats=3, config=config)

    assert len(result.per_repeat) == 3
    assert all(len(scores) == 2 for scores in result.per_fold)
    assert result.mean == pytest.approx(np.mean(result.per_repeat))
    assert result.variance == pytest.approx(np.var(result.per_repeat, ddof=1))
    assert all(-1.0 <= score <= 1.0 for scores in result.per_fold for score in scores)

    pooled = cross_validate(
        planted_dataset, folds=2, repeats=3, config=replace(config, threads=3)
    )
    assert pooled.per_fold == result.per_fold

    report = result.render(Defaults(dict()).template_cv_report, config)
    assert "3 repeats of 2 folds" in report
    assert f"mean\t{result.mean}" in report


def test_cross_validation_records_undefined_folds(planted_dataset, quick_config):
    """
    Validates that a held-out chromosome without CDS starts is reported, not fatal.
    """
    density = np.where(planted_dataset.chroms == "chr4", 0.0, planted_dataset.density)
    dataset = TrainingDataset(
        planted_dataset.index, density / density.sum(), planted_dataset.chroms
    )
    config = replace(quick_config, max_steps=10)

    result = cross_validate(dataset, folds=4, repeats=2, config=config)

    assert [item.chromosomes for item in result.undefined] == [["chr4"], ["chr4"]]
    for item in result.undefined:
        assert result.per_fold[item.repeat][item.fold] is None
    for scores, average in zip(result.per_fold, result.per_repeat):
        defined = [score for score in scores if score is not None]
        assert len(defined) == 3
        assert average == pytest.approx(np.mean(defined))

    report = result.render(Defaults(dict()).template_cv_report, config)
    assert "# undefined: repeat 0 fold" in report
    assert "holding out chr4" in report


def test_cross_validation_without_any_defined_fold(planted_dataset, quick_config):
    dataset = TrainingDataset(
        planted_dataset.index,
        np.zeros(len(planted_dataset)),
        planted_dataset.chroms,
    )

    with pytest.raises(InsufficientData):
        cross_validate(dataset, folds=2, repeats=1, config=replace(quick_config, max_steps=5))


def test_density_summary():
    """
    Validates the correlations of the pressure profile and of predicted tracks with
    the reference CDS density.
    """
    starts = [0, 1, 3, 1, 0, 2, 5, 2, 0, 1, 4, 0]
    profile = PressureProfile(
        window_order=3,
        window_size=66,
        entries=[
            WindowEntry(t, "chr1", t, 66 * t, 66 * (t + 1), True, 2.0 * count + 1.0)
            for t, count in enumerate(starts)
        ],
    )
    reference = AnnotationTrack(
        [
            Interval("chr1", 66 * t + i, 66 * t + i + 5)
            for t, count in enumerate(starts)
            for i in range(count)
        ]
    )
    reversed_track = AnnotationTrack(
        [
            Interval("chr1", 66 * t + i, 66 * t + i + 5)
            for t, count in enumerate(starts[::-1])
            for i in range(count)
        ]
    )
    series = cds_density(reference, profile)

    summary = density_summary(
        profile, series, {"same": reference, "reversed": reversed_track}, 1.0
    )

    names = [name for name, _ in summary.rows]
    values = dict(summary.rows)
    assert names == ["pressure", "same", "reversed"]
    assert values["pressure"] == pytest.approx(1.0, abs=1e-12)
    assert values["same"] == pytest.approx(1.0, abs=1e-12)
    assert values["reversed"] == pytest.approx(
        pearson(
            gaussian_smooth(starts[::-1], 1.0), gaussian_smooth(starts, 1.0)
        ),
        abs=1e-12,
    )

    stream = io.StringIO()
    summary.write(stream)
    lines = stream.getvalue().splitlines()
    assert lines[0] == "track\tcorrelation"
    assert lines[1].startswith("pressure\t")
