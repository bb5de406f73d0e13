import numpy as np
import pytest
from numpy.testing import assert_allclose

from arlib.errors import InsufficientTail, NoDivergence, SamplingFailure
from arlib.geometry.cdcheck import (
    DEFAULT_K_GRID,
    default_x_grid,
    difference_series,
    fit_singularity,
    policy,
    sample_curve,
    verdict,
)
from arlib.geometry.disintegration import Pipeline
from arlib.geometry.structure import Chart

from .conftest import planar

GRID = np.geomspace(0.4, 5e-3, 12)


def synthetic(fn, grid=GRID):
    return [(float(x), fn(x)) for x in grid]


def test_default_grid():
    grid = default_x_grid()
    assert len(grid) == 12
    assert grid[0] == pytest.approx(0.4)
    assert grid[-1] == pytest.approx(5e-3)
    clipped = default_x_grid(Chart.from_flat([-0.3, 0.3, -1.0, 1.0]))
    assert np.all(clipped <= 0.3) and len(clipped) > 0


def test_grushin_samples(grushin):
    curve = sample_curve(grushin, [0.4, 0.2, 0.1, 0.05])
    assert [x for x, _ in curve] == [0.4, 0.2, 0.1, 0.05]
    assert_allclose([v for _, v in curve], [6.25, 25.0, 100.0, 400.0], rtol=1e-6)
    assert curve.failures == []

    taylor = sample_curve(grushin, [0.4, 0.05], Pipeline.NUMERIC_TAYLOR)
    assert_allclose([v for _, v in taylor], [6.25, 400.0], rtol=1e-3)


def test_r4_and_flat_samples(r4, flat):
    assert_allclose([v for _, v in sample_curve(r4, [0.4, 0.2])], [3.125, 12.5], rtol=1e-6)
    assert_allclose([v for _, v in sample_curve(flat, [0.4, 0.2, 0.1])], 0.0, atol=1e-12)


def test_samples_sorted_and_threaded(grushin):
    curve = sample_curve(grushin, [0.05, 0.4, 0.1, 0.2], threads=3)
    assert [x for x, _ in curve] == [0.4, 0.2, 0.1, 0.05]


def test_grid_must_lie_in_chart(grushin):
    with pytest.raises(ValueError):
        sample_curve(grushin, [2.0, 0.1])
    with pytest.raises(ValueError):
        sample_curve(grushin, [0.1, 1e-6])
    with pytest.raises(ValueError):
        sample_curve(grushin, [])


def test_grushin_fit_and_verdict(grushin):
    fit = fit_singularity(sample_curve(grushin))
    assert fit.fitted_order == pytest.approx(-2.0, abs=0.02)
    assert fit.fitted_coefficient == pytest.approx(1.0, abs=0.02)
    assert fit.r_squared > 0.999
    assert fit.monotone_tail and fit.diverges

    result = verdict(grushin, fit)
    assert result.certified and result.label == "FAIL-CD"
    assert result.K_grid == DEFAULT_K_GRID
    assert "for all K" in result.statement
    for entry in result.per_K:
        x, K = entry["x"], entry["K"]
        assert 1 / x**2 > -K
        assert all(1 / y**2 <= -K for y, _ in fit.samples if y > x)


def test_synthetic_power_laws():
    fit = fit_singularity(synthetic(lambda x: 3.0 / x))
    assert fit.fitted_order == pytest.approx(-1.0)
    assert fit.fitted_coefficient == pytest.approx(3.0)
    with pytest.raises(NoDivergence) as err:
        verdict("synthetic", fit)
    assert err.value.verdict.label == "INCONCLUSIVE"
    assert "order" in err.value.verdict.reason

    fit = fit_singularity(synthetic(lambda x: 0.5 / x**3))
    assert fit.fitted_order == pytest.approx(-3.0)
    assert verdict("synthetic", fit).certified


def test_non_monotone_tail_is_inconclusive():
    samples = synthetic(lambda x: 1 / x**2)
    samples[-2] = (samples[-2][0], samples[-1][1] * 1.01)
    fit = fit_singularity(samples)
    assert not fit.monotone_tail
    with pytest.raises(NoDivergence):
        verdict("wobbly", fit)


def test_insufficient_tail():
    with pytest.raises(InsufficientTail):
        fit_singularity(synthetic(lambda x: 0.0))
    with pytest.raises(InsufficientTail):
        fit_singularity(synthetic(lambda x: -1 / x**2))
    with pytest.raises(InsufficientTail):
        fit_singularity(synthetic(lambda x: 1 / x**2, grid=[0.4, 0.2, 0.1]))


def test_constant_curve_is_inconclusive():
    fit = fit_singularity(synthetic(lambda x: 5.0))
    assert fit.fitted_order == pytest.approx(0.0, abs=1e-12)
    assert fit.r_squared == 1.0
    with pytest.raises(NoDivergence):
        verdict("constant", fit)


def test_flat_has_no_tail(flat):
    with pytest.raises(InsufficientTail):
        fit_singularity(sample_curve(flat))


@pytest.mark.parametrize("power, coefficient", [(1, 1.0), (2, 2.0), (3, 3.0)])
def test_step_law(power, coefficient):
    s = planar(f"x^{power}")
    fit = fit_singularity(sample_curve(s))
    assert fit.fitted_order == pytest.approx(-2.0, abs=0.02)
    assert fit.fitted_coefficient == pytest.approx(coefficient, rel=0.05)


def test_measure_does_not_change_the_order(grushin):
    weighted = planar("x", measure="exp(x + z1)")
    curve = sample_curve(weighted)
    fit = fit_singularity(curve)
    assert -2.1 <= fit.fitted_order <= -1.9
    assert verdict(weighted, fit).certified

    difference = difference_series(curve, sample_curve(grushin))
    assert len(difference) == len(curve)
    assert_allclose([v for _, v in difference], [-1 / x for x, _ in difference], rtol=1e-9)
    assert fit_singularity(difference, absolute=True).fitted_order >= -1.2


def test_sampling_failures_are_counted():
    s = planar("x^5")
    curve = sample_curve(s, [0.4, 0.3, 0.2, 0.1, 0.05, 0.02])
    assert [x for x, _ in curve.failures] == [0.02]
    assert "CharacteristicPoint" in curve.failures[0][1]
    with pytest.raises(SamplingFailure):
        sample_curve(s, [0.4, 0.3, 0.2, 0.1, 0.05, 0.02, 0.01])


def test_report_dicts(grushin):
    fit = fit_singularity(sample_curve(grushin))
    data = verdict(grushin, fit, K_grid=(0.0,)).to_dict()
    assert data["verdict"] == "FAIL-CD"
    assert data["fit"]["order"] == pytest.approx(-2.0, abs=0.02)
    assert data["per_K"][0]["K"] == 0.0
    assert policy()["max_order"] == -1.5


def test_strongly_regular_curve_has_order_two(strongly_regular):
    fit = fit_singularity(sample_curve(strongly_regular))
    assert fit.fitted_order == pytest.approx(-2.0, abs=0.02)
    assert fit.r_squared > 0.999
    assert verdict(strongly_regular, fit).certified
