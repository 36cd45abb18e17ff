import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from archsweep import (
    MAXWELL,
    AreaSample,
    DegenerateSamplesError,
    LinearFit,
    fit_linear,
    predict_block_area,
    read_samples_csv,
)
from archsweep.calibration import REFERENCE_SWEEP_SIZES_KB
from oracles import ols_lstsq

CANONICAL_PAIRS = {
    "reg": (MAXWELL.beta_R, MAXWELL.alpha_R),
    "shared": (MAXWELL.beta_M, MAXWELL.alpha_M),
    "l1": (MAXWELL.beta_L1, MAXWELL.alpha_L1),
    "l2": (MAXWELL.beta_L2, MAXWELL.alpha_L2),
}


def _collinear(beta, alpha, sizes):
    return [AreaSample(s, beta * s + alpha) for s in sizes]


@pytest.mark.parametrize("memory_type", sorted(CANONICAL_PAIRS))
def test_recovers_canonical_pairs_from_exact_samples(memory_type):
    beta, alpha = CANONICAL_PAIRS[memory_type]
    fit = fit_linear(_collinear(beta, alpha, REFERENCE_SWEEP_SIZES_KB[memory_type]))
    assert fit.beta == pytest.approx(beta, rel=1e-9)
    assert fit.alpha == pytest.approx(alpha, rel=1e-9)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


def test_two_point_line():
    fit = fit_linear([AreaSample(1, 1), AreaSample(2, 3)])
    assert fit.beta == pytest.approx(2.0, rel=1e-12)
    assert fit.alpha == pytest.approx(-1.0, rel=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


def test_noisy_recovery_matches_lstsq_oracle():
    rng = random.Random(20260810)
    beta, alpha = 0.01565, 0.09281
    sizes = [24, 48, 96, 192, 384]
    samples = [
        AreaSample(s, (beta * s + alpha) * (1 + rng.uniform(-0.01, 0.01))) for s in sizes
    ]
    fit = fit_linear(samples)
    ob, oa = ols_lstsq([s.size_kb for s in samples], [s.area_mm2 for s in samples])
    assert fit.beta == pytest.approx(ob, rel=1e-9)
    assert fit.alpha == pytest.approx(oa, rel=1e-9)
    assert abs(fit.beta - beta) / beta < 0.03


def test_collinear_residuals_are_negligible():
    samples = _collinear(0.04197, 0.7685, [32, 64, 128, 256, 512])
    fit = fit_linear(samples)
    worst = max(abs(s.area_mm2 - (fit.beta * s.size_kb + fit.alpha)) for s in samples)
    assert worst < 1e-9 * max(s.area_mm2 for s in samples)


def test_r_squared_is_one_for_flat_data():
    fit = fit_linear([AreaSample(1, 5), AreaSample(2, 5), AreaSample(3, 5)])
    assert fit.beta == pytest.approx(0.0, abs=1e-15)
    assert fit.r_squared == 1.0


def test_degenerate_samples():
    with pytest.raises(DegenerateSamplesError):
        fit_linear([AreaSample(4, 1), AreaSample(4, 2), AreaSample(4, 3)])
    with pytest.raises(DegenerateSamplesError):
        fit_linear([AreaSample(4, 1)])
    with pytest.raises(DegenerateSamplesError):
        fit_linear([])


@settings(max_examples=50, deadline=None)
@given(
    beta=st.floats(1e-4, 1.0),
    alpha=st.floats(0.0, 10.0),
    sizes=st.lists(st.integers(1, 2048), min_size=2, max_size=12, unique=True),
)
def test_exact_collinear_recovery_property(beta, alpha, sizes):
    fit = fit_linear(_collinear(beta, alpha, sizes))
    assert fit.beta == pytest.approx(beta, rel=1e-9, abs=1e-12)
    assert fit.alpha == pytest.approx(alpha, rel=1e-9, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(
    data=st.lists(
        st.tuples(st.integers(1, 500), st.floats(0.01, 100.0)),
        min_size=3, max_size=10, unique_by=lambda p: p[0],
    ),
    seed=st.integers(0, 1000),
)
def test_fit_invariant_under_reordering(data, seed):
    samples = [AreaSample(float(s), a) for s, a in data]
    shuffled = samples[:]
    random.Random(seed).shuffle(shuffled)
    assert fit_linear(samples) == fit_linear(shuffled)


def test_predict_block_area_checkpoints():
    shared = LinearFit(beta=MAXWELL.beta_M, alpha=MAXWELL.alpha_M, r_squared=1.0)
    l1 = LinearFit(beta=MAXWELL.beta_L1, alpha=MAXWELL.alpha_L1, r_squared=1.0)
    l2 = LinearFit(beta=MAXWELL.beta_L2, alpha=MAXWELL.alpha_L2, r_squared=1.0)
    assert predict_block_area(shared, 96) == pytest.approx(1.59521, rel=1e-9)
    assert abs(predict_block_area(shared, 96) - 1.59) / 1.59 < 0.01
    assert predict_block_area(l1, 48) == pytest.approx(7.78124, rel=1e-9)
    assert abs(predict_block_area(l1, 48) - 7.78) / 7.78 < 0.005
    assert predict_block_area(l2, 2048, multiplicity=16) == pytest.approx(98.25056, rel=1e-9)
    assert abs(predict_block_area(l2, 2048, multiplicity=16) - 98.25) / 98.25 < 0.005


def test_predict_block_area_is_affine_in_size():
    fit = LinearFit(beta=0.5, alpha=2.0, r_squared=1.0)
    a, b = predict_block_area(fit, 10), predict_block_area(fit, 30)
    mid = predict_block_area(fit, 20)
    assert mid == pytest.approx((a + b) / 2, rel=1e-12)
    with pytest.raises(ValueError):
        predict_block_area(fit, -1)
    with pytest.raises(ValueError):
        predict_block_area(fit, 1, multiplicity=0)


def test_sample_validation():
    with pytest.raises(ValueError):
        AreaSample(0, 1)
    with pytest.raises(ValueError):
        AreaSample(1, -2)


def test_read_samples_csv(tmp_path):
    good = tmp_path / "samples.csv"
    good.write_text("size_kB,area_mm2\n24,0.4684\n48,0.8440\n96,1.5952\n")
    samples = read_samples_csv(good)
    assert len(samples) == 3
    assert samples[0] == AreaSample(24.0, 0.4684)

    missing_header = tmp_path / "nohdr.csv"
    missing_header.write_text("24,0.4684\n48,0.8440\n")
    with pytest.raises(ValueError, match="header"):
        read_samples_csv(missing_header)

    bad_row = tmp_path / "bad.csv"
    bad_row.write_text("size_kB,area_mm2\n24,abc\n")
    with pytest.raises(ValueError):
        read_samples_csv(bad_row)

    with pytest.raises(OSError):
        read_samples_csv(tmp_path / "missing.csv")
