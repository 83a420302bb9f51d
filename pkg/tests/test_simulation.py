"""Tests for the Monte Carlo harness."""

from unittest.mock import patch

import numpy as np
import pytest

from config.settings import settings
from core.channel import NOISE_STREAM, modulate, transmit, trial_rng
from core.codes import build_ebch
from core.os_decoder import DecoderConfig
from core.simulation import (
    StopRule,
    build_tradeoff_dataset,
    compare_orders,
    draw_trial,
    estimate_cep,
    required_snr_for_cep,
    wilson_interval,
)
from core.tradeoff import fit
from utils.error_handlers import DomainError, SearchError
from utils.logging_config import metrics


def test_wilson_interval_basics():
    lo, hi = wilson_interval(10, 100)
    assert lo < 0.1 < hi
    assert wilson_interval(0, 100)[0] == 0.0
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_wilson_interval_coverage():
    """Nominal 95% coverage within two points."""
    rng = np.random.default_rng(0)
    p, trials = 0.3, 500
    hits = 0
    for errors in rng.binomial(trials, p, size=2000):
        lo, hi = wilson_interval(int(errors), trials)
        hits += lo <= p <= hi
    assert abs(hits / 2000 - 0.95) <= 0.02


def test_draw_trial_deterministic(ebch8):
    a = draw_trial(ebch8, 2.0, 5, 17)
    b = draw_trial(ebch8, 2.0, 5, 17)
    for x, y in zip(a[:2], b[:2]):
        np.testing.assert_array_equal(x, y)
    np.testing.assert_array_equal(a[2].y, b[2].y)
    assert not np.array_equal(a[2].y, draw_trial(ebch8, 2.0, 5, 18)[2].y)


def test_draw_trial_uses_channel(ebch8):
    """Observations come from the channel model with the trial's noise stream."""
    with patch("core.simulation.transmit", wraps=transmit) as spy:
        _, c, obs = draw_trial(ebch8, 2.0, 5, 3)
    spy.assert_called_once()
    z = trial_rng(5, 3, NOISE_STREAM).standard_normal(ebch8.n)
    np.testing.assert_allclose(obs.y, np.sqrt(2.0) * modulate(c) + z)
    assert obs.rho == 2.0


def test_all_zero_trial(ebch8):
    u, c, _ = draw_trial(ebch8, 2.0, 5, 0, all_zero=True)
    assert not u.any()
    assert not c.any()


def test_high_snr_has_no_errors(ebch8):
    est = estimate_cep(ebch8, DecoderConfig.of(0), 20.0, seed=1,
                       stop=StopRule(target_errors=1, max_trials=10_000), workers=1)
    assert est.errors == 0
    assert est.trials == 10_000
    assert est.ci95[0] == 0.0


def test_stop_at_target_errors(ebch8):
    est = estimate_cep(ebch8, DecoderConfig.of(0), -2.0, seed=2,
                       stop=StopRule(target_errors=25, max_trials=100_000), workers=1, batch_size=64)
    assert est.errors == 25
    assert est.trials < 100_000


def test_estimate_independent_of_batching_and_workers(ebch8):
    """The stopping trial depends only on the seed."""
    stop = StopRule(target_errors=30, max_trials=5_000)
    cfg = DecoderConfig.of(1)
    a = estimate_cep(ebch8, cfg, 1.0, seed=7, stop=stop, workers=1, batch_size=7)
    b = estimate_cep(ebch8, cfg, 1.0, seed=7, stop=stop, workers=2, batch_size=64)
    assert (a.trials, a.errors) == (b.trials, b.errors)


def test_full_order_cep_equals_ml(ebch8):
    stop = StopRule(target_errors=10_000, max_trials=2_000)
    osd = estimate_cep(ebch8, DecoderConfig.of(4), 1.0, seed=3, stop=stop, workers=1)
    ml = estimate_cep(ebch8, DecoderConfig.of(0), 1.0, seed=3, stop=stop, workers=1, decoder="ml")
    assert (osd.trials, osd.errors) == (ml.trials, ml.errors)


def test_all_zero_matches_random_messages(ebch8):
    """Linear code and symmetric channel: both estimates agree statistically."""
    stop = StopRule(target_errors=10_000, max_trials=3_000)
    cfg = DecoderConfig.of(1)
    rnd = estimate_cep(ebch8, cfg, 2.0, seed=4, stop=stop, workers=1)
    zero = estimate_cep(ebch8, cfg, 2.0, seed=5, stop=stop, workers=1, all_zero=True)
    assert rnd.ci95[0] <= zero.ci95[1] and zero.ci95[0] <= rnd.ci95[1]


def test_metrics_count_trials(ebch8):
    metrics.reset()
    estimate_cep(ebch8, DecoderConfig.of(0), 20.0, seed=1, stop=StopRule(target_errors=1, max_trials=50), workers=1)
    assert metrics.get_metrics()["trials"] == 50
    assert metrics.get_metrics()["teps_evaluated"] == 50


def test_order_above_dimension(ebch8):
    with pytest.raises(DomainError):
        estimate_cep(ebch8, DecoderConfig.of(5), 1.0, seed=1, workers=1)


def test_required_snr_same_for_full_order_and_ml(ebch8):
    stop = StopRule(target_errors=30, max_trials=20_000)
    osd = required_snr_for_cep(ebch8, DecoderConfig.of(4), 0.05, seed=11, bracket_tol_db=0.1,
                               stop=stop, workers=1)
    ml = required_snr_for_cep(ebch8, DecoderConfig.of(0), 0.05, seed=11, bracket_tol_db=0.1,
                              stop=stop, workers=1, decoder="ml")
    assert osd.rho_db == ml.rho_db
    assert osd.hi_db - osd.lo_db <= 0.1
    assert osd.probes[-1].cep >= 0.0


def test_required_snr_bracket_failure(ebch8):
    """A target above the CEP at the search floor cannot be bracketed."""
    with patch.object(settings, "search_lo_db", -4.0), pytest.raises(SearchError):
        required_snr_for_cep(ebch8, DecoderConfig.of(0), 0.99, seed=1,
                             stop=StopRule(target_errors=20, max_trials=500), workers=1)


def test_required_snr_target_range(ebch8):
    with pytest.raises(DomainError):
        required_snr_for_cep(ebch8, DecoderConfig.of(0), 1.0, seed=1)


def test_tradeoff_dataset_shape(ebch8):
    points = build_tradeoff_dataset(ebch8, [0, 1, 2], 0.05, seed=2,
                                    stop=StopRule(target_errors=30, max_trials=20_000),
                                    workers=1, bracket_tol_db=0.25)
    assert [p.s for p in points] == [0.0, 1.0, 2.0]
    assert all(p.delta_rho_db >= 0 for p in points)
    log2_K = [p.log2_K for p in points]
    assert log2_K[0] < log2_K[1] < log2_K[2]
    assert all(p.source == "measured" and (p.n, p.k, p.q) == (8, 4, 8) for p in points)


def test_compare_orders_monotone(ebch16):
    comparison = compare_orders(ebch16, [2, 0, 1], 1.0, trials=200, seed=9)
    assert comparison.orders == ["0", "1", "2"]
    assert comparison.distance_monotone_fraction == 1.0
    summary = comparison.summary()
    assert list(summary["s"]) == ["0", "1", "2"]


@pytest.mark.slow
def test_ebch128_orders_reduce_required_snr():
    """Higher orders need less SNR at CEP 1e-3, and the model fit is positive."""
    code = build_ebch(128, 64)
    points = build_tradeoff_dataset(code, [0, 1, 2, 3], 1e-3, seed=2024,
                                    stop=StopRule(target_errors=100, max_trials=10_000_000),
                                    bracket_tol_db=0.05)
    deltas = [p.delta_rho_db for p in points]
    assert all(b < a for a, b in zip(deltas, deltas[1:]))
    model = fit(points, 128)
    assert model.a > 0 and model.b > 0
    assert compare_orders(code, [0, 1, 2, 3], 3.0, trials=500, seed=1).distance_monotone_fraction == 1.0
