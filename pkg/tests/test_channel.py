"""Tests for BPSK mapping and the BI-AWGN channel."""

import math

import numpy as np
import pytest

from core.channel import (
    MESSAGE_STREAM,
    NOISE_STREAM,
    ChannelParams,
    bit_error_prob_uncoded,
    modulate,
    transmit,
    trial_rng,
)
from utils.error_handlers import DomainError


def test_modulate():
    np.testing.assert_array_equal(modulate([0, 1, 1, 0]), [-1.0, 1.0, 1.0, -1.0])


def test_modulate_rejects_non_bits():
    with pytest.raises(DomainError):
        modulate([0, 2])


def test_channel_params():
    params = ChannelParams.from_db(10.0)
    assert params.rho == pytest.approx(10.0)
    assert ChannelParams.from_linear(100.0).rho_db == pytest.approx(20.0)
    assert ChannelParams.from_linear(0.0).rho_db == -math.inf
    with pytest.raises(DomainError):
        ChannelParams.from_linear(-1.0)


def test_zero_snr_is_pure_noise():
    """At rho = 0 the observation equals the drawn noise."""
    x = modulate(np.ones(16, dtype=int))
    obs = transmit(x, ChannelParams.from_linear(0.0), trial_rng(3, 0))
    np.testing.assert_array_equal(obs.y, trial_rng(3, 0).standard_normal(16))


def test_noise_statistics():
    """y = 2 + z at rho = 4 with all-ones symbols."""
    x = np.ones(1_000_000)
    obs = transmit(x, ChannelParams.from_linear(4.0), np.random.default_rng(1))
    assert obs.rho == 4.0
    assert abs(obs.y.mean() - 2.0) < 0.01
    assert abs(obs.y.var() - 1.0) < 0.01


def test_trial_rng_streams():
    a = trial_rng(7, 12, NOISE_STREAM).standard_normal(4)
    b = trial_rng(7, 12, NOISE_STREAM).standard_normal(4)
    c = trial_rng(7, 12, MESSAGE_STREAM).standard_normal(4)
    d = trial_rng(7, 13, NOISE_STREAM).standard_normal(4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_uncoded_bit_error_probability():
    assert bit_error_prob_uncoded(0.0) == pytest.approx(0.5)
    assert bit_error_prob_uncoded(1.0) == pytest.approx(0.15865525393145707, rel=1e-12)
    with pytest.raises(DomainError):
        bit_error_prob_uncoded(-0.1)
