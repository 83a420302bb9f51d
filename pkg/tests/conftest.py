"""Shared fixtures."""

import pytest

from core.codes import build_ebch
from core.complexity import HardwareProfile
from core.tradeoff import ModelTable, TradeoffModel


@pytest.fixture(scope="session")
def ebch8():
    """Extended Hamming (8,4,4)."""
    return build_ebch(8, 4)


@pytest.fixture(scope="session")
def ebch16():
    """Extended Hamming (16,11,4)."""
    return build_ebch(16, 11)


@pytest.fixture(scope="session")
def ebch128():
    return build_ebch(128, 64)


@pytest.fixture
def hw():
    """1 us symbols, 1 ns binary operations, single processor."""
    return HardwareProfile(T_s=1e-6, T_b=1e-9)


@pytest.fixture
def synthetic_models():
    """Single-entry table resembling a fitted eBCH model."""
    return ModelTable.of([TradeoffModel(n=128, a=0.025, b=0.034)], "nearest")
