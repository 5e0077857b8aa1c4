"""
Pytest configuration and fixtures.

Использование:
    pytest tests/ -v              # быстрый набор
    pytest tests/ -m slow         # полномасштабные проверки со скоростями опорного устройства
    pytest --update-golden        # перезаписать tests/golden/*.tsv
"""

from pathlib import Path
import sys

import pytest

# Корень проекта в sys.path, чтобы `src` и `cli` импортировались без установки
PROJECT_ROOT = Path(__file__).resolve().parent.parent
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from src.core.basis import build_basis, spin_matrices  # noqa: E402
from src.core.device import DeviceParams, DissipationRates, derive_modes  # noqa: E402
from src.core.spectroscopy import prepare_system  # noqa: E402

GOLDEN_DIR = Path(__file__).parent / "golden"

# Скорости ×1000: τ ≈ 100 нс вместо 100 мкс
FAST_RATE_FACTOR = 1000.0


def pytest_addoption(parser):
    parser.addoption(
        "--update-golden",
        action="store_true",
        default=False,
        help="Regenerate tests/golden/*.tsv instead of comparing against them",
    )


@pytest.fixture
def update_golden(request) -> bool:
    return request.config.getoption("--update-golden")


# ═══════════════════════════════════════════════════════
# DEVICE
# ═══════════════════════════════════════════════════════

@pytest.fixture(scope="session")
def reference_params() -> DeviceParams:
    """Опорное устройство (g = 5 МГц)."""
    return DeviceParams()


@pytest.fixture(scope="session")
def fast_params(reference_params) -> DeviceParams:
    """Опорное устройство со скоростями ×1000 для коротких траекторий."""
    return reference_params.with_rates(DissipationRates().scaled(FAST_RATE_FACTOR))


@pytest.fixture(scope="session")
def cold_fast_params(reference_params) -> DeviceParams:
    """γ′ = γ: только распад, без возбуждения баней."""
    k = FAST_RATE_FACTOR * 1e-6
    rates = DissipationRates(
        gamma_prime_plus=100 * k,
        gamma_plus=100 * k,
        gamma_prime_minus=10 * k,
        gamma_minus=10 * k,
    )
    return reference_params.with_rates(rates)


@pytest.fixture(scope="session")
def reference_modes(reference_params):
    return derive_modes(reference_params)


# ═══════════════════════════════════════════════════════
# BASIS & EIGENSYSTEMS
# ═══════════════════════════════════════════════════════

@pytest.fixture(scope="session")
def basis():
    """sMax = 3: 28 физических состояний, буфер до S = 5."""
    return build_basis(3.0)


@pytest.fixture(scope="session")
def spin(basis):
    return spin_matrices(basis)


@pytest.fixture(scope="session")
def system_order0(reference_params):
    return prepare_system(reference_params, order=0)


@pytest.fixture(scope="session")
def system_order2(reference_params):
    return prepare_system(reference_params, order=2)


@pytest.fixture(scope="session")
def fast_system(fast_params):
    return prepare_system(fast_params, order=0)


@pytest.fixture(scope="session")
def fast_system_order2(fast_params):
    return prepare_system(fast_params, order=2)
