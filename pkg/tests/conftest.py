"""Fixtures communes."""
import pytest

from app.models import DissipationRates, GateParams, RepeaterConfig
from app.services.config_manager import config_manager


@pytest.fixture(autouse=True)
def default_params():
    """Chaque test repart des paramètres par défaut."""
    config_manager.load(None)
    yield
    config_manager.load(None)


@pytest.fixture
def ideal_gate() -> GateParams:
    """Porte sans dissipation ni erreur d'impulsion."""
    return GateParams(rates=DissipationRates.zero(), epsilon=0.0, xi=0.0)


@pytest.fixture
def repeater() -> RepeaterConfig:
    return RepeaterConfig()
