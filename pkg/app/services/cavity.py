"""Modèle de cavité: efficacité quantique, indiscernabilité, photons émis.

Le facteur de Purcell est une entrée directe; la relation P = (γ/γ_r)·C
est exposée par deux fonctions de conversion.
"""
import logging
import math

from scipy.constants import Boltzmann, physical_constants

from app.exceptions import InvalidParameterError
from app.models import CavityParams, PhotonProfile, QuantumEfficiency, SpinRelaxationParams

logger = logging.getLogger(__name__)

BOHR_MAGNETON = physical_constants["Bohr magneton"][0]

# Point d'ancrage de la relaxation de spin: ~40 ms à 20 mK sous 1 T
ANCHOR_LIFETIME = 0.040
ANCHOR_FIELD = 1.0
ANCHOR_TEMPERATURE = 0.020


def quantum_efficiency(cav: CavityParams) -> QuantumEfficiency:
    """η = β·γ_r/γ et p = ηP/(1+ηP)."""
    if not cav.gamma_total > 0:
        raise InvalidParameterError("gamma_total doit être positif")
    eta = cav.beta * cav.gamma_rad / cav.gamma_total
    if cav.purcell_p is None:
        return QuantumEfficiency(eta=eta, p=0.0)
    enhanced = eta * cav.purcell_p
    return QuantumEfficiency(eta=eta, p=enhanced / (1 + enhanced))


def indistinguishability(cav: CavityParams) -> float:
    """Indiscernabilité I₁ des photons, avec ou sans cavité."""
    if not cav.t2_opt > 0:
        raise InvalidParameterError("T2 doit être positif")
    if cav.purcell_p is None:
        return cav.t2_opt / (2 * cav.t1)
    zeta = 2 * cav.t1 / cav.t2_opt - 1
    enhanced = quantum_efficiency(cav).eta * cav.purcell_p
    return (1 + enhanced) / (zeta + 1 + enhanced)


def photon_profile(cav: CavityParams) -> PhotonProfile:
    """Largeur spectrale (Hz) et durée (s) des photons accélérés par la cavité."""
    if not cav.purcell_p:
        raise InvalidParameterError("Le profil de photon exige un facteur de Purcell > 0")
    bandwidth = cav.purcell_p * cav.gamma_total / (2 * math.pi)
    return PhotonProfile(bandwidth=bandwidth, duration=1 / (2 * math.pi * bandwidth))


def purcell_from_cooperativity(cav: CavityParams, cooperativity: float) -> float:
    """P = (γ/γ_r)·C."""
    if not cav.gamma_rad > 0:
        raise InvalidParameterError("gamma_rad doit être positif pour convertir C en P")
    return cav.gamma_total / cav.gamma_rad * cooperativity


def cooperativity_from_purcell(cav: CavityParams) -> float:
    """C = P·γ_r/γ."""
    if cav.purcell_p is None:
        raise InvalidParameterError("Pas de facteur de Purcell sans cavité")
    return cav.purcell_p * cav.gamma_rad / cav.gamma_total


def _field_term(g_factor: float, field_b: float, temperature: float) -> float:
    """g³·B⁵·coth(gμ_B·B / 2kT), avec coth → 1 quand T → 0."""
    if field_b == 0:
        return 0.0
    if temperature == 0:
        return g_factor ** 3 * field_b ** 5
    x = g_factor * BOHR_MAGNETON * field_b / (2 * Boltzmann * temperature)
    return g_factor ** 3 * field_b ** 5 / math.tanh(x)


def calibrate_alpha_d(
    lifetime: float = ANCHOR_LIFETIME,
    field_b: float = ANCHOR_FIELD,
    temperature: float = ANCHOR_TEMPERATURE,
    r0: float = 1 / 0.130,
    g_factor: float = 6.0,
) -> float:
    """Inverse R(B) pour trouver α_D à partir d'une durée de vie mesurée."""
    if not lifetime > 0 or not field_b > 0:
        raise InvalidParameterError("La calibration exige une durée de vie et un champ positifs")
    excess = 1 / lifetime - r0
    if excess < 0:
        raise InvalidParameterError("R0 dépasse déjà le taux visé: calibration impossible")
    return excess / _field_term(g_factor, field_b, temperature)


def spin_relaxation_rate(params: SpinRelaxationParams) -> float:
    """R = R₀ + α_D·g³·B⁵·coth(gμ_B·B / 2kT), en 1/s."""
    alpha_d = params.alpha_d
    if alpha_d is None:
        alpha_d = calibrate_alpha_d(r0=params.r0, g_factor=params.g_factor)
        logger.debug(f"alpha_D calibré sur 40 ms: {alpha_d:.6g} s^-1 T^-5")
    return params.r0 + alpha_d * _field_term(params.g_factor, params.field_b, params.temperature)


def readout_efficiency(eta_single: float, cycles: int = 1, leak_per_cycle: float = 0.0) -> float:
    """Probabilité de détecter au moins un photon pendant `cycles` cycles de fluorescence."""
    if not 0 <= eta_single <= 1 or not 0 <= leak_per_cycle <= 1:
        raise InvalidParameterError("Les probabilités doivent être dans [0, 1]")
    if cycles < 1:
        raise InvalidParameterError("Au moins un cycle est nécessaire")
    q = (1 - eta_single) * (1 - leak_per_cycle)
    if q == 1:
        return 0.0
    return eta_single * (1 - q ** cycles) / (1 - q)
