"""Couplage dipôle-dipôle entre un ion Er et un ion Eu voisins.

Convention: `stark_shift` et `magnetic_shift` renvoient des fréquences
ordinaires (Hz). `conditional_drive` reçoit Δν en Hz et renvoie les
pulsations en rad/s (Ω = 2π·Δν/√3) et les durées en secondes.
"""
import math

import numpy as np
from scipy.constants import epsilon_0, h, mu_0

from app.exceptions import InvalidParameterError
from app.models import DriveParameters, IonPairConfig, check_unit_vector


def orientation_factor(unit_er, unit_eu, unit_r) -> float:
    """Facteur angulaire (μ̂·μ̂′) − 3(μ̂·r̂)(μ̂′·r̂)."""
    try:
        a = np.asarray(check_unit_vector(tuple(unit_er)), dtype=float)
        b = np.asarray(check_unit_vector(tuple(unit_eu)), dtype=float)
        r = np.asarray(check_unit_vector(tuple(unit_r)), dtype=float)
    except ValueError as e:
        raise InvalidParameterError(str(e)) from e
    return float(a @ b - 3 * (a @ r) * (b @ r))


def _geometry(pair: IonPairConfig) -> tuple[float, float]:
    """Retourne (facteur angulaire, r^3) après vérification de la géométrie."""
    if not pair.separation_r > 0:
        raise InvalidParameterError("Distance Er-Eu nulle: géométrie singulière")
    factor = orientation_factor(pair.unit_er, pair.unit_eu, pair.unit_r)
    return factor, pair.separation_r ** 3


def stark_shift(pair: IonPairConfig) -> float:
    """Décalage de la transition de l'Eu quand l'Er est excité, en Hz (signé)."""
    factor, r3 = _geometry(pair)
    prefactor = pair.delta_mu_er * pair.delta_mu_eu / (4 * math.pi * pair.epsilon_rel * epsilon_0 * h * r3)
    return prefactor * factor


def magnetic_shift(pair: IonPairConfig) -> float:
    """Couplage dipolaire magnétique équivalent, en Hz (même forme angulaire)."""
    factor, r3 = _geometry(pair)
    prefactor = mu_0 * pair.mu_er_mag * pair.mu_eu_mag / (4 * math.pi * h * r3)
    return prefactor * factor


def conditional_drive(delta_nu_hz: float) -> DriveParameters:
    """Rabi conditionnel et durées de porte pour un couplage Δν (Hz).

    Ω = Δν/√3 vérifie √(Δν² + Ω²) = 2Ω: les impulsions cible font une
    rotation effective de 2π quand le contrôle est excité.
    """
    if not delta_nu_hz > 0:
        raise InvalidParameterError(f"Le couplage doit être positif (reçu {delta_nu_hz!r} Hz)")
    delta_nu = 2 * math.pi * delta_nu_hz
    omega = delta_nu / math.sqrt(3)
    return DriveParameters(
        delta_nu_hz=delta_nu_hz,
        delta_nu=delta_nu,
        omega=omega,
        t_cnot=5 * math.pi / omega,
        t_st=4 * math.pi / omega,
    )


def separation_for_shift(target_hz: float, pair: IonPairConfig) -> float:
    """Distance (m) qui donne |Δν| = target_hz avec la géométrie de `pair`."""
    if not target_hz > 0:
        raise InvalidParameterError("Le décalage visé doit être positif")
    reference = abs(stark_shift(pair))
    if reference == 0:
        raise InvalidParameterError("Facteur angulaire nul: aucun couplage possible")
    return pair.separation_r * (reference / target_hz) ** (1 / 3)


def calibrate_dielectric(target_hz: float, pair: IonPairConfig) -> float:
    """Constante diélectrique relative qui reproduit |Δν| = target_hz."""
    if not target_hz > 0:
        raise InvalidParameterError("Le décalage visé doit être positif")
    return pair.epsilon_rel * abs(stark_shift(pair)) / target_hz
