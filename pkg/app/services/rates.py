"""Débits analytiques de distribution d'intrication.

Répéteur à n niveaux d'emboîtement (simple ou multiplexé), transmission
directe et borne PLOB. Distances en km, temps en secondes, débits en Hz.
"""
import logging
import math
from typing import Iterable

from scipy.optimize import brentq

from app.exceptions import InvalidParameterError
from app.models import RateRow, RepeaterConfig, Scheme, SuccessProbabilities

logger = logging.getLogger(__name__)


def transmission(cfg: RepeaterConfig) -> float:
    """η_t = e^{-L0/2L_att}: le photon parcourt la moitié du lien élémentaire."""
    return math.exp(-cfg.l0_km / (2 * cfg.l_att))


def success_probabilities(cfg: RepeaterConfig) -> SuccessProbabilities:
    eta_t = transmission(cfg)
    p_t = 0.5 * eta_t ** 2 * cfg.p_emit ** 2 * cfg.eta_d ** 2
    p_m = cfg.p_emit * cfg.eta_d
    p_s = (cfg.p_emit * cfg.eta_d) ** 2
    # lien A puis lien B voisin (avec transfert aux deux bouts)
    p_a, p_b = p_t, p_t * p_m ** 2
    p_0 = 1 / (1 / p_a + 1 / p_b) if p_a > 0 and p_b > 0 else 0.0
    return SuccessProbabilities(p_t=p_t, p_m=p_m, p_s=p_s, p_0=p_0)


def expected_time(cfg: RepeaterConfig) -> float:
    """Temps moyen de distribution sur L = 2ⁿL0 (approximation (3/2)^{n-1})."""
    probs = success_probabilities(cfg)
    slot = cfg.slot_time
    n = cfg.nesting_n
    if n == 0:
        denominator = probs.p_t * probs.p_m ** 2
        return math.inf if denominator == 0 else slot / denominator
    denominator = probs.p_0 * probs.p_s ** n
    if denominator == 0:
        return math.inf
    return 1.5 ** (n - 1) * slot / denominator


def channel_success(probs: SuccessProbabilities, nesting_n: int) -> float:
    """P_t = (2/3)^{n-1}·p0·p_sⁿ: succès de bout en bout d'un canal par créneau."""
    if nesting_n == 0:
        return probs.p_t * probs.p_m ** 2
    return (2 / 3) ** (nesting_n - 1) * probs.p_0 * probs.p_s ** nesting_n


def multiplexed_success(cfg: RepeaterConfig) -> float:
    """Probabilité qu'au moins un des m canaux réussisse pendant un créneau."""
    p_channel = channel_success(success_probabilities(cfg), cfg.nesting_n)
    return 1 - (1 - p_channel) ** cfg.channels_m


def scheme_rate(cfg: RepeaterConfig, scheme: Scheme) -> float:
    if scheme == Scheme.REPEATER:
        duration = expected_time(cfg)
        return 0.0 if math.isinf(duration) else 1 / duration
    if scheme == Scheme.REPEATER_MULTIPLEXED:
        return multiplexed_success(cfg) / cfg.slot_time
    eta = math.exp(-cfg.total_length_l / cfg.l_att)
    if scheme == Scheme.DIRECT:
        detector = cfg.eta_d if cfg.direct_includes_detector else 1.0
        return cfg.source_rate * eta * detector
    if scheme == Scheme.PLOB:
        # log1p: η est minuscule sur les longues distances
        return cfg.plob_rate * -math.log1p(-eta) / math.log(2)
    raise InvalidParameterError(f"Schéma inconnu: {scheme!r}")


def crossover_distance(cfg: RepeaterConfig, lo: float = 50.0, hi: float = 2000.0, against: Scheme = Scheme.DIRECT) -> float:
    """Distance (km) au-delà de laquelle le répéteur dépasse `against`."""

    def gap(distance: float) -> float:
        at = cfg.model_copy(update={"total_length_l": distance})
        return math.log(scheme_rate(at, Scheme.REPEATER)) - math.log(scheme_rate(at, against))

    low_gap, high_gap = gap(lo), gap(hi)
    if low_gap * high_gap > 0:
        raise InvalidParameterError(
            f"Pas de croisement entre {lo} et {hi} km (écarts {low_gap:.3g}, {high_gap:.3g})"
        )
    distance = brentq(gap, lo, hi, xtol=1e-9)
    logger.debug(f"Croisement répéteur / {against.value}: {distance:.2f} km")
    return distance


def rate_row(cfg: RepeaterConfig, scheme: Scheme) -> RateRow:
    probs = success_probabilities(cfg)
    rate = scheme_rate(cfg, scheme)
    return RateRow(
        distance_km=cfg.total_length_l,
        scheme=scheme,
        rate_hz=rate,
        expected_time_s=math.inf if rate == 0 else 1 / rate,
        p_t=probs.p_t,
        p_s=probs.p_s,
        p_0=probs.p_0,
    )


def sweep_rates(cfg: RepeaterConfig, distances: Iterable[float], schemes: Iterable[Scheme]) -> list[RateRow]:
    """Une ligne par (distance, schéma), triées par distance puis par schéma."""
    schemes = sorted(set(schemes), key=lambda s: s.value)
    rows = [
        rate_row(cfg.model_copy(update={"total_length_l": float(distance)}), scheme)
        for distance in sorted(set(distances))
        for scheme in schemes
    ]
    return rows
