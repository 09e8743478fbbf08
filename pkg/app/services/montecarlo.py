"""Simulation à événements discrets du répéteur, par créneaux de durée L0/c.

Le temps d'un essai est tiré d'abord (génération, transfert et échange
avec reprise complète du sous-arbre en cas d'échec), puis les issues de
mesure du dernier passage réussi sont tirées pour construire les paires de
Bell. Chaque essai a son propre générateur
`SeedSequence(seed, spawn_key=(trial_index,))`: le résultat ne dépend pas
de l'ordre d'exécution ni du nombre de processus.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.stats import chisquare

from app.config import settings
from app.exceptions import InvalidParameterError
from app.models import (
    Basis,
    BellFrame,
    BellLabel,
    GateKind,
    GateParams,
    GeometricFit,
    HalfFactorReport,
    MeasurementRecord,
    RateEstimate,
    RepeaterConfig,
    RngPolicy,
    Spin,
    SuccessProbabilities,
    SwapRecord,
    TrialResult,
)
from app.services import gates, protocol, rates

logger = logging.getLogger(__name__)

MIN_TRIALS = 100
ProgressCallback = Callable[[int, int], None]


def make_rng(policy: RngPolicy) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(policy.seed, spawn_key=(policy.trial_index,)))


@lru_cache(maxsize=32)
def _gate_fidelities(params: GateParams) -> tuple[float, float, float]:
    """(F_ST, F_CNOT, F_R-CNOT) en forme fermée."""
    return tuple(
        gates.closed_form_fidelity(kind, params).fidelity
        for kind in (GateKind.STATE_TRANSFER, GateKind.CNOT, GateKind.REVERSE_CNOT)
    )


def _check_probabilities(probs: SuccessProbabilities, nesting_n: int) -> None:
    needed = {"p_t": probs.p_t, "p_m": probs.p_m}
    if nesting_n > 0:
        needed["p_s"] = probs.p_s
    for name, value in needed.items():
        if not 0 < value <= 1:
            raise InvalidParameterError(f"{name} = {value!r}: la simulation ne se termine jamais")


# Durées (en créneaux)
def _level_one_slots(rng: np.random.Generator, probs: SuccessProbabilities) -> int:
    """Lien A (transféré vers l'Eu) puis lien B voisin, puis échange; tout recommence en cas d'échec."""
    slots = 0
    while True:
        slots += int(rng.geometric(probs.p_t * probs.p_m ** 2))
        slots += int(rng.geometric(probs.p_t))
        if rng.random() < probs.p_s:
            return slots


def _subtree_slots(rng: np.random.Generator, probs: SuccessProbabilities, level: int) -> int:
    if level == 1:
        return _level_one_slots(rng, probs)
    slots = 0
    while True:
        # les deux moitiés avancent en parallèle
        slots += max(_subtree_slots(rng, probs, level - 1), _subtree_slots(rng, probs, level - 1))
        if rng.random() < probs.p_s:
            return slots


def _multiplexed_slots(rng: np.random.Generator, probs: SuccessProbabilities, cfg: RepeaterConfig) -> int:
    p_channel = rates.channel_success(probs, cfg.nesting_n)
    if not p_channel > 0:
        raise InvalidParameterError("Probabilité de succès par canal nulle")
    slots = 1
    while rng.binomial(cfg.channels_m, p_channel) == 0:
        slots += 1
    return slots


def _draw_slots(rng: np.random.Generator, probs: SuccessProbabilities, cfg: RepeaterConfig) -> int:
    if cfg.channels_m > 1:
        return _multiplexed_slots(rng, probs, cfg)
    if cfg.nesting_n == 0:
        return int(rng.geometric(probs.p_t * probs.p_m ** 2))
    return _subtree_slots(rng, probs, cfg.nesting_n)


# Paires de Bell
def _spin(rng: np.random.Generator) -> Spin:
    return Spin.UP if rng.random() < 0.5 else Spin.DOWN


def _herald(rng: np.random.Generator) -> BellLabel:
    # même détecteur ou non aux deux rondes, à chances égales
    return BellLabel.PSI_PLUS if rng.random() < 0.5 else BellLabel.PSI_MINUS


def _mapped(rng: np.random.Generator, label: BellLabel, left: int, right: int) -> BellLabel:
    return protocol.map_outcome(
        label,
        MeasurementRecord(node=left, basis=Basis.X, outcome=_spin(rng)),
        MeasurementRecord(node=right, basis=Basis.X, outcome=_spin(rng)),
    )


def _build_frames(rng: np.random.Generator, nesting_n: int) -> tuple[BellFrame, list[BellFrame], list[SwapRecord]]:
    """Paires élémentaires, échanges (ordre d'exécution) et paire de bout en bout."""
    links = 2 ** nesting_n
    link_frames = []
    for link in range(links):
        label = _herald(rng)
        # n = 0: le lien unique est transféré; sinon le lien gauche de chaque paire de niveau 1
        if nesting_n == 0 or link % 2 == 0:
            label = _mapped(rng, label, link, link + 1)
        link_frames.append(BellFrame(label=label, endpoints=(link, link + 1)))

    swaps: list[SwapRecord] = []
    level_frames = list(link_frames)
    while len(level_frames) > 1:
        merged = []
        for left, right in zip(level_frames[::2], level_frames[1::2]):
            node = left.endpoints[1]
            record = SwapRecord(
                node=node,
                m1=MeasurementRecord(node=node, basis=Basis.X, outcome=_spin(rng)),
                m2=MeasurementRecord(node=node, basis=Basis.Z, outcome=_spin(rng)),
            )
            swaps.append(record)
            merged.append(protocol.swap_frames(left, right, record))
        level_frames = merged
    return level_frames[0], link_frames, swaps


def _fidelity(cfg: RepeaterConfig, params: GateParams, wall_time: float) -> float:
    f_st, f_cnot, f_rcnot = _gate_fidelities(params)
    n = cfg.nesting_n
    transfers = 2 if n == 0 else 2 ** n
    swaps = 2 ** n - 1
    value = f_st ** transfers * (f_cnot * f_rcnot) ** swaps * math.exp(-cfg.memory_dephasing_rate * wall_time)
    return min(max(value, 0.0), 1.0)


def run_trial(
    cfg: RepeaterConfig,
    rng: RngPolicy,
    probabilities: Optional[SuccessProbabilities] = None,
    gate_params: Optional[GateParams] = None,
) -> TrialResult:
    """Un essai complet. `probabilities` force p_t, p_m et p_s (p_0 est ignoré)."""
    probs = probabilities or rates.success_probabilities(cfg)
    _check_probabilities(probs, cfg.nesting_n)
    generator = make_rng(rng)

    slots = _draw_slots(generator, probs, cfg)
    wall_time = slots * cfg.slot_time
    end_frame, link_frames, swaps = _build_frames(generator, cfg.nesting_n)
    return TrialResult(
        slots_used=slots,
        wall_time=wall_time,
        end_frame=end_frame,
        fidelity_estimate=_fidelity(cfg, gate_params or gates.default_gate_params(), wall_time),
        link_frames=tuple(link_frames),
        swaps=tuple(swaps),
    )


def _run_chunk(
    cfg: RepeaterConfig,
    seed: int,
    indices: range,
    probabilities: Optional[SuccessProbabilities],
    gate_params: Optional[GateParams],
) -> tuple[list[int], list[float]]:
    slots, fidelities = [], []
    for index in indices:
        result = run_trial(cfg, RngPolicy(seed=seed, trial_index=index), probabilities, gate_params)
        slots.append(result.slots_used)
        fidelities.append(result.fidelity_estimate)
    return slots, fidelities


def _chunks(trials: int, count: int) -> list[range]:
    size = math.ceil(trials / count)
    return [range(start, min(start + size, trials)) for start in range(0, trials, size)]


def estimate_rate(
    cfg: RepeaterConfig,
    trials: Optional[int] = None,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
    probabilities: Optional[SuccessProbabilities] = None,
    gate_params: Optional[GateParams] = None,
    progress: Optional[ProgressCallback] = None,
) -> RateEstimate:
    """Moyenne et erreur standard du temps de distribution sur `trials` essais indépendants."""
    trials = trials if trials is not None else settings.default_trials
    seed = seed if seed is not None else settings.default_seed
    workers = workers or settings.mc_workers
    if trials < MIN_TRIALS:
        raise InvalidParameterError(f"Au moins {MIN_TRIALS} essais sont nécessaires (reçu {trials})")

    logger.info(f"Monte Carlo: {trials} essais, n={cfg.nesting_n}, m={cfg.channels_m}, L={cfg.total_length_l} km")
    chunks = _chunks(trials, max(workers, 1) * 10)
    slots: list[int] = []
    fidelities: list[float] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_chunk, cfg, seed, chunk, probabilities, gate_params) for chunk in chunks]
            for future in futures:
                chunk_slots, chunk_fidelities = future.result()
                slots.extend(chunk_slots)
                fidelities.extend(chunk_fidelities)
                if progress:
                    progress(len(slots), trials)
    else:
        for chunk in chunks:
            chunk_slots, chunk_fidelities = _run_chunk(cfg, seed, chunk, probabilities, gate_params)
            slots.extend(chunk_slots)
            fidelities.extend(chunk_fidelities)
            if progress:
                progress(len(slots), trials)

    times = np.asarray(slots, dtype=float) * cfg.slot_time
    mean_time = float(times.mean())
    std_err = float(times.std(ddof=1) / math.sqrt(trials))
    estimate = RateEstimate(
        mean_time=mean_time,
        std_err=std_err,
        rate=1 / mean_time,
        trials=trials,
        mean_slots=float(np.mean(slots)),
        mean_fidelity=float(np.mean(fidelities)),
    )
    logger.info(f"Monte Carlo terminé: <T> = {mean_time:.4g} s ± {std_err:.2g} s, débit {estimate.rate:.4g} Hz")
    return estimate


def half_factor_check(
    cfg: Optional[RepeaterConfig] = None,
    trials: int = 100_000,
    seed: Optional[int] = None,
    child_probability: Optional[float] = None,
) -> HalfFactorReport:
    """Rapport E[max(T1, T2)] / E[T] entre deux sous-liens menés en parallèle.

    Avec `child_probability`, les enfants sont des liens géométriques; sinon
    ce sont les sous-arbres de niveau n-1 de `cfg` (n ≥ 2).
    """
    seed = seed if seed is not None else settings.default_seed
    generator = np.random.default_rng(np.random.SeedSequence(seed))
    if child_probability is not None:
        if not 0 < child_probability <= 1:
            raise InvalidParameterError("La probabilité des enfants doit être dans ]0, 1]")
        children = generator.geometric(child_probability, size=(trials, 2)).astype(float)
    else:
        if cfg is None or cfg.nesting_n < 2:
            raise InvalidParameterError("Le facteur 3/2 n'a de sens qu'à partir de n = 2")
        probs = rates.success_probabilities(cfg)
        _check_probabilities(probs, cfg.nesting_n)
        children = np.array(
            [[_subtree_slots(generator, probs, cfg.nesting_n - 1) for _ in range(2)] for _ in range(trials)],
            dtype=float,
        )
    ratio = float(children.max(axis=1).mean() / children.mean())
    return HalfFactorReport(
        child_probability=child_probability if child_probability is not None else math.nan,
        ratio=ratio,
        deviation=ratio - 1.5,
        trials=trials,
    )


def geometric_fit(cfg: RepeaterConfig, trials: int = 10_000, seed: Optional[int] = None) -> GeometricFit:
    """Chi-deux des créneaux d'un lien élémentaire (n = 0) contre la loi géométrique attendue."""
    if cfg.nesting_n != 0 or cfg.channels_m != 1:
        raise InvalidParameterError("Le test géométrique porte sur n = 0 et m = 1")
    seed = seed if seed is not None else settings.default_seed
    probs = rates.success_probabilities(cfg)
    p = probs.p_t * probs.p_m ** 2
    counts = np.array(
        [run_trial(cfg, RngPolicy(seed=seed, trial_index=i), gate_params=None).slots_used for i in range(trials)]
    )

    # classes individuelles tant que l'effectif attendu reste >= 5, puis une queue
    last = 1
    while trials * p * (1 - p) ** last >= 5:
        last += 1
    observed = [int(np.sum(counts == k)) for k in range(1, last + 1)]
    expected = [trials * p * (1 - p) ** (k - 1) for k in range(1, last + 1)]
    observed.append(int(np.sum(counts > last)))
    expected.append(trials * (1 - p) ** last)
    statistic, p_value = chisquare(observed, expected)
    return GeometricFit(
        probability=p,
        statistic=float(statistic),
        p_value=float(p_value),
        bins=len(observed),
        trials=trials,
    )
