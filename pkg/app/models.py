"""Modèles de données Pydantic du répéteur Er/Eu."""
import math
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.constants import physical_constants

BOHR_MAGNETON = physical_constants["Bohr magneton"][0]
NUCLEAR_MAGNETON = physical_constants["nuclear magneton"][0]

TWO_PI = 2 * math.pi


# Enums
class Ion(str, Enum):
    ER = "er"
    EU = "eu"


class Spin(str, Enum):
    UP = "up"
    DOWN = "down"


class Basis(str, Enum):
    X = "x"
    Z = "z"


class GateKind(str, Enum):
    CNOT = "cnot"
    REVERSE_CNOT = "reverse_cnot"
    STATE_TRANSFER = "state_transfer"


class SimulationMethod(str, Enum):
    EXACT = "exact"
    PERTURBATIVE = "perturbative"


class Scheme(str, Enum):
    REPEATER = "repeater"
    REPEATER_MULTIPLEXED = "repeater_multiplexed"
    DIRECT = "direct"
    PLOB = "plob"


class BellLabel(str, Enum):
    PSI_PLUS = "psi+"
    PSI_MINUS = "psi-"
    PHI_PLUS = "phi+"
    PHI_MINUS = "phi-"


class Pauli(str, Enum):
    I = "I"
    X = "X"
    Y = "Y"
    Z = "Z"


class DetectorPattern(str, Enum):
    """Détecteurs ayant cliqué pendant une ronde Barrett-Kok."""
    D1 = "d1"
    D2 = "d2"
    NONE = "none"
    BOTH = "both"


def check_unit_vector(value: tuple[float, float, float]) -> tuple[float, float, float]:
    """Vérifie qu'un vecteur d'orientation est unitaire (à 1e-12 près)."""
    norm = float(np.linalg.norm(value))
    if abs(norm - 1.0) > 1e-12:
        raise ValueError(f"Vecteur non unitaire (norme {norm!r})")
    return value


class FrozenModel(BaseModel):
    model_config = ConfigDict(frozen=True)


# Paramètres physiques
class IonPairConfig(FrozenModel):
    """Paire Er-Eu couplée par interaction dipôle-dipôle."""
    delta_mu_er: float = Field(default=0.84e-31, description="Différence de moment dipolaire Er, C·m")
    delta_mu_eu: float = Field(default=0.81e-31, description="Différence de moment dipolaire Eu, C·m")
    mu_er_mag: float = Field(default=14.65 * BOHR_MAGNETON, description="Moment magnétique Er, J/T")
    mu_eu_mag: float = Field(default=3.42 * NUCLEAR_MAGNETON, description="Moment magnétique Eu, J/T")
    separation_r: float = Field(default=6e-9, gt=0, description="Distance Er-Eu, m")
    # Géométrie de couplage maximal (facteur angulaire de module 1)
    unit_er: tuple[float, float, float] = (1.0, 0.0, 0.0)
    unit_eu: tuple[float, float, float] = (1.0, 0.0, 0.0)
    unit_r: tuple[float, float, float] = (0.0, 0.0, 1.0)
    epsilon_rel: float = Field(default=9.2, ge=1, description="Constante diélectrique relative")

    @field_validator("unit_er", "unit_eu", "unit_r")
    @classmethod
    def _unit(cls, value):
        return check_unit_vector(value)


class CavityParams(FrozenModel):
    """Paramètres de la cavité et de la transition télécom de l'Er."""
    purcell_p: Optional[float] = Field(default=1000.0, ge=0, description="Facteur de Purcell (None = sans cavité)")
    gamma_total: float = Field(default=TWO_PI * 14, gt=0, description="Taux de déclin 1/T1, rad/s")
    gamma_rad: float = Field(default=TWO_PI * 3, ge=0, description="Taux radiatif, rad/s")
    beta: float = Field(default=0.9, ge=0, le=1, description="Probabilité de retour dans le spin initial")
    t2_opt: float = Field(default=4e-3, gt=0, description="Cohérence optique T2, s")
    cooperativity: Optional[float] = Field(default=None, ge=0, description="Coopérativité C")

    @property
    def t1(self) -> float:
        return 1.0 / self.gamma_total

    @model_validator(mode="after")
    def _check(self):
        if self.gamma_rad > self.gamma_total:
            raise ValueError("gamma_rad ne peut pas dépasser gamma_total")
        if self.t2_opt > 2 * self.t1 * (1 + 1e-12):
            raise ValueError("T2 doit rester inférieur à 2*T1")
        if self.cooperativity is not None and self.purcell_p is not None and self.gamma_rad > 0:
            expected = self.gamma_total / self.gamma_rad * self.cooperativity
            if not math.isclose(expected, self.purcell_p, rel_tol=1e-6):
                raise ValueError("Coopérativité incohérente avec le facteur de Purcell (P = gamma/gamma_r * C)")
        return self


class SpinRelaxationParams(FrozenModel):
    """Relaxation du spin Er par processus direct à un phonon."""
    # 1/R0 = 130 ms, durée de vie Zeeman mesurée à bas champ
    r0: float = Field(default=1 / 0.130, ge=0, description="Taux indépendant du champ, 1/s")
    alpha_d: Optional[float] = Field(
        default=None, ge=0, description="Constante anisotrope, 1/(s·T^5) (None = calibrée sur 40 ms)"
    )
    g_factor: float = Field(default=6.0, gt=0, description="Facteur g effectif")
    temperature: float = Field(default=0.02, ge=0, description="Température, K")
    field_b: float = Field(default=1.0, ge=0, description="Champ magnétique, T")


class DissipationRates(FrozenModel):
    """Taux dissipatifs du modèle à neuf niveaux (rad/s)."""
    gamma_er_up: float = Field(default=TWO_PI * 1.5, ge=0)
    gamma_er_down: float = Field(default=TWO_PI * 1.5, ge=0)
    gamma_eu_up: float = Field(default=TWO_PI * 0.65, ge=0)
    gamma_eu_down: float = Field(default=TWO_PI * 0.65, ge=0)
    gamma_star_er: float = Field(default=TWO_PI * 8, ge=0)
    gamma_star_eu: float = Field(default=TWO_PI * 19, ge=0)
    chi_er: float = Field(default=TWO_PI * 80, ge=0)
    chi_eu: float = Field(default=0.0, ge=0)

    @classmethod
    def zero(cls) -> "DissipationRates":
        return cls(**{name: 0.0 for name in cls.model_fields})

    @property
    def gamma_er(self) -> float:
        return self.gamma_er_up + self.gamma_er_down

    @property
    def gamma_eu(self) -> float:
        return self.gamma_eu_up + self.gamma_eu_down

    @property
    def max_rate(self) -> float:
        return max(self.gamma_er, self.gamma_eu, self.gamma_star_er, self.gamma_star_eu, self.chi_er, self.chi_eu)

    def scaled(self, gamma: float = 1.0, gamma_star: float = 1.0, chi: float = 1.0) -> "DissipationRates":
        """Copie avec les trois familles de taux multipliées."""
        return DissipationRates(
            gamma_er_up=self.gamma_er_up * gamma,
            gamma_er_down=self.gamma_er_down * gamma,
            gamma_eu_up=self.gamma_eu_up * gamma,
            gamma_eu_down=self.gamma_eu_down * gamma,
            gamma_star_er=self.gamma_star_er * gamma_star,
            gamma_star_eu=self.gamma_star_eu * gamma_star,
            chi_er=self.chi_er * chi,
            chi_eu=self.chi_eu * chi,
        )

    def swapped(self) -> "DissipationRates":
        """Échange les rôles de l'Er et de l'Eu."""
        return DissipationRates(
            gamma_er_up=self.gamma_eu_up,
            gamma_er_down=self.gamma_eu_down,
            gamma_eu_up=self.gamma_er_up,
            gamma_eu_down=self.gamma_er_down,
            gamma_star_er=self.gamma_star_eu,
            gamma_star_eu=self.gamma_star_er,
            chi_er=self.chi_eu,
            chi_eu=self.chi_er,
        )


class PulseSpec(FrozenModel):
    """Impulsion carrée sur une transition |l> <-> |e> d'un ion."""
    target_ion: Ion
    target_spin: Spin
    theta: float = Field(default=math.pi, gt=0, description="Angle de rotation, rad")
    rabi: float = Field(gt=0, description="Fréquence de Rabi angulaire, rad/s")

    @property
    def duration(self) -> float:
        return self.theta / self.rabi


class GateParams(FrozenModel):
    """Paramètres d'une porte CNOT / transfert d'état."""
    delta_nu: float = Field(default=TWO_PI * 46e3, gt=0, description="Couplage dipolaire estimé, rad/s")
    omega: Optional[float] = Field(default=None, gt=0, description="Rabi des impulsions cible (défaut Δν/√3), rad/s")
    omega_control: Optional[float] = Field(default=None, gt=0, description="Rabi des impulsions de contrôle, rad/s")
    rates: DissipationRates = Field(default_factory=DissipationRates)
    epsilon: float = Field(default=math.pi / 64, description="Sur-rotation des impulsions, rad")
    xi: float = Field(default=0.02, description="Erreur relative δν/Δν sur le couplage")

    @field_validator("epsilon")
    @classmethod
    def _small_epsilon(cls, value: float) -> float:
        if abs(value) >= math.pi / 8:
            raise ValueError("|epsilon| doit rester inférieur à pi/8")
        return value

    @field_validator("xi")
    @classmethod
    def _small_xi(cls, value: float) -> float:
        if abs(value) >= 0.2:
            raise ValueError("|xi| doit rester inférieur à 0.2")
        return value

    @property
    def target_rabi(self) -> float:
        return self.omega if self.omega is not None else self.delta_nu / math.sqrt(3)

    @property
    def control_rabi(self) -> float:
        return self.omega_control if self.omega_control is not None else self.target_rabi

    @property
    def true_delta_nu(self) -> float:
        """Couplage réel Δν + δν, les impulsions restant calculées pour Δν."""
        return self.delta_nu * (1 + self.xi)


class PhaseLedger(FrozenModel):
    """Grandeurs qui fixent la phase interférométrique entre deux noeuds."""
    omega_down_er_1: float = 0.0
    omega_down_er_2: float = 0.0
    omega_eu_1: float = 0.0
    omega_eu_2: float = 0.0
    omega_down_eu_1: float = 0.0
    omega_down_eu_2: float = 0.0
    tau: float = Field(default=0.0, ge=0)
    tau2: float = Field(default=0.0, ge=0)
    tau3: float = Field(default=0.0, ge=0)
    tau4: float = Field(default=0.0, ge=0)
    x_eu_1: float = Field(default=0.0, ge=0, description="Trajet du photon, m")
    x_eu_2: float = Field(default=0.0, ge=0, description="Trajet du photon, m")
    light_speed: float = Field(default=2e8, gt=0, description="Vitesse de la lumière dans la fibre, m/s")


class RepeaterConfig(FrozenModel):
    """Paramètres du répéteur (longueurs en km)."""
    total_length_l: float = Field(default=600.0, gt=0, description="Distance totale, km")
    nesting_n: int = Field(default=3, ge=0, description="Niveaux d'emboîtement")
    channels_m: int = Field(default=1, ge=1, description="Canaux spectraux multiplexés")
    p_emit: float = Field(default=0.9, ge=0, le=1, description="Probabilité d'émission dans la cavité")
    eta_d: float = Field(default=0.9, ge=0, le=1, description="Efficacité de détection")
    l_att: float = Field(default=22.0, gt=0, description="Longueur d'atténuation, km")
    fiber_speed_c: float = Field(default=2e8, gt=0, description="Vitesse dans la fibre, m/s")
    source_rate: float = Field(default=1e10, gt=0, description="Cadence de la source directe, Hz")
    direct_includes_detector: bool = Field(default=True, description="Facteur eta_d dans la transmission directe")
    plob_repetition_rate: Optional[float] = Field(default=None, gt=0, description="Cadence PLOB, Hz (défaut source/1.44)")
    memory_dephasing_rate: float = Field(default=0.0, ge=0, description="Déphasage mémoire pendant l'attente, 1/s")

    @property
    def l0_km(self) -> float:
        return self.total_length_l / 2 ** self.nesting_n

    @property
    def slot_time(self) -> float:
        """Temps de communication L0/c, s."""
        return self.l0_km * 1e3 / self.fiber_speed_c

    @property
    def plob_rate(self) -> float:
        if self.plob_repetition_rate is not None:
            return self.plob_repetition_rate
        return self.source_rate / 1.44


class SweepSpec(FrozenModel):
    """Balayage en distance des débits."""
    distances: list[float]
    schemes: list[Scheme]
    cfg: RepeaterConfig = Field(default_factory=RepeaterConfig)
    output_path: Optional[str] = None

    @field_validator("distances")
    @classmethod
    def _positive(cls, value: list[float]) -> list[float]:
        if not value or any(d <= 0 for d in value):
            raise ValueError("Les distances doivent être non vides et positives")
        return value

    @field_validator("schemes")
    @classmethod
    def _non_empty(cls, value: list[Scheme]) -> list[Scheme]:
        if not value:
            raise ValueError("Au moins un schéma est requis")
        return value

    @classmethod
    def from_range(cls, start: float, stop: float, step: float, **kwargs) -> "SweepSpec":
        """Construit la liste de distances start, start+step, ..., <= stop."""
        if step <= 0:
            raise ValueError("Le pas doit être positif")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        distances = [round(start + i * step, 9) for i in range(max(count, 0))]
        return cls(distances=distances, **kwargs)


# Protocole
class MeasurementRecord(FrozenModel):
    """Lecture d'un ion Er pendant un échange d'intrication."""
    node: int
    basis: Basis
    outcome: Spin


class Correction(FrozenModel):
    node: int
    pauli: Pauli


class BellFrame(FrozenModel):
    """État de Bell d'une paire et corrections de Pauli accumulées."""
    label: BellLabel
    endpoints: tuple[int, int]
    corrections: tuple[Correction, ...] = ()

    @field_validator("endpoints")
    @classmethod
    def _distinct(cls, value: tuple[int, int]) -> tuple[int, int]:
        if value[0] == value[1]:
            raise ValueError("Les extrémités d'une paire doivent être distinctes")
        return value


class SwapRecord(FrozenModel):
    """Les deux lectures (X puis Z) d'un noeud d'échange."""
    node: int
    m1: MeasurementRecord
    m2: MeasurementRecord


# Résultats
class DriveParameters(FrozenModel):
    delta_nu_hz: float
    delta_nu: float = Field(description="rad/s")
    omega: float = Field(description="rad/s")
    t_cnot: float = Field(description="s")
    t_st: float = Field(description="s")


class QuantumEfficiency(FrozenModel):
    eta: float
    p: float


class PhotonProfile(FrozenModel):
    bandwidth: float = Field(description="Hz")
    duration: float = Field(description="s")


class GateFidelity(FrozenModel):
    kind: GateKind
    fidelity: float
    gamma_eff: float = Field(description="rad/s")
    gate_time: float = Field(description="s")
    clamped: bool = False


class SuccessProbabilities(FrozenModel):
    p_t: float
    p_m: float
    p_s: float
    p_0: float


class RateEstimate(FrozenModel):
    mean_time: float = Field(description="s")
    std_err: float = Field(description="s")
    rate: float = Field(description="Hz")
    trials: int
    mean_slots: float
    mean_fidelity: Optional[float] = None


class HalfFactorReport(FrozenModel):
    child_probability: float
    ratio: float
    deviation: float = Field(description="ratio - 3/2")
    trials: int


class HeraldOutcome(FrozenModel):
    """Issue d'une tentative Barrett-Kok à deux rondes."""
    success: bool
    label: Optional[BellLabel] = None


class RateRow(FrozenModel):
    """Une ligne du balayage en distance."""
    distance_km: float
    scheme: Scheme
    rate_hz: float
    expected_time_s: float
    p_t: float
    p_s: float
    p_0: float


class RngPolicy(FrozenModel):
    """Graine d'un essai: (seed, trial_index) fixe toute la trajectoire."""
    seed: int = Field(ge=0, lt=2 ** 64)
    trial_index: int = Field(ge=0)


class TrialResult(FrozenModel):
    slots_used: int = Field(ge=1)
    wall_time: float = Field(ge=0, description="s")
    end_frame: BellFrame
    fidelity_estimate: float = Field(ge=0, le=1)
    link_frames: tuple[BellFrame, ...] = ()
    swaps: tuple[SwapRecord, ...] = ()


class GeometricFit(FrozenModel):
    """Test du chi-deux des nombres de créneaux d'un lien élémentaire."""
    probability: float
    statistic: float
    p_value: float
    bins: int
    trials: int


class ParameterSet(FrozenModel):
    """Jeu complet de paramètres lu depuis un fichier de configuration."""
    repeater: RepeaterConfig = Field(default_factory=RepeaterConfig)
    gate: GateParams = Field(default_factory=GateParams)
    ions: IonPairConfig = Field(default_factory=IonPairConfig)
    cavity: CavityParams = Field(default_factory=CavityParams)
