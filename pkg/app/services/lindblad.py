"""Moteur à neuf niveaux {↑,↓,e}_Er ⊗ {↑,↓,e}_Eu.

Les états sont vectorisés ligne par ligne (`numpy.ravel`), donc
vec(AρB) = (A ⊗ Bᵀ)·vec(ρ). Les superopérateurs sont des matrices 81×81
complexes, en lecture seule une fois construites.
"""
import logging
from functools import lru_cache
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from app.config import settings
from app.exceptions import IntegrationError, InvalidParameterError, MultipleDriveError
from app.models import DissipationRates, Ion, PulseSpec, SimulationMethod, Spin

logger = logging.getLogger(__name__)

LEVELS = 3
DIM = LEVELS * LEVELS
UP, DOWN, EXCITED = 0, 1, 2
LEVEL_INDEX = {Spin.UP: UP, Spin.DOWN: DOWN}

_I3 = np.eye(LEVELS, dtype=complex)
_I9 = np.eye(DIM, dtype=complex)


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def ion_operator(i: int, j: int) -> np.ndarray:
    """|i><j| sur un ion à trois niveaux."""
    op = np.zeros((LEVELS, LEVELS), dtype=complex)
    op[i, j] = 1.0
    return op


def embed(op: np.ndarray, ion: Ion) -> np.ndarray:
    """Plonge un opérateur 3×3 dans l'espace 9×9 (Er ⊗ Eu)."""
    return np.kron(op, _I3) if ion == Ion.ER else np.kron(_I3, op)


def raising(ion: Ion, spin: Spin) -> np.ndarray:
    """σ⁺_{k,l} = |e><l|_k."""
    return embed(ion_operator(EXCITED, LEVEL_INDEX[spin]), ion)


def level_index(er: int, eu: int) -> int:
    return LEVELS * er + eu


class DensityState:
    """Opérateur densité 9×9 (immuable)."""

    __slots__ = ("matrix",)

    def __init__(self, matrix, validate: bool = True):
        matrix = np.array(matrix, dtype=complex)
        if matrix.shape != (DIM, DIM):
            raise InvalidParameterError(f"Matrice densité {DIM}x{DIM} attendue, reçu {matrix.shape}")
        self.matrix = _frozen(matrix)
        if validate:
            self.check()

    @classmethod
    def from_ket(cls, ket) -> "DensityState":
        ket = np.asarray(ket, dtype=complex).reshape(DIM)
        norm = np.linalg.norm(ket)
        if norm == 0:
            raise InvalidParameterError("Vecteur d'état nul")
        ket = ket / norm
        return cls(np.outer(ket, ket.conj()))

    @classmethod
    def from_vector(cls, vector, validate: bool = False) -> "DensityState":
        return cls(np.asarray(vector).reshape(DIM, DIM), validate=validate)

    @classmethod
    def product(cls, er_amplitudes, eu_amplitudes) -> "DensityState":
        """État produit à partir des amplitudes (↑, ↓, e) de chaque ion."""
        return cls.from_ket(np.kron(np.asarray(er_amplitudes, dtype=complex), np.asarray(eu_amplitudes, dtype=complex)))

    @classmethod
    def basis(cls, er: int, eu: int) -> "DensityState":
        ket = np.zeros(DIM, dtype=complex)
        ket[level_index(er, eu)] = 1.0
        return cls.from_ket(ket)

    @property
    def vector(self) -> np.ndarray:
        return self.matrix.ravel()

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    @property
    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.matrix)).copy()

    @property
    def excited_population(self) -> float:
        """Population totale des niveaux où au moins un ion est excité."""
        pops = self.populations.reshape(LEVELS, LEVELS)
        return float(pops.sum() - pops[:EXCITED, :EXCITED].sum())

    def check(self, hermitian_tol: float = 1e-10, trace_tol: float = 1e-10, positivity_tol: float = 1e-8) -> None:
        """Vérifie hermiticité, trace unité et positivité (à la marge numérique près)."""
        deviation = np.max(np.abs(self.matrix - self.matrix.conj().T))
        if deviation > hermitian_tol:
            raise InvalidParameterError(f"Matrice non hermitienne (écart {deviation:.3g})")
        if abs(self.trace - 1) > trace_tol:
            raise InvalidParameterError(f"Trace différente de 1 ({self.trace:.12g})")
        smallest = float(np.min(np.linalg.eigvalsh((self.matrix + self.matrix.conj().T) / 2)))
        if smallest < -positivity_tol:
            raise InvalidParameterError(f"Valeur propre négative ({smallest:.3g})")

    def is_valid(self, **tolerances) -> bool:
        try:
            self.check(**tolerances)
        except InvalidParameterError:
            return False
        return True

    def trace_distance(self, other: "DensityState") -> float:
        diff = self.matrix - other.matrix
        return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh((diff + diff.conj().T) / 2))))

    def overlap(self, ket) -> float:
        """|<ψ|ρ|ψ>| pour un ket normalisé."""
        ket = np.asarray(ket, dtype=complex).reshape(DIM)
        return float(abs(ket.conj() @ self.matrix @ ket))

    def __repr__(self) -> str:
        return f"DensityState(trace={self.trace.real:.6f}, purity={self.purity:.6f})"


class Liouvillian(NamedTuple):
    """Découpage L = L0 + L1 du générateur."""
    l0: np.ndarray
    l1: np.ndarray

    @property
    def full(self) -> np.ndarray:
        return self.l0 + self.l1


# Superopérateurs élémentaires
def left(op: np.ndarray) -> np.ndarray:
    return np.kron(op, _I9)


def right(op: np.ndarray) -> np.ndarray:
    return np.kron(_I9, op.T)


def commutator_superop(hamiltonian: np.ndarray) -> np.ndarray:
    """ρ ↦ −i[H, ρ]."""
    return -1j * (left(hamiltonian) - right(hamiltonian))


def dissipator(jump: np.ndarray) -> np.ndarray:
    """D(σ)ρ = σρσ† − σ†σρ/2 − ρσ†σ/2."""
    number = jump.conj().T @ jump
    return np.kron(jump, jump.conj()) - 0.5 * (left(number) + right(number))


def apply_superop(superop: np.ndarray, state: DensityState) -> DensityState:
    return DensityState.from_vector(superop @ state.vector)


def compose(superops: Sequence[np.ndarray]) -> np.ndarray:
    """Produit dans l'ordre chronologique: le premier élément agit en premier."""
    result = np.eye(DIM * DIM, dtype=complex)
    for superop in superops:
        result = superop @ result
    return result


def spin_z(ion: Ion) -> np.ndarray:
    """σ_z,k = (|↑><↑| − |↓><↓|)/2."""
    return embed((ion_operator(UP, UP) - ion_operator(DOWN, DOWN)) / 2, ion)


@lru_cache(maxsize=None)
def _unit_dissipators() -> dict[str, np.ndarray]:
    """D(·) de chaque opérateur de saut, à pondérer par les taux."""
    terms = {}
    for ion, name in ((Ion.ER, "er"), (Ion.EU, "eu")):
        for spin in (Spin.UP, Spin.DOWN):
            lowering = raising(ion, spin).conj().T
            terms[f"gamma_{name}_{spin.value}"] = dissipator(lowering)
        # σ⁺_{k,l}σ⁻_{k,l} = |e><e|_k quel que soit l
        terms[f"excited_{name}"] = dissipator(embed(ion_operator(EXCITED, EXCITED), ion))
        terms[f"spin_{name}"] = dissipator(spin_z(ion))
    return {key: _frozen(value) for key, value in terms.items()}


@lru_cache(maxsize=256)
def dissipative_superop(rates: DissipationRates) -> np.ndarray:
    """L1 = Σ γ_{k,l}D(σ⁻_{k,l}) + Σ (γ*_k/2)D(σ⁺_{k,l}σ⁻_{k,l}) + Σ χ_k D(σ_z,k).

    Avec σ_z,k = (|↑><↑| − |↓><↓|)/2, la cohérence ↑↓ de l'ion k décroît à
    χ_k/2: c'est le taux que supposent les coefficients de Γ et Γ_ST.
    """
    d = _unit_dissipators()
    l1 = (
        rates.gamma_er_up * d["gamma_er_up"]
        + rates.gamma_er_down * d["gamma_er_down"]
        + rates.gamma_eu_up * d["gamma_eu_up"]
        + rates.gamma_eu_down * d["gamma_eu_down"]
        # la somme sur l ∈ {↑, ↓} compte deux fois γ*_k/2
        + 2 * (rates.gamma_star_er / 2) * d["excited_er"]
        + 2 * (rates.gamma_star_eu / 2) * d["excited_eu"]
        + rates.chi_er * d["spin_er"]
        + rates.chi_eu * d["spin_eu"]
    )
    return _frozen(np.asarray(l1, dtype=complex))


def hamiltonian(pulse: Optional[PulseSpec], delta_nu: float) -> np.ndarray:
    """H = Δν|ee><ee| + (Ω/2)(σ⁺ + σ⁻) sur la transition pilotée."""
    h = np.zeros((DIM, DIM), dtype=complex)
    h[level_index(EXCITED, EXCITED), level_index(EXCITED, EXCITED)] = delta_nu
    if pulse is not None:
        sigma_plus = raising(pulse.target_ion, pulse.target_spin)
        h += pulse.rabi / 2 * (sigma_plus + sigma_plus.conj().T)
    return h


def _single_drive(pulse: Union[PulseSpec, Sequence[PulseSpec], None]) -> Optional[PulseSpec]:
    if pulse is None or isinstance(pulse, PulseSpec):
        return pulse
    drives = list(pulse)
    if len(drives) > 1:
        raise MultipleDriveError(f"{len(drives)} transitions pilotées simultanément: une seule est permise")
    return drives[0] if drives else None


def build_liouvillian(
    pulse: Union[PulseSpec, Sequence[PulseSpec], None],
    delta_nu: float,
    rates: DissipationRates,
) -> Liouvillian:
    """Sépare le générateur en partie réversible L0 et dissipative L1."""
    if delta_nu < 0:
        raise InvalidParameterError("Le couplage Δν doit être positif ou nul")
    drive = _single_drive(pulse)
    l0 = _frozen(commutator_superop(hamiltonian(drive, delta_nu)))
    return Liouvillian(l0=l0, l1=dissipative_superop(rates))


def _check_perturbative(pulse: PulseSpec, delta_nu: float, rates: DissipationRates, threshold: float) -> None:
    scale = min(pulse.rabi, delta_nu) if delta_nu > 0 else pulse.rabi
    ratio = rates.max_rate / scale
    if ratio > threshold:
        logger.warning(
            f"Régime perturbatif douteux: taux max / fréquence = {ratio:.3g} (seuil {threshold:.3g})"
        )


def rotation_superop(
    pulse: PulseSpec,
    delta_nu: float,
    rates: DissipationRates,
    nodes: Optional[int] = None,
    ratio_threshold: Optional[float] = None,
) -> np.ndarray:
    """R(θ) = e^{L0·θ/Ω}[1 + ∫₀^{θ/Ω} e^{−L0τ} L1 e^{L0τ} dτ], au premier ordre en L1.

    L'intégrale est évaluée par quadrature de Gauss-Legendre. e^{L0τ} vaut
    U(τ) ⊗ U(τ)* avec U = exp(−iHτ), et son inverse est son adjoint.
    """
    nodes = nodes or settings.quadrature_nodes
    threshold = ratio_threshold if ratio_threshold is not None else settings.perturbative_ratio_threshold
    _check_perturbative(pulse, delta_nu, rates, threshold)

    liouvillian = build_liouvillian(pulse, delta_nu, rates)
    h = hamiltonian(pulse, delta_nu)
    duration = pulse.duration
    final = expm(liouvillian.l0 * duration)
    if not np.any(liouvillian.l1):
        return _frozen(final)

    x, w = np.polynomial.legendre.leggauss(nodes)
    taus = duration * (x + 1) / 2
    weights = duration * w / 2
    integral = np.zeros((DIM * DIM, DIM * DIM), dtype=complex)
    for tau, weight in zip(taus, weights):
        u = expm(-1j * h * tau)
        forward = np.kron(u, u.conj())
        integral += weight * (forward.conj().T @ liouvillian.l1 @ forward)
    return _frozen(final @ (np.eye(DIM * DIM) + integral))


def evolve_perturbative(
    rho0: DensityState,
    sequence: Sequence[PulseSpec],
    delta_nu: float,
    rates: DissipationRates,
    nodes: Optional[int] = None,
) -> DensityState:
    """Applique les superopérateurs de rotation dans l'ordre chronologique."""
    vector = rho0.vector.copy()
    for pulse in sequence:
        vector = rotation_superop(pulse, delta_nu, rates, nodes=nodes) @ vector
    return DensityState.from_vector(vector)


def evolve_exact(
    rho0: DensityState,
    sequence: Sequence[PulseSpec],
    delta_nu: float,
    rates: DissipationRates,
    rtol: Optional[float] = None,
    atol: Optional[float] = None,
) -> DensityState:
    """Intègre l'équation maîtresse complète à travers chaque impulsion, sans délai."""
    rtol = rtol or settings.ode_rtol
    atol = atol or settings.ode_atol
    vector = rho0.vector.copy()
    for index, pulse in enumerate(sequence):
        generator = build_liouvillian(pulse, delta_nu, rates).full
        solution = solve_ivp(
            lambda t, y: generator @ y,
            (0.0, pulse.duration),
            vector,
            method="DOP853",
            rtol=rtol,
            atol=atol,
        )
        if not solution.success:
            raise IntegrationError(solution.message, pulse_index=index)
        matrix = solution.y[:, -1].reshape(DIM, DIM)
        # l'intégrateur ne conserve l'hermiticité qu'à rtol près
        vector = ((matrix + matrix.conj().T) / 2).ravel()
    return DensityState.from_vector(vector)


def evolve(
    rho0: DensityState,
    sequence: Sequence[PulseSpec],
    delta_nu: float,
    rates: DissipationRates,
    method: SimulationMethod = SimulationMethod.EXACT,
) -> DensityState:
    if method == SimulationMethod.EXACT:
        return evolve_exact(rho0, sequence, delta_nu, rates)
    return evolve_perturbative(rho0, sequence, delta_nu, rates)
