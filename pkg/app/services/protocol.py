"""Algèbre des états de Bell du répéteur.

Convention: ↑ ≡ 0, ↓ ≡ 1 et B(x, z) = (I ⊗ XˣZᶻ)|φ⁺>, soit
φ⁺ = (0, 0), φ⁻ = (0, 1), ψ⁺ = (1, 0), ψ⁻ = (1, 1).
Les phases déterministes des portes sont supposées compensées par des
opérations locales: le protocole travaille avec la CNOT de manuel.
"""
import itertools
import math
from typing import Iterable, Optional, Sequence

import numpy as np

from app.exceptions import BasisMismatchError, ChainError, OracleAmbiguityError
from app.models import (
    Basis,
    BellFrame,
    BellLabel,
    Correction,
    DetectorPattern,
    HeraldOutcome,
    MeasurementRecord,
    Pauli,
    Spin,
    SwapRecord,
)

_LABEL_BITS = {
    BellLabel.PHI_PLUS: (0, 0),
    BellLabel.PHI_MINUS: (0, 1),
    BellLabel.PSI_PLUS: (1, 0),
    BellLabel.PSI_MINUS: (1, 1),
}
_BITS_LABEL = {bits: label for label, bits in _LABEL_BITS.items()}
_XZ_PAULI = {(0, 0): Pauli.I, (1, 0): Pauli.X, (0, 1): Pauli.Z, (1, 1): Pauli.Y}

MAX_ORACLE_QUBITS = 8


def label_bits(label: BellLabel) -> tuple[int, int]:
    return _LABEL_BITS[label]


def label_from_bits(x: int, z: int) -> BellLabel:
    return _BITS_LABEL[(x & 1, z & 1)]


def spin_bit(spin: Spin) -> int:
    return 0 if spin == Spin.UP else 1


def xz_to_pauli(x: int, z: int) -> Pauli:
    return _XZ_PAULI[(x & 1, z & 1)]


# Génération Barrett-Kok
def bk_outcome(round_1: DetectorPattern, round_2: DetectorPattern) -> HeraldOutcome:
    """Succès si un seul détecteur clique à chaque ronde; ψ⁺ si c'est le même, ψ⁻ sinon."""
    single = (DetectorPattern.D1, DetectorPattern.D2)
    if round_1 not in single or round_2 not in single:
        return HeraldOutcome(success=False)
    label = BellLabel.PSI_PLUS if round_1 == round_2 else BellLabel.PSI_MINUS
    return HeraldOutcome(success=True, label=label)


def _round_patterns(emitters: int, q: float) -> dict[DetectorPattern, float]:
    """Distribution des clics d'une ronde, chaque photon émis étant détecté avec la probabilité q."""
    patterns = {pattern: 0.0 for pattern in DetectorPattern}
    for detected in itertools.product((True, False), repeat=emitters):
        weight = math.prod(q if hit else 1 - q for hit in detected)
        hits = sum(detected)
        if hits == 0:
            patterns[DetectorPattern.NONE] += weight
            continue
        # chaque photon part vers D1 ou D2 avec une chance sur deux
        for sides in itertools.product((DetectorPattern.D1, DetectorPattern.D2), repeat=hits):
            clicked = set(sides)
            pattern = sides[0] if len(clicked) == 1 else DetectorPattern.BOTH
            patterns[pattern] += weight / 2 ** hits
    return patterns


def detection_distribution(
    eta_t: float, p: float, eta_d: float
) -> dict[tuple[DetectorPattern, DetectorPattern], float]:
    """Probabilité jointe des motifs de détection des deux rondes.

    Chaque ion part de (|↑>+|↓>)/√2 et n'émet que depuis son état brillant;
    l'inversion π entre les rondes échange les émetteurs.
    """
    q = p * eta_t * eta_d
    joint = {pair: 0.0 for pair in itertools.product(DetectorPattern, repeat=2)}
    # configurations des deux spins: 0 = brillant à la première ronde
    for spins in itertools.product((0, 1), repeat=2):
        first = sum(1 for s in spins if s == 0)
        second = len(spins) - first
        r1 = _round_patterns(first, q)
        r2 = _round_patterns(second, q)
        for (a, pa), (b, pb) in itertools.product(r1.items(), r2.items()):
            joint[(a, b)] += 0.25 * pa * pb
    return joint


def herald_probability(eta_t: float, p: float, eta_d: float) -> float:
    """Somme exacte des probabilités des motifs annoncés comme succès."""
    return sum(
        weight
        for (r1, r2), weight in detection_distribution(eta_t, p, eta_d).items()
        if bk_outcome(r1, r2).success
    )


# Échange d'intrication et transfert vers l'Eu
def _check_basis(record: MeasurementRecord, expected: Basis, role: str) -> None:
    if record.basis != expected:
        raise BasisMismatchError(f"{role}: base {expected.value.upper()} attendue, reçu {record.basis.value.upper()}")


def swap_outcome(
    m1: MeasurementRecord,
    m2: MeasurementRecord,
    left: BellLabel = BellLabel.PSI_PLUS,
    right: BellLabel = BellLabel.PSI_PLUS,
) -> BellLabel:
    """État de la paire extérieure après l'échange.

    m1 est la lecture X de l'Er après la CNOT, m2 sa lecture Z après la CNOT
    inversée. m1 ⊕ m2 donne la parité Z des deux qubits du noeud:
    x = x₁ ⊕ x₂ ⊕ m1 ⊕ m2 et z = z₁ ⊕ z₂ ⊕ m1.
    """
    _check_basis(m1, Basis.X, "Première lecture")
    _check_basis(m2, Basis.Z, "Seconde lecture")
    x1, z1 = label_bits(left)
    x2, z2 = label_bits(right)
    b1, b2 = spin_bit(m1.outcome), spin_bit(m2.outcome)
    return label_from_bits(x1 ^ x2 ^ b1 ^ b2, z1 ^ z2 ^ b1)


def map_outcome(label: BellLabel, m_a: MeasurementRecord, m_b: MeasurementRecord) -> BellLabel:
    """Transfert Er → Eu aux deux extrémités puis lecture X des deux Er.

    Le signe bascule quand une seule des deux lectures vaut ↓.
    """
    _check_basis(m_a, Basis.X, "Lecture Er (noeud a)")
    _check_basis(m_b, Basis.X, "Lecture Er (noeud b)")
    x, z = label_bits(label)
    return label_from_bits(x, z ^ spin_bit(m_a.outcome) ^ spin_bit(m_b.outcome))


def swap_frames(left: BellFrame, right: BellFrame, record: SwapRecord) -> BellFrame:
    """Fusionne deux paires adjacentes au noeud `record.node`."""
    node = record.node
    if left.endpoints[1] != node or right.endpoints[0] != node:
        raise ChainError(
            f"Échange au noeud {node} impossible entre {left.endpoints} et {right.endpoints}"
        )
    label = swap_outcome(record.m1, record.m2, left.label, right.label)
    b1, b2 = spin_bit(record.m1.outcome), spin_bit(record.m2.outcome)
    far = right.endpoints[1]
    correction = Correction(node=far, pauli=xz_to_pauli(b1 ^ b2, b1))
    return BellFrame(
        label=label,
        endpoints=(left.endpoints[0], far),
        corrections=left.corrections + right.corrections + (correction,),
    )


def propagate_frame(frames: Sequence[BellFrame], swaps: Iterable[SwapRecord]) -> BellFrame:
    """Applique les échanges, dans l'ordre donné, à une chaîne de paires adjacentes."""
    chain = list(frames)
    if not chain:
        raise ChainError("Chaîne vide")
    for current, following in zip(chain, chain[1:]):
        if current.endpoints[1] != following.endpoints[0]:
            raise ChainError(f"Chaîne non connexe entre {current.endpoints} et {following.endpoints}")

    for record in swaps:
        position = next(
            (i for i, frame in enumerate(chain[:-1]) if frame.endpoints[1] == record.node),
            None,
        )
        if position is None:
            raise ChainError(f"Aucune jonction au noeud {record.node}")
        merged = swap_frames(chain[position], chain[position + 1], record)
        chain[position:position + 2] = [merged]

    if len(chain) != 1:
        raise ChainError(f"{len(chain) - 1} jonction(s) sans échange: la chaîne n'est pas reliée")
    return chain[0]


def format_frame_table(frame: BellFrame) -> str:
    """Tableau texte des corrections accumulées, pour le débogage."""
    lines = [
        f"Paire {frame.endpoints[0]} - {frame.endpoints[1]} : {frame.label.value}",
        f"{'#':>3}  {'noeud':>5}  pauli",
    ]
    for index, correction in enumerate(frame.corrections):
        lines.append(f"{index:>3}  {correction.node:>5}  {correction.pauli.value}")
    if not frame.corrections:
        lines.append("  (aucune correction)")
    return "\n".join(lines)


# Oracle par vecteur d'état
_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)


def bell_ket(label: BellLabel) -> np.ndarray:
    x, z = label_bits(label)
    local = np.linalg.matrix_power(_X, x) @ np.linalg.matrix_power(_Z, z)
    return np.kron(np.eye(2), local) @ _PHI_PLUS


def _apply_single(state: np.ndarray, gate: np.ndarray, qubit: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(gate, state, axes=([1], [qubit])), 0, qubit)


def _apply_cnot(state: np.ndarray, control: int, target: int) -> np.ndarray:
    """Bascule la cible quand le contrôle vaut 1 (↓)."""
    result = state.copy()
    index = [slice(None)] * state.ndim
    index[control] = 1
    axis = target - 1 if target > control else target
    result[tuple(index)] = np.flip(state[tuple(index)], axis=axis)
    return result


def _project(state: np.ndarray, qubit: int, value: int) -> np.ndarray:
    result = state.copy()
    index = [slice(None)] * state.ndim
    index[qubit] = 1 - value
    result[tuple(index)] = 0
    norm = np.linalg.norm(result)
    if norm < 1e-12:
        raise OracleAmbiguityError(f"Issue {value} impossible pour le qubit {qubit}")
    return result / norm


def _identify_pair(state: np.ndarray, first: int, second: int) -> BellLabel:
    """Étiquette de Bell de la paire (first, second) par recouvrement avec la matrice réduite."""
    psi = np.moveaxis(state, [first, second], [0, 1]).reshape(2, 2, -1)
    rho = np.einsum("abk,cdk->abcd", psi, psi.conj()).reshape(4, 4)
    overlaps = {label: float(np.real(bell_ket(label).conj() @ rho @ bell_ket(label))) for label in BellLabel}
    best = max(overlaps, key=overlaps.get)
    if overlaps[best] < 1 - 1e-9:
        raise OracleAmbiguityError(f"Pas un état de Bell (meilleur recouvrement {overlaps[best]:.6g})")
    return best


def _x_then_z_swap(state: np.ndarray, t: int, c: int, m1: Spin, m2: Spin) -> np.ndarray:
    """CNOT(c→t), lecture X de c, CNOT(t→c), lecture Z de c."""
    state = _apply_cnot(state, control=c, target=t)
    state = _project(_apply_single(state, _H, c), c, spin_bit(m1))
    state = _apply_cnot(state, control=t, target=c)
    return _project(state, c, spin_bit(m2))


def statevector_oracle(
    links: Sequence[BellLabel],
    outcomes: Sequence[tuple[Spin, Spin]],
    order: Optional[Sequence[int]] = None,
) -> BellLabel:
    """Construit explicitement la chaîne et renvoie l'étiquette de la paire extrême.

    `outcomes[j]` donne (m1, m2) pour la jonction j (entre les liens j et j+1);
    `order` fixe l'ordre d'exécution des échanges (par défaut de gauche à droite).
    """
    qubits = 2 * len(links)
    if not links:
        raise ChainError("Chaîne vide")
    if qubits > MAX_ORACLE_QUBITS:
        raise ChainError(f"L'oracle est limité à {MAX_ORACLE_QUBITS} qubits ({qubits} demandés)")
    if len(outcomes) != len(links) - 1:
        raise ChainError(f"{len(links) - 1} issues attendues, {len(outcomes)} reçues")

    state = np.array([1.0 + 0j])
    for label in links:
        state = np.kron(state, bell_ket(label))
    state = state.reshape((2,) * qubits)

    for junction in order if order is not None else range(len(outcomes)):
        m1, m2 = outcomes[junction]
        state = _x_then_z_swap(state, t=2 * junction + 1, c=2 * junction + 2, m1=m1, m2=m2)
    return _identify_pair(state, 0, qubits - 1)


def mapping_oracle(label: BellLabel, m_a: Spin, m_b: Spin) -> BellLabel:
    """Paire Er en `label`, transfert vers deux Eu dans |↑>, lecture X des deux Er."""
    # qubits: Er_a, Er_b, Eu_a, Eu_b
    state = np.kron(bell_ket(label), np.array([1, 0, 0, 0], dtype=complex)).reshape((2,) * 4)
    state = _apply_cnot(state, control=0, target=2)
    state = _apply_cnot(state, control=1, target=3)
    state = _project(_apply_single(state, _H, 0), 0, spin_bit(m_a))
    state = _project(_apply_single(state, _H, 1), 1, spin_bit(m_b))
    return _identify_pair(state, 2, 3)
