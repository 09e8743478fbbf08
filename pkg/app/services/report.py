"""Sorties texte: balayage CSV des débits et tableau des fidélités."""
import csv
import io
import logging
from pathlib import Path
from typing import Optional

from app.exceptions import OutputError
from app.models import GateKind, GateParams, RateRow, SimulationMethod, SweepSpec
from app.services import gates, rates

logger = logging.getLogger(__name__)

CSV_HEADER = ["distance_km", "scheme", "rate_hz", "expected_time_s", "p_t", "p_s", "p_0"]


def _num(value: float) -> str:
    return f"{value:.6g}"


def format_rows(rows: list[RateRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([
            _num(row.distance_km),
            row.scheme.value,
            _num(row.rate_hz),
            _num(row.expected_time_s),
            _num(row.p_t),
            _num(row.p_s),
            _num(row.p_0),
        ])
    return buffer.getvalue()


def run_sweep(spec: SweepSpec) -> str:
    """CSV du balayage; écrit aussi `spec.output_path` s'il est donné."""
    rows = rates.sweep_rates(spec.cfg, spec.distances, spec.schemes)
    text = format_rows(rows)
    if spec.output_path:
        try:
            Path(spec.output_path).write_text(text, encoding="utf-8")
        except OSError as e:
            raise OutputError(f"Écriture impossible dans {spec.output_path}: {e}") from e
        logger.info(f"Balayage écrit dans {spec.output_path} ({len(rows)} lignes)")
    return text


def fidelity_summary(params: GateParams, exact: bool = False) -> dict[str, Optional[float]]:
    """Grandeurs du tableau des fidélités (temps en s, taux en rad/s)."""
    cnot = gates.closed_form_fidelity(GateKind.CNOT, params)
    reverse = gates.closed_form_fidelity(GateKind.REVERSE_CNOT, params)
    transfer = gates.closed_form_fidelity(GateKind.STATE_TRANSFER, params)
    summary = {
        "t_cnot": cnot.gate_time,
        "t_st": transfer.gate_time,
        "gamma": cnot.gamma_eff,
        "gamma_st": transfer.gamma_eff,
        "f_cnot": cnot.fidelity,
        "f_rcnot": reverse.fidelity,
        "f_st": transfer.fidelity,
    }
    if exact:
        for key, kind in (("f_cnot", GateKind.CNOT), ("f_rcnot", GateKind.REVERSE_CNOT), ("f_st", GateKind.STATE_TRANSFER)):
            summary[f"{key}_exact"] = gates.simulated_fidelity(kind, params, SimulationMethod.EXACT)
    return summary


def fidelity_report(params: GateParams, exact: bool = False) -> str:
    summary = fidelity_summary(params, exact=exact)
    rows = [
        ("T_CNOT (us)", summary["t_cnot"] * 1e6, None),
        ("T_ST (us)", summary["t_st"] * 1e6, None),
        ("Gamma (1/s)", summary["gamma"], None),
        ("Gamma_ST (1/s)", summary["gamma_st"], None),
        ("F_CNOT", summary["f_cnot"], summary.get("f_cnot_exact")),
        ("F_R-CNOT", summary["f_rcnot"], summary.get("f_rcnot_exact")),
        ("F_ST", summary["f_st"], summary.get("f_st_exact")),
    ]
    header = f"{'grandeur':<16}{'forme fermée':>14}"
    if exact:
        header += f"{'simulation':>14}"
    lines = [header, "-" * len(header)]
    for name, value, simulated in rows:
        digits = ".3f" if name.startswith("F_") else ".4g"
        line = f"{name:<16}{format(value, digits):>14}"
        if exact:
            line += f"{format(simulated, digits) if simulated is not None else '':>14}"
        lines.append(line)
    return "\n".join(lines) + "\n"
