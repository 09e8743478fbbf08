"""Interface en ligne de commande.

Codes de sortie: 0 succès, 2 erreur de configuration, 1 erreur d'exécution.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from app import __version__
from app.config import settings
from app.exceptions import ConfigError, ReproError
from app.models import ParameterSet, Scheme, SpinRelaxationParams, SweepSpec
from app.services import cavity, dipole, montecarlo, rates, report
from app.services.config_manager import config_manager, emit_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _schemes(value: str) -> list[Scheme]:
    try:
        return [Scheme(part.strip()) for part in value.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"schéma inconnu: {e}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="app", description="Simulateur de répéteur quantique Er/Eu")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="Niveau de log (défaut: réglage LOG_LEVEL)")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="Fichier `clé = valeur`")
    common.add_argument("--out", type=Path, default=None, help="Fichier de sortie (défaut: stdout)")

    sub = parser.add_subparsers(dest="command", required=True)

    p_rates = sub.add_parser("rates", parents=[common], help="Balayage des débits en distance (CSV)")
    p_rates.add_argument("--from", dest="start", type=float, default=50.0, help="Distance initiale, km")
    p_rates.add_argument("--to", dest="stop", type=float, default=1000.0, help="Distance finale, km")
    p_rates.add_argument("--step", type=float, default=50.0, help="Pas, km")
    p_rates.add_argument("--schemes", type=_schemes, default=list(Scheme), help="Liste séparée par des virgules")

    p_mc = sub.add_parser("mc", parents=[common], help="Validation Monte Carlo du temps de distribution")
    p_mc.add_argument("--seed", type=int, default=settings.default_seed)
    p_mc.add_argument("--trials", type=int, default=settings.default_trials)
    p_mc.add_argument("--workers", type=int, default=settings.mc_workers)

    p_fid = sub.add_parser("fidelity", parents=[common], help="Tableau des fidélités des portes")
    p_fid.add_argument("--exact", action="store_true", help="Ajoute la simulation exacte de l'équation maîtresse")

    sub.add_parser("dipole", parents=[common], help="Couplage dipolaire Er-Eu et durées de porte")
    sub.add_parser("cavity", parents=[common], help="Efficacité, indiscernabilité et relaxation de spin")
    sub.add_parser("config", parents=[common], help="Écrit la configuration effective (défauts compris)")
    return parser


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        out.write_text(text, encoding="utf-8")
    except OSError as e:
        raise ReproError(f"Écriture impossible dans {out}: {e}") from e


def cmd_rates(params: ParameterSet, args) -> str:
    spec = SweepSpec.from_range(
        args.start, args.stop, args.step,
        schemes=args.schemes, cfg=params.repeater,
        output_path=str(args.out) if args.out else None,
    )
    text = report.run_sweep(spec)
    # run_sweep a déjà écrit le fichier
    return "" if spec.output_path else text


def cmd_mc(params: ParameterSet, args) -> str:
    cfg = params.repeater
    estimate = montecarlo.estimate_rate(cfg, args.trials, args.seed, workers=args.workers, gate_params=params.gate)
    analytic = rates.expected_time(cfg)
    lines = [
        f"essais            {estimate.trials}",
        f"<T> simulé        {estimate.mean_time:.6g} s ± {estimate.std_err:.2g} s",
        f"<T> analytique    {analytic:.6g} s",
        f"rapport           {estimate.mean_time / analytic:.4f}",
        f"débit             {estimate.rate:.6g} Hz",
        f"créneaux moyens   {estimate.mean_slots:.6g}",
        f"fidélité estimée  {estimate.mean_fidelity:.4f}",
    ]
    return "\n".join(lines) + "\n"


def cmd_fidelity(params: ParameterSet, args) -> str:
    return report.fidelity_report(params.gate, exact=args.exact)


def cmd_dipole(params: ParameterSet, args) -> str:
    pair = params.ions
    stark = dipole.stark_shift(pair)
    drive = dipole.conditional_drive(abs(stark))
    lines = [
        f"r                 {pair.separation_r * 1e9:.3g} nm",
        f"décalage Stark    {stark / 1e3:.6g} kHz",
        f"dipôle magnétique {dipole.magnetic_shift(pair) / 1e3:.6g} kHz",
        f"Omega             {drive.omega:.6g} rad/s",
        f"T_CNOT            {drive.t_cnot * 1e6:.4g} us",
        f"T_ST              {drive.t_st * 1e6:.4g} us",
    ]
    return "\n".join(lines) + "\n"


def cmd_cavity(params: ParameterSet, args) -> str:
    cav = params.cavity
    efficiency = cavity.quantum_efficiency(cav)
    lines = [
        f"eta               {efficiency.eta:.4f}",
        f"p                 {efficiency.p:.4f}",
        f"I1                {cavity.indistinguishability(cav):.4f}",
    ]
    if cav.purcell_p:
        profile = cavity.photon_profile(cav)
        lines.append(f"largeur photon    {profile.bandwidth / 1e3:.4g} kHz")
        lines.append(f"durée photon      {profile.duration * 1e6:.4g} us")
    relaxation = cavity.spin_relaxation_rate(SpinRelaxationParams())
    lines.append(f"relaxation spin   {1 / relaxation * 1e3:.4g} ms (1 T, 20 mK)")
    return "\n".join(lines) + "\n"


def cmd_config(params: ParameterSet, args) -> str:
    return emit_config(params)


COMMANDS = {
    "rates": cmd_rates,
    "mc": cmd_mc,
    "fidelity": cmd_fidelity,
    "dipole": cmd_dipole,
    "cavity": cmd_cavity,
    "config": cmd_config,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=(args.log_level or settings.log_level).upper(),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        params = config_manager.load(args.config)
        text = COMMANDS[args.command](params, args)
        if text:
            _emit(text, args.out)
    except ConfigError as e:
        logger.error(f"Configuration invalide: {e}")
        return EXIT_CONFIG
    except (ReproError, ValueError, OSError) as e:
        logger.error(f"Échec de '{args.command}': {e}")
        return EXIT_RUNTIME
    return EXIT_OK
