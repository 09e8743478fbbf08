"""Exceptions du projet."""
from typing import Optional


class ReproError(Exception):
    """Erreur de base du simulateur."""


class ConfigError(ReproError, ValueError):
    """Fichier de configuration invalide."""

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        prefix = f"ligne {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class InvalidParameterError(ReproError, ValueError):
    """Paramètre hors du domaine de validité d'une opération."""


class MultipleDriveError(InvalidParameterError):
    """Plusieurs transitions pilotées en même temps."""


class ExcitedPopulationError(InvalidParameterError):
    """État initial avec population dans un niveau excité."""


class IntegrationError(ReproError, RuntimeError):
    """Échec de l'intégrateur pendant une impulsion."""

    def __init__(self, message: str, pulse_index: int):
        self.pulse_index = pulse_index
        super().__init__(f"impulsion {pulse_index}: {message}")


class ChainError(ReproError, ValueError):
    """Chaîne de liens non connexe."""


class BasisMismatchError(ReproError, ValueError):
    """Bases de mesure incompatibles avec l'échange d'intrication."""


class OracleAmbiguityError(ReproError, RuntimeError):
    """L'oracle n'a pas obtenu un état de Bell."""


class OutputError(ReproError, OSError):
    """Fichier de sortie impossible à écrire."""
