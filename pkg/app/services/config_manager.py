"""Lecture et écriture du fichier de paramètres `clé = valeur`.

Format: une affectation par ligne, `#` commence un commentaire, les unités
sont fixées par clé (SI, distances en km) et aucun suffixe n'est accepté.
Valeurs: nombres, `true`/`false`, `none` pour un champ optionnel, trois
nombres séparés par des virgules pour un vecteur.
"""
import logging
from pathlib import Path
from typing import Any, Optional, Union

from pydantic import ValidationError

from app.exceptions import ConfigError
from app.models import (
    CavityParams,
    DissipationRates,
    GateParams,
    IonPairConfig,
    ParameterSet,
    RepeaterConfig,
)

logger = logging.getLogger(__name__)

# section -> (modèle, clés); les taux dissipatifs sont imbriqués dans `gate`
SECTIONS: dict[str, tuple[type, list[str]]] = {
    "repeater": (RepeaterConfig, list(RepeaterConfig.model_fields)),
    "gate": (GateParams, [name for name in GateParams.model_fields if name != "rates"]),
    "rates": (DissipationRates, list(DissipationRates.model_fields)),
    "ions": (IonPairConfig, list(IonPairConfig.model_fields)),
    "cavity": (CavityParams, list(CavityParams.model_fields)),
}

KEYS: dict[str, str] = {key: section for section, (_, keys) in SECTIONS.items() for key in keys}


def _field_kind(section: str, key: str) -> str:
    annotation = str(SECTIONS[section][0].model_fields[key].annotation)
    if "tuple" in annotation:
        return "vector"
    if "bool" in annotation:
        return "bool"
    if "int" in annotation:
        return "int"
    return "float"


def _optional(section: str, key: str) -> bool:
    return not SECTIONS[section][0].model_fields[key].is_required() and SECTIONS[section][0].model_fields[key].default is None


def _convert(section: str, key: str, raw: str, line: int) -> Any:
    text = raw.strip()
    if text.lower() == "none":
        if not _optional(section, key):
            raise ConfigError(f"'{key}' n'accepte pas 'none'", line=line, field=key)
        return None
    kind = _field_kind(section, key)
    try:
        if kind == "bool":
            lowered = text.lower()
            if lowered not in ("true", "false"):
                raise ValueError(text)
            return lowered == "true"
        if kind == "int":
            return int(text)
        if kind == "vector":
            parts = [float(part) for part in text.split(",")]
            if len(parts) != 3:
                raise ValueError(text)
            return tuple(parts)
        return float(text)
    except ValueError:
        raise ConfigError(f"valeur invalide pour '{key}': {text!r}", line=line, field=key) from None


def _format(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def parse_config(text: str) -> ParameterSet:
    """Valide le texte complet et renvoie le jeu de paramètres (valeurs par défaut ailleurs)."""
    values: dict[str, dict[str, Any]] = {section: {} for section in SECTIONS}
    lines: dict[str, int] = {}
    for number, raw_line in enumerate(text.splitlines(), start=1):
        content = raw_line.split("#", 1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            raise ConfigError(f"affectation 'clé = valeur' attendue: {content!r}", line=number)
        key, raw_value = (part.strip() for part in content.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"clé inconnue '{key}'", line=number, field=key)
        if key in lines:
            raise ConfigError(f"clé '{key}' déjà définie ligne {lines[key]}", line=number, field=key)
        if not raw_value:
            raise ConfigError(f"valeur manquante pour '{key}'", line=number, field=key)
        section = KEYS[key]
        values[section][key] = _convert(section, key, raw_value, number)
        lines[key] = number

    built = {}
    for section, (model, _) in SECTIONS.items():
        try:
            built[section] = model(**values[section])
        except ValidationError as e:
            error = e.errors()[0]
            key = str(error["loc"][0]) if error["loc"] else None
            raise ConfigError(
                f"{key or section}: {error['msg']}", line=lines.get(key) if key else None, field=key or section
            ) from None
    try:
        gate = built["gate"].model_copy(update={"rates": built["rates"]})
        return ParameterSet(repeater=built["repeater"], gate=gate, ions=built["ions"], cavity=built["cavity"])
    except ValidationError as e:
        raise ConfigError(str(e)) from None


def emit_config(params: ParameterSet) -> str:
    """Écrit toutes les clés; `parse_config(emit_config(p)) == p`."""
    sources = {
        "repeater": params.repeater,
        "gate": params.gate,
        "rates": params.gate.rates,
        "ions": params.ions,
        "cavity": params.cavity,
    }
    lines = ["# Paramètres du répéteur Er/Eu (unités SI, distances en km)"]
    for section, (_, keys) in SECTIONS.items():
        lines.append("")
        lines.append(f"# {section}")
        for key in keys:
            lines.append(f"{key} = {_format(getattr(sources[section], key))}")
    return "\n".join(lines) + "\n"


class ConfigManager:
    """Gestionnaire du jeu de paramètres courant."""

    def __init__(self):
        self._params: Optional[ParameterSet] = None

    def load(self, path: Optional[Union[str, Path]] = None) -> ParameterSet:
        """Charge un fichier (ou les valeurs par défaut si `path` est None)."""
        if path is None:
            self._params = ParameterSet()
            return self._params
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"lecture impossible de {path}: {e}") from e
        self._params = parse_config(text)
        logger.info(f"Configuration chargée depuis {path}")
        return self._params

    def set_params(self, params: ParameterSet) -> None:
        self._params = params

    @property
    def params(self) -> ParameterSet:
        if self._params is None:
            self._params = ParameterSet()
        return self._params

    def save(self, path: Union[str, Path], params: Optional[ParameterSet] = None) -> None:
        """Écrit la configuration complète (valeurs par défaut comprises)."""
        params = params or self.params
        Path(path).write_text(emit_config(params), encoding="utf-8")
        self._params = params

    def update(self, **kwargs) -> ParameterSet:
        """Remplace des clés du jeu courant en repassant par la validation du fichier."""
        for key in kwargs:
            if key not in KEYS:
                raise ConfigError(f"clé inconnue '{key}'", field=key)
        merged = "\n".join(
            line for line in emit_config(self.params).splitlines()
            if line.split("=", 1)[0].strip() not in kwargs
        )
        overrides = "\n".join(f"{key} = {_format(value)}" for key, value in kwargs.items())
        self._params = parse_config(f"{merged}\n{overrides}\n")
        return self._params


# Instance globale
config_manager = ConfigManager()
