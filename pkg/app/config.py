"""Configuration du projet."""
from pydantic_settings import BaseSettings
from pydantic import Field


class Settings(BaseSettings):
    """Configuration de l'application.

    Seuls les réglages d'exécution passent par l'environnement (ou `.env`).
    Les paramètres physiques viennent exclusivement du fichier de config
    `clé = valeur` lu par `config_manager`.
    """

    # Serveur
    host: str = "0.0.0.0"
    port: int = 8080

    # Logs
    log_level: str = Field(default="INFO", description="Niveau de log (DEBUG, INFO, WARNING...)")

    # Monte Carlo
    default_seed: int = Field(default=20190101, description="Graine par défaut des simulations")
    default_trials: int = Field(default=10_000, description="Nombre d'essais par défaut")
    mc_workers: int = Field(default=1, ge=1, description="Processus utilisés pour les essais")

    # Moteur de Lindblad
    quadrature_nodes: int = Field(default=32, ge=2, description="Noeuds de Gauss-Legendre")
    perturbative_ratio_threshold: float = Field(
        default=1e-3, gt=0, description="Seuil taux dissipatifs / Omega avant avertissement"
    )
    ode_rtol: float = Field(default=1e-10, gt=0, description="Tolérance relative de l'intégrateur")
    ode_atol: float = Field(default=1e-12, gt=0, description="Tolérance absolue de l'intégrateur")

    class Config:
        env_file = ".env"
        env_file_encoding = "utf-8"


settings = Settings()
