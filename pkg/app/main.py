"""Application principale FastAPI."""
import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from app import __version__
from app.api import router as api_router
from app.config import settings

logger = logging.getLogger(__name__)


def setup_logging(level: str = None):
    """Configure le logger racine depuis les réglages."""
    logging.basicConfig(
        level=(level or settings.log_level).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Gestion du cycle de vie de l'application."""
    setup_logging()
    logger.info(f"Simulateur de répéteur {__version__} prêt")
    yield


# Créer l'application
app = FastAPI(
    title="Répéteur Er/Eu",
    description="Simulateur d'un répéteur quantique à ions de terres rares uniques (Er, Eu)",
    version=__version__,
    lifespan=lifespan,
)

# CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# API routes
app.include_router(api_router)


@app.get("/health")
async def health():
    """Health check."""
    return {"status": "ok", "version": __version__}
