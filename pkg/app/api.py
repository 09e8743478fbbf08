"""API FastAPI du simulateur de répéteur."""
import asyncio
import json
import math
from typing import AsyncGenerator, Literal, Optional

from fastapi import APIRouter, HTTPException, Query
from fastapi.responses import PlainTextResponse, StreamingResponse
from pydantic import BaseModel, Field

from app.config import settings
from app.events import event_manager
from app.exceptions import ConfigError, ReproError
from app.models import CavityParams, ParameterSet, Scheme, SweepSpec
from app.services import cavity, dipole, montecarlo, rates, report
from app.services.config_manager import config_manager, emit_config, parse_config


router = APIRouter(prefix="/api", tags=["repeater"])


def _bad_request(e: ReproError) -> HTTPException:
    if isinstance(e, ConfigError):
        return HTTPException(status_code=400, detail={"message": str(e), "line": e.line, "field": e.field})
    return HTTPException(status_code=400, detail=str(e))


def _finite(value: float) -> Optional[float]:
    return value if math.isfinite(value) else None


# ============== SSE Events ==============

async def event_generator() -> AsyncGenerator[str, None]:
    """Génère les événements SSE."""
    queue = event_manager.subscribe()
    try:
        while True:
            try:
                # Attendre un événement avec timeout pour envoyer des heartbeats
                event = await asyncio.wait_for(queue.get(), timeout=30.0)
                data = json.dumps({"type": event.type.value, "data": event.data})
                yield f"data: {data}\n\n"
            except asyncio.TimeoutError:
                yield ": heartbeat\n\n"
    except asyncio.CancelledError:
        pass
    finally:
        event_manager.unsubscribe(queue)


@router.get("/events")
async def sse_events():
    """Endpoint SSE pour suivre les simulations."""
    return StreamingResponse(
        event_generator(),
        media_type="text/event-stream",
        headers={
            "Cache-Control": "no-cache",
            "Connection": "keep-alive",
            "X-Accel-Buffering": "no",
        },
    )


# ============== Config ==============

class ConfigText(BaseModel):
    """Contenu d'un fichier `clé = valeur`."""
    text: str = ""


@router.get("/config/defaults")
async def get_default_config():
    """Valeurs par défaut, sous forme de fichier et de modèle."""
    defaults = ParameterSet()
    return {"text": emit_config(defaults), "params": defaults.model_dump(mode="json")}


@router.post("/config/parse")
async def parse_config_text(request: ConfigText):
    """Valide un fichier de configuration et le rend courant."""
    try:
        params = parse_config(request.text)
    except ConfigError as e:
        raise _bad_request(e)
    config_manager.set_params(params)
    return params.model_dump(mode="json")


# ============== Physique ==============

@router.get("/dipole")
async def get_dipole(separation_nm: Optional[float] = Query(default=None, gt=0)):
    """Décalages Stark et magnétique, paramètres de pilotage conditionnel."""
    pair = config_manager.params.ions
    if separation_nm is not None:
        pair = pair.model_copy(update={"separation_r": separation_nm * 1e-9})
    try:
        stark = dipole.stark_shift(pair)
        drive = dipole.conditional_drive(abs(stark))
    except ReproError as e:
        raise _bad_request(e)
    return {
        "separation_m": pair.separation_r,
        "stark_shift_hz": stark,
        "magnetic_shift_hz": dipole.magnetic_shift(pair),
        "drive": drive.model_dump(),
    }


@router.get("/cavity")
async def get_cavity(purcell_p: Optional[float] = Query(default=None, ge=0), t2_opt: Optional[float] = Query(default=None, gt=0)):
    """Efficacité quantique, indiscernabilité et profil des photons."""
    current = config_manager.params.cavity
    update = {key: value for key, value in (("purcell_p", purcell_p), ("t2_opt", t2_opt)) if value is not None}
    try:
        cav = CavityParams(**{**current.model_dump(), **update})
        efficiency = cavity.quantum_efficiency(cav)
        profile = cavity.photon_profile(cav).model_dump() if cav.purcell_p else None
        return {
            "eta": efficiency.eta,
            "p": efficiency.p,
            "indistinguishability": cavity.indistinguishability(cav),
            "photon": profile,
        }
    except (ReproError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))


@router.get("/fidelity")
async def get_fidelity(exact: bool = False):
    """Fidélités des portes, en forme fermée et éventuellement simulées."""
    try:
        return await asyncio.to_thread(report.fidelity_summary, config_manager.params.gate, exact)
    except ReproError as e:
        raise _bad_request(e)


# ============== Débits ==============

class SweepRequest(BaseModel):
    distances: Optional[list[float]] = None
    start: float = Field(default=50.0, gt=0)
    stop: float = Field(default=1000.0, gt=0)
    step: float = Field(default=50.0, gt=0)
    schemes: list[Scheme] = Field(default_factory=lambda: list(Scheme))
    format: Literal["csv", "json"] = "csv"


@router.post("/rates/sweep")
async def sweep(request: SweepRequest):
    """Balayage en distance: CSV (défaut) ou lignes JSON."""
    cfg = config_manager.params.repeater
    try:
        if request.distances is not None:
            spec = SweepSpec(distances=request.distances, schemes=request.schemes, cfg=cfg)
        else:
            spec = SweepSpec.from_range(request.start, request.stop, request.step, schemes=request.schemes, cfg=cfg)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))

    if request.format == "csv":
        text = report.run_sweep(spec)
        await event_manager.emit_sweep_completed(len(text.splitlines()) - 1)
        return PlainTextResponse(text, media_type="text/csv")
    rows = rates.sweep_rates(spec.cfg, spec.distances, spec.schemes)
    await event_manager.emit_sweep_completed(len(rows))
    return [
        {**row.model_dump(mode="json"), "expected_time_s": _finite(row.expected_time_s)}
        for row in rows
    ]


# ============== Monte Carlo ==============

class MonteCarloRequest(BaseModel):
    trials: int = Field(default_factory=lambda: settings.default_trials, ge=montecarlo.MIN_TRIALS)
    seed: int = Field(default_factory=lambda: settings.default_seed, ge=0)
    nesting_n: Optional[int] = Field(default=None, ge=0)
    channels_m: Optional[int] = Field(default=None, ge=1)
    total_length_l: Optional[float] = Field(default=None, gt=0)


@router.post("/montecarlo")
async def run_montecarlo(request: MonteCarloRequest):
    """Estimation Monte Carlo du temps de distribution, comparée à la formule analytique."""
    update = {
        key: value
        for key, value in request.model_dump(include={"nesting_n", "channels_m", "total_length_l"}).items()
        if value is not None
    }
    cfg = config_manager.params.repeater.model_copy(update=update)
    await event_manager.emit_montecarlo_started(request.trials, cfg.nesting_n)
    try:
        estimate = await asyncio.to_thread(
            montecarlo.estimate_rate,
            cfg,
            request.trials,
            request.seed,
            None,
            None,
            config_manager.params.gate,
            event_manager.montecarlo_progress,
        )
    except ReproError as e:
        await event_manager.emit_montecarlo_failed(str(e))
        raise _bad_request(e)

    result = {
        **estimate.model_dump(),
        "analytic_time": _finite(rates.expected_time(cfg)),
        "analytic_rate": rates.scheme_rate(
            cfg, Scheme.REPEATER_MULTIPLEXED if cfg.channels_m > 1 else Scheme.REPEATER
        ),
    }
    await event_manager.emit_montecarlo_completed(result)
    return result
