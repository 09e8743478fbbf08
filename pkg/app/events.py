"""Système d'événements en temps réel avec SSE."""
import asyncio
from dataclasses import dataclass
from enum import Enum
from typing import Optional


class EventType(str, Enum):
    SWEEP_COMPLETED = "sweep_completed"
    MONTECARLO_STARTED = "montecarlo_started"
    MONTECARLO_PROGRESS = "montecarlo_progress"
    MONTECARLO_COMPLETED = "montecarlo_completed"
    MONTECARLO_FAILED = "montecarlo_failed"


@dataclass
class Event:
    type: EventType
    data: dict


class EventManager:
    """Gestionnaire d'événements pour SSE."""

    def __init__(self):
        self._subscribers: list[asyncio.Queue] = []
        self._loop: Optional[asyncio.AbstractEventLoop] = None

    def subscribe(self) -> asyncio.Queue:
        """Crée une nouvelle souscription aux événements."""
        queue = asyncio.Queue()
        self._subscribers.append(queue)
        return queue

    def unsubscribe(self, queue: asyncio.Queue):
        """Retire une souscription."""
        if queue in self._subscribers:
            self._subscribers.remove(queue)

    @property
    def subscriber_count(self) -> int:
        return len(self._subscribers)

    async def emit(self, event_type: EventType, data: dict):
        """Émet un événement à tous les abonnés."""
        self._loop = asyncio.get_running_loop()
        event = Event(type=event_type, data=data)
        for queue in self._subscribers:
            await queue.put(event)

    def emit_threadsafe(self, event_type: EventType, data: dict):
        """Émet depuis un thread de calcul (boucle mémorisée au dernier `emit`)."""
        if self._loop is None or self._loop.is_closed():
            return
        asyncio.run_coroutine_threadsafe(self.emit(event_type, data), self._loop)

    async def emit_sweep_completed(self, rows: int):
        await self.emit(EventType.SWEEP_COMPLETED, {"rows": rows})

    async def emit_montecarlo_started(self, trials: int, nesting_n: int):
        """Émet un événement de début de simulation."""
        await self.emit(EventType.MONTECARLO_STARTED, {"trials": trials, "nesting_n": nesting_n})

    def montecarlo_progress(self, current: int, total: int):
        """Rappel de progression passé à `estimate_rate`."""
        self.emit_threadsafe(EventType.MONTECARLO_PROGRESS, {"current": current, "total": total})

    async def emit_montecarlo_completed(self, result: dict):
        await self.emit(EventType.MONTECARLO_COMPLETED, result)

    async def emit_montecarlo_failed(self, message: str):
        await self.emit(EventType.MONTECARLO_FAILED, {"error": message})


# Instance globale
event_manager = EventManager()
