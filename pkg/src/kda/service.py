"""JSON-over-HTTP scoring service with a live alert stream.

One process owns the store. POST /transactions scores synchronously in the
request path (windows are <= 100 points, so a fit is milliseconds) and the
status code tells the caller what happened: 200 pass, 201 alert opened,
202 stopped. Alerts fan out to every connected /alerts/stream client as
server-sent events named `alert`; decisions echo on the same stream.

Requests for the same pan are serialized in arrival order; distinct pans
interleave freely. Auth is an optional static bearer token (also accepted
as a ?token= query parameter, since EventSource cannot set headers).
"""

from __future__ import annotations

import asyncio
import itertools
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Literal

from fastapi import Depends, FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel, Field
from starlette.concurrency import run_in_threadpool

from . import _kernels as kernels
from .ensemble import KdaConfig, kda_evaluate, kda_evaluate_offline
from .repository import (
    AlertAlreadyDecided,
    DuplicateTransaction,
    Repository,
    ResultsRow,
    UnknownAlert,
)
from .simgen import compute_detection_metrics
from .txmodel import RawTransaction, Transaction, filter_eligible, preprocess
from .verdicts import KdaVerdict

STREAM_QUEUE_LIMIT = 256
_PING_SECONDS = 15.0


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    storage: str = ":memory:"
    config: KdaConfig = None  # type: ignore[assignment]
    token: str | None = None

    def __post_init__(self):
        if self.config is None:
            object.__setattr__(self, "config", KdaConfig())
        if not 1 <= self.port <= 65535:
            raise ValueError("port must be in [1, 65535]")


class TransactionIn(BaseModel):
    pr_code: int
    pan: str = Field(min_length=1)
    term_id: str
    merchant_id: str
    pos_condition: int
    affective_amount: float = Field(ge=0)
    business_date: datetime
    settled: bool
    txn_group: Literal["retail", "bill_payment", "top_up", "other"]
    id: int | None = Field(default=None, ge=1)
    extra: dict = Field(default_factory=dict)


class DecisionIn(BaseModel):
    decision: Literal["allowed", "blocked"]
    inspector: str = Field(min_length=1)


class BatchIn(BaseModel):
    pan: str | None = None


def _err(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


class _Broadcaster:
    """Fan-out of alert events; a client that stops draining is dropped."""

    def __init__(self) -> None:
        self._subscribers: set[asyncio.Queue] = set()

    def subscribe(self) -> asyncio.Queue:
        q: asyncio.Queue = asyncio.Queue(maxsize=STREAM_QUEUE_LIMIT)
        self._subscribers.add(q)
        return q

    def unsubscribe(self, q: asyncio.Queue) -> None:
        self._subscribers.discard(q)

    def publish(self, payload: dict) -> None:
        for q in list(self._subscribers):
            try:
                q.put_nowait(payload)
            except asyncio.QueueFull:
                self._subscribers.discard(q)


class _Jobs:
    """In-memory batch-job registry; one running job per scope."""

    def __init__(self) -> None:
        self._jobs: dict[str, dict] = {}
        self._running_scopes: set[str] = set()
        self._counter = itertools.count(1)

    def start(self, scope: str) -> str | None:
        if scope in self._running_scopes:
            return None
        job_id = f"job-{next(self._counter):04d}"
        self._running_scopes.add(scope)
        self._jobs[job_id] = {
            "job_id": job_id,
            "scope": scope,
            "status": "running",
            "progress": {"customers_done": 0, "customers_total": 0},
            "summary": None,
            "error": None,
        }
        return job_id

    def get(self, job_id: str) -> dict | None:
        return self._jobs.get(job_id)

    def finish(self, job_id: str, summary: dict | None, error: str | None) -> None:
        job = self._jobs[job_id]
        job["status"] = "failed" if error else "done"
        job["summary"] = summary
        job["error"] = error
        self._running_scopes.discard(job["scope"])


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


def create_app(repo: Repository, config: KdaConfig, token: str | None = None) -> FastAPI:
    app = FastAPI(title="kda service", version="0.1.0", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    broadcaster = _Broadcaster()
    jobs = _Jobs()
    pan_locks: dict[str, asyncio.Lock] = {}
    id_lock = asyncio.Lock()
    app.state.repo = repo
    app.state.broadcaster = broadcaster

    def _pan_lock(pan: str) -> asyncio.Lock:
        # handlers run on one event loop; plain dict access is race-free
        if pan not in pan_locks:
            pan_locks[pan] = asyncio.Lock()
        return pan_locks[pan]

    async def require_auth(request: Request):
        if token is None:
            return
        header = request.headers.get("authorization", "")
        supplied = header.removeprefix("Bearer ").strip() if header else None
        if supplied is None:
            supplied = request.query_params.get("token")
        if supplied != token:
            raise _AuthError()

    class _AuthError(Exception):
        pass

    @app.exception_handler(_AuthError)
    async def _auth_error(request: Request, exc: _AuthError):
        return _err(401, "unauthorized", "missing or invalid bearer token")

    @app.exception_handler(RequestValidationError)
    async def _malformed(request: Request, exc: RequestValidationError):
        return _err(400, "malformed", str(exc.errors()[:3]))

    # -- scoring ------------------------------------------------------------

    def _score(tx: Transaction) -> tuple[KdaVerdict, dict | None]:
        window = repo.fetch_window(tx.pan, config, as_of=tx.trx_date, up_to_id=tx.id)
        verdict = kda_evaluate(window, config)
        run_at = _utcnow()
        repo.store_results(
            [
                ResultsRow(
                    algorithm=name,
                    transaction_id=tx.id,
                    run_at=run_at,
                    flag=v.flag,
                    evidence=v.evidence,
                )
                for name, v in verdict.verdicts.items()
            ]
        )
        repo.store_verdict(tx.pan, verdict, run_at)
        alert = None
        if verdict.nf:
            alert = repo.open_alert(tx.pan, verdict, created_at=run_at).to_dict()
        return verdict, alert

    @app.post("/transactions", dependencies=[Depends(require_auth)])
    async def post_transaction(body: TransactionIn):
        raw = RawTransaction(
            pr_code=body.pr_code,
            pan=body.pan,
            term_id=body.term_id,
            merchant_id=body.merchant_id,
            pos_condition=body.pos_condition,
            affective_amount=body.affective_amount,
            business_date=body.business_date,
            settled=body.settled,
            txn_group=body.txn_group,
            extra=body.extra,
        )
        if not filter_eligible(raw):
            return _err(422, "ineligible", "transaction must be settled and of a purchasing type group")
        async with _pan_lock(raw.pan):
            async with id_lock:
                tx_id = body.id if body.id is not None else repo.max_transaction_id() + 1
                tx = preprocess(raw, tx_id)
                try:
                    await run_in_threadpool(repo.append_transaction, tx)
                except DuplicateTransaction:
                    return _err(409, "duplicate_transaction", f"transaction {tx_id} already stored")
            verdict, alert = await run_in_threadpool(_score, tx)
        if alert is not None:
            broadcaster.publish(alert)
        status = {"pass": 200, "alert": 201, "stop": 202}[verdict.action]
        return JSONResponse(
            status_code=status,
            content={
                "transaction": tx.to_dict(),
                "verdict": verdict.to_dict(),
                "alert": alert,
            },
        )

    # -- alerts ---------------------------------------------------------------

    @app.get("/alerts", dependencies=[Depends(require_auth)])
    async def get_alerts(status: str | None = None):
        try:
            alerts = await run_in_threadpool(repo.list_alerts, status)
        except ValueError as exc:
            return _err(400, "malformed", str(exc))
        return {"alerts": [a.to_dict() for a in alerts]}

    # registered before /alerts/{alert_id} so "stream" is not parsed as an id
    @app.get("/alerts/stream")
    async def stream(request: Request):
        await require_auth(request)
        queue = broadcaster.subscribe()

        async def gen():
            try:
                yield ": connected\n\n"
                while True:
                    try:
                        item = await asyncio.wait_for(queue.get(), timeout=_PING_SECONDS)
                    except asyncio.TimeoutError:
                        yield ": ping\n\n"
                        continue
                    yield f"event: alert\ndata: {json.dumps(item, sort_keys=True)}\n\n"
            finally:
                broadcaster.unsubscribe(queue)

        return StreamingResponse(gen(), media_type="text/event-stream")

    @app.get("/alerts/{alert_id}", dependencies=[Depends(require_auth)])
    async def get_alert(alert_id: int):
        try:
            alert = await run_in_threadpool(repo.get_alert, alert_id)
        except UnknownAlert:
            return _err(404, "unknown_alert", f"no alert {alert_id}")
        return alert.to_dict()

    @app.post("/alerts/{alert_id}/decision", dependencies=[Depends(require_auth)])
    async def decide(alert_id: int, body: DecisionIn):
        try:
            alert = await run_in_threadpool(
                repo.decide_alert, alert_id, body.decision, body.inspector
            )
        except UnknownAlert:
            return _err(404, "unknown_alert", f"no alert {alert_id}")
        except AlertAlreadyDecided as exc:
            return _err(409, "already_decided", str(exc))
        payload = alert.to_dict()
        broadcaster.publish(payload)
        return payload

    # -- batch scoring --------------------------------------------------------

    def _run_batch(job_id: str, pans: list[str]) -> None:
        job = jobs.get(job_id)
        job["progress"]["customers_total"] = len(pans)
        all_verdicts: list[KdaVerdict] = []
        run_at = _utcnow()
        for pan in pans:
            newest = repo.newest_transaction(pan)
            window = (
                repo.fetch_window(pan, config, as_of=newest.trx_date) if newest else []
            )
            verdicts = kda_evaluate_offline(window, config) if window else []
            for v in verdicts:
                repo.store_results(
                    [
                        ResultsRow(
                            algorithm=name,
                            transaction_id=v.transaction_id,
                            run_at=run_at,
                            flag=av.flag,
                            evidence=av.evidence,
                        )
                        for name, av in v.verdicts.items()
                    ]
                )
                repo.store_verdict(pan, v, run_at)
            all_verdicts.extend(verdicts)
            job["progress"]["customers_done"] += 1
        report = compute_detection_metrics(set(), all_verdicts)
        jobs.finish(job_id, report.to_dict(), None)

    @app.post("/batch/historical", dependencies=[Depends(require_auth)])
    async def batch(body: BatchIn):
        if body.pan is None or body.pan == "all":
            pans = await run_in_threadpool(repo.list_pans)
            scope = "*"
            if not pans:
                return _err(404, "unknown_pan", "repository is empty")
        else:
            if not await run_in_threadpool(lambda: repo.count_transactions(body.pan) > 0):
                return _err(404, "unknown_pan", f"no transactions for pan {body.pan}")
            pans = [body.pan]
            scope = body.pan
        job_id = jobs.start(scope)
        if job_id is None:
            return _err(409, "job_running", f"a job is already running for scope {scope}")

        async def runner():
            try:
                await run_in_threadpool(_run_batch, job_id, pans)
            except Exception as exc:  # failure lands in the job record
                jobs.finish(job_id, None, repr(exc))

        asyncio.create_task(runner())
        return JSONResponse(status_code=202, content={"job_id": job_id})

    @app.get("/jobs/{job_id}", dependencies=[Depends(require_auth)])
    async def get_job(job_id: str):
        job = jobs.get(job_id)
        if job is None:
            return _err(404, "unknown_job", f"no job {job_id}")
        return job

    # -- introspection ----------------------------------------------------------

    @app.get("/customers/{pan}/window", dependencies=[Depends(require_auth)])
    async def customer_window(pan: str, up_to: int | None = None):
        def fetch():
            newest = repo.newest_transaction(pan, up_to_id=up_to)
            if newest is None:
                return []
            return repo.fetch_window(pan, config, as_of=newest.trx_date, up_to_id=up_to)

        window = await run_in_threadpool(fetch)
        return {"pan": pan, "window": [t.to_dict() for t in window]}

    @app.get("/health")
    async def health():
        return {
            "status": "ok",
            "backend": kernels.BACKEND,
            "transactions": await run_in_threadpool(repo.count_transactions),
            "open_alerts": len(await run_in_threadpool(repo.list_alerts, "open")),
        }

    return app


def serve(service_config: ServiceConfig) -> None:
    """Run the service until interrupted."""
    import uvicorn

    repo = Repository(service_config.storage)
    app = create_app(repo, service_config.config, service_config.token)
    try:
        uvicorn.run(app, host=service_config.host, port=service_config.port, log_level="info")
    finally:
        repo.close()
