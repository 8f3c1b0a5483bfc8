"""HTTP service apps: provider node and registry.

Provider endpoints run matchmaking over the local supply store, accept
publications (firing push deliveries into per-user inboxes), expose the
TBox for query-form construction, and manage subscriptions.  The registry
app is a thin wire adapter over the Registry component.

Handlers are plain functions; the framework runs them on worker threads,
so concurrent fan-out requests against one provider proceed in parallel.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.staticfiles import StaticFiles

from .matchmaker import ComparisonCache, match_one, validate_demand
from .ontology import Instance, OntologySchema, Taxonomy, build_taxonomy, tbox_fingerprint, validate_instance
from .profiles import EventRecord, ProfileStore, SavedQuery, now_iso, on_resource_published, parse_timestamp
from .registry import Registry, RegistryError
from .wire import (
    HealthModel,
    InboxEntryModel,
    InboxResponseModel,
    InstanceModel,
    MatchRequestModel,
    MatchResponseModel,
    PublishResponseModel,
    RawMatchModel,
    RegistryEntryInModel,
    RegistryEntryModel,
    SubscriptionRequestModel,
    SubscriptionResponseModel,
    TBoxSummaryModel,
)

DELAY_HEADER = "X-Inject-Delay-Ms"


@dataclass
class ProviderState:
    """Everything one provider node serves from."""

    provider_id: str
    schema: OntologySchema
    supplies: dict[str, Instance]
    store: ProfileStore
    bench_mode: bool = False
    taxonomy: Taxonomy = None  # type: ignore[assignment]
    fingerprint: str = ""
    lock: threading.Lock = field(default_factory=threading.Lock)

    def __post_init__(self):
        if self.taxonomy is None:
            self.taxonomy = build_taxonomy(self.schema)
        if not self.fingerprint:
            self.fingerprint = tbox_fingerprint(self.schema)

    @classmethod
    def from_parsed(
        cls,
        provider_id: str,
        schema: OntologySchema,
        instances: list[Instance],
        store: ProfileStore,
        bench_mode: bool = False,
    ) -> "ProviderState":
        return cls(
            provider_id=provider_id,
            schema=schema,
            supplies={i.id: i for i in instances},
            store=store,
            bench_mode=bench_mode,
        )

    def snapshot(self) -> list[Instance]:
        with self.lock:
            return list(self.supplies.values())

    def publish(self, instance: Instance) -> int:
        """Validate, store, and push; returns the number of inbox deliveries."""
        violations = validate_instance(self.schema, instance)
        if violations:
            raise HTTPException(
                status_code=400,
                detail=[{"code": v.code, "subject": v.subject, "message": v.message} for v in violations],
            )
        with self.lock:
            if instance.id in self.supplies:
                raise HTTPException(status_code=409, detail=f"instance {instance.id!r} already published")
            self.supplies[instance.id] = instance
            event = EventRecord(kind="resource_published", payload=instance.id, at=now_iso())
            profiles = self.store.load_all()
            deliveries = on_resource_published(event, instance, profiles, self.taxonomy, self.schema)
            for user_id, rec in deliveries:
                self.store.append_inbox(
                    user_id,
                    {
                        "instance_id": rec.instance_id,
                        "query_id": rec.source.removeprefix("query:"),
                        "source": rec.source,
                        "at": event.at,
                        "values": {p: list(vs) for p, vs in rec.values.items()},
                    },
                )
        return len(deliveries)


def create_provider_app(state: ProviderState, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title=f"provider {state.provider_id}", docs_url=None, redoc_url=None)

    @app.get("/health", response_model=HealthModel)
    def health():
        return HealthModel(status="ok", provider_id=state.provider_id, resources=len(state.supplies))

    @app.get("/tbox", response_model=TBoxSummaryModel)
    def tbox():
        return TBoxSummaryModel.from_schema(state.schema, state.fingerprint)

    @app.post("/match", response_model=MatchResponseModel)
    def match(body: MatchRequestModel, request: Request):
        if body.expected_fingerprint and body.expected_fingerprint != state.fingerprint:
            raise HTTPException(
                status_code=409,
                detail=f"fingerprint mismatch: provider speaks {state.fingerprint[:12]}...",
            )
        demand = body.demand.to_core()
        violations = validate_demand(state.schema, demand)
        if violations:
            raise HTTPException(
                status_code=400,
                detail=[{"code": v.code, "subject": v.subject, "message": v.message} for v in violations],
            )
        if state.bench_mode:
            # Simulated transport cost for timing experiments; never counted
            # as matchmaking work.
            delay_ms = request.headers.get(DELAY_HEADER)
            if delay_ms is not None:
                time.sleep(max(0, int(delay_ms)) / 1000.0)
        supplies = state.snapshot()
        started = time.perf_counter()
        cache = ComparisonCache(state.taxonomy)
        raws = [match_one(state.taxonomy, demand, s, cache) for s in supplies]
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        return MatchResponseModel(
            provider_id=state.provider_id,
            ontology_uri=state.schema.uri,
            tbox_fingerprint=state.fingerprint,
            results=[RawMatchModel.from_core(r) for r in raws],
            matchmaking_ms=elapsed_ms,
            request_id=body.request_id,
        )

    @app.post("/resources", response_model=PublishResponseModel, status_code=201)
    def publish(body: InstanceModel):
        instance = body.to_core()
        notified = state.publish(instance)
        return PublishResponseModel(instance_id=instance.id, notified=notified)

    @app.post("/subscriptions", response_model=SubscriptionResponseModel, status_code=201)
    def subscribe(body: SubscriptionRequestModel):
        demand = body.demand.to_core()
        violations = validate_demand(state.schema, demand)
        if violations:
            raise HTTPException(
                status_code=400,
                detail=[{"code": v.code, "subject": v.subject, "message": v.message} for v in violations],
            )
        if parse_timestamp(body.valid_until) < parse_timestamp(now_iso()):
            raise HTTPException(status_code=400, detail="valid_until is already in the past")
        query = SavedQuery(query_id=f"sub-{uuid.uuid4().hex[:12]}", demand=demand, valid_until=body.valid_until)
        state.store.save_query(body.user_id, query)
        return SubscriptionResponseModel(subscription_id=query.query_id, user_id=body.user_id)

    @app.get("/subscriptions/{user_id}/inbox", response_model=InboxResponseModel)
    def inbox(user_id: str):
        entries = state.store.read_inbox(user_id)
        return InboxResponseModel(
            user_id=user_id, entries=[InboxEntryModel(**e) for e in entries]
        )

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def create_registry_app(registry: Registry) -> FastAPI:
    app = FastAPI(title="ontology registry", docs_url=None, redoc_url=None)

    @app.post("/ontologies", response_model=RegistryEntryModel, status_code=201)
    def register(body: RegistryEntryInModel):
        try:
            entry = registry.register(
                ontology_uri=body.ontology_uri,
                keywords=body.keywords,
                tbox_fingerprint=body.tbox_fingerprint,
                provider_address=body.provider_address,
            )
        except RegistryError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return RegistryEntryModel.from_core(entry)

    @app.delete("/ontologies")
    def deregister(uri: str = Query(...)):
        if not registry.deregister(uri):
            raise HTTPException(status_code=404, detail=f"no entry for {uri!r}")
        return {"status": "deleted", "ontology_uri": uri}

    @app.get("/ontologies", response_model=list[RegistryEntryModel])
    def search(keyword: list[str] = Query(default=[])):
        return [RegistryEntryModel.from_core(e) for e in registry.search(keyword)]

    return app
