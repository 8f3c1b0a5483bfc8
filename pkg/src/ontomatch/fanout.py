"""Client-side fan-out: query several providers and merge their counters.

Sync mode walks the provider list one request at a time, so the total wall
clock is roughly the sum of the per-provider times.  Async mode puts every
request in flight at once and joins, so the total tracks the slowest
provider.  Both merge identically; only the timing differs.

Every provider response carries a server-measured matchmaking time; the
remainder of that request's wall time is attributed to transport latency
(clamped at zero if clocks disagree).
"""

from __future__ import annotations

import logging
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import httpx

from .api import DELAY_HEADER
from .matchmaker import Demand, MatchScore
from .presentation import ProvenanceTag, ProviderResults, merge_multi_provider
from .wire import DemandModel, MatchRequestModel, MatchResponseModel, TBoxSummaryModel

log = logging.getLogger(__name__)


class FanoutError(Exception):
    pass


class NoProvidersError(FanoutError):
    """Every candidate was unreachable or failed."""


class TBoxMismatchError(FanoutError):
    """Providers advertise divergent TBox fingerprints."""


@dataclass(frozen=True)
class FanoutPlan:
    providers: tuple[str, ...]  # host:port addresses
    mode: str = "sync"
    per_request_timeout_ms: int = 10_000

    def __post_init__(self):
        if not self.providers:
            raise ValueError("fan-out needs at least one provider")
        if self.mode not in ("sync", "async"):
            raise ValueError(f"mode must be 'sync' or 'async', got {self.mode!r}")
        if self.per_request_timeout_ms <= 0:
            raise ValueError("per-request timeout must be positive")


@dataclass(frozen=True)
class ProviderTiming:
    provider_id: str
    address: str
    matchmaking_ms: float
    latency_ms: float
    wall_ms: float


@dataclass(frozen=True)
class TimingBreakdown:
    per_provider: tuple[ProviderTiming, ...]
    total_wall_ms: float


@dataclass(frozen=True)
class ProviderFailure:
    address: str
    error: str


@dataclass(frozen=True)
class FanoutOutcome:
    scores: list[MatchScore]
    timing: TimingBreakdown
    failures: tuple[ProviderFailure, ...]


def fetch_tbox(address: str, client: httpx.Client | None = None) -> TBoxSummaryModel:
    """Schema summary and fingerprint from one provider."""
    owned = client is None
    client = client or httpx.Client(timeout=10.0)
    try:
        response = client.get(f"http://{address}/tbox")
        response.raise_for_status()
        return TBoxSummaryModel.model_validate(response.json())
    except httpx.HTTPError as exc:
        raise FanoutError(f"provider {address} unreachable: {exc}") from exc
    finally:
        if owned:
            client.close()


def _query_provider(
    client: httpx.Client,
    address: str,
    payload: dict,
    delay_ms: int | None,
) -> tuple[MatchResponseModel, float]:
    headers = {DELAY_HEADER: str(delay_ms)} if delay_ms else {}
    started = time.perf_counter()
    response = client.post(f"http://{address}/match", json=payload, headers=headers)
    wall_ms = (time.perf_counter() - started) * 1000.0
    response.raise_for_status()
    return MatchResponseModel.model_validate(response.json()), wall_ms


def fanout(
    plan: FanoutPlan,
    demand: Demand,
    inject_delays_ms: dict[str, int] | None = None,
) -> FanoutOutcome:
    """Query every planned provider, merge raw counters, decompose timing.

    Providers must agree on one TBox fingerprint; divergence is refused
    before any match request is sent.  A provider failing or timing out
    becomes a failure marker; the merge covers the rest.  Raises only when
    no provider delivers.
    """
    delays = inject_delays_ms or {}
    failures: list[ProviderFailure] = []
    timeout = plan.per_request_timeout_ms / 1000.0
    with httpx.Client(timeout=timeout) as client:
        fingerprints: dict[str, str] = {}
        for address in plan.providers:
            try:
                fingerprints[address] = fetch_tbox(address, client).tbox_fingerprint
            except FanoutError as exc:
                failures.append(ProviderFailure(address=address, error=str(exc)))
        if not fingerprints:
            raise NoProvidersError(
                "no provider reachable: " + "; ".join(f.error for f in failures)
            )
        reference_addr = next(iter(fingerprints))
        reference = fingerprints[reference_addr]
        for address, fp in fingerprints.items():
            if fp != reference:
                raise TBoxMismatchError(
                    f"TBox mismatch: {address} advertises {fp[:12]}... but "
                    f"{reference_addr} advertises {reference[:12]}...; refusing to fan out"
                )
        payload = MatchRequestModel(
            demand=DemandModel.from_core(demand),
            request_id=f"req-{uuid.uuid4().hex[:12]}",
            expected_fingerprint=reference,
        ).model_dump(mode="json")

        addresses = [a for a in plan.providers if a in fingerprints]
        responses: list[tuple[str, MatchResponseModel, float]] = []
        total_started = time.perf_counter()

        def one(address: str):
            return _query_provider(client, address, payload, delays.get(address))

        if plan.mode == "sync":
            for address in addresses:
                try:
                    response, wall_ms = one(address)
                    responses.append((address, response, wall_ms))
                except httpx.HTTPError as exc:
                    failures.append(ProviderFailure(address=address, error=str(exc)))
        else:
            with ThreadPoolExecutor(max_workers=len(addresses)) as pool:
                futures = {address: pool.submit(one, address) for address in addresses}
                for address, future in futures.items():
                    try:
                        response, wall_ms = future.result()
                        responses.append((address, response, wall_ms))
                    except httpx.HTTPError as exc:
                        failures.append(ProviderFailure(address=address, error=str(exc)))

        if not responses:
            raise NoProvidersError(
                "every provider failed: " + "; ".join(f.error for f in failures)
            )
        merged = merge_multi_provider(
            [
                ProviderResults(
                    tag=ProvenanceTag(provider_id=r.provider_id, ontology_uri=r.ontology_uri),
                    tbox_fingerprint=r.tbox_fingerprint,
                    raws=tuple(raw.to_core() for raw in r.results),
                )
                for _, r, _ in responses
            ]
        )
        total_wall_ms = (time.perf_counter() - total_started) * 1000.0

    per_provider = []
    for address, response, wall_ms in responses:
        latency_ms = wall_ms - response.matchmaking_ms
        if latency_ms < 0:
            log.warning(
                "provider %s reported more matchmaking time than the request wall; clamping",
                response.provider_id,
            )
            latency_ms = 0.0
        per_provider.append(
            ProviderTiming(
                provider_id=response.provider_id,
                address=address,
                matchmaking_ms=response.matchmaking_ms,
                latency_ms=latency_ms,
                wall_ms=wall_ms,
            )
        )
    return FanoutOutcome(
        scores=merged,
        timing=TimingBreakdown(per_provider=tuple(per_provider), total_wall_ms=total_wall_ms),
        failures=tuple(failures),
    )
