"""Synthetic workload generator and timing harness.

Generates ontologies with exact class/property counts, a nested series of
demands (each larger query extends the smaller one), and measures mean
matchmaking time over repeated hot runs after one warm-up.  Distributed
runs spawn real provider processes-in-threads, split the instances across
them, and report the fan-out timing decomposition.

The first few datatype properties are multi-valued on purpose: they are
the ones the query series constrains, so each added constraint buys a
measurable amount of evaluation work per supply.  Their constraint
anchors sit outside the generated value ranges, which forces every
evaluation to scan all asserted values instead of stopping at the first
hit; the cost of an added property is then stable run to run.
"""

from __future__ import annotations

import io
import random
import statistics
import time
from dataclasses import dataclass

from .matchmaker import Constraint, Demand, match_all
from .ontology import (
    ClassDef,
    Instance,
    OntologySchema,
    PropertyDef,
    build_taxonomy,
)

TEXT_POOL = tuple(f"word-{i:02d}" for i in range(20))


class BenchError(Exception):
    pass


@dataclass(frozen=True)
class OntologyProfile:
    classes: int
    object_properties: int
    datatype_properties: int

    def __post_init__(self):
        if self.classes < 1:
            raise BenchError("profile needs at least one class")
        if self.object_properties < 0 or self.datatype_properties < 0:
            raise BenchError("property counts must be non-negative")


@dataclass(frozen=True)
class BenchSpec:
    profile: OntologyProfile
    instance_count: int
    query_properties: tuple[int, ...]
    peers: int = 1
    mode: str = "sync"
    repetitions: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.instance_count < 1:
            raise BenchError("instance count must be positive")
        if not self.query_properties or any(q < 1 for q in self.query_properties):
            raise BenchError("query series must hold positive property counts")
        if max(self.query_properties) > self.profile.datatype_properties:
            raise BenchError("query series asks for more datatype properties than the profile has")
        if self.peers < 1:
            raise BenchError("peers must be positive")
        if self.mode not in ("sync", "async"):
            raise BenchError(f"mode must be 'sync' or 'async', got {self.mode!r}")
        if self.repetitions < 2:
            raise BenchError("repetitions below 2 cannot average hot runs")


@dataclass(frozen=True)
class BenchRow:
    query: str
    properties: int
    peers: int
    resources: int
    matchmaking_ms: float
    latency_ms: float
    total_ms: float


def generate_ontology(
    profile: OntologyProfile,
    instance_count: int,
    seed: int,
    uri: str = "bench://synthetic.onto.json",
    multi_valued: int = 4,
) -> tuple[OntologySchema, list[Instance]]:
    """Schema with the exact profile counts plus a seeded instance population.

    Classes form a forest (every class's parent precedes it); when two
    root-children exist, one disjoint pair is declared so the conflict
    branch of the matcher gets exercised.  The first ``multi_valued``
    datatype properties are non-functional; the rest are functional.
    """
    rng = random.Random(seed)
    names = [f"C{i:03d}" for i in range(profile.classes)]
    parents: dict[str, str | None] = {names[0]: None}
    for name in names[1:]:
        parents[name] = rng.choice(names[: names.index(name)]) if rng.random() < 0.7 else None
    root_children = [n for n, p in parents.items() if p == names[0]]
    disjoint_pair = tuple(root_children[:2]) if len(root_children) >= 2 else ()
    classes = []
    for name in names:
        disjoint = frozenset()
        if disjoint_pair and name == disjoint_pair[0]:
            disjoint = frozenset({disjoint_pair[1]})
        classes.append(
            ClassDef(
                name=name,
                equivalent_to=frozenset(),
                subclass_of=frozenset({parents[name]} if parents[name] else ()),
                disjoint_with=disjoint,
            )
        )
    properties = []
    for i in range(profile.datatype_properties):
        functional = i >= multi_valued
        # booleans cannot miss both values, so the scan-all trick needs the
        # multi-valued (queried) properties to stay on the other three ranges
        cycle = ("integer", "decimal", "text", "boolean") if functional else ("integer", "decimal", "text")
        value_range = cycle[i % len(cycle)]
        properties.append(
            PropertyDef(
                name=f"dp{i:03d}",
                kind="datatype",
                range=value_range,
                functional=functional,
                max_cardinality=1 if functional else None,
            )
        )
    for i in range(profile.object_properties):
        properties.append(
            PropertyDef(name=f"op{i:03d}", kind="object", range=rng.choice(names))
        )
    schema = OntologySchema(
        uri=uri, keywords=("bench", "synthetic"), classes=tuple(classes), properties=tuple(properties)
    )

    instances = []
    for i in range(instance_count):
        values: dict[str, tuple] = {}
        for prop in schema.properties:
            assert_p = 0.95 if not prop.single_valued else 0.7
            if rng.random() >= assert_p:
                continue
            width = 1 if prop.single_valued else 6
            values[prop.name] = tuple(_value_for(rng, prop) for _ in range(width))
        instances.append(
            Instance(id=f"r{i:05d}", class_name=rng.choice(names), values=values)
        )
    return schema, instances


def _value_for(rng: random.Random, prop: PropertyDef):
    if prop.kind == "object":
        return f"ref-{rng.randint(0, 99)}"
    if prop.range == "integer":
        return rng.randint(0, 100)
    if prop.range == "decimal":
        return round(rng.uniform(0.0, 100.0), 2)
    if prop.range == "boolean":
        return rng.random() < 0.5
    return rng.choice(TEXT_POOL)


def generate_demand_series(
    schema: OntologySchema, property_counts: tuple[int, ...], seed: int
) -> list[Demand]:
    """Nested demands around one concept; Q-k constrains the first k properties.

    Anchors deliberately miss the value ranges ``generate_ontology`` draws
    from (integers 0..100, decimals 0..100, the fixed text pool), so each
    constraint inspects every asserted value of its property.
    """
    rng = random.Random(seed + 1)
    datatype = [p for p in schema.properties if p.kind == "datatype"]
    pool = sorted(datatype, key=lambda p: (p.single_valued, p.name))
    concept = schema.classes[0].name
    constraints = []
    for prop in pool[: max(property_counts)]:
        if prop.range == "integer":
            constraints.append(Constraint(prop.name, "ge", rng.randint(150, 200)))
        elif prop.range == "decimal":
            constraints.append(Constraint(prop.name, "le", round(rng.uniform(-50.0, -10.0), 2)))
        elif prop.range == "boolean":
            constraints.append(Constraint(prop.name, "eq", True))
        else:
            constraints.append(Constraint(prop.name, "eq", f"absent-{rng.randint(0, 99):02d}"))
    return [
        Demand(
            concept=concept,
            constraints=tuple(constraints[:k]),
            ontology_uri=schema.uri,
        )
        for k in property_counts
    ]


def run_centralized(schema: OntologySchema, instances: list[Instance], spec: BenchSpec) -> list[BenchRow]:
    taxonomy = build_taxonomy(schema)
    demands = generate_demand_series(schema, spec.query_properties, spec.seed)
    rows = []
    for k, demand in zip(spec.query_properties, demands):
        match_all(taxonomy, demand, instances)  # warm-up discarded
        samples = []
        for _ in range(spec.repetitions):
            started = time.perf_counter()
            match_all(taxonomy, demand, instances)
            samples.append((time.perf_counter() - started) * 1000.0)
        mean_ms = statistics.fmean(samples)
        rows.append(
            BenchRow(
                query=f"Q-{k}",
                properties=k,
                peers=1,
                resources=len(instances),
                matchmaking_ms=mean_ms,
                latency_ms=0.0,
                total_ms=mean_ms,
            )
        )
    return rows


def run_distributed(
    schema: OntologySchema,
    instances: list[Instance],
    spec: BenchSpec,
    inject_delays_ms: tuple[int, ...] | None = None,
) -> list[BenchRow]:
    """Spawn ``spec.peers`` local providers, split the instances, fan out.

    Reported matchmaking and latency are sums across peers; total is the
    measured fan-out wall.  Sync mode's total then tracks the sum of peer
    times, async mode's the slowest peer.
    """
    from .api import ProviderState, create_provider_app
    from .fanout import FanoutPlan, fanout
    from .profiles import ProfileStore
    from .serving import run_app_in_thread
    import tempfile

    if inject_delays_ms is not None and len(inject_delays_ms) != spec.peers:
        raise BenchError("need exactly one injected delay per peer")
    shards: list[list[Instance]] = [[] for _ in range(spec.peers)]
    for i, instance in enumerate(instances):
        shards[i % spec.peers].append(instance)
    handles = []
    rows = []
    with tempfile.TemporaryDirectory(prefix="bench-profiles-") as scratch:
        try:
            for i, shard in enumerate(shards):
                state = ProviderState.from_parsed(
                    provider_id=f"bench-peer-{i}",
                    schema=schema,
                    instances=shard,
                    store=ProfileStore(f"{scratch}/peer-{i}"),
                    bench_mode=inject_delays_ms is not None,
                )
                handles.append(run_app_in_thread(create_provider_app(state)))
            delays = (
                {h.address: d for h, d in zip(handles, inject_delays_ms)}
                if inject_delays_ms
                else None
            )
            plan = FanoutPlan(providers=tuple(h.address for h in handles), mode=spec.mode)
            demands = generate_demand_series(schema, spec.query_properties, spec.seed)
            for k, demand in zip(spec.query_properties, demands):
                fanout(plan, demand, inject_delays_ms=delays)  # warm-up discarded
                match_sums, latency_sums, totals = [], [], []
                for _ in range(spec.repetitions):
                    outcome = fanout(plan, demand, inject_delays_ms=delays)
                    match_sums.append(sum(t.matchmaking_ms for t in outcome.timing.per_provider))
                    latency_sums.append(sum(t.latency_ms for t in outcome.timing.per_provider))
                    totals.append(outcome.timing.total_wall_ms)
                rows.append(
                    BenchRow(
                        query=f"Q-{k}",
                        properties=k,
                        peers=spec.peers,
                        resources=len(instances),
                        matchmaking_ms=statistics.fmean(match_sums),
                        latency_ms=statistics.fmean(latency_sums),
                        total_ms=statistics.fmean(totals),
                    )
                )
        finally:
            for handle in handles:
                handle.stop()
    return rows


def rows_to_csv(rows: list[BenchRow]) -> str:
    out = io.StringIO()
    out.write("query,properties,peers,resources,matchmaking_ms,latency_ms,total_ms\n")
    for r in rows:
        out.write(
            f"{r.query},{r.properties},{r.peers},{r.resources},"
            f"{r.matchmaking_ms:.3f},{r.latency_ms:.3f},{r.total_ms:.3f}\n"
        )
    return out.getvalue()


def format_rows(rows: list[BenchRow]) -> str:
    header = f"{'query':<8}{'props':>6}{'peers':>6}{'resources':>10}{'match ms':>12}{'latency ms':>12}{'total ms':>12}"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(
            f"{r.query:<8}{r.properties:>6}{r.peers:>6}{r.resources:>10}"
            f"{r.matchmaking_ms:>12.3f}{r.latency_ms:>12.3f}{r.total_ms:>12.3f}"
        )
    return "\n".join(lines)
