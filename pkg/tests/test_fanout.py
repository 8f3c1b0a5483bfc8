"""Fan-out over live provider sockets: merging, failures, timing split."""

from __future__ import annotations

import pytest

from ontomatch.api import ProviderState, create_provider_app
from ontomatch.fanout import FanoutError, FanoutPlan, fanout, fetch_tbox
from ontomatch.matchmaker import match_all
from ontomatch.ontology import parse_ontology
from ontomatch.profiles import ProfileStore
from ontomatch.serving import run_app_in_thread


def _spawn(tmp_path, schema, instances, provider_id, bench_mode=False):
    state = ProviderState.from_parsed(
        provider_id=provider_id,
        schema=schema,
        instances=instances,
        store=ProfileStore(tmp_path / f"profiles-{provider_id}"),
        bench_mode=bench_mode,
    )
    return run_app_in_thread(create_provider_app(state))


@pytest.fixture()
def split_providers(tmp_path, laptop_schema, laptop_instances):
    first = _spawn(tmp_path, laptop_schema, list(laptop_instances[:2]), "Provider#1")
    second = _spawn(tmp_path, laptop_schema, list(laptop_instances[2:]), "Provider#2")
    yield first, second
    first.stop()
    second.stop()


def _strip(scores):
    return [
        (s.instance_id, s.n_par, s.n_pot, s.n_add, s.rank_par, s.rank_pot, s.rank_add, s.rank)
        for s in scores
    ]


# --- fetch_tbox ------------------------------------------------------------------


def test_fetch_tbox_inventory(split_providers):
    first, _ = split_providers
    summary = fetch_tbox(first.address)
    kinds = [p.kind for p in summary.properties]
    assert kinds.count("datatype") == 5
    assert kinds.count("object") == 1


def test_replicas_share_fingerprint(split_providers):
    first, second = split_providers
    assert fetch_tbox(first.address).tbox_fingerprint == fetch_tbox(second.address).tbox_fingerprint


def test_fetch_tbox_unreachable_names_address():
    with pytest.raises(FanoutError, match="127.0.0.1:9"):
        fetch_tbox("127.0.0.1:9")


# --- merging over the wire ---------------------------------------------------------


@pytest.mark.parametrize("mode", ["sync", "async"])
def test_split_fanout_equals_centralized(
    split_providers, laptop_taxonomy, white_warranty_demand, laptop_instances, mode
):
    first, second = split_providers
    plan = FanoutPlan(providers=(first.address, second.address), mode=mode)
    outcome = fanout(plan, white_warranty_demand)
    central = match_all(laptop_taxonomy, white_warranty_demand, list(laptop_instances))
    assert _strip(outcome.scores) == _strip(central)
    assert outcome.failures == ()
    providers_seen = {s.provenance.provider_id for s in outcome.scores}
    assert providers_seen == {"Provider#1", "Provider#2"}
    assert len(outcome.timing.per_provider) == 2
    assert outcome.timing.total_wall_ms > 0


def test_singleton_plan_modes_agree(split_providers, white_warranty_demand):
    first, _ = split_providers
    sync = fanout(FanoutPlan(providers=(first.address,), mode="sync"), white_warranty_demand)
    async_ = fanout(FanoutPlan(providers=(first.address,), mode="async"), white_warranty_demand)
    assert _strip(sync.scores) == _strip(async_.scores)


def test_mismatched_tbox_refused(tmp_path, laptop_schema, laptop_instances, white_warranty_demand):
    other_schema, _ = parse_ontology(
        {
            "uri": "http://elsewhere.example.org/wines.onto.json",
            "keywords": ["wine"],
            "classes": [{"name": "Wine"}],
            "properties": [{"name": "vintage", "kind": "datatype", "range": "integer"}],
        }
    )
    laptop_node = _spawn(tmp_path, laptop_schema, list(laptop_instances), "P-laptop")
    wine_node = _spawn(tmp_path, other_schema, [], "P-wine")
    try:
        plan = FanoutPlan(providers=(laptop_node.address, wine_node.address))
        with pytest.raises(FanoutError, match="refusing"):
            fanout(plan, white_warranty_demand)
    finally:
        laptop_node.stop()
        wine_node.stop()


def test_dead_provider_leaves_partial_results(split_providers, white_warranty_demand):
    first, _ = split_providers
    plan = FanoutPlan(providers=(first.address, "127.0.0.1:9"), mode="async")
    outcome = fanout(plan, white_warranty_demand)
    assert len(outcome.scores) == 2  # the reachable half of the laptops
    assert len(outcome.failures) == 1
    assert outcome.failures[0].address == "127.0.0.1:9"


def test_all_providers_dead_raises(white_warranty_demand):
    plan = FanoutPlan(providers=("127.0.0.1:9", "127.0.0.1:10"))
    with pytest.raises(FanoutError, match="no provider reachable"):
        fanout(plan, white_warranty_demand)


def test_slow_provider_times_out_in_isolation(
    tmp_path, laptop_schema, laptop_instances, white_warranty_demand
):
    fast = _spawn(tmp_path, laptop_schema, list(laptop_instances[:2]), "P-fast", bench_mode=True)
    slow = _spawn(tmp_path, laptop_schema, list(laptop_instances[2:]), "P-slow", bench_mode=True)
    try:
        plan = FanoutPlan(
            providers=(fast.address, slow.address), mode="async", per_request_timeout_ms=700
        )
        outcome = fanout(plan, white_warranty_demand, inject_delays_ms={slow.address: 3000})
        assert {s.instance_id for s in outcome.scores} == {"Laptop#1", "Laptop#2"}
        assert len(outcome.failures) == 1
        assert outcome.failures[0].address == slow.address
    finally:
        fast.stop()
        slow.stop()


# --- timing ----------------------------------------------------------------------------


@pytest.fixture()
def delayed_trio(tmp_path, laptop_schema, laptop_instances):
    handles = [
        _spawn(tmp_path, laptop_schema, list(laptop_instances), f"P{i}", bench_mode=True)
        for i in range(3)
    ]
    yield handles
    for h in handles:
        h.stop()


def test_sync_sums_and_async_maxes(delayed_trio, white_warranty_demand):
    delays = {h.address: d for h, d in zip(delayed_trio, (50, 100, 150))}
    addresses = tuple(h.address for h in delayed_trio)

    sync = fanout(
        FanoutPlan(providers=addresses, mode="sync"), white_warranty_demand, inject_delays_ms=delays
    )
    assert sync.timing.total_wall_ms >= 300

    async_ = fanout(
        FanoutPlan(providers=addresses, mode="async"), white_warranty_demand, inject_delays_ms=delays
    )
    assert async_.timing.total_wall_ms <= 150 + 100
    assert _strip(sync.scores) == _strip(async_.scores)


def test_latency_split_excludes_injected_delay(delayed_trio, white_warranty_demand):
    target = delayed_trio[0]
    outcome = fanout(
        FanoutPlan(providers=(target.address,), mode="sync"),
        white_warranty_demand,
        inject_delays_ms={target.address: 80},
    )
    timing = outcome.timing.per_provider[0]
    assert timing.latency_ms >= 75  # injected delay shows up as transport latency
    assert timing.matchmaking_ms < 50
    assert timing.wall_ms >= timing.matchmaking_ms


# --- plan validation ---------------------------------------------------------------------


def test_plan_requires_providers():
    with pytest.raises(ValueError):
        FanoutPlan(providers=())


def test_plan_rejects_unknown_mode():
    with pytest.raises(ValueError):
        FanoutPlan(providers=("a:1",), mode="burst")


def test_plan_rejects_nonpositive_timeout():
    with pytest.raises(ValueError):
        FanoutPlan(providers=("a:1",), per_request_timeout_ms=0)
