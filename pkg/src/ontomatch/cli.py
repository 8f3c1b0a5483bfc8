"""Command-line front end.

One binary, one subcommand per role: validate ontology documents, score a
demand locally, serve a provider or registry node, search the registry,
fan a demand out across providers, manage user profiles, and run the
timing benchmark.  Every command is a thin shell over the library; no
scoring or protocol logic lives here.

Exit codes: 0 success, 1 invalid input, 2 nothing found or nobody
reachable, 3 protocol disagreement between nodes.
"""

from __future__ import annotations

import json
import signal
import sys
import time
from pathlib import Path

import click
import httpx

from . import bench as benchmod
from .fanout import FanoutError, FanoutPlan, NoProvidersError, TBoxMismatchError, fanout
from .matchmaker import (
    Demand,
    MatchError,
    demand_from_dict,
    demand_to_dict,
    match_all,
    score_to_dict,
    validate_demand,
)
from .ontology import (
    OntologyError,
    build_taxonomy,
    parse_ontology,
    tbox_fingerprint,
    validate_instance,
)
from .presentation import (
    group_by_additional,
    grouped_to_dict,
    render_flat_text,
    render_grouped_text,
)
from .profiles import (
    ProfileError,
    ProfileStore,
    SavedQuery,
    UserProfile,
    load_rules,
    on_login,
)
from .registry import Registry

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_EMPTY = 2
EXIT_PROTOCOL = 3


class CliError(click.ClickException):
    """Message plus one of the documented exit codes."""

    def __init__(self, message: str, exit_code: int = EXIT_INVALID):
        super().__init__(message)
        self.exit_code = exit_code


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"{path} is not JSON: {exc}") from exc


def _load_ontology(path: str):
    try:
        return parse_ontology(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from exc
    except OntologyError as exc:
        raise CliError(f"{path}: {exc}") from exc


def _load_demand(path: str) -> Demand:
    try:
        return demand_from_dict(_read_json(path))
    except MatchError as exc:
        raise CliError(f"{path}: {exc}") from exc


def _checked_demand(schema, demand: Demand) -> None:
    problems = validate_demand(schema, demand)
    if problems:
        raise CliError("; ".join(v.message for v in problems))


def _emit(ctx: click.Context, payload, text: str) -> None:
    if ctx.obj["json"]:
        click.echo(json.dumps(payload, indent=2, sort_keys=True))
    else:
        click.echo(text)


def _split_listen(listen: str) -> tuple[str, int]:
    # unlike registry entries, a listen address may use port 0 (pick a free one)
    host, sep, port_text = listen.rpartition(":")
    if not sep or not host or not port_text.isdigit() or int(port_text) > 65535:
        raise CliError(f"--listen wants host:port, got {listen!r}")
    return host, int(port_text)


def _serve_forever(app, listen: str, banner: str, after_bind=None) -> None:
    from .serving import run_app_in_thread

    host, port = _split_listen(listen)
    handle = run_app_in_thread(app, host=host, port=port)
    try:
        if after_bind is not None:
            after_bind(handle)
    except BaseException:
        handle.stop()
        raise
    click.echo(banner.format(address=handle.address))
    sys.stdout.flush()
    stop = {"flag": False}

    def _request_stop(signum, frame):
        stop["flag"] = True

    signal.signal(signal.SIGTERM, _request_stop)
    signal.signal(signal.SIGINT, _request_stop)
    try:
        while not stop["flag"]:
            time.sleep(0.2)
    finally:
        handle.stop()
        click.echo(f"stopped {handle.address}")


@click.group()
@click.option("--json", "as_json", is_flag=True, help="Emit machine-readable JSON instead of text.")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for anything generated.")
@click.pass_context
def main(ctx: click.Context, as_json: bool, seed: int) -> None:
    """Ontology-driven matchmaking over local files or networked providers."""
    ctx.obj = {"json": as_json, "seed": seed}


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def validate(ctx: click.Context, path: str) -> None:
    """Check an ontology document and report its shape."""
    schema, instances = _load_ontology(path)
    try:
        build_taxonomy(schema)
    except OntologyError as exc:
        raise CliError(f"{path}: {exc}") from exc
    violations = [v for inst in instances for v in validate_instance(schema, inst)]
    if violations:
        for v in violations:
            click.echo(f"{v.code}: {v.message}", err=True)
        raise CliError(f"{path}: {len(violations)} violation(s)")
    datatype = sum(1 for p in schema.properties if p.kind == "datatype")
    summary = {
        "uri": schema.uri,
        "classes": len(schema.classes),
        "object_properties": len(schema.properties) - datatype,
        "datatype_properties": datatype,
        "instances": len(instances),
        "tbox_fingerprint": tbox_fingerprint(schema),
    }
    _emit(
        ctx,
        summary,
        f"{schema.uri}\n"
        f"  classes:             {summary['classes']}\n"
        f"  object properties:   {summary['object_properties']}\n"
        f"  datatype properties: {summary['datatype_properties']}\n"
        f"  instances:           {summary['instances']}\n"
        f"  tbox fingerprint:    {summary['tbox_fingerprint']}",
    )


@main.command()
@click.option("--ontology", "ontology_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--demand", "demand_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--strategy", type=click.Choice(["naive", "grouping"]), default="naive", show_default=True)
@click.option("--group-order", type=click.Choice(["asc", "desc"]), default="asc", show_default=True)
@click.pass_context
def match(ctx: click.Context, ontology_path: str, demand_path: str, strategy: str, group_order: str) -> None:
    """Score a demand against one document's resources, flat or grouped."""
    schema, instances = _load_ontology(ontology_path)
    taxonomy = build_taxonomy(schema)
    demand = _load_demand(demand_path)
    _checked_demand(schema, demand)
    scores = match_all(taxonomy, demand, instances)
    if not scores:
        _emit(ctx, {"results": []}, "0 results")
        return
    if strategy == "naive":
        _emit(ctx, {"results": [score_to_dict(s) for s in scores]}, render_flat_text(scores))
    else:
        grouped = group_by_additional(scores, order_mode=group_order)
        _emit(ctx, grouped_to_dict(grouped), render_grouped_text(grouped))


@main.command("serve-provider")
@click.option("--listen", default="127.0.0.1:0", show_default=True, help="host:port, port 0 picks one.")
@click.option("--ontology", "ontology_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--provider-id", required=True)
@click.option("--registry", "registry_url", default=None, help="Registry base URL to announce to.")
@click.option("--bench-mode", is_flag=True, help="Honor the delay-injection request header.")
@click.option("--profile-dir", default=None, type=click.Path(file_okay=False), help="Where user profiles live.")
@click.option(
    "--ui-dir",
    default=None,
    type=click.Path(exists=True, file_okay=False),
    help="Static web client to serve under /ui.",
)
def serve_provider(listen, ontology_path, provider_id, registry_url, bench_mode, profile_dir, ui_dir) -> None:
    """Run one provider node over an ontology document."""
    import tempfile

    from .api import ProviderState, create_provider_app

    schema, instances = _load_ontology(ontology_path)
    store_root = profile_dir or tempfile.mkdtemp(prefix=f"profiles-{provider_id}-")
    state = ProviderState.from_parsed(
        provider_id=provider_id,
        schema=schema,
        instances=instances,
        store=ProfileStore(store_root),
        bench_mode=bench_mode,
    )
    app = create_provider_app(state, ui_dir=ui_dir)

    def announce(handle):
        if not registry_url:
            return
        entry = {
            "ontology_uri": schema.uri,
            "keywords": sorted(schema.keywords),
            "tbox_fingerprint": state.fingerprint,
            "provider_address": handle.address,
        }
        try:
            response = httpx.post(f"{registry_url.rstrip('/')}/ontologies", json=entry, timeout=10.0)
            response.raise_for_status()
        except httpx.HTTPError as exc:
            raise CliError(f"registry announce failed: {exc}", EXIT_EMPTY) from exc

    _serve_forever(
        app,
        listen,
        f"provider {provider_id} listening on {{address}}",
        after_bind=announce,
    )


@main.command("serve-registry")
@click.option("--listen", default="127.0.0.1:0", show_default=True)
@click.option(
    "--snapshot",
    default=None,
    type=click.Path(dir_okay=False),
    help="Persist entries to this file and reload them on start; in-memory without it.",
)
def serve_registry(listen: str, snapshot: str | None) -> None:
    """Run the ontology registry node."""
    from .api import create_registry_app

    registry = Registry(snapshot_path=snapshot)
    _serve_forever(create_registry_app(registry), listen, "registry listening on {address}")


@main.command()
@click.option("--registry", "registry_url", required=True, help="Registry base URL.")
@click.option("--keyword", "keywords", multiple=True, help="Repeatable; no keyword lists everything.")
@click.pass_context
def search(ctx: click.Context, registry_url: str, keywords: tuple[str, ...]) -> None:
    """List registry entries matching any of the given keywords."""
    entries = _registry_search(registry_url, keywords)
    if not entries:
        raise CliError("no matches", EXIT_EMPTY)
    lines = [
        f"{e['ontology_uri']}  {e['provider_address']}  [{', '.join(e['keywords'])}]"
        for e in entries
    ]
    _emit(ctx, {"entries": entries}, "\n".join(lines))


def _registry_search(registry_url: str, keywords: tuple[str, ...]) -> list[dict]:
    params = [("keyword", k) for k in keywords]
    try:
        response = httpx.get(f"{registry_url.rstrip('/')}/ontologies", params=params, timeout=10.0)
        response.raise_for_status()
    except httpx.HTTPError as exc:
        raise CliError(f"registry unreachable: {exc}", EXIT_EMPTY) from exc
    return response.json()


@main.command("fanout")
@click.option("--registry", "registry_url", required=True)
@click.option("--keyword", "keywords", multiple=True)
@click.option("--demand", "demand_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(["sync", "async"]), default="sync", show_default=True)
@click.option("--timeout-ms", type=int, default=10_000, show_default=True)
@click.option("--group-order", type=click.Choice(["asc", "desc"]), default="asc", show_default=True)
@click.pass_context
def fanout_cmd(ctx, registry_url, keywords, demand_path, mode, timeout_ms, group_order) -> None:
    """Send one demand to every matching provider and merge the rankings."""
    demand = _load_demand(demand_path)
    entries = _registry_search(registry_url, keywords)
    addresses: list[str] = []
    for entry in entries:
        if entry["provider_address"] not in addresses:
            addresses.append(entry["provider_address"])
    if not addresses:
        raise CliError("no providers", EXIT_EMPTY)
    plan = FanoutPlan(providers=tuple(addresses), mode=mode, per_request_timeout_ms=timeout_ms)
    try:
        outcome = fanout(plan, demand)
    except TBoxMismatchError as exc:
        raise CliError(str(exc), EXIT_PROTOCOL) from exc
    except NoProvidersError as exc:
        raise CliError(str(exc), EXIT_EMPTY) from exc
    except FanoutError as exc:
        raise CliError(str(exc), EXIT_PROTOCOL) from exc
    grouped = group_by_additional(outcome.scores, order_mode=group_order)
    timing = {
        "total_wall_ms": outcome.timing.total_wall_ms,
        "per_provider": [
            {
                "provider_id": t.provider_id,
                "address": t.address,
                "matchmaking_ms": t.matchmaking_ms,
                "latency_ms": t.latency_ms,
                "wall_ms": t.wall_ms,
            }
            for t in outcome.timing.per_provider
        ],
    }
    payload = {
        "demand": demand_to_dict(demand),
        "grouped": grouped_to_dict(grouped),
        "results": [score_to_dict(s) for s in outcome.scores],
        "timing": timing,
        "failures": [{"address": f.address, "error": f.error} for f in outcome.failures],
    }
    text_parts = [render_grouped_text(grouped)]
    for t in outcome.timing.per_provider:
        text_parts.append(
            f"{t.provider_id} ({t.address}): matchmaking {t.matchmaking_ms:.1f} ms, "
            f"latency {t.latency_ms:.1f} ms"
        )
    answered = len(outcome.timing.per_provider)
    reach = f"{answered} provider(s)" if answered == len(addresses) else f"{answered} of {len(addresses)} provider(s)"
    text_parts.append(f"total: {outcome.timing.total_wall_ms:.1f} ms over {reach}")
    for f in outcome.failures:
        text_parts.append(f"failed: {f.address}: {f.error}")
    _emit(ctx, payload, "\n".join(text_parts))


@main.group()
@click.option("--store", "store_root", required=True, type=click.Path(file_okay=False))
@click.pass_context
def profile(ctx: click.Context, store_root: str) -> None:
    """Saved queries, login recommendations, and the notification inbox."""
    ctx.obj["store"] = ProfileStore(store_root)


@profile.command("save-query")
@click.option("--user-id", required=True)
@click.option("--query-id", required=True)
@click.option("--demand", "demand_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--valid-until", required=True, help="ISO-8601 expiry timestamp.")
@click.pass_context
def profile_save_query(ctx, user_id, query_id, demand_path, valid_until) -> None:
    """Store a demand for replay and PUSH notification until it expires."""
    store: ProfileStore = ctx.obj["store"]
    demand = _load_demand(demand_path)
    try:
        store.save_query(user_id, SavedQuery(query_id=query_id, demand=demand, valid_until=valid_until))
    except ProfileError as exc:
        raise CliError(str(exc)) from exc
    _emit(
        ctx,
        {"user_id": user_id, "query_id": query_id, "valid_until": valid_until},
        f"saved query {query_id} for {user_id}, valid until {valid_until}",
    )


@profile.command("login")
@click.option("--user-id", required=True)
@click.option("--ontology", "ontology_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--rules", "rules_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--now", "now_iso", default=None, help="Override the clock (ISO-8601).")
@click.pass_context
def profile_login(ctx, user_id, ontology_path, rules_path, now_iso) -> None:
    """Replay the user's live queries and category rules over the resources."""
    store: ProfileStore = ctx.obj["store"]
    try:
        user = store.load(user_id)
    except ProfileError as exc:
        raise CliError(str(exc)) from exc
    if user is None:
        user = UserProfile(user_id=user_id)
    schema, instances = _load_ontology(ontology_path)
    taxonomy = build_taxonomy(schema)
    rules = load_rules(rules_path) if rules_path else []
    try:
        recs = on_login(user, rules, instances, taxonomy, now=now_iso)
    except ProfileError as exc:
        raise CliError(str(exc)) from exc
    payload = {
        "user_id": user_id,
        "recommendations": [
            {"instance_id": r.instance_id, "source": r.source, "rank": r.rank}
            for r in recs
        ],
    }
    if not recs:
        _emit(ctx, payload, "no recommendations")
        return
    lines = []
    for r in recs:
        rank = "-" if r.rank is None else f"{r.rank:.4f}"
        lines.append(f"{r.instance_id}  rank {rank}  via {r.source}")
    _emit(ctx, payload, "\n".join(lines))


@profile.command("inbox")
@click.option("--user-id", required=True)
@click.pass_context
def profile_inbox(ctx, user_id) -> None:
    """Print the PUSH notifications collected for a user."""
    store: ProfileStore = ctx.obj["store"]
    try:
        entries = store.read_inbox(user_id)
    except ProfileError as exc:
        raise CliError(str(exc)) from exc
    if not entries:
        _emit(ctx, {"user_id": user_id, "entries": []}, "inbox empty")
        return
    lines = [
        f"{e['at']}  {e['instance_id']}  via {e['source']}"
        for e in entries
    ]
    _emit(ctx, {"user_id": user_id, "entries": entries}, "\n".join(lines))


@main.command()
@click.option("--classes", type=int, default=13, show_default=True)
@click.option("--object-props", type=int, default=6, show_default=True)
@click.option("--datatype-props", type=int, default=8, show_default=True)
@click.option("--instances", "instance_count", type=int, default=200, show_default=True)
@click.option("--query-props", default="1,2,3,4", show_default=True, help="Comma-separated property counts.")
@click.option("--peers", type=int, default=1, show_default=True, help="1 runs in-process, more spawns local providers.")
@click.option("--mode", type=click.Choice(["sync", "async"]), default="sync", show_default=True)
@click.option("--repetitions", type=int, default=3, show_default=True)
@click.option("--delays", default=None, help="Comma-separated per-peer injected delays in ms.")
@click.option("--csv", "csv_path", default=None, type=click.Path(dir_okay=False), help="Also write rows as CSV.")
@click.pass_context
def bench(ctx, classes, object_props, datatype_props, instance_count, query_props, peers, mode, repetitions, delays, csv_path) -> None:
    """Generate a synthetic workload and measure matchmaking time."""
    try:
        series = tuple(int(part) for part in query_props.split(",") if part.strip())
    except ValueError:
        raise CliError(f"--query-props wants integers, got {query_props!r}")
    delay_values: tuple[int, ...] | None = None
    if delays is not None:
        try:
            delay_values = tuple(int(part) for part in delays.split(",") if part.strip())
        except ValueError:
            raise CliError(f"--delays wants integers, got {delays!r}")
    try:
        profile_spec = benchmod.OntologyProfile(
            classes=classes,
            object_properties=object_props,
            datatype_properties=datatype_props,
        )
        spec = benchmod.BenchSpec(
            profile=profile_spec,
            instance_count=instance_count,
            query_properties=series,
            peers=peers,
            mode=mode,
            repetitions=repetitions,
            seed=ctx.obj["seed"],
        )
        schema, instances = benchmod.generate_ontology(profile_spec, instance_count, seed=spec.seed)
        if peers == 1 and delay_values is None:
            rows = benchmod.run_centralized(schema, instances, spec)
        else:
            rows = benchmod.run_distributed(schema, instances, spec, inject_delays_ms=delay_values)
    except benchmod.BenchError as exc:
        raise CliError(str(exc)) from exc
    csv_text = benchmod.rows_to_csv(rows)
    if csv_path:
        Path(csv_path).write_text(csv_text, encoding="utf-8")
    payload = {
        "rows": [
            {
                "query": r.query,
                "properties": r.properties,
                "peers": r.peers,
                "resources": r.resources,
                "matchmaking_ms": r.matchmaking_ms,
                "latency_ms": r.latency_ms,
                "total_ms": r.total_ms,
            }
            for r in rows
        ]
    }
    _emit(ctx, payload, benchmod.format_rows(rows))


if __name__ == "__main__":
    main()
