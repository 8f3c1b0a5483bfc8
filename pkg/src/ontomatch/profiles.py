"""User profiles, category rules, and push-mode recommendation delivery.

A profile carries free-form attributes and saved queries with an expiry.
Rules map attribute conditions to category names; resources tagged with a
category a user falls into are recommended at login.  Saved queries work
the other way around: they are replayed at login and evaluated against
every newly published resource, landing conflict-free hits in the user's
inbox so the user is notified without asking again.
"""

from __future__ import annotations

import json
import os
import re
import threading
from dataclasses import dataclass, field, replace
from datetime import date, datetime, timezone
from pathlib import Path

from .matchmaker import (
    ComparisonCache,
    Demand,
    IncomparableValuesError,
    demand_from_dict,
    demand_to_dict,
    match_all,
    match_one,
)
from .ontology import Instance, OntologySchema, Taxonomy, Value

RULE_OPS = ("eq", "ne", "lt", "le", "gt", "ge")

_USER_ID_RE = re.compile(r"[A-Za-z0-9_.-]+\Z")


class ProfileError(Exception):
    pass


@dataclass(frozen=True)
class SavedQuery:
    query_id: str
    demand: Demand
    valid_until: str  # ISO-8601 timestamp


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    attributes: dict[str, Value] = field(default_factory=dict)
    saved_queries: tuple[SavedQuery, ...] = ()


@dataclass(frozen=True)
class RuleCondition:
    attribute: str
    op: str
    value: Value


@dataclass(frozen=True)
class Rule:
    name: str
    conditions: tuple[RuleCondition, ...]
    category: str


@dataclass(frozen=True)
class EventRecord:
    kind: str  # "resource_published" | "user_login"
    payload: str
    at: str  # ISO-8601 timestamp


@dataclass(frozen=True)
class Recommendation:
    instance_id: str
    source: str  # "category" or "query:<query_id>"
    rank: float | None
    values: dict[str, tuple[Value, ...]] = field(default_factory=dict)


def parse_timestamp(text: str) -> datetime:
    """ISO-8601 to an aware datetime; naive stamps are read as UTC."""
    try:
        stamp = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError as exc:
        raise ProfileError(f"bad timestamp {text!r}: {exc}") from None
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return stamp


def _now_utc() -> datetime:
    return datetime.now(timezone.utc)


def now_iso() -> str:
    return _now_utc().isoformat()


def _age_from_birthdate(birthdate: str, now: datetime) -> int:
    born = date.fromisoformat(birthdate[:10])
    today = now.date()
    years = today.year - born.year
    if (today.month, today.day) < (born.month, born.day):
        years -= 1
    return years


def _condition_holds(cond: RuleCondition, profile: UserProfile, now: datetime) -> bool:
    value = profile.attributes.get(cond.attribute)
    if value is None and cond.attribute == "age" and "birthdate" in profile.attributes:
        # Age is derivable; every other absent attribute simply fails the rule.
        birthdate = profile.attributes["birthdate"]
        if not isinstance(birthdate, str):
            raise ProfileError(f"birthdate of {profile.user_id!r} must be an ISO date")
        value = _age_from_birthdate(birthdate, now)
    if value is None:
        return False
    if cond.op == "eq":
        return _rule_equal(value, cond.value)
    if cond.op == "ne":
        return not _rule_equal(value, cond.value)
    cmp = _rule_compare(value, cond.value, cond.attribute)
    if cond.op == "lt":
        return cmp < 0
    if cond.op == "le":
        return cmp <= 0
    if cond.op == "gt":
        return cmp > 0
    if cond.op == "ge":
        return cmp >= 0
    raise ProfileError(f"unknown rule operator {cond.op!r}")


def _rule_equal(a: Value, b: Value) -> bool:
    if isinstance(a, bool) != isinstance(b, bool):
        return False
    return a == b


def _rule_compare(a: Value, b: Value, attribute: str) -> int:
    numeric_a = isinstance(a, (int, float)) and not isinstance(a, bool)
    numeric_b = isinstance(b, (int, float)) and not isinstance(b, bool)
    if numeric_a and numeric_b:
        return (a > b) - (a < b)
    if isinstance(a, str) and isinstance(b, str):
        return (a > b) - (a < b)
    raise IncomparableValuesError(
        f"attribute {attribute!r}: cannot order {a!r} against {b!r}"
    )


def evaluate_rules(rules: list[Rule], profile: UserProfile, now: str | datetime) -> set[str]:
    """Categories whose rule conditions all hold for this profile."""
    moment = parse_timestamp(now) if isinstance(now, str) else now
    matched: set[str] = set()
    for rule in rules:
        if all(_condition_holds(c, profile, moment) for c in rule.conditions):
            matched.add(rule.category)
    return matched


def expire_queries(profile: UserProfile, now: str | datetime) -> UserProfile:
    """Profile with queries whose valid_until has passed removed."""
    moment = parse_timestamp(now) if isinstance(now, str) else now
    kept = tuple(q for q in profile.saved_queries if parse_timestamp(q.valid_until) >= moment)
    if len(kept) == len(profile.saved_queries):
        return profile
    return replace(profile, saved_queries=kept)


def on_login(
    profile: UserProfile,
    rules: list[Rule],
    resources: list[Instance],
    taxonomy: Taxonomy,
    now: str | datetime | None = None,
) -> list[Recommendation]:
    """Everything worth showing the user at login.

    Category recommendations come from resources tagged with a category the
    profile falls into (rank-free).  Each unexpired saved query is replayed
    over the current resources via match_all.  Duplicates collapse to the
    occurrence with the better rank; a ranked hit beats a rank-free one.
    """
    moment = parse_timestamp(now) if isinstance(now, str) else (now or _now_utc())
    categories = evaluate_rules(rules, profile, moment)
    ordered: list[str] = []
    best: dict[str, Recommendation] = {}

    def offer(rec: Recommendation) -> None:
        held = best.get(rec.instance_id)
        if held is None:
            ordered.append(rec.instance_id)
            best[rec.instance_id] = rec
            return
        if held.rank is None and rec.rank is not None:
            best[rec.instance_id] = rec
        elif held.rank is not None and rec.rank is not None and rec.rank < held.rank:
            best[rec.instance_id] = rec

    for resource in resources:
        if categories & resource.categories:
            offer(
                Recommendation(
                    instance_id=resource.id,
                    source="category",
                    rank=None,
                    values=dict(resource.values),
                )
            )
    live = expire_queries(profile, moment)
    for query in live.saved_queries:
        for score in match_all(taxonomy, query.demand, resources):
            offer(
                Recommendation(
                    instance_id=score.instance_id,
                    source=f"query:{query.query_id}",
                    rank=score.rank,
                    values=score.values,
                )
            )
    return [best[iid] for iid in ordered]


def on_resource_published(
    event: EventRecord,
    instance: Instance,
    profiles: list[UserProfile],
    taxonomy: Taxonomy,
    schema: OntologySchema | None = None,
) -> list[tuple[str, Recommendation]]:
    """Inbox deliveries a freshly published resource triggers.

    A delivery fires once per (user, saved query) when the query was still
    valid at publication time and the resource scores conflict-free
    (n_par == 0) against it.  Emitted in profile order, then query order.
    """
    if event.kind != "resource_published":
        raise ProfileError(f"expected a resource_published event, got {event.kind!r}")
    if event.payload != instance.id:
        raise ProfileError(
            f"event names {event.payload!r} but the instance is {instance.id!r}"
        )
    moment = parse_timestamp(event.at)
    deliveries: list[tuple[str, Recommendation]] = []
    for profile in profiles:
        for query in expire_queries(profile, moment).saved_queries:
            raw = match_one(taxonomy, query.demand, instance, ComparisonCache(taxonomy))
            if raw.n_par == 0:
                deliveries.append(
                    (
                        profile.user_id,
                        Recommendation(
                            instance_id=instance.id,
                            source=f"query:{query.query_id}",
                            rank=None,
                            values=dict(instance.values),
                        ),
                    )
                )
    return deliveries


# --- rules and profile JSON --------------------------------------------------


def rule_from_dict(raw: dict) -> Rule:
    name = raw.get("name")
    category = raw.get("category")
    if not isinstance(name, str) or not name:
        raise ProfileError("rule requires a non-empty 'name'")
    if not isinstance(category, str) or not category:
        raise ProfileError(f"rule {name!r} requires a non-empty 'category'")
    conditions = []
    for c in raw.get("conditions", []):
        attr = c.get("attribute")
        op = c.get("op")
        if not isinstance(attr, str) or not attr:
            raise ProfileError(f"rule {name!r}: condition requires an 'attribute'")
        if op not in RULE_OPS:
            raise ProfileError(f"rule {name!r}: unknown operator {op!r}")
        if "value" not in c:
            raise ProfileError(f"rule {name!r}: condition on {attr!r} requires a 'value'")
        conditions.append(RuleCondition(attribute=attr, op=op, value=c["value"]))
    return Rule(name=name, conditions=tuple(conditions), category=category)


def load_rules(path: str | Path) -> list[Rule]:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, list):
        raise ProfileError("rules file must hold a JSON array")
    return [rule_from_dict(r) for r in raw]


def profile_to_dict(profile: UserProfile) -> dict:
    return {
        "user_id": profile.user_id,
        "attributes": dict(profile.attributes),
        "saved_queries": [
            {
                "query_id": q.query_id,
                "demand": demand_to_dict(q.demand),
                "valid_until": q.valid_until,
            }
            for q in profile.saved_queries
        ],
    }


def profile_from_dict(raw: dict) -> UserProfile:
    user_id = raw.get("user_id")
    if not isinstance(user_id, str) or not _USER_ID_RE.match(user_id):
        raise ProfileError(f"bad user id {user_id!r}")
    queries = []
    for q in raw.get("saved_queries", []):
        queries.append(
            SavedQuery(
                query_id=q["query_id"],
                demand=demand_from_dict(q["demand"]),
                valid_until=q["valid_until"],
            )
        )
    return UserProfile(
        user_id=user_id,
        attributes=dict(raw.get("attributes", {})),
        saved_queries=tuple(queries),
    )


class ProfileStore:
    """Directory of per-user profile JSON files plus append-only inboxes.

    Layout: ``<root>/<user_id>.profile.json`` and ``<root>/<user_id>.inbox.jsonl``.
    Writes go through a temp file and rename, so a crash never leaves a
    half-written profile behind.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _check_id(self, user_id: str) -> str:
        if not _USER_ID_RE.match(user_id):
            raise ProfileError(f"user id {user_id!r} is not filesystem-safe")
        return user_id

    def _profile_path(self, user_id: str) -> Path:
        return self.root / f"{self._check_id(user_id)}.profile.json"

    def _inbox_path(self, user_id: str) -> Path:
        return self.root / f"{self._check_id(user_id)}.inbox.jsonl"

    def load(self, user_id: str) -> UserProfile | None:
        path = self._profile_path(user_id)
        if not path.exists():
            return None
        try:
            return profile_from_dict(json.loads(path.read_text(encoding="utf-8")))
        except (json.JSONDecodeError, ProfileError) as exc:
            raise ProfileError(f"unreadable profile {path.name}: {exc}") from exc

    def save(self, profile: UserProfile) -> None:
        path = self._profile_path(profile.user_id)
        with self._lock:
            tmp = path.with_suffix(".tmp")
            tmp.write_text(
                json.dumps(profile_to_dict(profile), indent=2, sort_keys=True) + "\n",
                encoding="utf-8",
            )
            os.replace(tmp, path)

    def list_users(self) -> list[str]:
        return sorted(p.name[: -len(".profile.json")] for p in self.root.glob("*.profile.json"))

    def load_all(self) -> list[UserProfile]:
        profiles = []
        for user_id in self.list_users():
            profile = self.load(user_id)
            if profile is not None:
                profiles.append(profile)
        return profiles

    def save_query(self, user_id: str, query: SavedQuery) -> UserProfile:
        """Upsert a saved query (query_id is the key); creates the profile if new."""
        profile = self.load(user_id) or UserProfile(user_id=self._check_id(user_id))
        kept = tuple(q for q in profile.saved_queries if q.query_id != query.query_id)
        profile = replace(profile, saved_queries=kept + (query,))
        self.save(profile)
        return profile

    def append_inbox(self, user_id: str, entry: dict) -> None:
        path = self._inbox_path(user_id)
        with self._lock:
            with path.open("a", encoding="utf-8") as handle:
                handle.write(json.dumps(entry, sort_keys=True) + "\n")

    def read_inbox(self, user_id: str) -> list[dict]:
        path = self._inbox_path(user_id)
        if not path.exists():
            return []
        entries = []
        for number, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            try:
                entries.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ProfileError(f"unreadable inbox {path.name} line {number}: {exc}") from exc
        return entries
