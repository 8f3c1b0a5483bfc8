"""Demand/supply scoring: conflict, potential, and elicitation counters.

Each supply is scored against a demand on three axes:

* ``n_par`` — confidence-weighted conflicts (disjoint concept, violated
  constraints); weight is ``confidence / 10``.
* ``n_pot`` — requirements the supply neither satisfies nor contradicts
  (concept not subsumed by the demanded one, constrained property absent).
* ``n_add`` — asserted properties the demand never mentions; these are the
  values a user can learn from the results and refine on.

Counters are normalized per component against the batch maximum and folded
into a unified rank where 0 is a perfect, maximally informative match and
lower is better.  ``n_add`` acts as a bonus: supplies exposing more
learnable properties rank ahead of otherwise equal ones.

Disjointness tests go through a :class:`ComparisonCache` keyed by unordered
class pair, so a pair checked in either direction costs one evaluation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable

from .ontology import (
    ISO_DATE_RE,
    Instance,
    OntologySchema,
    Taxonomy,
    Value,
    Violation,
)

if TYPE_CHECKING:  # pragma: no cover
    from .presentation import ProvenanceTag

OPS = ("eq", "ne", "lt", "le", "gt", "ge", "range")
ORDERING_OPS = ("lt", "le", "gt", "ge", "range")


class MatchError(Exception):
    pass


class IncomparableValuesError(MatchError):
    pass


class DemandValidationError(MatchError):
    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("; ".join(v.message for v in violations))


@dataclass(frozen=True)
class Constraint:
    property: str
    op: str
    value: Value | tuple[Value, Value]  # pair of bounds for "range"
    confidence: int = 10


@dataclass(frozen=True)
class Demand:
    concept: str
    constraints: tuple[Constraint, ...]
    ontology_uri: str
    concept_confidence: int = 10

    def constraint_names(self) -> frozenset[str]:
        return frozenset(c.property for c in self.constraints)


@dataclass(frozen=True)
class RawMatch:
    """Per-supply counters before normalization; what providers ship over the wire."""

    instance_id: str
    n_par: float
    n_pot: int
    n_add: int
    additional_properties: tuple[str, ...]
    values: dict[str, tuple[Value, ...]] = field(default_factory=dict)


@dataclass(frozen=True)
class MatchScore:
    instance_id: str
    n_par: float
    n_pot: int
    n_add: int
    additional_properties: tuple[str, ...]
    rank_par: float
    rank_pot: float
    rank_add: float
    rank: float
    values: dict[str, tuple[Value, ...]] = field(default_factory=dict)
    provenance: "ProvenanceTag | None" = None


class ComparisonCache:
    """Memoized disjointness verdicts over unordered class-name pairs.

    ``lookups`` counts every query; ``evaluations`` counts actual closure
    consultations, so a pair asked in both directions costs one evaluation.
    """

    def __init__(self, taxonomy: Taxonomy):
        self._taxonomy = taxonomy
        self._memo: dict[frozenset[str], bool] = {}
        self.lookups = 0
        self.evaluations = 0

    def is_disjoint(self, a: str, b: str) -> bool:
        self.lookups += 1
        key = frozenset((a, b))
        if key not in self._memo:
            self.evaluations += 1
            self._memo[key] = self._taxonomy.disjoint(a, b)
        return self._memo[key]

    def disjoint_from_all(self, supply_concepts: Iterable[str], demand_concepts: Iterable[str]) -> bool:
        """Every supply concept disjoint from every demand concept.

        Deliberately evaluates all pairs (no short-circuit): the pair
        verdicts are exactly what the not-among check reuses.
        """
        verdicts = [
            self.is_disjoint(s, d)
            for s, d in itertools.product(tuple(supply_concepts), tuple(demand_concepts))
        ]
        return all(verdicts)

    def not_among(self, first: Iterable[str], second: Iterable[str]) -> bool:
        """The concepts in ``first`` are not among those in ``second``.

        Computed from the same pairwise disjointness verdicts as
        ``disjoint_from_all``, queried in reverse orientation.
        """
        verdicts = [
            self.is_disjoint(a, b)
            for a, b in itertools.product(tuple(first), tuple(second))
        ]
        return all(verdicts)

    def stats(self) -> tuple[int, int]:
        return (self.lookups, self.evaluations)


def cache_stats(cache: ComparisonCache) -> tuple[int, int]:
    return cache.stats()


def _bool_mismatch(a: Value, b: Value) -> bool:
    return isinstance(a, bool) != isinstance(b, bool)


def _values_equal(a: Value, b: Value) -> bool:
    if _bool_mismatch(a, b):
        return False
    return a == b


def _compare(a: Value, b: Value) -> int:
    """Three-way comparison; numeric for numbers, lexical for text (ISO dates)."""
    numeric_a = isinstance(a, (int, float)) and not isinstance(a, bool)
    numeric_b = isinstance(b, (int, float)) and not isinstance(b, bool)
    if numeric_a and numeric_b:
        return (a > b) - (a < b)
    if isinstance(a, str) and isinstance(b, str):
        return (a > b) - (a < b)
    raise IncomparableValuesError(f"cannot order {a!r} against {b!r}")


def satisfies(constraint: Constraint, value: Value) -> bool:
    """Whether a single asserted value meets the constraint predicate.

    Range is inclusive on both bounds; ordering is numeric for numbers and
    lexical for text, which orders ISO-8601 dates correctly.
    """
    op = constraint.op
    if op == "eq":
        return _values_equal(value, constraint.value)
    if op == "ne":
        return not _values_equal(value, constraint.value)
    if op == "range":
        low, high = constraint.value  # validated as an ordered pair
        return _compare(value, low) >= 0 and _compare(value, high) <= 0
    cmp = _compare(value, constraint.value)
    if op == "lt":
        return cmp < 0
    if op == "le":
        return cmp <= 0
    if op == "gt":
        return cmp > 0
    if op == "ge":
        return cmp >= 0
    raise MatchError(f"unknown operator {op!r}")


def _constraint_value_ok(value, prop) -> bool:
    if prop.kind == "object":
        return isinstance(value, str)
    if prop.range == "integer":
        return isinstance(value, int) and not isinstance(value, bool)
    if prop.range == "decimal":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if prop.range == "text":
        return isinstance(value, str)
    return isinstance(value, bool)


def validate_demand(schema: OntologySchema, demand: Demand) -> list[Violation]:
    """All breaches of the demand against the schema; empty when valid."""
    violations: list[Violation] = []
    classes = schema.class_map()
    props = schema.property_map()
    if demand.concept not in classes:
        violations.append(
            Violation("unknown-class", demand.concept, f"unknown concept {demand.concept!r}")
        )
    if not 1 <= demand.concept_confidence <= 10:
        violations.append(
            Violation(
                "confidence",
                demand.concept,
                f"concept confidence {demand.concept_confidence} outside 1..10",
            )
        )
    seen: set[str] = set()
    for c in demand.constraints:
        if c.property in seen:
            violations.append(
                Violation("duplicate", c.property, f"duplicate constraint on {c.property!r}")
            )
        seen.add(c.property)
        if not 1 <= c.confidence <= 10:
            violations.append(
                Violation(
                    "confidence", c.property, f"confidence {c.confidence} outside 1..10"
                )
            )
        prop = props.get(c.property)
        if prop is None:
            violations.append(
                Violation(
                    "unknown-property",
                    c.property,
                    f"constraint on undeclared property {c.property!r}",
                )
            )
            continue
        if c.op not in OPS:
            violations.append(Violation("operator", c.property, f"unknown operator {c.op!r}"))
            continue
        if c.op in ORDERING_OPS:
            if not prop.orderable:
                violations.append(
                    Violation(
                        "operator",
                        c.property,
                        f"{c.op!r} not applicable to {prop.kind}/{prop.range} "
                        f"property {c.property!r}",
                    )
                )
                continue
        bounds = list(c.value) if c.op == "range" else [c.value]
        if c.op == "range" and len(bounds) != 2:
            violations.append(
                Violation("value", c.property, f"range on {c.property!r} needs two bounds")
            )
            continue
        for bound in bounds:
            if not _constraint_value_ok(bound, prop):
                violations.append(
                    Violation(
                        "value",
                        c.property,
                        f"value {bound!r} does not conform to range {prop.range!r} "
                        f"of {c.property!r}",
                    )
                )
            elif c.op in ORDERING_OPS and prop.range == "text" and not ISO_DATE_RE.match(bound):
                # Lexical ordering on text is only meaningful for ISO-8601 dates.
                violations.append(
                    Violation(
                        "value",
                        c.property,
                        f"ordering on text property {c.property!r} requires "
                        f"ISO-8601 date values, got {bound!r}",
                    )
                )
        if c.op == "range" and len(bounds) == 2:
            try:
                if _compare(bounds[0], bounds[1]) > 0:
                    violations.append(
                        Violation(
                            "value", c.property, f"range bounds on {c.property!r} not ordered"
                        )
                    )
            except IncomparableValuesError:
                pass  # already reported as a conformance breach
    return violations


def check_demand(schema: OntologySchema, demand: Demand) -> None:
    violations = validate_demand(schema, demand)
    if violations:
        raise DemandValidationError(violations)


def match_one(
    taxonomy: Taxonomy,
    demand: Demand,
    supply: Instance,
    cache: ComparisonCache,
) -> RawMatch:
    """Raw counters for one supply against the demand.

    Concept: disjoint class conflicts at the concept confidence weight;
    a class that is not subsumed by the demanded concept is potential.
    Constraints: an asserted value set with no satisfying member conflicts
    at the constraint's weight; an absent property is potential; a
    satisfied constraint moves nothing.
    """
    par_tenths = 0
    n_pot = 0
    if cache.is_disjoint(supply.class_name, demand.concept):
        par_tenths += demand.concept_confidence
    elif not taxonomy.subsumes(supply.class_name, demand.concept):
        n_pot += 1
    for constraint in demand.constraints:
        asserted = supply.values.get(constraint.property, ())
        if not asserted:
            n_pot += 1
        elif not any(satisfies(constraint, v) for v in asserted):
            par_tenths += constraint.confidence
    demanded = demand.constraint_names()
    additional = tuple(sorted(p for p, vs in supply.values.items() if vs and p not in demanded))
    return RawMatch(
        instance_id=supply.id,
        n_par=par_tenths / 10.0,
        n_pot=n_pot,
        n_add=len(additional),
        additional_properties=additional,
        values=dict(supply.values),
    )


def normalize_scores(
    raws: list[RawMatch],
    tags: "list[ProvenanceTag | None] | None" = None,
) -> list[MatchScore]:
    """Fold raw counters into normalized rank components and the unified rank.

    Each component is divided by its batch maximum (0 when the maximum is 0).
    The additional-knowledge component enters as a bonus, so the unified
    rank is ``mean(rank_par, rank_pot, 1 - rank_add)``; when no supply has
    any additional property the third term drops out entirely.  Output is
    sorted ascending (0 = perfect match), ties broken by instance id.
    """
    if not raws:
        return []
    if tags is None:
        tags = [None] * len(raws)
    max_par = max(r.n_par for r in raws)
    max_pot = max(r.n_pot for r in raws)
    max_add = max(r.n_add for r in raws)
    scores: list[MatchScore] = []
    for raw, tag in zip(raws, tags):
        rank_par = raw.n_par / max_par if max_par else 0.0
        rank_pot = raw.n_pot / max_pot if max_pot else 0.0
        rank_add = raw.n_add / max_add if max_add else 0.0
        bonus = (1.0 - rank_add) if max_add else 0.0
        rank = (rank_par + rank_pot + bonus) / 3.0
        scores.append(
            MatchScore(
                instance_id=raw.instance_id,
                n_par=raw.n_par,
                n_pot=raw.n_pot,
                n_add=raw.n_add,
                additional_properties=raw.additional_properties,
                rank_par=rank_par,
                rank_pot=rank_pot,
                rank_add=rank_add,
                rank=rank,
                values=raw.values,
                provenance=tag,
            )
        )
    scores.sort(
        key=lambda s: (s.rank, s.instance_id, s.provenance.provider_id if s.provenance else "")
    )
    return scores


def match_all(taxonomy: Taxonomy, demand: Demand, supplies: list[Instance]) -> list[MatchScore]:
    """Score every supply with one shared comparison cache, then normalize."""
    cache = ComparisonCache(taxonomy)
    raws = [match_one(taxonomy, demand, s, cache) for s in supplies]
    return normalize_scores(raws)


# --- JSON (de)serialization ---------------------------------------------------

_DEMAND_KEYS = {"concept", "concept_confidence", "constraints", "ontology_uri"}
_CONSTRAINT_KEYS = {"property", "op", "value", "confidence"}


def demand_from_dict(raw: dict) -> Demand:
    """Build a Demand from its JSON object form; structural checks only."""
    if not isinstance(raw, dict):
        raise MatchError("demand must be a JSON object")
    unknown = set(raw) - _DEMAND_KEYS
    if unknown:
        raise MatchError(f"unknown demand key {sorted(unknown)[0]!r}")
    concept = raw.get("concept")
    uri = raw.get("ontology_uri")
    if not isinstance(concept, str) or not concept:
        raise MatchError("demand requires a non-empty 'concept'")
    if not isinstance(uri, str) or not uri:
        raise MatchError("demand requires a non-empty 'ontology_uri'")
    constraints: list[Constraint] = []
    for c in raw.get("constraints", []):
        if not isinstance(c, dict):
            raise MatchError("each constraint must be an object")
        unknown = set(c) - _CONSTRAINT_KEYS
        if unknown:
            raise MatchError(f"unknown constraint key {sorted(unknown)[0]!r}")
        prop = c.get("property")
        op = c.get("op")
        if not isinstance(prop, str) or not isinstance(op, str):
            raise MatchError("constraint requires text 'property' and 'op'")
        value = c.get("value")
        if op == "range":
            if not isinstance(value, (list, tuple)) or len(value) != 2:
                raise MatchError(f"range constraint on {prop!r} needs [low, high]")
            value = (value[0], value[1])
        confidence = c.get("confidence", 10)
        if isinstance(confidence, bool) or not isinstance(confidence, int):
            raise MatchError(f"constraint confidence on {prop!r} must be an integer")
        constraints.append(Constraint(property=prop, op=op, value=value, confidence=confidence))
    concept_confidence = raw.get("concept_confidence", 10)
    if isinstance(concept_confidence, bool) or not isinstance(concept_confidence, int):
        raise MatchError("concept_confidence must be an integer")
    return Demand(
        concept=concept,
        constraints=tuple(constraints),
        ontology_uri=uri,
        concept_confidence=concept_confidence,
    )


def demand_to_dict(demand: Demand) -> dict:
    return {
        "concept": demand.concept,
        "concept_confidence": demand.concept_confidence,
        "constraints": [
            {
                "property": c.property,
                "op": c.op,
                "value": list(c.value) if c.op == "range" else c.value,
                "confidence": c.confidence,
            }
            for c in demand.constraints
        ],
        "ontology_uri": demand.ontology_uri,
    }


def raw_to_dict(raw: RawMatch) -> dict:
    return {
        "instance_id": raw.instance_id,
        "n_par": raw.n_par,
        "n_pot": raw.n_pot,
        "n_add": raw.n_add,
        "additional_properties": list(raw.additional_properties),
        "values": {p: list(vs) for p, vs in raw.values.items()},
    }


def raw_from_dict(raw: dict) -> RawMatch:
    return RawMatch(
        instance_id=raw["instance_id"],
        n_par=raw["n_par"],
        n_pot=raw["n_pot"],
        n_add=raw["n_add"],
        additional_properties=tuple(raw["additional_properties"]),
        values={p: tuple(vs) for p, vs in raw.get("values", {}).items()},
    )


def score_to_dict(score: MatchScore) -> dict:
    out = {
        "instance_id": score.instance_id,
        "n_par": score.n_par,
        "n_pot": score.n_pot,
        "n_add": score.n_add,
        "additional_properties": list(score.additional_properties),
        "rank_par": score.rank_par,
        "rank_pot": score.rank_pot,
        "rank_add": score.rank_add,
        "rank": score.rank,
        "values": {p: list(vs) for p, vs in score.values.items()},
    }
    if score.provenance is not None:
        out["provenance"] = {
            "provider_id": score.provenance.provider_id,
            "ontology_uri": score.provenance.ontology_uri,
        }
    return out
