"""Shared fixtures and seeded generators for randomized oracle tests."""

from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

from ontomatch.matchmaker import Constraint, Demand
from ontomatch.ontology import (
    ClassDef,
    Instance,
    OntologySchema,
    PropertyDef,
    build_taxonomy,
    parse_ontology,
)

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def laptop_document() -> dict:
    return json.loads((FIXTURES / "laptop.onto.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def laptop_parsed(laptop_document):
    return parse_ontology(laptop_document)


@pytest.fixture(scope="session")
def laptop_schema(laptop_parsed):
    return laptop_parsed[0]


@pytest.fixture(scope="session")
def laptop_instances(laptop_parsed):
    return laptop_parsed[1]


@pytest.fixture(scope="session")
def laptop_taxonomy(laptop_schema):
    return build_taxonomy(laptop_schema)


@pytest.fixture(scope="session")
def white_warranty_demand() -> Demand:
    raw = json.loads((FIXTURES / "white_warranty.demand.json").read_text(encoding="utf-8"))
    return Demand(
        concept=raw["concept"],
        constraints=tuple(
            Constraint(property=c["property"], op=c["op"], value=c["value"])
            for c in raw["constraints"]
        ),
        ontology_uri=raw["ontology_uri"],
    )


# --- seeded random builders ----------------------------------------------------

TEXT_POOL = ("red", "white", "black", "blue", "silver", "matte")
DATE_POOL = ("2008-01-15", "2009-06-30", "2010-12-01", "2011-03-20")


def random_schema(rng: random.Random, max_classes: int = 10, max_properties: int = 8) -> OntologySchema:
    """Random schema; may be inconsistent (callers decide how to treat that)."""
    n_classes = rng.randint(1, max_classes)
    names = [f"C{i}" for i in range(n_classes)]
    classes = []
    for i, name in enumerate(names):
        equivalent: set[str] = set()
        subclass: set[str] = set()
        disjoint: set[str] = set()
        if i > 0:
            if rng.random() < 0.2:
                equivalent.add(rng.choice(names[:i]))
            if rng.random() < 0.55:
                subclass.add(rng.choice(names[:i]))
            if rng.random() < 0.2:
                pick = rng.choice(names[:i])
                if pick not in equivalent:
                    disjoint.add(pick)
        classes.append(
            ClassDef(
                name=name,
                equivalent_to=frozenset(equivalent),
                subclass_of=frozenset(subclass),
                disjoint_with=frozenset(disjoint),
            )
        )
    n_props = rng.randint(0, max_properties)
    properties = []
    for i in range(n_props):
        kind = "object" if rng.random() < 0.2 else "datatype"
        if kind == "object":
            properties.append(
                PropertyDef(name=f"p{i}", kind="object", range=rng.choice(names))
            )
        else:
            rng_name = rng.choice(("integer", "decimal", "text", "boolean"))
            functional = rng.random() < 0.5
            properties.append(
                PropertyDef(
                    name=f"p{i}",
                    kind="datatype",
                    range=rng_name,
                    functional=functional,
                    max_cardinality=1 if functional else None,
                )
            )
    return OntologySchema(
        uri=f"mem://random/{rng.randint(0, 10**9)}",
        keywords=("random",),
        classes=tuple(classes),
        properties=tuple(properties),
    )


def random_value(rng: random.Random, prop: PropertyDef):
    if prop.kind == "object":
        return f"ref-{rng.randint(0, 5)}"
    if prop.range == "integer":
        return rng.randint(-5, 20)
    if prop.range == "decimal":
        return round(rng.uniform(-5.0, 20.0), 1)
    if prop.range == "boolean":
        return rng.random() < 0.5
    if rng.random() < 0.3:
        return rng.choice(DATE_POOL)
    return rng.choice(TEXT_POOL)


def random_instances(rng: random.Random, schema: OntologySchema, count: int) -> list[Instance]:
    names = [c.name for c in schema.classes]
    out = []
    for i in range(count):
        values = {}
        for prop in schema.properties:
            if rng.random() < 0.6:
                width = 1 if prop.single_valued else rng.randint(1, 3)
                values[prop.name] = tuple(random_value(rng, prop) for _ in range(width))
        out.append(
            Instance(id=f"s{i:03d}", class_name=rng.choice(names), values=values)
        )
    return out


def random_config_with_schema(seed: int, max_supplies: int = 20):
    """(schema, taxonomy, demand, supplies) from a consistent random schema."""
    from ontomatch.ontology import build_taxonomy, check_schema

    rng = random.Random(seed)
    while True:
        schema = random_schema(rng, max_classes=10, max_properties=8)
        try:
            check_schema(schema)
            taxonomy = build_taxonomy(schema)
        except Exception:
            continue
        supplies = random_instances(rng, schema, rng.randint(0, max_supplies))
        demand = random_demand(rng, schema, max_constraints=6)
        return schema, taxonomy, demand, supplies


def random_config(seed: int, max_supplies: int = 20):
    """(taxonomy, demand, supplies); see random_config_with_schema."""
    return random_config_with_schema(seed, max_supplies)[1:]


def random_demand(rng: random.Random, schema: OntologySchema, max_constraints: int = 6) -> Demand:
    names = [c.name for c in schema.classes]
    eligible = list(schema.properties)
    rng.shuffle(eligible)
    constraints = []
    for prop in eligible[: rng.randint(0, max_constraints)]:
        if prop.kind == "object":
            op = rng.choice(("eq", "ne"))
            value = f"ref-{rng.randint(0, 5)}"
        elif prop.range == "integer":
            op = rng.choice(("eq", "ne", "lt", "le", "gt", "ge", "range"))
            value = (
                tuple(sorted((rng.randint(-5, 20), rng.randint(-5, 20))))
                if op == "range"
                else rng.randint(-5, 20)
            )
        elif prop.range == "decimal":
            op = rng.choice(("eq", "ne", "lt", "le", "gt", "ge", "range"))
            value = (
                tuple(sorted((round(rng.uniform(-5, 20), 1), round(rng.uniform(-5, 20), 1))))
                if op == "range"
                else round(rng.uniform(-5.0, 20.0), 1)
            )
        elif prop.range == "boolean":
            op = rng.choice(("eq", "ne"))
            value = rng.random() < 0.5
        else:
            # Ordering on text only with ISO dates; plain text sticks to eq/ne.
            if rng.random() < 0.3:
                op = rng.choice(("lt", "le", "gt", "ge", "range"))
                value = (
                    tuple(sorted((rng.choice(DATE_POOL), rng.choice(DATE_POOL))))
                    if op == "range"
                    else rng.choice(DATE_POOL)
                )
            else:
                op = rng.choice(("eq", "ne"))
                value = rng.choice(TEXT_POOL + DATE_POOL)
        constraints.append(
            Constraint(property=prop.name, op=op, value=value, confidence=rng.randint(1, 10))
        )
    return Demand(
        concept=rng.choice(names),
        constraints=tuple(constraints),
        ontology_uri=schema.uri,
        concept_confidence=rng.randint(1, 10),
    )
