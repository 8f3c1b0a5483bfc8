"""TBox/ABox data model, interchange format, and the class-relation closure.

The schema side (TBox) carries class definitions with equivalence,
subclass, and disjointness axioms plus datatype/object properties; the
instance side (ABox) carries advertisements with typed property values.
``build_taxonomy`` computes the closure the matchmaker queries:
subsumption (reflexive-transitive, lifted over equivalence), equivalence
(declared pairs merged with subsumption cycles), and disjointness
(declared pairs propagated down the hierarchy on both sides).

Documents use a compact JSON interchange format (``.onto.json``), not
OWL/RDF; see ``parse_ontology``.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field

Value = int | float | str | bool

DATATYPE_RANGES = ("integer", "decimal", "text", "boolean")

# ISO-8601 calendar date or datetime, e.g. 2009-02-27 or 2009-02-27T10:00:00
ISO_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}([T ]\d{2}:\d{2}(:\d{2}(\.\d+)?)?(Z|[+-]\d{2}:\d{2})?)?$")


class OntologyError(Exception):
    """Base for all schema/document failures."""


class ParseError(OntologyError):
    """Document is not well-formed; carries line/column when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class SchemaError(OntologyError):
    """Schema-level breach (undeclared reference, bad axiom, malformed property)."""

    def __init__(self, message: str, name: str | None = None):
        self.name = name
        super().__init__(message)


class InconsistencyError(OntologyError):
    """Closure made a class disjoint with itself or with one of its subsumers."""


class UnknownClassError(OntologyError):
    pass


@dataclass(frozen=True)
class Violation:
    """One instance-level breach; ``subject`` names the offending element."""

    code: str  # unknown-class | unknown-property | range | cardinality | identity
    subject: str
    message: str


class DocumentError(OntologyError):
    """Instance content of a document breaks the schema; all breaches collected."""

    def __init__(self, violations: list[Violation]):
        self.violations = violations
        detail = "; ".join(v.message for v in violations)
        super().__init__(f"{len(violations)} violation(s): {detail}")


@dataclass(frozen=True)
class ClassDef:
    name: str
    equivalent_to: frozenset[str] = frozenset()
    subclass_of: frozenset[str] = frozenset()
    disjoint_with: frozenset[str] = frozenset()


@dataclass(frozen=True)
class PropertyDef:
    name: str
    kind: str  # "datatype" | "object"
    range: str  # datatype range name, or class name for object properties
    functional: bool = False
    inverse_of: str | None = None
    max_cardinality: int | None = None

    @property
    def single_valued(self) -> bool:
        return self.functional or self.max_cardinality == 1

    @property
    def orderable(self) -> bool:
        """Whether lt/le/gt/ge/range constraints make sense on this range."""
        return self.kind == "datatype" and self.range in ("integer", "decimal", "text")


@dataclass(frozen=True)
class Instance:
    id: str
    class_name: str
    values: dict[str, tuple[Value, ...]] = field(default_factory=dict)
    categories: frozenset[str] = frozenset()

    def asserted_properties(self) -> list[str]:
        return sorted(p for p, vs in self.values.items() if vs)


@dataclass(frozen=True)
class OntologySchema:
    uri: str
    keywords: tuple[str, ...] = ()
    classes: tuple[ClassDef, ...] = ()
    properties: tuple[PropertyDef, ...] = ()

    def class_map(self) -> dict[str, ClassDef]:
        return {c.name: c for c in self.classes}

    def property_map(self) -> dict[str, PropertyDef]:
        return {p.name: p for p in self.properties}


def check_schema(schema: OntologySchema) -> None:
    """Raise SchemaError on the first structural breach.

    Covers: duplicate names, axiom references to undeclared classes,
    self-disjointness, equivalent-and-disjoint contradictions, object
    ranges naming undeclared classes, inverse symmetry, and the
    functional/max-cardinality interaction.
    """
    names: set[str] = set()
    for c in schema.classes:
        if c.name in names:
            raise SchemaError(f"duplicate class {c.name!r}", c.name)
        names.add(c.name)
    prop_names: set[str] = set()
    for p in schema.properties:
        if p.name in prop_names:
            raise SchemaError(f"duplicate property {p.name!r}", p.name)
        prop_names.add(p.name)

    for c in schema.classes:
        for axiom, referenced in (
            ("equivalent_to", c.equivalent_to),
            ("subclass_of", c.subclass_of),
            ("disjoint_with", c.disjoint_with),
        ):
            for ref in referenced:
                if ref not in names:
                    raise SchemaError(
                        f"class {c.name!r} {axiom} references undeclared class {ref!r}", ref
                    )
        if c.name in c.disjoint_with:
            raise SchemaError(f"class {c.name!r} declared disjoint with itself", c.name)
        overlap = c.equivalent_to & c.disjoint_with
        if overlap:
            raise SchemaError(
                f"class {c.name!r} declared both equivalent to and disjoint with "
                f"{sorted(overlap)[0]!r}",
                c.name,
            )

    props = schema.property_map()
    for p in schema.properties:
        if p.kind not in ("datatype", "object"):
            raise SchemaError(f"property {p.name!r} has unknown kind {p.kind!r}", p.name)
        if p.kind == "datatype":
            if p.range not in DATATYPE_RANGES:
                raise SchemaError(
                    f"datatype property {p.name!r} has unknown range {p.range!r}", p.name
                )
            if p.inverse_of is not None:
                raise SchemaError(
                    f"datatype property {p.name!r} cannot declare an inverse", p.name
                )
        else:
            if p.range not in names:
                raise SchemaError(
                    f"object property {p.name!r} ranges over undeclared class {p.range!r}",
                    p.name,
                )
        if p.inverse_of is not None and p.inverse_of in props:
            # The inverse may be a name outside this schema; when declared it
            # must be an object property pointing back.
            q = props[p.inverse_of]
            if q.kind != "object" or q.inverse_of != p.name:
                raise SchemaError(
                    f"property {p.name!r} declares inverse {p.inverse_of!r} "
                    "but the inverse does not point back",
                    p.name,
                )
        if p.max_cardinality is not None and p.max_cardinality < 0:
            raise SchemaError(f"property {p.name!r} has negative max_cardinality", p.name)
        if p.functional and p.max_cardinality not in (None, 1):
            raise SchemaError(
                f"functional property {p.name!r} cannot have max_cardinality "
                f"{p.max_cardinality}",
                p.name,
            )


def _conforms(value: Value, prop: PropertyDef) -> bool:
    if prop.kind == "object":
        return isinstance(value, str)
    if prop.range == "integer":
        return isinstance(value, int) and not isinstance(value, bool)
    if prop.range == "decimal":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if prop.range == "text":
        return isinstance(value, str)
    return isinstance(value, bool)  # boolean


def validate_instance(schema: OntologySchema, inst: Instance) -> list[Violation]:
    """Return one Violation per breach; empty list when the instance is clean."""
    violations: list[Violation] = []
    if not inst.id:
        violations.append(Violation("identity", inst.id, "instance id must be non-empty"))
    classes = schema.class_map()
    props = schema.property_map()
    if inst.class_name not in classes:
        violations.append(
            Violation(
                "unknown-class",
                inst.class_name,
                f"instance {inst.id!r} asserts undeclared class {inst.class_name!r}",
            )
        )
    for prop_name, values in inst.values.items():
        prop = props.get(prop_name)
        if prop is None:
            violations.append(
                Violation(
                    "unknown-property",
                    prop_name,
                    f"instance {inst.id!r} asserts undeclared property {prop_name!r}",
                )
            )
            continue
        for v in values:
            if not _conforms(v, prop):
                violations.append(
                    Violation(
                        "range",
                        prop_name,
                        f"instance {inst.id!r}: value {v!r} does not conform to "
                        f"{prop.kind} range {prop.range!r} of {prop_name!r}",
                    )
                )
        limit = 1 if prop.single_valued else prop.max_cardinality
        if limit is not None and len(values) > limit:
            violations.append(
                Violation(
                    "cardinality",
                    prop_name,
                    f"instance {inst.id!r} asserts {len(values)} values for "
                    f"{prop_name!r} (limit {limit})",
                )
            )
    return violations


# --- interchange format -----------------------------------------------------

_SCHEMA_KEYS = {"uri", "keywords", "classes", "properties", "instances"}
_CLASS_KEYS = {"name", "equivalent_to", "subclass_of", "disjoint_with"}
_PROPERTY_KEYS = {"name", "kind", "range", "functional", "inverse_of", "max_cardinality"}
_INSTANCE_KEYS = {"id", "class", "values", "categories"}


def _require_keys(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ParseError(f"unknown key {sorted(unknown)[0]!r} in {where}")


def _str_list(raw, where: str) -> list[str]:
    if not isinstance(raw, list) or not all(isinstance(x, str) for x in raw):
        raise ParseError(f"{where} must be an array of strings")
    return raw


def parse_ontology(document: str | dict) -> tuple[OntologySchema, list[Instance]]:
    """Parse an ``.onto.json`` document into a validated schema plus instances.

    Accepts the JSON text or an already-decoded object.  Raises ParseError
    (with line/column for syntax errors), SchemaError for structural
    breaches, and DocumentError collecting all instance-level violations.
    """
    if isinstance(document, dict):
        raw = document
    else:
        try:
            raw = json.loads(document)
        except json.JSONDecodeError as e:
            raise ParseError(e.msg, line=e.lineno, column=e.colno) from e
    if not isinstance(raw, dict):
        raise ParseError("document root must be a JSON object")
    _require_keys(raw, _SCHEMA_KEYS, "document root")
    uri = raw.get("uri")
    if not isinstance(uri, str) or not uri:
        raise ParseError("document requires a non-empty text 'uri'")
    keywords = tuple(k.lower() for k in _str_list(raw.get("keywords", []), "'keywords'"))

    classes: list[ClassDef] = []
    for c in raw.get("classes", []):
        if not isinstance(c, dict):
            raise ParseError("each class must be an object")
        _require_keys(c, _CLASS_KEYS, f"class {c.get('name', '?')!r}")
        name = c.get("name")
        if not isinstance(name, str) or not name:
            raise ParseError("class requires a non-empty text 'name'")
        classes.append(
            ClassDef(
                name=name,
                equivalent_to=frozenset(_str_list(c.get("equivalent_to", []), name)),
                subclass_of=frozenset(_str_list(c.get("subclass_of", []), name)),
                disjoint_with=frozenset(_str_list(c.get("disjoint_with", []), name)),
            )
        )

    properties: list[PropertyDef] = []
    for p in raw.get("properties", []):
        if not isinstance(p, dict):
            raise ParseError("each property must be an object")
        _require_keys(p, _PROPERTY_KEYS, f"property {p.get('name', '?')!r}")
        name = p.get("name")
        if not isinstance(name, str) or not name:
            raise ParseError("property requires a non-empty text 'name'")
        kind = p.get("kind")
        rng = p.get("range")
        if not isinstance(kind, str) or not isinstance(rng, str):
            raise ParseError(f"property {name!r} requires text 'kind' and 'range'")
        functional = p.get("functional", False)
        if not isinstance(functional, bool):
            raise ParseError(f"property {name!r}: 'functional' must be boolean")
        inverse_of = p.get("inverse_of")
        if inverse_of is not None and not isinstance(inverse_of, str):
            raise ParseError(f"property {name!r}: 'inverse_of' must be text")
        max_card = p.get("max_cardinality")
        if max_card is not None and (isinstance(max_card, bool) or not isinstance(max_card, int)):
            raise ParseError(f"property {name!r}: 'max_cardinality' must be an integer")
        properties.append(
            PropertyDef(
                name=name,
                kind=kind,
                range=rng,
                functional=functional,
                inverse_of=inverse_of,
                max_cardinality=max_card,
            )
        )

    schema = OntologySchema(
        uri=uri, keywords=keywords, classes=tuple(classes), properties=tuple(properties)
    )
    check_schema(schema)

    instances: list[Instance] = []
    for i in raw.get("instances", []):
        if not isinstance(i, dict):
            raise ParseError("each instance must be an object")
        _require_keys(i, _INSTANCE_KEYS, f"instance {i.get('id', '?')!r}")
        iid = i.get("id")
        cls = i.get("class")
        if not isinstance(iid, str) or not isinstance(cls, str):
            raise ParseError("instance requires text 'id' and 'class'")
        raw_values = i.get("values", {})
        if not isinstance(raw_values, dict):
            raise ParseError(f"instance {iid!r}: 'values' must be an object")
        values: dict[str, tuple[Value, ...]] = {}
        for prop_name, v in raw_values.items():
            vs = v if isinstance(v, list) else [v]
            for item in vs:
                if not isinstance(item, (int, float, str, bool)):
                    raise ParseError(
                        f"instance {iid!r}: property {prop_name!r} holds a non-scalar value"
                    )
            values[prop_name] = tuple(vs)
        categories = frozenset(_str_list(i.get("categories", []), f"instance {iid!r}"))
        instances.append(Instance(id=iid, class_name=cls, values=values, categories=categories))

    all_violations: list[Violation] = []
    seen_ids: set[str] = set()
    for inst in instances:
        if inst.id in seen_ids:
            all_violations.append(
                Violation("identity", inst.id, f"duplicate instance id {inst.id!r}")
            )
        seen_ids.add(inst.id)
        all_violations.extend(validate_instance(schema, inst))
    if all_violations:
        raise DocumentError(all_violations)
    return schema, instances


def instance_to_dict(inst: Instance) -> dict:
    out: dict = {
        "id": inst.id,
        "class": inst.class_name,
        "values": {p: list(vs) if len(vs) != 1 else vs[0] for p, vs in inst.values.items()},
    }
    if inst.categories:
        out["categories"] = sorted(inst.categories)
    return out


def serialize_ontology(schema: OntologySchema, instances: list[Instance] | None = None) -> str:
    """Inverse of parse_ontology up to order-insensitive semantic equality."""
    doc: dict = {
        "uri": schema.uri,
        "keywords": list(schema.keywords),
        "classes": [],
        "properties": [],
        "instances": [instance_to_dict(i) for i in instances or []],
    }
    for c in schema.classes:
        entry: dict = {"name": c.name}
        if c.equivalent_to:
            entry["equivalent_to"] = sorted(c.equivalent_to)
        if c.subclass_of:
            entry["subclass_of"] = sorted(c.subclass_of)
        if c.disjoint_with:
            entry["disjoint_with"] = sorted(c.disjoint_with)
        doc["classes"].append(entry)
    for p in schema.properties:
        entry = {"name": p.name, "kind": p.kind, "range": p.range}
        if p.functional:
            entry["functional"] = True
        if p.inverse_of is not None:
            entry["inverse_of"] = p.inverse_of
        if p.max_cardinality is not None:
            entry["max_cardinality"] = p.max_cardinality
        doc["properties"].append(entry)
    return json.dumps(doc, indent=2, sort_keys=False)


def tbox_fingerprint(schema: OntologySchema) -> str:
    """Digest of the terminological content only.

    Canonically ordered classes/axioms/properties; instances, keywords and
    the URI are excluded so replicas of one TBox at different locations
    fingerprint identically.
    """
    canon = {
        "classes": [
            {
                "name": c.name,
                "equivalent_to": sorted(c.equivalent_to),
                "subclass_of": sorted(c.subclass_of),
                "disjoint_with": sorted(c.disjoint_with),
            }
            for c in sorted(schema.classes, key=lambda c: c.name)
        ],
        "properties": [
            {
                "name": p.name,
                "kind": p.kind,
                "range": p.range,
                "functional": p.functional,
                "inverse_of": p.inverse_of,
                "max_cardinality": p.max_cardinality,
            }
            for p in sorted(schema.properties, key=lambda p: p.name)
        ],
    }
    payload = json.dumps(canon, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


# --- taxonomy ----------------------------------------------------------------


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x: str) -> str:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # deterministic representative: lexicographic minimum
            lo, hi = sorted((ra, rb))
            self.parent[hi] = lo


@dataclass(frozen=True)
class Taxonomy:
    """Closure over class names: subsumption, equivalence, disjointness.

    Immutable after construction; queries are safe for concurrent reads.
    """

    rep: dict[str, str]
    ancestors: dict[str, frozenset[str]]  # rep -> reps it is subsumed by (incl. itself)
    disjoint_pairs: frozenset[frozenset[str]]  # unordered rep pairs
    groups: dict[str, frozenset[str]]  # rep -> all member class names

    def _rep(self, name: str) -> str:
        try:
            return self.rep[name]
        except KeyError:
            raise UnknownClassError(f"unknown class {name!r}") from None

    def subsumes(self, sub: str, sup: str) -> bool:
        """True iff ``sub`` is contained in or coincides with ``sup``."""
        return self._rep(sup) in self.ancestors[self._rep(sub)]

    def disjoint(self, a: str, b: str) -> bool:
        ra, rb = self._rep(a), self._rep(b)
        if ra == rb:
            return False
        return frozenset((ra, rb)) in self.disjoint_pairs

    def equivalent(self, a: str, b: str) -> bool:
        return self._rep(a) == self._rep(b)

    def classes(self) -> list[str]:
        return sorted(self.rep)


def build_taxonomy(schema: OntologySchema) -> Taxonomy:
    """Compute the closure; raises InconsistencyError when it contradicts itself.

    Equivalence starts from declared pairs and absorbs subclass cycles
    (mutual subsumption is equivalence).  Disjointness propagates declared
    pairs downward through subsumption on both arguments.
    """
    check_schema(schema)
    names = [c.name for c in schema.classes]
    uf = _UnionFind(names)
    for c in schema.classes:
        for other in c.equivalent_to:
            uf.union(c.name, other)

    def edges() -> dict[str, set[str]]:
        out: dict[str, set[str]] = {uf.find(n): set() for n in names}
        for c in schema.classes:
            for parent in c.subclass_of:
                a, b = uf.find(c.name), uf.find(parent)
                if a != b:
                    out[a].add(b)
        return out

    # Merge subclass cycles into the equivalence partition: mutual
    # subsumption is equivalence, and merging keeps subsumption over
    # representatives antisymmetric.
    merged = True
    while merged:
        merged = False
        graph = edges()
        for scc in _strongly_connected(graph):
            if len(scc) > 1:
                first = scc[0]
                for other in scc[1:]:
                    uf.union(first, other)
                merged = True

    graph = edges()
    ancestors: dict[str, frozenset[str]] = {}

    def climb(node: str, seen: set[str]) -> frozenset[str]:
        if node in ancestors:
            return ancestors[node]
        seen.add(node)
        acc: set[str] = {node}
        for parent in graph[node]:
            if parent not in seen:  # graph is acyclic after SCC merge
                acc |= climb(parent, seen)
        result = frozenset(acc)
        ancestors[node] = result
        return result

    for node in graph:
        climb(node, set())

    descendants: dict[str, set[str]] = {r: set() for r in graph}
    for node, ups in ancestors.items():
        for up in ups:
            descendants[up].add(node)

    disjoint: set[frozenset[str]] = set()
    for c in schema.classes:
        for other in c.disjoint_with:
            ra, rb = uf.find(c.name), uf.find(other)
            for x in descendants[ra]:
                for y in descendants[rb]:
                    disjoint.add(frozenset((x, y)))

    groups: dict[str, set[str]] = {}
    for n in names:
        groups.setdefault(uf.find(n), set()).add(n)

    for pair in disjoint:
        if len(pair) == 1:
            (x,) = pair
            raise InconsistencyError(
                f"class {sorted(groups[x])[0]!r} becomes disjoint with itself"
            )
        x, y = pair
        if y in ancestors[x] or x in ancestors[y]:
            raise InconsistencyError(
                f"class {sorted(groups[x])[0]!r} is both subsumed by and disjoint "
                f"from {sorted(groups[y])[0]!r}"
            )

    return Taxonomy(
        rep={n: uf.find(n) for n in names},
        ancestors=ancestors,
        disjoint_pairs=frozenset(disjoint),
        groups={r: frozenset(members) for r, members in groups.items()},
    )


def _strongly_connected(graph: dict[str, set[str]]) -> list[list[str]]:
    """Iterative Tarjan SCC over a small class graph."""
    index: dict[str, int] = {}
    lowlink: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    sccs: list[list[str]] = []
    counter = 0

    for start in graph:
        if start in index:
            continue
        work: list[tuple[str, list[str], int]] = [(start, sorted(graph[start]), 0)]
        while work:
            node, children, child_idx = work.pop()
            if child_idx == 0:
                index[node] = lowlink[node] = counter
                counter += 1
                stack.append(node)
                on_stack.add(node)
            recurse = False
            for i in range(child_idx, len(children)):
                child = children[i]
                if child not in index:
                    work.append((node, children, i + 1))
                    work.append((child, sorted(graph[child]), 0))
                    recurse = True
                    break
                if child in on_stack:
                    lowlink[node] = min(lowlink[node], index[child])
            if recurse:
                continue
            if lowlink[node] == index[node]:
                scc = []
                while True:
                    top = stack.pop()
                    on_stack.discard(top)
                    scc.append(top)
                    if top == node:
                        break
                sccs.append(scc)
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])
    return sccs
