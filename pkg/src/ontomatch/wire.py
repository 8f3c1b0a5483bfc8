"""Pydantic request/response models and converters to the core dataclasses.

Everything crossing an HTTP boundary is declared here so both service apps
and the clients (CLI fan-out, tests) share one contract.  Instances spell
their class under the JSON key ``class``, matching the document format.
"""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field

from .matchmaker import Constraint, Demand, RawMatch
from .ontology import ClassDef, Instance, OntologySchema, PropertyDef
from .registry import RegistryEntry

Scalar = int | float | str | bool


class ConstraintModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    property: str
    op: Literal["eq", "ne", "lt", "le", "gt", "ge", "range"]
    value: Any
    confidence: int = Field(default=10, ge=1, le=10)


class DemandModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    concept: str
    concept_confidence: int = Field(default=10, ge=1, le=10)
    constraints: list[ConstraintModel] = Field(default_factory=list)
    ontology_uri: str

    def to_core(self) -> Demand:
        constraints = []
        for c in self.constraints:
            value = c.value
            if c.op == "range" and isinstance(value, (list, tuple)) and len(value) == 2:
                value = (value[0], value[1])
            constraints.append(
                Constraint(property=c.property, op=c.op, value=value, confidence=c.confidence)
            )
        return Demand(
            concept=self.concept,
            constraints=tuple(constraints),
            ontology_uri=self.ontology_uri,
            concept_confidence=self.concept_confidence,
        )

    @classmethod
    def from_core(cls, demand: Demand) -> "DemandModel":
        return cls(
            concept=demand.concept,
            concept_confidence=demand.concept_confidence,
            constraints=[
                ConstraintModel(
                    property=c.property,
                    op=c.op,
                    value=list(c.value) if c.op == "range" else c.value,
                    confidence=c.confidence,
                )
                for c in demand.constraints
            ],
            ontology_uri=demand.ontology_uri,
        )


class InstanceModel(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    id: str
    class_name: str = Field(alias="class")
    values: dict[str, Any] = Field(default_factory=dict)
    categories: list[str] = Field(default_factory=list)

    def to_core(self) -> Instance:
        values: dict[str, tuple] = {}
        for prop, raw in self.values.items():
            if isinstance(raw, list):
                values[prop] = tuple(raw)
            else:
                values[prop] = (raw,)
        return Instance(
            id=self.id,
            class_name=self.class_name,
            values=values,
            categories=frozenset(self.categories),
        )

    @classmethod
    def from_core(cls, instance: Instance) -> "InstanceModel":
        values: dict[str, Any] = {}
        for prop, vals in instance.values.items():
            values[prop] = vals[0] if len(vals) == 1 else list(vals)
        return cls(
            id=instance.id,
            **{"class": instance.class_name},
            values=values,
            categories=sorted(instance.categories),
        )


class ViolationModel(BaseModel):
    code: str
    subject: str
    message: str


class RawMatchModel(BaseModel):
    instance_id: str
    n_par: float
    n_pot: int
    n_add: int
    additional_properties: list[str]
    values: dict[str, list[Scalar]] = Field(default_factory=dict)

    def to_core(self) -> RawMatch:
        return RawMatch(
            instance_id=self.instance_id,
            n_par=self.n_par,
            n_pot=self.n_pot,
            n_add=self.n_add,
            additional_properties=tuple(self.additional_properties),
            values={p: tuple(vs) for p, vs in self.values.items()},
        )

    @classmethod
    def from_core(cls, raw: RawMatch) -> "RawMatchModel":
        return cls(
            instance_id=raw.instance_id,
            n_par=raw.n_par,
            n_pot=raw.n_pot,
            n_add=raw.n_add,
            additional_properties=list(raw.additional_properties),
            values={p: list(vs) for p, vs in raw.values.items()},
        )


class MatchRequestModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    demand: DemandModel
    request_id: str
    expected_fingerprint: str | None = None


class MatchResponseModel(BaseModel):
    provider_id: str
    ontology_uri: str
    tbox_fingerprint: str
    results: list[RawMatchModel]
    matchmaking_ms: float = Field(ge=0)
    request_id: str


class TBoxClassModel(BaseModel):
    name: str
    equivalent_to: list[str] = Field(default_factory=list)
    subclass_of: list[str] = Field(default_factory=list)
    disjoint_with: list[str] = Field(default_factory=list)


class TBoxPropertyModel(BaseModel):
    name: str
    kind: Literal["datatype", "object"]
    range: str
    functional: bool = False
    inverse_of: str | None = None
    max_cardinality: int | None = None


class TBoxSummaryModel(BaseModel):
    ontology_uri: str
    tbox_fingerprint: str
    keywords: list[str]
    classes: list[TBoxClassModel]
    properties: list[TBoxPropertyModel]

    @classmethod
    def from_schema(cls, schema: OntologySchema, fingerprint: str) -> "TBoxSummaryModel":
        return cls(
            ontology_uri=schema.uri,
            tbox_fingerprint=fingerprint,
            keywords=sorted(schema.keywords),
            classes=[
                TBoxClassModel(
                    name=c.name,
                    equivalent_to=sorted(c.equivalent_to),
                    subclass_of=sorted(c.subclass_of),
                    disjoint_with=sorted(c.disjoint_with),
                )
                for c in schema.classes
            ],
            properties=[
                TBoxPropertyModel(
                    name=p.name,
                    kind=p.kind,
                    range=p.range,
                    functional=p.functional,
                    inverse_of=p.inverse_of,
                    max_cardinality=p.max_cardinality,
                )
                for p in schema.properties
            ],
        )

    def to_schema(self) -> OntologySchema:
        return OntologySchema(
            uri=self.ontology_uri,
            keywords=tuple(self.keywords),
            classes=tuple(
                ClassDef(
                    name=c.name,
                    equivalent_to=frozenset(c.equivalent_to),
                    subclass_of=frozenset(c.subclass_of),
                    disjoint_with=frozenset(c.disjoint_with),
                )
                for c in self.classes
            ),
            properties=tuple(
                PropertyDef(
                    name=p.name,
                    kind=p.kind,
                    range=p.range,
                    functional=p.functional,
                    inverse_of=p.inverse_of,
                    max_cardinality=p.max_cardinality,
                )
                for p in self.properties
            ),
        )


class HealthModel(BaseModel):
    status: Literal["ok"]
    provider_id: str
    resources: int


class PublishResponseModel(BaseModel):
    instance_id: str
    notified: int


class SubscriptionRequestModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    user_id: str
    demand: DemandModel
    valid_until: str


class SubscriptionResponseModel(BaseModel):
    subscription_id: str
    user_id: str


class InboxEntryModel(BaseModel):
    instance_id: str
    query_id: str
    source: str
    at: str
    values: dict[str, list[Scalar]] = Field(default_factory=dict)


class InboxResponseModel(BaseModel):
    user_id: str
    entries: list[InboxEntryModel]


class RegistryEntryInModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    ontology_uri: str
    keywords: list[str]
    tbox_fingerprint: str
    provider_address: str


class RegistryEntryModel(BaseModel):
    ontology_uri: str
    keywords: list[str]
    tbox_fingerprint: str
    provider_address: str
    registered_at: str

    @classmethod
    def from_core(cls, entry: RegistryEntry) -> "RegistryEntryModel":
        return cls(
            ontology_uri=entry.ontology_uri,
            keywords=sorted(entry.keywords),
            tbox_fingerprint=entry.tbox_fingerprint,
            provider_address=entry.provider_address,
            registered_at=entry.registered_at,
        )
