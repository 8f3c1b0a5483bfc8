"""Result shaping for display: flat lists, grouping, provenance, merging.

Grouping collects scored supplies by the exact set of additional
properties they expose, so a buyer can see at a glance which offers carry
the same kind of extra information.  Merging pools raw counters from
several providers and normalizes once, which keeps a distributed query
bit-identical to running the same supplies through one matchmaker.
"""

from __future__ import annotations

from dataclasses import dataclass

from .matchmaker import MatchScore, RawMatch, normalize_scores


class MergeError(Exception):
    pass


@dataclass(frozen=True)
class ProvenanceTag:
    """Which provider, speaking which ontology, produced a result."""

    provider_id: str
    ontology_uri: str

    def __post_init__(self):
        if not self.provider_id or not self.ontology_uri:
            raise ValueError("provenance requires non-empty provider id and ontology uri")


@dataclass(frozen=True)
class Group:
    signature: tuple[str, ...]  # sorted additional-property names
    members: tuple[MatchScore, ...]


@dataclass(frozen=True)
class GroupedResults:
    groups: tuple[Group, ...]
    order_mode: str

    def __post_init__(self):
        if self.order_mode not in ("asc", "desc"):
            raise ValueError(f"order_mode must be 'asc' or 'desc', got {self.order_mode!r}")


@dataclass(frozen=True)
class ProviderResults:
    """One provider's raw response, ready for merging."""

    tag: ProvenanceTag
    tbox_fingerprint: str
    raws: tuple[RawMatch, ...]


def render_flat(scores: list[MatchScore]) -> list[dict]:
    """JSON-ready flat entries in ranked order, with asserted values inline."""
    entries = []
    for s in scores:
        entry = {
            "instance_id": s.instance_id,
            "rank": s.rank,
            "n_par": s.n_par,
            "n_pot": s.n_pot,
            "n_add": s.n_add,
            "detail": {p: list(vs) for p, vs in sorted(s.values.items())},
        }
        if s.provenance is not None:
            entry["provider_id"] = s.provenance.provider_id
            entry["ontology_uri"] = s.provenance.ontology_uri
        entries.append(entry)
    return entries


def render_flat_text(scores: list[MatchScore]) -> str:
    lines = []
    for i, s in enumerate(scores, start=1):
        origin = f"  [{s.provenance.provider_id}]" if s.provenance else ""
        lines.append(
            f"{i:3d}. {s.instance_id}  rank={s.rank:.4f}  "
            f"(par={s.n_par:.1f} pot={s.n_pot} add={s.n_add}){origin}"
        )
        for prop, vals in sorted(s.values.items()):
            rendered = ", ".join(str(v) for v in vals)
            lines.append(f"       {prop} = {rendered}")
    return "\n".join(lines)


def group_by_additional(scores: list[MatchScore], order_mode: str = "asc") -> GroupedResults:
    """Partition scores by their additional-property signature.

    Groups are ordered by signature cardinality (order_mode direction),
    ties by the lexicographic joined signature, ascending either way.
    Member order inside a group follows the input.
    """
    buckets: dict[tuple[str, ...], list[MatchScore]] = {}
    for s in scores:
        buckets.setdefault(s.additional_properties, []).append(s)
    reverse = order_mode == "desc"

    def key(sig: tuple[str, ...]):
        size = -len(sig) if reverse else len(sig)
        return (size, ",".join(sig))

    groups = tuple(
        Group(signature=sig, members=tuple(buckets[sig])) for sig in sorted(buckets, key=key)
    )
    return GroupedResults(groups=groups, order_mode=order_mode)


def grouped_to_dict(grouped: GroupedResults) -> dict:
    return {
        "order_mode": grouped.order_mode,
        "groups": [
            {
                "signature": list(g.signature),
                "size": len(g.members),
                "members": [
                    {
                        "instance_id": m.instance_id,
                        "rank": m.rank,
                        "detail": {p: list(vs) for p, vs in sorted(m.values.items())},
                    }
                    for m in g.members
                ],
            }
            for g in grouped.groups
        ],
    }


def render_grouped_text(grouped: GroupedResults) -> str:
    lines = []
    for g in grouped.groups:
        label = "{" + ", ".join(g.signature) + "}" if g.signature else "{}"
        lines.append(f"additional {label}  ({len(g.members)} result{'s' if len(g.members) != 1 else ''})")
        for m in g.members:
            origin = f"  [{m.provenance.provider_id}]" if m.provenance else ""
            lines.append(f"    {m.instance_id}  rank={m.rank:.4f}{origin}")
    return "\n".join(lines)


def annotate_provenance(scores: list[MatchScore], tag: ProvenanceTag) -> list[MatchScore]:
    """Same scores with the provenance tag attached to each entry."""
    return [
        MatchScore(
            instance_id=s.instance_id,
            n_par=s.n_par,
            n_pot=s.n_pot,
            n_add=s.n_add,
            additional_properties=s.additional_properties,
            rank_par=s.rank_par,
            rank_pot=s.rank_pot,
            rank_add=s.rank_add,
            rank=s.rank,
            values=s.values,
            provenance=tag,
        )
        for s in scores
    ]


def render_by_provider_text(scores: list[MatchScore]) -> str:
    """Ranked entries sectioned per provider; order within a section preserved."""
    sections: dict[str, list[MatchScore]] = {}
    for s in scores:
        pid = s.provenance.provider_id if s.provenance else "(local)"
        sections.setdefault(pid, []).append(s)
    lines = []
    for pid in sorted(sections):
        lines.append(f"provider {pid}:")
        for s in sections[pid]:
            lines.append(f"    {s.instance_id}  rank={s.rank:.4f}")
    return "\n".join(lines)


def merge_multi_provider(responses: list[ProviderResults]) -> list[MatchScore]:
    """Pool raw counters from several providers and normalize once.

    All responses must carry the same schema fingerprint; a diverging
    provider is named in the error.  The same supply id must not appear
    twice under one provider.  Normalizing the pooled counters makes the
    merged ranking identical to a single matchmaker run over the union.
    """
    if not responses:
        raise MergeError("nothing to merge: no provider responses")
    reference = responses[0].tbox_fingerprint
    for r in responses[1:]:
        if r.tbox_fingerprint != reference:
            raise MergeError(
                f"provider {r.tag.provider_id!r} speaks a different schema "
                f"(fingerprint {r.tbox_fingerprint[:12]}... != {reference[:12]}...)"
            )
    seen: set[tuple[str, str]] = set()
    raws: list[RawMatch] = []
    tags: list[ProvenanceTag] = []
    for r in responses:
        for raw in r.raws:
            key = (r.tag.provider_id, raw.instance_id)
            if key in seen:
                raise MergeError(
                    f"duplicate result {raw.instance_id!r} from provider {r.tag.provider_id!r}"
                )
            seen.add(key)
            raws.append(raw)
            tags.append(r.tag)
    return normalize_scores(raws, tags)
