"""Presentation: flat/grouped rendering, provenance, multi-provider merge."""

from __future__ import annotations

import random
from collections import Counter

import pytest
from conftest import random_config

from ontomatch.matchmaker import ComparisonCache, match_all, match_one
from ontomatch.presentation import (
    GroupedResults,
    MergeError,
    ProvenanceTag,
    ProviderResults,
    annotate_provenance,
    group_by_additional,
    grouped_to_dict,
    merge_multi_provider,
    render_by_provider_text,
    render_flat,
    render_flat_text,
    render_grouped_text,
)


@pytest.fixture()
def laptop_scores(laptop_taxonomy, white_warranty_demand, laptop_instances):
    return match_all(laptop_taxonomy, white_warranty_demand, list(laptop_instances))


# --- flat rendering ---------------------------------------------------------------


def test_flat_preserves_order_and_detail(laptop_scores):
    entries = render_flat(laptop_scores)
    assert [e["instance_id"] for e in entries] == [
        "Laptop#1",
        "Laptop#2",
        "Laptop#3",
        "Laptop#4",
    ]
    assert entries[0]["detail"]["model"] == ["Sony Vaio"]
    assert entries[0]["detail"]["hasSerialNumber"] == ["65TG7890"]


def test_flat_empty():
    assert render_flat([]) == []


def test_flat_singleton_rank_zero(laptop_taxonomy, white_warranty_demand, laptop_instances):
    scores = match_all(laptop_taxonomy, white_warranty_demand, [laptop_instances[0]])
    entries = render_flat(scores)
    assert len(entries) == 1
    assert entries[0]["rank"] == 0.0


def test_flat_text_mentions_every_instance(laptop_scores):
    text = render_flat_text(laptop_scores)
    for i in range(1, 5):
        assert f"Laptop#{i}" in text


# --- grouping ----------------------------------------------------------------------


def test_laptop_grouping_desc(laptop_scores):
    grouped = group_by_additional(laptop_scores, order_mode="desc")
    assert len(grouped.groups) == 2
    first, second = grouped.groups
    assert first.signature == ("cost", "hasSerialNumber", "model", "operatingSystem")
    assert [m.instance_id for m in first.members] == ["Laptop#1", "Laptop#2"]
    assert second.signature == ("cost", "model", "operatingSystem")
    assert [m.instance_id for m in second.members] == ["Laptop#3", "Laptop#4"]


def test_laptop_grouping_asc_reverses_cardinality(laptop_scores):
    grouped = group_by_additional(laptop_scores, order_mode="asc")
    sizes = [len(g.signature) for g in grouped.groups]
    assert sizes == sorted(sizes)


def test_identical_signatures_make_one_group(laptop_taxonomy, white_warranty_demand, laptop_instances):
    twins = [laptop_instances[2], laptop_instances[3]]
    scores = match_all(laptop_taxonomy, white_warranty_demand, twins)
    grouped = group_by_additional(scores)
    assert len(grouped.groups) == 1
    assert len(grouped.groups[0].members) == 2


def test_bad_order_mode_rejected():
    with pytest.raises(ValueError):
        GroupedResults(groups=(), order_mode="sideways")


@pytest.mark.parametrize("seed", range(40))
def test_grouping_is_a_partition(seed):
    taxonomy, demand, supplies = random_config(seed + 500)
    scores = match_all(taxonomy, demand, supplies)
    grouped = group_by_additional(scores, order_mode=random.Random(seed).choice(["asc", "desc"]))
    members = [m for g in grouped.groups for m in g.members]
    assert len(members) == len(scores)
    assert Counter(m.instance_id for m in members) == Counter(s.instance_id for s in scores)
    for g in grouped.groups:
        assert len(g.members) > 0
        for m in g.members:
            assert m.additional_properties == g.signature
    signatures = [g.signature for g in grouped.groups]
    assert len(signatures) == len(set(signatures))


def test_grouped_json_shape(laptop_scores):
    payload = grouped_to_dict(group_by_additional(laptop_scores, order_mode="desc"))
    assert payload["order_mode"] == "desc"
    assert [g["size"] for g in payload["groups"]] == [2, 2]
    assert payload["groups"][0]["signature"] == [
        "cost",
        "hasSerialNumber",
        "model",
        "operatingSystem",
    ]


def test_grouped_text_names_signatures(laptop_scores):
    text = render_grouped_text(group_by_additional(laptop_scores, order_mode="desc"))
    assert "cost, hasSerialNumber, model, operatingSystem" in text
    assert "Laptop#3" in text


# --- provenance ----------------------------------------------------------------------


def test_tag_requires_both_fields():
    with pytest.raises(ValueError):
        ProvenanceTag(provider_id="", ontology_uri="http://x")


def test_annotate_applies_tag(laptop_scores):
    tag = ProvenanceTag("Provider#1", "http://shopping.example.org/computer.onto.json")
    tagged = annotate_provenance(laptop_scores, tag)
    assert all(s.provenance == tag for s in tagged)
    assert [s.instance_id for s in tagged] == [s.instance_id for s in laptop_scores]


def test_retag_replaces(laptop_scores):
    first = ProvenanceTag("Provider#1", "http://a")
    second = ProvenanceTag("Provider#2", "http://b")
    tagged = annotate_provenance(annotate_provenance(laptop_scores, first), second)
    assert all(s.provenance == second for s in tagged)


def test_annotate_empty():
    assert annotate_provenance([], ProvenanceTag("p", "u")) == []


def test_provider_sections(laptop_scores):
    one = annotate_provenance(laptop_scores[:1], ProvenanceTag("Provider#1", "http://a"))
    rest = annotate_provenance(laptop_scores[1:], ProvenanceTag("Provider#2", "http://b"))
    text = render_by_provider_text(one + rest)
    assert text.index("provider Provider#1:") < text.index("provider Provider#2:")
    assert text.count("Laptop#") == 4


# --- merge ------------------------------------------------------------------------------


def _provider_results(taxonomy, demand, supplies, provider_id, fingerprint="fp"):
    cache = ComparisonCache(taxonomy)
    raws = tuple(match_one(taxonomy, demand, s, cache) for s in supplies)
    tag = ProvenanceTag(provider_id, demand.ontology_uri or "mem://x")
    return ProviderResults(tag=tag, tbox_fingerprint=fingerprint, raws=raws)


def _strip(scores):
    return [
        (
            s.instance_id,
            s.n_par,
            s.n_pot,
            s.n_add,
            s.additional_properties,
            s.rank_par,
            s.rank_pot,
            s.rank_add,
            s.rank,
        )
        for s in scores
    ]


def test_singleton_merge_equals_local(laptop_taxonomy, white_warranty_demand, laptop_instances):
    local = match_all(laptop_taxonomy, white_warranty_demand, list(laptop_instances))
    merged = merge_multi_provider(
        [_provider_results(laptop_taxonomy, white_warranty_demand, laptop_instances, "P1")]
    )
    assert _strip(merged) == _strip(local)
    assert all(s.provenance.provider_id == "P1" for s in merged)


def test_split_merge_equals_centralized(laptop_taxonomy, white_warranty_demand, laptop_instances):
    central = match_all(laptop_taxonomy, white_warranty_demand, list(laptop_instances))
    merged = merge_multi_provider(
        [
            _provider_results(laptop_taxonomy, white_warranty_demand, laptop_instances[:2], "P1"),
            _provider_results(laptop_taxonomy, white_warranty_demand, laptop_instances[2:], "P2"),
        ]
    )
    assert _strip(merged) == _strip(central)


def test_fingerprint_mismatch_names_provider(laptop_taxonomy, white_warranty_demand, laptop_instances):
    with pytest.raises(MergeError, match="P2"):
        merge_multi_provider(
            [
                _provider_results(
                    laptop_taxonomy, white_warranty_demand, laptop_instances[:2], "P1", "fp-a"
                ),
                _provider_results(
                    laptop_taxonomy, white_warranty_demand, laptop_instances[2:], "P2", "fp-b"
                ),
            ]
        )


def test_duplicate_instance_under_one_provider_rejected(
    laptop_taxonomy, white_warranty_demand, laptop_instances
):
    doubled = [laptop_instances[0], laptop_instances[0]]
    with pytest.raises(MergeError, match="duplicate"):
        merge_multi_provider(
            [_provider_results(laptop_taxonomy, white_warranty_demand, doubled, "P1")]
        )


def test_empty_merge_rejected():
    with pytest.raises(MergeError):
        merge_multi_provider([])


@pytest.mark.parametrize("seed", range(50))
def test_random_split_merge_equals_centralized(seed):
    taxonomy, demand, supplies = random_config(seed + 4000)
    rng = random.Random(seed)
    k = rng.randint(2, 4)
    shuffled = supplies[:]
    rng.shuffle(shuffled)
    parts: list[list] = [[] for _ in range(k)]
    for i, s in enumerate(shuffled):
        parts[i % k].append(s)
    central = match_all(taxonomy, demand, supplies)
    merged = merge_multi_provider(
        [
            _provider_results(taxonomy, demand, part, f"P{i}")
            for i, part in enumerate(parts)
        ]
    )
    assert _strip(merged) == _strip(central)
    for s in merged:
        assert s.provenance is not None
