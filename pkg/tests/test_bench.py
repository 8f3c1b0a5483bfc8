"""Synthetic workload generator and timing harness."""

import csv
import io

import pytest

from ontomatch.bench import (
    BenchError,
    BenchRow,
    BenchSpec,
    OntologyProfile,
    format_rows,
    generate_demand_series,
    generate_ontology,
    rows_to_csv,
    run_centralized,
    run_distributed,
)
from ontomatch.matchmaker import match_all, validate_demand
from ontomatch.ontology import build_taxonomy, check_schema, validate_instance

SMALL = OntologyProfile(classes=6, object_properties=2, datatype_properties=8)


class TestSpecValidation:
    def test_rejects_single_repetition(self):
        with pytest.raises(BenchError, match="repetitions"):
            BenchSpec(profile=SMALL, instance_count=10, query_properties=(1,), repetitions=1)

    def test_rejects_query_wider_than_profile(self):
        with pytest.raises(BenchError, match="more datatype properties"):
            BenchSpec(profile=SMALL, instance_count=10, query_properties=(9,))

    def test_rejects_bad_mode(self):
        with pytest.raises(BenchError, match="mode"):
            BenchSpec(profile=SMALL, instance_count=10, query_properties=(1,), mode="turbo")

    def test_rejects_empty_series_and_zero_counts(self):
        with pytest.raises(BenchError):
            BenchSpec(profile=SMALL, instance_count=10, query_properties=())
        with pytest.raises(BenchError):
            BenchSpec(profile=SMALL, instance_count=0, query_properties=(1,))
        with pytest.raises(BenchError):
            OntologyProfile(classes=0, object_properties=1, datatype_properties=1)


class TestGenerator:
    @pytest.mark.parametrize("seed", range(12))
    def test_profile_counts_are_exact(self, seed):
        profile = OntologyProfile(classes=22, object_properties=10, datatype_properties=67)
        schema, instances = generate_ontology(profile, instance_count=40, seed=seed)
        assert len(schema.classes) == 22
        assert sum(1 for p in schema.properties if p.kind == "object") == 10
        assert sum(1 for p in schema.properties if p.kind == "datatype") == 67
        assert len(instances) == 40

    @pytest.mark.parametrize("seed", range(12))
    def test_generated_schema_is_well_formed_and_consistent(self, seed):
        schema, instances = generate_ontology(SMALL, instance_count=30, seed=seed)
        check_schema(schema)
        build_taxonomy(schema)  # must not raise
        for inst in instances:
            assert validate_instance(schema, inst) == []

    def test_generation_is_deterministic_per_seed(self):
        a = generate_ontology(SMALL, instance_count=25, seed=7)
        b = generate_ontology(SMALL, instance_count=25, seed=7)
        c = generate_ontology(SMALL, instance_count=25, seed=8)
        assert a == b
        assert a != c

    def test_queried_properties_are_multi_valued(self):
        schema, instances = generate_ontology(SMALL, instance_count=50, seed=3)
        demands = generate_demand_series(schema, (1, 2, 3, 4), seed=3)
        queried = demands[-1].constraint_names()
        by_name = schema.property_map()
        assert all(not by_name[n].single_valued for n in queried)
        widths = [
            len(inst.values[n])
            for inst in instances
            for n in queried
            if n in inst.values
        ]
        assert widths and set(widths) == {6}


class TestDemandSeries:
    def test_series_is_nested_around_one_concept(self):
        schema, _ = generate_ontology(SMALL, instance_count=10, seed=11)
        demands = generate_demand_series(schema, (1, 2, 3, 4), seed=11)
        assert [len(d.constraints) for d in demands] == [1, 2, 3, 4]
        assert len({d.concept for d in demands}) == 1
        for smaller, larger in zip(demands, demands[1:]):
            assert larger.constraints[: len(smaller.constraints)] == smaller.constraints

    @pytest.mark.parametrize("seed", range(8))
    def test_series_passes_demand_validation(self, seed):
        schema, _ = generate_ontology(SMALL, instance_count=10, seed=seed)
        for demand in generate_demand_series(schema, (1, 4), seed=seed):
            assert validate_demand(schema, demand) == []

    def test_constraints_hit_asserted_values(self):
        # The series is only a useful workload if evaluation actually runs,
        # i.e. the constrained properties are present on most supplies.
        schema, instances = generate_ontology(SMALL, instance_count=200, seed=5)
        demand = generate_demand_series(schema, (4,), seed=5)[0]
        for name in demand.constraint_names():
            present = sum(1 for inst in instances if name in inst.values)
            assert present > 150

    @pytest.mark.parametrize("seed", range(6))
    def test_anchors_force_full_scans(self, seed):
        # Deterministic work per constraint: no asserted value may satisfy,
        # otherwise evaluation short-circuits and the per-property cost
        # disappears into timing noise.
        from ontomatch.matchmaker import satisfies

        schema, instances = generate_ontology(SMALL, instance_count=100, seed=seed)
        demand = generate_demand_series(schema, (4,), seed=seed)[0]
        by_name = {c.property: c for c in demand.constraints}
        for inst in instances:
            for name, constraint in by_name.items():
                for value in inst.values.get(name, ()):
                    assert not satisfies(constraint, value)


class TestCentralized:
    def test_rows_shape_and_labels(self):
        schema, instances = generate_ontology(SMALL, instance_count=60, seed=2)
        spec = BenchSpec(
            profile=SMALL, instance_count=60, query_properties=(1, 3), repetitions=2, seed=2
        )
        rows = run_centralized(schema, instances, spec)
        assert [r.query for r in rows] == ["Q-1", "Q-3"]
        assert [r.properties for r in rows] == [1, 3]
        assert all(r.peers == 1 and r.resources == 60 for r in rows)
        assert all(r.matchmaking_ms > 0 and r.latency_ms == 0.0 for r in rows)
        assert all(r.total_ms == r.matchmaking_ms for r in rows)

    def test_timed_work_matches_untimed_results(self):
        # The harness must run the same scoring path callers use.
        schema, instances = generate_ontology(SMALL, instance_count=40, seed=9)
        taxonomy = build_taxonomy(schema)
        demand = generate_demand_series(schema, (2,), seed=9)[0]
        direct = match_all(taxonomy, demand, instances)
        again = match_all(taxonomy, demand, instances)
        assert direct == again


class TestDistributed:
    def test_rows_cover_series_and_peers(self):
        schema, instances = generate_ontology(SMALL, instance_count=30, seed=4)
        spec = BenchSpec(
            profile=SMALL,
            instance_count=30,
            query_properties=(1, 2),
            peers=2,
            repetitions=2,
            seed=4,
        )
        rows = run_distributed(schema, instances, spec)
        assert [r.query for r in rows] == ["Q-1", "Q-2"]
        assert all(r.peers == 2 and r.resources == 30 for r in rows)
        assert all(r.total_ms > 0 for r in rows)

    def test_delay_count_must_match_peers(self):
        schema, instances = generate_ontology(SMALL, instance_count=10, seed=4)
        spec = BenchSpec(
            profile=SMALL, instance_count=10, query_properties=(1,), peers=2, repetitions=2
        )
        with pytest.raises(BenchError, match="one injected delay per peer"):
            run_distributed(schema, instances, spec, inject_delays_ms=(50,))

    def test_injected_delays_land_in_latency_not_matchmaking(self):
        schema, instances = generate_ontology(SMALL, instance_count=20, seed=6)
        spec = BenchSpec(
            profile=SMALL,
            instance_count=20,
            query_properties=(1,),
            peers=2,
            mode="sync",
            repetitions=2,
            seed=6,
        )
        rows = run_distributed(schema, instances, spec, inject_delays_ms=(60, 90))
        row = rows[0]
        assert row.latency_ms >= 140.0  # both delays summed, minus scheduling slack
        assert row.matchmaking_ms < 50.0
        assert row.total_ms >= 150.0


class TestSerialization:
    ROWS = [
        BenchRow("Q-1", 1, 3, 1000, 12.3456, 45.6789, 60.0),
        BenchRow("Q-4", 4, 3, 1000, 20.0, 41.0, 63.5),
    ]

    def test_csv_shape(self):
        text = rows_to_csv(self.ROWS)
        parsed = list(csv.DictReader(io.StringIO(text)))
        assert [r["query"] for r in parsed] == ["Q-1", "Q-4"]
        assert parsed[0]["matchmaking_ms"] == "12.346"
        assert parsed[1]["total_ms"] == "63.500"
        assert set(parsed[0]) == {
            "query",
            "properties",
            "peers",
            "resources",
            "matchmaking_ms",
            "latency_ms",
            "total_ms",
        }

    def test_table_lists_every_row(self):
        text = format_rows(self.ROWS)
        assert "Q-1" in text and "Q-4" in text
        assert len(text.splitlines()) == 4
