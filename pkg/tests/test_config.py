from __future__ import annotations

import copy
from datetime import time, timedelta

import pytest
import yaml
from hypothesis import given, settings
from hypothesis import strategies as st

from arena.config import (
    ChallengeConfigError,
    ChallengeSpec,
    format_duration,
    parse_challenge,
    parse_duration,
    validate_registry,
)

VALID = {
    "id": "load-da",
    "title": "Day-ahead load",
    "target_variable": "load",
    "areas": ["DE", "AT"],
    "reference_timezone": "Europe/Berlin",
    "cadence": "DAILY",
    "deadline_local_time": "12:00",
    "target_offset_days": 1,
    "resolution": "PT1H",
    "payload_kinds": ["POINT", "QUANTILE"],
    "quantile_levels": [0.1, 0.5, 0.9],
    "value_range": [0, 200000],
    "metrics": [
        {"name": "MAE"},
        {"name": "RMSE"},
        {"name": "CRPS_QUANTILE"},
        {"name": "WIS"},
        {"name": "PINBALL", "params": {"level": 0.9}},
    ],
    "windows": [1, 7, 30, 90, 365],
    "ground_truth_source": {
        "kind": "FILE_FIXTURE",
        "location": "fixtures/load.csv",
        "publication_lag": "PT1H",
    },
    "freeze_after": "P14D",
}


def as_yaml(doc: dict) -> str:
    return yaml.safe_dump(doc, sort_keys=False)


def diagnostics_of(doc: dict):
    with pytest.raises(ChallengeConfigError) as err:
        parse_challenge(as_yaml(doc))
    return err.value.diagnostics


def check_invariants(spec: ChallengeSpec) -> None:
    assert spec.areas and len(set(spec.areas)) == len(spec.areas)
    assert all(0.0 < lv < 1.0 for lv in spec.quantile_levels)
    assert all(b > a for a, b in zip(spec.quantile_levels, spec.quantile_levels[1:]))
    assert spec.value_range[0] < spec.value_range[1]
    assert timedelta(hours=24).total_seconds() % spec.resolution.total_seconds() == 0
    assert spec.metrics and spec.windows
    assert all(b > a for a, b in zip(spec.windows, spec.windows[1:]))
    assert all(w >= 1 for w in spec.windows)
    assert spec.target_offset_days >= 1


class TestParseChallenge:
    def test_full_valid_config(self):
        spec = parse_challenge(as_yaml(VALID))
        assert spec.id == "load-da"
        assert spec.reference_timezone == "Europe/Berlin"
        assert spec.deadline_local_time == time(12, 0)
        assert spec.resolution == timedelta(hours=1)
        assert spec.windows == (1, 7, 30, 90, 365)
        assert len(spec.windows) == 5
        assert spec.quantile_levels == (0.1, 0.5, 0.9)
        assert spec.freeze_after == timedelta(days=14)
        check_invariants(spec)

    def test_defaults(self):
        doc = copy.deepcopy(VALID)
        del doc["cadence"], doc["target_offset_days"], doc["freeze_after"]
        spec = parse_challenge(as_yaml(doc))
        assert spec.cadence == "DAILY"
        assert spec.target_offset_days == 1
        assert spec.freeze_after == timedelta(days=14)

    def test_malformed_yaml_is_syntax(self):
        with pytest.raises(ChallengeConfigError) as err:
            parse_challenge("id: [unterminated")
        assert err.value.codes() == {"SYNTAX"}

    def test_non_mapping_is_syntax(self):
        with pytest.raises(ChallengeConfigError) as err:
            parse_challenge("- a\n- b\n")
        assert err.value.codes() == {"SYNTAX"}

    def test_duplicate_quantile_levels(self):
        doc = copy.deepcopy(VALID)
        doc["quantile_levels"] = [0.5, 0.5]
        diags = diagnostics_of(doc)
        assert any(d.code == "BAD_VALUE" and d.path == "quantile_levels" for d in diags)

    def test_wis_needs_quantiles(self):
        doc = copy.deepcopy(VALID)
        doc["payload_kinds"] = ["POINT"]
        del doc["quantile_levels"]
        doc["metrics"] = [{"name": "MAE"}, {"name": "WIS"}]
        diags = diagnostics_of(doc)
        assert any(d.code == "INCOMPATIBLE_METRIC" for d in diags)

    def test_crps_ensemble_needs_ensemble(self):
        doc = copy.deepcopy(VALID)
        doc["metrics"] = [{"name": "CRPS_ENSEMBLE"}]
        diags = diagnostics_of(doc)
        assert any(d.code == "INCOMPATIBLE_METRIC" for d in diags)

    def test_pinball_level_must_be_declared(self):
        doc = copy.deepcopy(VALID)
        doc["metrics"] = [{"name": "PINBALL", "params": {"level": 0.25}}]
        diags = diagnostics_of(doc)
        assert any(d.code == "INCOMPATIBLE_METRIC" for d in diags)

    def test_missing_fields_each_reported(self):
        doc = copy.deepcopy(VALID)
        del doc["id"], doc["areas"], doc["metrics"]
        diags = diagnostics_of(doc)
        missing = {d.path for d in diags if d.code == "MISSING_FIELD"}
        assert {"id", "areas", "metrics"} <= missing

    def test_asymmetric_wis_grid_rejected(self):
        doc = copy.deepcopy(VALID)
        doc["quantile_levels"] = [0.2, 0.5, 0.9]
        diags = diagnostics_of(doc)
        assert any(d.code == "INCOMPATIBLE_METRIC" and "WIS" in d.message for d in diags)

    def test_http_source_needs_placeholders(self):
        doc = copy.deepcopy(VALID)
        doc["ground_truth_source"] = {"kind": "HTTP", "location": "https://x/api?area={area}"}
        diags = diagnostics_of(doc)
        paths = [d.path for d in diags]
        assert paths.count("ground_truth_source.location") == 2  # {from} and {to}

    INJECTIONS = {
        "areas": ["DE", "DE"],
        "quantile_levels": [0.9, 0.1, 0.5],
        "value_range": [10, -10],
        "windows": [7, 1],
        "deadline_local_time": "25:61",
        "resolution": "PT7H",
        "target_offset_days": 0,
    }

    @pytest.mark.parametrize("k", [1, 2, 3, len(INJECTIONS)])
    def test_diagnostics_are_total(self, k):
        # k independently injected violations yield at least k diagnostics
        doc = copy.deepcopy(VALID)
        for name in list(self.INJECTIONS)[:k]:
            doc[name] = self.INJECTIONS[name]
        diags = diagnostics_of(doc)
        assert len(diags) >= k

    @settings(max_examples=150, deadline=None)
    @given(st.data())
    def test_fuzzed_configs_never_yield_invalid_specs(self, data):
        doc = copy.deepcopy(VALID)
        mutations = data.draw(
            st.lists(
                st.sampled_from(
                    [
                        ("windows", [3, 3]),
                        ("windows", []),
                        ("areas", []),
                        ("areas", ["DE", "DE"]),
                        ("quantile_levels", [0.0, 0.5]),
                        ("quantile_levels", [0.5, 0.1]),
                        ("value_range", [5, 5]),
                        ("resolution", "PT5H"),
                        ("deadline_local_time", "noon"),
                        ("payload_kinds", ["POINTY"]),
                        ("metrics", []),
                        ("metrics", [{"name": "XRMSE"}]),
                        ("target_offset_days", -3),
                        ("reference_timezone", "Mars/Olympus"),
                    ]
                ),
                max_size=4,
            )
        )
        for name, value in mutations:
            doc[name] = value
        try:
            spec = parse_challenge(as_yaml(doc))
        except ChallengeConfigError:
            return
        check_invariants(spec)


class TestRoundTrip:
    def test_yaml_round_trip(self):
        spec = parse_challenge(as_yaml(VALID))
        again = parse_challenge(spec.to_yaml())
        assert again == spec

    def test_ensemble_config_round_trip(self):
        doc = copy.deepcopy(VALID)
        doc["payload_kinds"] = ["ENSEMBLE"]
        del doc["quantile_levels"]
        doc["max_ensemble_members"] = 50
        doc["metrics"] = [{"name": "CRPS_ENSEMBLE"}, {"name": "MAE"}]
        spec = parse_challenge(as_yaml(doc))
        assert parse_challenge(spec.to_yaml()) == spec

    @settings(max_examples=50, deadline=None)
    @given(
        hours=st.integers(0, 23),
        minutes=st.integers(0, 59),
        days=st.integers(0, 30),
    )
    def test_duration_round_trip(self, hours, minutes, days):
        value = timedelta(days=days, hours=hours, minutes=minutes)
        assert parse_duration(format_duration(value)) == value


class TestRegistry:
    def _spec(self, challenge_id: str) -> ChallengeSpec:
        doc = copy.deepcopy(VALID)
        doc["id"] = challenge_id
        return parse_challenge(as_yaml(doc))

    def test_unique_ids_ok(self):
        keys = validate_registry([self._spec("load-da"), self._spec("price-da")])
        assert len(keys) == 2 * len(VALID["areas"])

    def test_duplicate_id(self):
        with pytest.raises(ChallengeConfigError) as err:
            validate_registry([self._spec("load-da"), self._spec("load-da")])
        assert err.value.codes() == {"DUPLICATE_ID"}

    def test_empty_registry(self):
        assert validate_registry([]) == set()
