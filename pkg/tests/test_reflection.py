import json

import pytest

from cinegrade.backends import ScriptedFixture
from cinegrade.cdl import FIELD_PATHS, CdlParams
from cinegrade.colorspace import get_curve, get_gamut
from cinegrade.errors import ReflectionParseError
from cinegrade.perception import degraded_scene_state
from cinegrade.reflection import (
    APPROVAL,
    DEFAULT_MAGNITUDE_CAPS,
    FeedbackUpdate,
    apply_update,
    parse_feedback,
)

from conftest import reflector_update, synthetic_log_frame, write_fixture

SCENE = degraded_scene_state(
    synthetic_log_frame(), get_curve("SLog3"), get_gamut("SGamut3Cine")
)


def reflector_backend(tmp_path, replies):
    fixture = ScriptedFixture.load(
        write_fixture(tmp_path / "f.json", reflector=replies)
    )
    return fixture, fixture.backend("reflector")


class TestParseFeedback:
    def test_targeted_update(self, tmp_path):
        _, llm = reflector_backend(
            tmp_path, [reflector_update({"lift.b": 0.01}, "slight")]
        )
        update = parse_feedback(
            "slightly cooler shadows", CdlParams.identity(), SCENE, llm
        )
        assert update is not APPROVAL
        assert update.targeted == {"lift.b": 0.01}
        assert update.magnitude_class == "slight"
        assert update.locked == frozenset(FIELD_PATHS) - {"lift.b"}

    def test_approval(self, tmp_path):
        _, llm = reflector_backend(tmp_path, [{"action": "approve"}])
        assert parse_feedback("perfect", CdlParams.identity(), SCENE, llm) is APPROVAL

    def test_slight_cap_enforced(self, tmp_path):
        # 0.03 exceeds the slight cap (0.02): complaint, then a legal retry
        _, llm = reflector_backend(
            tmp_path,
            [
                reflector_update({"lift.b": 0.03}, "slight"),
                reflector_update({"lift.b": 0.01}, "slight"),
            ],
        )
        update = parse_feedback("slightly cooler", CdlParams.identity(), SCENE, llm)
        assert update.targeted == {"lift.b": 0.01}

    def test_cap_complaint_threaded(self, tmp_path):
        fixture, llm = reflector_backend(
            tmp_path,
            [
                reflector_update({"gain.r": 0.08}, "moderate"),
                reflector_update({"gain.r": 1.04}, "moderate"),
            ],
        )
        parse_feedback("warmer", CdlParams.identity(), SCENE, llm)
        assert "above the moderate cap" in fixture.request_log[1].prompt

    def test_heavy_cap(self, tmp_path):
        _, llm = reflector_backend(
            tmp_path, [reflector_update({"gain.r": 1.09}, "heavy")]
        )
        update = parse_feedback("much warmer", CdlParams.identity(), SCENE, llm)
        assert update.targeted["gain.r"] == pytest.approx(1.09)

    def test_caps_measured_from_current_params(self, tmp_path):
        current = CdlParams(gain=(1.30, 1.0, 1.0))
        _, llm = reflector_backend(
            tmp_path, [reflector_update({"gain.r": 1.31}, "slight")]
        )
        update = parse_feedback("a touch warmer", current, SCENE, llm)
        assert update.targeted["gain.r"] == pytest.approx(1.31)

    def test_unknown_path_rejected_then_retry(self, tmp_path):
        _, llm = reflector_backend(
            tmp_path,
            [
                reflector_update({"shadow_tint": 0.01}, "slight"),
                reflector_update({"lift.r": 0.01}, "slight"),
            ],
        )
        update = parse_feedback("tint the shadows", CdlParams.identity(), SCENE, llm)
        assert update.targeted == {"lift.r": 0.01}

    def test_out_of_range_target_rejected(self, tmp_path):
        current = CdlParams(lift=(0.49, 0.0, 0.0))
        _, llm = reflector_backend(
            tmp_path,
            [
                reflector_update({"lift.r": 0.51}, "slight"),
                reflector_update({"lift.r": 0.50}, "slight"),
            ],
        )
        update = parse_feedback("brighter blacks", current, SCENE, llm)
        assert update.targeted["lift.r"] == pytest.approx(0.50)

    def test_three_invalid_replies_raise(self, tmp_path):
        _, llm = reflector_backend(tmp_path, ["junk", "junk", "junk"])
        with pytest.raises(ReflectionParseError):
            parse_feedback("cooler", CdlParams.identity(), SCENE, llm)

    def test_backend_failure_raises_immediately(self, tmp_path):
        fixture, llm = reflector_backend(tmp_path, [])  # exhausted at once
        with pytest.raises(ReflectionParseError):
            parse_feedback("cooler", CdlParams.identity(), SCENE, llm)
        assert len(fixture.request_log) == 1  # no pointless retries

    def test_feedback_text_in_prompt(self, tmp_path):
        fixture, llm = reflector_backend(tmp_path, [{"action": "approve"}])
        parse_feedback("less green in the mids", CdlParams.identity(), SCENE, llm)
        assert "less green in the mids" in fixture.request_log[0].prompt


class TestApplyUpdate:
    def make_update(self, targeted, magnitude="slight"):
        return FeedbackUpdate(
            targeted=targeted,
            locked=frozenset(p for p in FIELD_PATHS if p not in targeted),
            magnitude_class=magnitude,
            rationale="",
        )

    def test_locked_fields_bit_identical(self):
        current = CdlParams(
            lift=(0.1, -0.037, 0.0123456789),
            gamma=(1.0001, 0.99999, 1.0),
            gain=(1.2, 1.0, 0.3),
            saturation=1.37,
            contrast=0.81,
            pivot=0.435,
        )
        update = self.make_update({"lift.b": 0.0144456789})
        after = apply_update(current, update)
        # byte-diff of canonical serializations touches only the target
        before_doc = json.loads(current.canonical_json())
        after_doc = json.loads(after.canonical_json())
        changed = {k for k in before_doc if before_doc[k] != after_doc[k]}
        assert changed == {"lift.b"}
        for path in update.locked:
            assert repr(after.get_path(path)) == repr(current.get_path(path))

    def test_disjoint_updates_commute(self):
        current = CdlParams.identity()
        u1 = self.make_update({"lift.b": 0.01})
        u2 = self.make_update({"gain.r": 1.02})
        ab = apply_update(apply_update(current, u1), u2)
        ba = apply_update(apply_update(current, u2), u1)
        assert ab.canonical_json() == ba.canonical_json()

    def test_overlap_is_programming_error(self):
        bad = FeedbackUpdate(
            targeted={"lift.b": 0.01},
            locked=frozenset(FIELD_PATHS),
            magnitude_class="slight",
            rationale="",
        )
        with pytest.raises(AssertionError):
            apply_update(CdlParams.identity(), bad)


def test_default_caps_are_the_documented_ladder():
    assert DEFAULT_MAGNITUDE_CAPS == {"slight": 0.02, "moderate": 0.05, "heavy": 0.10}
