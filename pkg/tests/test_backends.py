import json

import pytest

from cinegrade.backends import (
    ImageAttachment,
    ScriptedFixture,
    extract_json,
)
from cinegrade.errors import ConfigurationError, FixtureExhaustedError

from conftest import analyst_reply, write_fixture


class TestScriptedFixture:
    def test_replay_order(self, tmp_path):
        path = write_fixture(
            tmp_path / "f.json", critic=[{"score": 4}, {"score": 2}]
        )
        fixture = ScriptedFixture.load(path)
        critic = fixture.backend("critic")
        assert json.loads(critic.complete("rate this"))["score"] == 4
        assert json.loads(critic.complete("rate this"))["score"] == 2

    def test_exhaustion_raises(self, tmp_path):
        fixture = ScriptedFixture.load(
            write_fixture(tmp_path / "f.json", critic=[{"score": 4}])
        )
        critic = fixture.backend("critic")
        critic.complete("x")
        with pytest.raises(FixtureExhaustedError) as exc:
            critic.complete("x")
        assert "critic" in str(exc.value)

    def test_string_replies_passed_verbatim(self, tmp_path):
        path = tmp_path / "f.json"
        path.write_text(json.dumps({"analyst": ["not json at all"]}))
        fixture = ScriptedFixture.load(path)
        assert fixture.backend("analyst").complete("p") == "not json at all"

    def test_shared_request_log_records_colorimetry(self, tmp_path):
        fixture = ScriptedFixture.load(
            write_fixture(
                tmp_path / "f.json", analyst=[analyst_reply()], critic=[{"score": 3}]
            )
        )
        image = ImageAttachment(b"\x89PNG", "rec709-display", 8, 8)
        fixture.backend("analyst").complete("describe", image=image)
        fixture.backend("critic").complete("rate")
        assert [(r.role, r.image_colorimetry) for r in fixture.request_log] == [
            ("analyst", "rec709-display"),
            ("critic", None),
        ]

    def test_unknown_role_rejected(self, tmp_path):
        fixture = ScriptedFixture.load(write_fixture(tmp_path / "f.json"))
        with pytest.raises(ConfigurationError):
            fixture.backend("composer")

    def test_backend_identity_stable(self, tmp_path):
        fixture = ScriptedFixture.load(
            write_fixture(tmp_path / "f.json", critic=[{"score": 1}, {"score": 2}])
        )
        a = fixture.backend("critic")
        b = fixture.backend("critic")
        assert a is b  # cursor is shared, not reset


class TestExtractJson:
    def test_plain_object(self):
        assert extract_json('{"a": 1}') == {"a": 1}

    def test_code_fence(self):
        assert extract_json('```json\n{"a": 1}\n```') == {"a": 1}

    def test_prose_before_and_after(self):
        reply = 'Sure! Here is the analysis:\n{"a": [1, 2]}\nHope that helps.'
        assert extract_json(reply) == {"a": [1, 2]}

    def test_array_payload(self):
        assert extract_json("[1, 2, 3]") == [1, 2, 3]

    def test_no_json_raises(self):
        with pytest.raises(ValueError):
            extract_json("I could not analyze the image.")

    def test_malformed_json_raises(self):
        with pytest.raises(ValueError):
            extract_json('{"a": unquoted}')
