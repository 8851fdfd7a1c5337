import json

import pytest

from cinegrade.backends import ScriptedFixture
from cinegrade.cdl import CdlParams, RolloffConfig
from cinegrade.colorspace import get_curve, get_gamut
from cinegrade.errors import SearchError
from cinegrade.knowledge import Heuristic
from cinegrade.perception import degraded_scene_state
from cinegrade.reasoning import (
    PreviewRenderer,
    SearchConfig,
    beam_search,
    format_heuristics,
    seed_root_params,
    tree_to_dict,
)

from conftest import (
    critic_reply,
    default_candidates,
    expander_reply,
    identity_params_dict,
    standard_grade_fixture,
    synthetic_log_frame,
    write_fixture,
)

CURVE = get_curve("SLog3")
GAMUT = get_gamut("SGamut3Cine")
CFG = SearchConfig(preview_long_edge=32)
ROLL = RolloffConfig()


def run_search(fixture_path, cfg=CFG, directive=None, heuristics=()):
    fixture = ScriptedFixture.load(fixture_path)
    scene = degraded_scene_state(synthetic_log_frame(), CURVE, GAMUT)
    best, nodes = beam_search(
        anchor=synthetic_log_frame(),
        curve=CURVE,
        gamut=GAMUT,
        scene=scene,
        heuristics=list(heuristics),
        directive=directive,
        expander=fixture.backend("expander"),
        critic=fixture.backend("critic"),
        cfg=cfg,
        rolloff=ROLL,
    )
    return best, nodes, fixture


class TestBeamSearch:
    def test_node_budget_and_structure(self, tmp_path):
        best, nodes, fixture = run_search(standard_grade_fixture(tmp_path))
        # root + b + b*beam at depth 2 = 1 + 3 + 6
        assert len(nodes) == 10
        evaluated = [n for n in nodes if n.score is not None]
        assert len(evaluated) == 9  # <= b + b*beam*(D-1) with b=3, beam=2, D=2
        assert [n.depth for n in nodes] == [0] + [1] * 3 + [2] * 6

    def test_global_argmax_at_depth_one(self, tmp_path):
        # depth-1 scores (4, 2, 5); all depth-2 children score 3:
        # best is the third depth-1 candidate, gain 1.30
        best, nodes, _ = run_search(standard_grade_fixture(tmp_path))
        assert best.gain[0] == pytest.approx(1.30)

    def test_global_argmax_at_depth_two(self, tmp_path):
        fixture = standard_grade_fixture(
            tmp_path, depth1_scores=(4, 2, 3), depth2_scores=(2, 5, 2, 3, 3, 3)
        )
        best, nodes, _ = run_search(fixture)
        # beam after depth 1 = [node1 (4), node3 (3)]; node1's children get
        # gains (1.31, 1.32, 1.33); the second of them scores 5
        assert best.gain[0] == pytest.approx(1.32)

    def test_beam_expands_in_score_order(self, tmp_path):
        _, nodes, _ = run_search(standard_grade_fixture(tmp_path))
        # depth-1 scores (4, 2, 5) -> beam is [id 3, id 1]; the fixture's
        # second expander reply (gains 1.31..) must attach to node 3
        children_of_3 = [n for n in nodes if n.parent_id == 3]
        children_of_1 = [n for n in nodes if n.parent_id == 1]
        children_of_2 = [n for n in nodes if n.parent_id == 2]
        assert [n.params.gain[0] for n in children_of_3] == pytest.approx([1.31, 1.32, 1.33])
        assert [n.params.gain[0] for n in children_of_1] == pytest.approx([1.11, 1.12, 1.13])
        assert children_of_2 == []  # pruned

    def test_tie_break_prefers_lower_id(self, tmp_path):
        fixture = standard_grade_fixture(
            tmp_path, depth1_scores=(5, 5, 2), depth2_scores=(3,) * 6
        )
        best, nodes, _ = run_search(fixture)
        assert best.gain[0] == pytest.approx(1.10)  # node 1, not node 2

    def test_deterministic_across_runs(self, tmp_path):
        trees = []
        for run in range(2):
            (tmp_path / f"run{run}").mkdir(exist_ok=True)
            fixture = standard_grade_fixture(tmp_path / f"run{run}")
            best, nodes, _ = run_search(fixture)
            trees.append(json.dumps(tree_to_dict(nodes), sort_keys=True))
        assert trees[0] == trees[1]

    def test_expander_retry_on_invalid_reply(self, tmp_path):
        fixture_path = write_fixture(
            tmp_path / "f.json",
            expander=[
                "not json",
                default_candidates((1.10, 1.20, 1.30)),
                default_candidates((1.31, 1.32, 1.33)),
                default_candidates((1.11, 1.12, 1.13)),
            ],
            critic=[critic_reply(s) for s in (4, 2, 5, 3, 3, 3, 3, 3, 3)],
        )
        best, nodes, fixture = run_search(fixture_path)
        assert best.gain[0] == pytest.approx(1.30)
        expander_prompts = [r.prompt for r in fixture.request_log if r.role == "expander"]
        assert "previous reply was invalid" in expander_prompts[1]

    def test_out_of_range_candidate_reprompted(self, tmp_path):
        bad = expander_reply(
            identity_params_dict(gain=[9.0, 1.0, 1.0]),
            identity_params_dict(),
            identity_params_dict(),
        )
        fixture_path = write_fixture(
            tmp_path / "f.json",
            expander=[
                bad,
                default_candidates((1.10, 1.20, 1.30)),
                default_candidates((1.31, 1.32, 1.33)),
                default_candidates((1.11, 1.12, 1.13)),
            ],
            critic=[critic_reply(s) for s in (4, 2, 5, 3, 3, 3, 3, 3, 3)],
        )
        best, nodes, fixture = run_search(fixture_path)
        assert best.gain[0] == pytest.approx(1.30)
        prompts = [r.prompt for r in fixture.request_log if r.role == "expander"]
        assert "out of range" in prompts[1]

    def test_wrong_candidate_count_reprompted(self, tmp_path):
        fixture_path = write_fixture(
            tmp_path / "f.json",
            expander=[
                expander_reply(identity_params_dict()),  # only 1 of 3
                default_candidates((1.10, 1.20, 1.30)),
                default_candidates((1.31, 1.32, 1.33)),
                default_candidates((1.11, 1.12, 1.13)),
            ],
            critic=[critic_reply(s) for s in (4, 2, 5, 3, 3, 3, 3, 3, 3)],
        )
        best, _, _ = run_search(fixture_path)
        assert best.gain[0] == pytest.approx(1.30)

    def test_delta_form_applies_relative_to_parent(self, tmp_path):
        deltas = {
            "candidates": [
                {"delta": {"gain.r": 0.1}, "rationale": "warmer"},
                {"delta": {"lift.b": 0.02}, "rationale": "cooler shadows"},
                {"delta": {"saturation": -0.1}, "rationale": "restraint"},
            ]
        }
        fixture_path = write_fixture(
            tmp_path / "f.json",
            expander=[deltas] * 3,
            critic=[critic_reply(s) for s in (5, 2, 2, 3, 3, 3, 3, 3, 3)],
        )
        best, nodes, _ = run_search(fixture_path)
        assert best.gain[0] == pytest.approx(1.1)
        # depth-2 child of the winner stacks another +0.1
        grandchildren = [n for n in nodes if n.parent_id == 1]
        assert grandchildren[0].params.gain[0] == pytest.approx(1.2)

    def test_total_root_expansion_failure_raises(self, tmp_path):
        fixture_path = write_fixture(
            tmp_path / "f.json", expander=["junk", "junk", "junk"], critic=[]
        )
        with pytest.raises(SearchError):
            run_search(fixture_path)

    def test_critic_failure_scores_pessimistically(self, tmp_path):
        # only 2 critic replies for 9 evaluations: the rest exhaust the
        # fixture (a backend failure) and fall back to score 1.0
        fixture_path = write_fixture(
            tmp_path / "f.json",
            expander=[
                default_candidates((1.10, 1.20, 1.30)),
                default_candidates((1.31, 1.32, 1.33)),
                default_candidates((1.11, 1.12, 1.13)),
            ],
            critic=[critic_reply(4), critic_reply(2)],
        )
        best, nodes, _ = run_search(fixture_path)
        assert best.gain[0] == pytest.approx(1.10)  # the lone score-4 node
        failed = [n for n in nodes if n.score == 1.0]
        assert len(failed) == 7
        assert all("pessimistic" in n.critique for n in failed)

    def test_invalid_critic_reply_retried(self, tmp_path):
        fixture_path = write_fixture(
            tmp_path / "f.json",
            expander=[
                default_candidates((1.10, 1.20, 1.30)),
                default_candidates((1.31, 1.32, 1.33)),
                default_candidates((1.11, 1.12, 1.13)),
            ],
            critic=[critic_reply(99), critic_reply(4)]
            + [critic_reply(s) for s in (2, 5, 3, 3, 3, 3, 3, 3)],
        )
        best, nodes, fixture = run_search(fixture_path)
        assert nodes[1].score == 4.0
        critic_prompts = [r.prompt for r in fixture.request_log if r.role == "critic"]
        assert "must be a number between 1 and 5" in critic_prompts[1]

    def test_critic_sees_rendered_image_not_log(self, tmp_path):
        _, _, fixture = run_search(standard_grade_fixture(tmp_path))
        critic_records = [r for r in fixture.request_log if r.role == "critic"]
        assert len(critic_records) == 9
        assert all(r.image_colorimetry == "rec709-display" for r in critic_records)

    def test_directive_threaded_into_prompts(self, tmp_path):
        _, _, fixture = run_search(
            standard_grade_fixture(tmp_path), directive="dreamlike and warm"
        )
        for record in fixture.request_log:
            assert "dreamlike and warm" in record.prompt


class TestSeedRoot:
    def test_identity_without_seeds(self):
        h = Heuristic(id="a", text="warm", action_hint={"gain.r": 0.05})
        assert seed_root_params([(h, 0.9)]) == CdlParams.identity()

    def test_seed_hint_applied(self):
        h = Heuristic(id="a", text="warm", action_hint={"gain.r": 0.05}, seed=True)
        params = seed_root_params([(h, 0.9)])
        assert params.gain == pytest.approx((1.05, 1.0, 1.0))

    def test_invalid_seed_falls_back_to_identity(self):
        h = Heuristic(id="a", text="warm", action_hint={"gain.r": 9.0}, seed=True)
        assert seed_root_params([(h, 0.9)]) == CdlParams.identity()


class TestPreviewRenderer:
    def test_cache_hit(self):
        renderer = PreviewRenderer.for_anchor(
            synthetic_log_frame(), CURVE, GAMUT, ROLL, CFG
        )
        params = CdlParams(gain=(1.1, 1.0, 1.0))
        a = renderer.render(params)
        b = renderer.render(CdlParams(gain=(1.1, 1.0, 1.0)))
        assert a is b

    def test_preview_downscaled(self):
        cfg = SearchConfig(preview_long_edge=16)
        renderer = PreviewRenderer.for_anchor(
            synthetic_log_frame(64, 48), CURVE, GAMUT, ROLL, cfg
        )
        assert max(renderer.base_preview.pixels.shape[:2]) == 16


def test_format_heuristics_lists_hints():
    h = Heuristic(id="teal", text="push shadows teal", action_hint={"lift.b": 0.02})
    text = format_heuristics([(h, 0.87)])
    assert "[teal]" in text and "lift.b:+0.02" in text and "0.87" in text
    assert format_heuristics([]) == "(none retrieved)"
