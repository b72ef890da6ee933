import xml.etree.ElementTree as ET

import pytest

from abctrans import environment as env
from abctrans.agent import head_starter_config, large_context_planner_config, run_episode
from abctrans.analysis import (
    AnalysisError,
    IngestError,
    Segment,
    SegmentThresholds,
    TSV_COLUMNS,
    entropy_trajectory,
    export_progression,
    group_policies,
    ingest_tsv,
    largest_drop,
    segment_ohrf,
    summarize,
    typing_drops,
)
from abctrans.inference import PreferenceVector
from abctrans.task import ReadingEvidenceModel
from abctrans.trace import ProcessEvent, Trace


def make_events(specs):
    """specs: list of (kind, chunk, slot); events get contiguous 100ms stamps."""
    events = []
    t = 0.0
    for kind, chunk, slot in specs:
        events.append(
            ProcessEvent(t_start=t, t_end=t + 100.0, kind=kind, chunk_id=chunk, slot=slot)
        )
        t += 100.0
    return Trace(events=tuple(events), strategy="crafted")


REVISING_SESSION = [
    (env.FIXATE_SOURCE, 1, None),
    (env.TYPE, 1, 1),
    (env.FIXATE_SOURCE, 2, None),
    (env.TYPE, 2, 2),
    (env.FIXATE_SOURCE, 3, None),
    (env.TYPE, 3, 3),
    (env.FIXATE_SOURCE, 4, None),
    (env.TYPE, 4, 4),
    (env.DELETE, None, 4),
    (env.FIXATE_SOURCE, 1, None),
    (env.TYPE, 5, 5),
    (env.DELETE, None, 5),
]

HESITANT_SESSION = [
    (env.FIXATE_SOURCE, 1, None),
    (env.TYPE, 1, 1),
    (env.FIXATE_SOURCE, 2, None),
    (env.TYPE, 2, 2),
    (env.PAUSE, None, None),
    (env.TYPE, 3, 3),
    (env.FIXATE_SOURCE, 3, None),
    (env.TYPE, 4, 4),
]


class TestSegmentOhrf:
    def test_empty_trace(self):
        assert segment_ohrf(Trace(events=())) == []

    def test_only_source_fixations_is_one_orientation(self):
        tr = make_events([(env.FIXATE_SOURCE, c, None) for c in (1, 2, 3)])
        segs = segment_ohrf(tr)
        assert [s.state for s in segs] == ["O"]
        assert segs[0].events == (0, 1, 2)

    def test_fixations_then_typing_is_o_then_f(self):
        tr = make_events(
            [(env.FIXATE_SOURCE, 1, None), (env.FIXATE_SOURCE, 2, None)]
            + [(env.TYPE, c, s) for s, c in enumerate((1, 2, 3), start=1)]
        )
        assert [s.state for s in segment_ohrf(tr)] == ["O", "F"]

    def test_delete_and_retype_are_revision(self):
        tr = make_events(
            [
                (env.TYPE, 1, 1),
                (env.DELETE, None, 1),
                (env.TYPE, 2, 1),
                (env.TYPE, 3, 2),
            ]
        )
        assert [s.state for s in segment_ohrf(tr)] == ["F", "R", "F"]
        # the retype into the deleted slot belongs to the R run
        segs = segment_ohrf(tr)
        assert segs[1].events == (1, 2)

    def test_pause_is_hesitation(self):
        tr = make_events([(env.TYPE, 1, 1), (env.PAUSE, None, None), (env.TYPE, 2, 2)])
        assert [s.state for s in segment_ohrf(tr)] == ["F", "H", "F"]

    def test_target_fixation_joins_adjacent_revision(self):
        tr = make_events(
            [(env.TYPE, 1, 1), (env.FIXATE_TARGET, None, 1), (env.DELETE, None, 1)]
        )
        assert [s.state for s in segment_ohrf(tr)] == ["F", "R"]

    def test_target_fixation_in_long_gap_is_hesitation(self):
        events = (
            ProcessEvent(0.0, 120.0, env.TYPE, chunk_id=1, slot=1),
            ProcessEvent(300.0, 500.0, env.FIXATE_TARGET, slot=1),
            ProcessEvent(1700.0, 1820.0, env.TYPE, chunk_id=2, slot=2),
        )
        tr = Trace(events=events)
        assert [s.state for s in segment_ohrf(tr)] == ["F", "H", "F"]

    def test_target_fixation_in_short_gap_is_flow(self):
        events = (
            ProcessEvent(0.0, 120.0, env.TYPE, chunk_id=1, slot=1),
            ProcessEvent(150.0, 350.0, env.FIXATE_TARGET, slot=1),
            ProcessEvent(400.0, 520.0, env.TYPE, chunk_id=2, slot=2),
        )
        tr = Trace(events=events)
        assert [s.state for s in segment_ohrf(tr)] == ["F"]

    def test_threshold_is_configurable(self):
        events = (
            ProcessEvent(0.0, 120.0, env.TYPE, chunk_id=1, slot=1),
            ProcessEvent(150.0, 350.0, env.FIXATE_TARGET, slot=1),
            ProcessEvent(400.0, 520.0, env.TYPE, chunk_id=2, slot=2),
        )
        tr = Trace(events=events)
        tight = SegmentThresholds(theta_pause_ms=200.0)
        assert [s.state for s in segment_ohrf(tr, tight)] == ["F", "H", "F"]

    def test_segments_partition_events(self, models):
        cfg = large_context_planner_config()
        for seed in range(5):
            tr = run_episode(cfg, models, latent="TT5", seed=seed)
            segs = segment_ohrf(tr)
            covered = [i for s in segs for i in s.events]
            assert covered == list(range(len(tr.events)))

    def test_seeded_revision_episode_contains_r(self, space):
        models95 = ReadingEvidenceModel.with_defaults(space, content=0.95)
        cfg = head_starter_config(
            prefs=PreferenceVector(
                progress_bonus=1.0, inconsistency_penalty=-1.5, unread_cost=2.0,
                read_cost=0.0, pause_cost=0.1,
            )
        )
        tr = run_episode(
            cfg, models95, latent="TT5", seed=3,
            cue_script=("TT0", "TT5", "TT5", "TT5"), max_steps=40,
        )
        assert "R" in {s.state for s in segment_ohrf(tr)}


class TestGroupPolicies:
    def test_clean_cycles_then_revising_cycles(self):
        segs = segment_ohrf(make_events(REVISING_SESSION))
        assert [s.state for s in segs] == ["O", "F", "O", "F", "O", "F", "O", "F", "R", "O", "F", "R"]
        labels = [c.label for c in group_policies(segs)]
        assert labels == ["OF", "OF", "OF", "OFR", "OFR"]

    def test_hesitation_mid_cycle(self):
        segs = segment_ohrf(make_events(HESITANT_SESSION))
        assert [s.state for s in segs] == ["O", "F", "O", "F", "H", "F", "O", "F"]
        labels = [c.label for c in group_policies(segs)]
        assert labels == ["OF", "OFHF", "OF"]

    def test_single_orientation(self):
        segs = segment_ohrf(make_events([(env.FIXATE_SOURCE, 1, None)]))
        assert [c.label for c in group_policies(segs)] == ["O"]

    def test_leading_non_orientation_gets_implicit_o(self):
        segs = segment_ohrf(make_events([(env.TYPE, 1, 1), (env.FIXATE_SOURCE, 2, None)]))
        cycles = group_policies(segs)
        assert cycles[0].implicit_orientation
        assert cycles[0].label == "OF"
        assert cycles[1].label == "O"

    def test_cycles_partition_segments(self, models):
        cfg = head_starter_config()
        for seed in range(5):
            tr = run_episode(cfg, models, latent="TT3", seed=seed)
            segs = segment_ohrf(tr)
            cycles = group_policies(segs)
            covered = [i for c in cycles for i in c.segments]
            assert covered == list(range(len(segs)))
            for c in cycles:
                assert c.label.startswith("O")

    def test_deterministic_labels(self):
        a = group_policies(segment_ohrf(make_events(REVISING_SESSION)))
        b = group_policies(segment_ohrf(make_events(REVISING_SESSION)))
        assert [c.label for c in a] == [c.label for c in b]


class TestEntropyTrajectory:
    def test_noiseless_planner_is_non_increasing_to_zero(self, space):
        exact = ReadingEvidenceModel.with_defaults(space, content=1.0)
        tr = run_episode(large_context_planner_config(), exact, latent="TT3", seed=0)
        series = entropy_trajectory(tr)
        values = [h for _, h in series]
        assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))
        assert abs(values[-1]) <= 1e-12

    def test_uninformative_read_keeps_it_flat(self, space):
        # a single fixation through the flat channel leaves entropy unchanged
        tr = Trace(
            events=(
                ProcessEvent(0, 200, env.FIXATE_SOURCE, chunk_id=0,
                             belief_entropy=space.prior.entropy, gamma=4.0, zeta=1.0),
            ),
            prior_entropy=space.prior.entropy,
        )
        series = entropy_trajectory(tr)
        assert series[0][1] == series[1][1]

    def test_head_starter_largest_drop_lands_on_high_information_chunk(self, space):
        models70 = ReadingEvidenceModel.with_defaults(space, content=0.7)
        cfg = head_starter_config(
            prefs=PreferenceVector(
                progress_bonus=1.2, inconsistency_penalty=-1.0, unread_cost=0.3,
                read_cost=0.0, pause_cost=0.1,
            )
        )
        tr = run_episode(cfg, models70, latent="TT5", seed=5, cue_script=("TT5",))
        event, drop = largest_drop(tr)
        assert event.kind == env.TYPE
        assert event.chunk_id in (2, 4)
        assert drop > 1.0

    def test_ingested_trace_rejected(self):
        tr = make_events([(env.TYPE, 1, 1)])
        with pytest.raises(AnalysisError):
            entropy_trajectory(tr)


class TestSummarize:
    def test_empty_trace_is_all_zero(self):
        tr = Trace(events=())
        s = summarize(tr, [], [])
        assert s.first_keystroke_latency_ms == 0.0
        assert s.total_time_ms == 0.0
        assert s.revision_count == 0
        assert all(n == 0 for _, n in s.state_counts)

    def test_planner_waits_longer_before_typing(self, models):
        hs, pl = head_starter_config(), large_context_planner_config()
        for seed in range(10):
            a = run_episode(hs, models, latent="TT3", seed=seed)
            b = run_episode(pl, models, latent="TT3", seed=seed)
            sa = summarize(a, segment_ohrf(a), group_policies(segment_ohrf(a)))
            sb = summarize(b, segment_ohrf(b), group_policies(segment_ohrf(b)))
            assert sa.first_keystroke_latency_ms < sb.first_keystroke_latency_ms

    def test_head_starter_revises_at_least_as_much(self, models):
        hs, pl = head_starter_config(), large_context_planner_config()
        rev_a, rev_b = [], []
        for seed in range(30):
            a = run_episode(hs, models, latent="TT5", seed=seed)
            b = run_episode(pl, models, latent="TT5", seed=seed)
            rev_a.append(sum(1 for e in a.events if e.kind == env.DELETE))
            rev_b.append(sum(1 for e in b.events if e.kind == env.DELETE))
        assert sum(rev_a) / len(rev_a) >= sum(rev_b) / len(rev_b)


class TestExportAndIngest:
    def run_and_analyze(self, models, seed=2):
        tr = run_episode(large_context_planner_config(), models, latent="TT5", seed=seed)
        segs = segment_ohrf(tr)
        cycles = group_policies(segs)
        return tr, segs, cycles

    def test_tsv_row_count_and_header(self, models):
        tr, segs, cycles = self.run_and_analyze(models)
        data = export_progression(tr, segs, cycles, "tsv")
        lines = data.decode("utf-8").strip().split("\n")
        assert lines[0] == "\t".join(TSV_COLUMNS)
        assert len(lines) == len(tr.events) + 1

    def test_unknown_format_rejected(self, models):
        tr, segs, cycles = self.run_and_analyze(models)
        with pytest.raises(AnalysisError):
            export_progression(tr, segs, cycles, "csv")

    def test_svg_is_well_formed_with_one_band_per_segment(self, models):
        tr, segs, cycles = self.run_and_analyze(models)
        data = export_progression(tr, segs, cycles, "svg")
        root = ET.fromstring(data.decode("utf-8"))
        assert root.tag.endswith("svg")
        bands = [el for el in root.iter() if el.get("class") == "segment"]
        assert len(bands) == len(segs)

    def test_incremental_typist_types_before_finishing_reading(self, space):
        # minimal lookahead: the first typed row appears above the last
        # source-fixation row in the exported table
        models95 = ReadingEvidenceModel.with_defaults(space, content=0.95)
        cfg = head_starter_config(
            prefs=PreferenceVector(
                progress_bonus=1.0, inconsistency_penalty=-1.5, unread_cost=2.0,
                read_cost=0.0, pause_cost=0.1,
            )
        )
        tr = run_episode(
            cfg, models95, latent="TT5", seed=3,
            cue_script=("TT0", "TT5", "TT5", "TT5"), max_steps=40,
        )
        segs = segment_ohrf(tr)
        data = export_progression(tr, segs, group_policies(segs), "tsv")
        kinds = [line.split("\t")[1] for line in data.decode().strip().split("\n")[1:]]
        assert kinds.index(env.TYPE) < max(
            i for i, k in enumerate(kinds) if k == env.FIXATE_SOURCE
        )

    def test_round_trip_preserves_events_and_segmentation(self, models):
        tr, segs, cycles = self.run_and_analyze(models)
        data = export_progression(tr, segs, cycles, "tsv")
        back = ingest_tsv(data)
        assert len(back.events) == len(tr.events)
        for original, parsed in zip(tr.events, back.events):
            assert parsed.kind == original.kind
            assert parsed.chunk_id == original.chunk_id
            assert parsed.slot == original.slot
        segs2 = segment_ohrf(back)
        assert [s.state for s in segs2] == [s.state for s in segs]
        assert [s.events for s in segs2] == [s.events for s in segs]
        assert [c.label for c in group_policies(segs2)] == [c.label for c in cycles]

    def test_header_only_file_is_empty_trace(self):
        data = ("\t".join(TSV_COLUMNS) + "\n").encode()
        assert len(ingest_tsv(data).events) == 0

    def test_missing_column_reports_row(self):
        data = b"time_ms\tevent_kind\nfoo\tbar\n"
        with pytest.raises(IngestError, match="row 1"):
            ingest_tsv(data)

    def test_unparseable_time_reports_row(self):
        data = (
            "\t".join(TSV_COLUMNS)
            + "\n"
            + "\t".join(["abc", "type", "1@1", "F", "0", "", ""])
            + "\n"
        ).encode()
        with pytest.raises(IngestError, match="row 2"):
            ingest_tsv(data)

    def test_custom_column_map(self):
        data = "t\tk\twhat\n0\tfixate_source\t1\n100\ttype\t1@1\n".encode()
        tr = ingest_tsv(data, {"time": "t", "kind": "k", "target": "what"})
        assert [e.kind for e in tr.events] == [env.FIXATE_SOURCE, env.TYPE]

    def test_hand_written_log_with_deletion_yields_revision(self):
        rows = [
            ("0", env.FIXATE_SOURCE, "1"),
            ("200", env.TYPE, "1@1"),
            ("400", env.TYPE, "2@2"),
            ("600", env.FIXATE_TARGET, "@1"),
            ("700", env.DELETE, "@1"),
            ("900", env.TYPE, "3@1"),
        ]
        data = (
            "\t".join(TSV_COLUMNS)
            + "\n"
            + "\n".join("\t".join([t, k, tgt, "", "0", "", ""]) for t, k, tgt in rows)
            + "\n"
        ).encode()
        tr = ingest_tsv(data)
        states = [s.state for s in segment_ohrf(tr)]
        assert "R" in states

    def test_typing_drop_helper_requires_belief_fields(self):
        tr = make_events([(env.TYPE, 1, 1)])
        with pytest.raises(AnalysisError):
            typing_drops(tr)
