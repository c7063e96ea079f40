import json

import pytest

from tips_profiles import (
    DocumentParseError,
    Stage,
    analyze_system,
    analyze_task,
    digest,
)
from tips_profiles.base_model import canonical_json
from tips_profiles.pipeline import load_input, run_pipeline, verify_artifacts
from tips_profiles.rendering import (
    render_svg_timeline,
    render_text_timeline,
    rows_from_profiles,
    rows_from_schedule,
)

from .factories import fixture_path, load_fixture


def write_artifact(artifacts, path):
    path.write_text(canonical_json(artifacts.to_dict()) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# Per-task analysis
# ---------------------------------------------------------------------------
class TestAnalyzeTask:
    def test_stops_at_requested_stage(self):
        system = load_fixture("fig3b")
        artifacts = analyze_task(system.tasks[0], system.config, Stage.TIPSGRAPH)
        assert artifacts.tipsgraph is not None
        assert artifacts.traces is None
        assert artifacts.segments is None
        assert artifacts.reached() == Stage.TIPSGRAPH

    def test_resumes_from_previous(self):
        system = load_fixture("fig1a")
        partial = analyze_task(system.tasks[0], system.config, Stage.TRACES)
        resumed = analyze_task(system.tasks[0], system.config, Stage.SEGMENTS, previous=partial)
        direct = analyze_task(system.tasks[0], system.config, Stage.SEGMENTS)
        assert resumed == direct
        assert resumed.reached() == Stage.SEGMENTS


class TestAnalyzeSystem:
    @pytest.mark.asyncio
    async def test_results_ordered_by_name(self):
        system = load_fixture("two_core_overlap")
        results = await analyze_system(system, Stage.SEGMENTS, jobs=2)
        assert list(results) == ["t1", "t2"]
        assert all(r.segments is not None for r in results.values())

    @pytest.mark.asyncio
    async def test_jobs_do_not_change_results(self):
        system = load_fixture("two_core_overlap")
        serial = await analyze_system(system, Stage.SEGMENTS, jobs=1)
        parallel = await analyze_system(system, Stage.SEGMENTS, jobs=4)
        assert serial == parallel

    @pytest.mark.asyncio
    async def test_schedule_stage_analyzes_up_to_segments(self):
        system = load_fixture("fig3b")
        results = await analyze_system(system, Stage.SCHEDULE)
        assert results["t"].reached() == Stage.SEGMENTS

    @pytest.mark.asyncio
    async def test_rejects_zero_jobs(self):
        with pytest.raises(ValueError):
            await analyze_system(load_fixture("fig3b"), jobs=0)


# ---------------------------------------------------------------------------
# Artifacts
# ---------------------------------------------------------------------------
class TestArtifacts:
    @pytest.mark.asyncio
    async def test_digest_covers_content(self):
        artifacts = await run_pipeline(fixture_path("fig3b"), Stage.SEGMENTS)
        assert artifacts.kind == Stage.SEGMENTS
        assert artifacts.provenance.digest == artifacts.content_digest()
        assert artifacts.provenance.source_digest == digest(load_fixture("fig3b"))
        assert artifacts.provenance.input_digest == artifacts.provenance.source_digest

    @pytest.mark.asyncio
    async def test_deterministic(self):
        first = await run_pipeline(fixture_path("fig1a"), Stage.SCHEDULE)
        second = await run_pipeline(fixture_path("fig1a"), Stage.SCHEDULE, jobs=3)
        assert first.to_json() == second.to_json()

    @pytest.mark.asyncio
    async def test_stages_compose(self, tmp_path):
        first = await run_pipeline(fixture_path("fig1a"), Stage.TIPSGRAPH)
        stored = write_artifact(first, tmp_path / "tg.json")
        traces = await run_pipeline(stored, Stage.TRACES)
        stored = write_artifact(traces, tmp_path / "traces.json")
        resumed = await run_pipeline(stored, Stage.SEGMENTS)
        direct = await run_pipeline(fixture_path("fig1a"), Stage.SEGMENTS)

        assert resumed.tasks == direct.tasks
        assert resumed.provenance.source_digest == direct.provenance.source_digest
        assert resumed.provenance.input_digest == traces.provenance.digest
        assert resumed.provenance.digest == direct.provenance.digest

    @pytest.mark.asyncio
    async def test_tampered_artifact_is_rejected(self, tmp_path):
        artifacts = await run_pipeline(fixture_path("fig3b"), Stage.TIPSGRAPH)
        data = json.loads(canonical_json(artifacts.to_dict()))
        data["tasks"]["t"]["tipsgraph"]["edges"][0]["w"] += 1
        path = tmp_path / "tampered.json"
        path.write_text(json.dumps(data), encoding="utf-8")
        with pytest.raises(DocumentParseError):
            load_input(path)

    @pytest.mark.asyncio
    async def test_override_recomputes(self, tmp_path):
        segments = await run_pipeline(fixture_path("fig3b"), Stage.SEGMENTS)
        stored = write_artifact(segments, tmp_path / "segments.json")
        fused = await run_pipeline(stored, Stage.SEGMENTS, overrides={"delta": 20})
        assert fused.provenance.config.delta == 20
        assert [(s.start, s.dur) for s in fused.tasks["t"].segments.segments] == [
            (0, 15),
            (15, 678),
            (693, 14),
        ]

    @pytest.mark.asyncio
    @pytest.mark.parametrize("overrides", [{"delta": -5}, {"max_traces": 0}])
    async def test_invalid_override(self, overrides):
        with pytest.raises(DocumentParseError, match="invalid configuration override"):
            await run_pipeline(fixture_path("fig3b"), Stage.SEGMENTS, overrides=overrides)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DocumentParseError):
            load_input(tmp_path / "absent.json")

    def test_plain_document_has_no_artifact(self):
        system, artifacts, input_digest = load_input(fixture_path("fig3b"))
        assert artifacts is None
        assert input_digest == digest(system)


class TestVerifyArtifacts:
    @pytest.mark.asyncio
    @pytest.mark.parametrize("name", ["fig3b", "fig1a", "fig1b", "two_core_overlap"])
    async def test_fixtures_verify(self, name):
        artifacts = await run_pipeline(fixture_path(name), Stage.SCHEDULE)
        report = verify_artifacts(artifacts)
        assert report.ok, report.problems()
        assert report.schedule is not None


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------
class TestRendering:
    @pytest.mark.asyncio
    async def test_text_profile(self):
        artifacts = await run_pipeline(fixture_path("fig3b"), Stage.SEGMENTS)
        text = render_text_timeline(rows_from_profiles(artifacts.profiles()), 707)
        header, row = text.splitlines()
        assert header == "  |0" + "707".rjust(71) + "|"
        assert row == "t |##" + "." * 68 + "##|"

    @pytest.mark.asyncio
    async def test_schedule_rows_per_core(self):
        artifacts = await run_pipeline(fixture_path("two_core_overlap"), Stage.SCHEDULE)
        rows = rows_from_schedule(artifacts.schedule)
        assert [r.label for r in rows] == ["core 0", "core 1"]
        assert [r.end for r in rows] == [130, 130]

    @pytest.mark.asyncio
    async def test_svg(self, tmp_path):
        artifacts = await run_pipeline(fixture_path("two_core_overlap"), Stage.SCHEDULE)
        target = tmp_path / "timeline.svg"
        svg = render_svg_timeline(rows_from_schedule(artifacts.schedule), path=target)
        assert svg.startswith("<svg")
        assert "core 1" in svg
        assert target.exists()
