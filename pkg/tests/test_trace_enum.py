import networkx as nx
import pytest

from tips_profiles import (
    TraceExplosionError,
    build_tipsgraph,
    check_conservativeness,
    dump_traces_text,
    enumerate_traces,
    trace_window_access_bound,
)
from tips_profiles.pydantic_compat import model_copy_compat
from tips_profiles.trace_enum import LoopContextStack

from .factories import (
    config,
    dowhile_task,
    has_body_exit,
    load_fixture,
    nested_break_task,
    random_task,
)


def traces_of(name, **overrides):
    system = load_fixture(name)
    cfg = system.tasks[0]
    cfg_config = model_copy_compat(system.config, overrides) if overrides else system.config
    return cfg, enumerate_traces(build_tipsgraph(cfg, cfg_config), cfg_config)


def dated(trace):
    return [(e.tip, e.date) for e in trace.elements]


class TestFixtures:
    def test_fig3b_single_trace(self):
        _, ts = traces_of("fig3b")
        assert len(ts.traces) == 1
        assert dated(ts.traces[0]) == [("start", 0), ("b", 5), ("d", 693), ("end", 707)]
        assert ts.d_max == 707
        assert ts.traces[0].id == "tr0"
        assert [e.mu for e in ts.traces[0].elements] == [0, 1, 1, 0]

    def test_fig1a_seven_traces(self):
        _, ts = traces_of("fig1a")
        assert len(ts.traces) == 7
        assert ts.d_max == 90
        signatures = {t.signature for t in ts.traces}
        assert ("start", "i1", "head:H", "i4", "end") in signatures
        assert ("start", "i1", "head:H", "i3", "head:H", "i3", "head:H", "i4", "end") in signatures
        for trace in ts.traces:
            assert trace.signature.count("head:H") <= 3

    def test_fig1a_worst_trace_dates(self):
        _, ts = traces_of("fig1a")
        worst = max(ts.traces, key=lambda t: t.end_date)
        assert dated(worst) == [
            ("start", 0),
            ("i1", 2),
            ("head:H", 20),
            ("i3", 23),
            ("head:H", 46),
            ("i3", 49),
            ("head:H", 72),
            ("i4", 78),
            ("end", 90),
        ]

    def test_min_iter_filters_short_traces(self):
        _, ts = traces_of("loop_minmax")
        # one to three returns, two branches per iteration
        assert len(ts.traces) == 2 + 4 + 8
        for trace in ts.traces:
            assert trace.signature.count("head:H") >= 2

    def test_explosion_guard(self):
        with pytest.raises(TraceExplosionError) as info:
            traces_of("loop_minmax", max_traces=10)
        assert info.value.limit == 10

    def test_dates_increase_along_edges(self):
        system = load_fixture("fig1a")
        tg = build_tipsgraph(system.tasks[0], system.config)
        ts = enumerate_traces(tg, system.config)
        for trace in ts.traces:
            for a, b in zip(trace.elements, trace.elements[1:]):
                assert b.date == a.date + tg.edge(a.tip, b.tip).w

    def test_deterministic_ids(self):
        _, first = traces_of("fig1a")
        _, second = traces_of("fig1a")
        assert first == second
        assert [t.id for t in first.traces] == [f"tr{k}" for k in range(7)]
        assert [dated(t) for t in first.traces] == sorted(dated(t) for t in first.traces)

    def test_post_loop_tip_dates_vary(self):
        _, ts = traces_of("fig1a")
        dates = {e.date for t in ts.traces for e in t.elements if e.tip == "i4"}
        assert len(dates) >= 2

    def test_dump_text(self):
        _, ts = traces_of("fig3b")
        assert dump_traces_text(ts) == "trace 0: (start,0) (b,5) (d,693) (end,707)\n"


class TestLoopContextStack:
    def test_push_bump_pop(self):
        stack = LoopContextStack().push("head:A").push("head:B").bump()
        assert stack.top() == ("head:B", 1)
        frame, rest = stack.pop()
        assert frame == ("head:B", 1)
        assert rest == LoopContextStack([("head:A", 0)])
        assert len(stack) == 2

    def test_empty_top(self):
        with pytest.raises(RuntimeError):
            LoopContextStack().top()


class TestWindowBound:
    def test_single_trace(self):
        _, ts = traces_of("fig3b")
        assert trace_window_access_bound(ts, 707) == 2
        assert trace_window_access_bound(ts, 10) == 1

    def test_monotone(self):
        _, ts = traces_of("fig1a")
        bounds = [trace_window_access_bound(ts, w) for w in (1, 5, 20, 50, 90)]
        assert bounds == sorted(bounds)
        assert bounds[-1] == max(t.total_accesses() for t in ts.traces)


class TestConservativeness:
    @pytest.mark.parametrize("name", ["fig3b", "fig1a", "fig1b", "loop_minmax"])
    def test_fixtures(self, name):
        cfg, ts = traces_of(name)
        report = check_conservativeness(cfg, ts)
        assert report.ok, [v.describe() for v in report.violations]
        assert report.paths_checked >= len(ts.traces)

    def test_lowered_date_is_detected(self):
        cfg, ts = traces_of("fig3b")
        trace = ts.traces[0]
        elements = list(trace.elements)
        elements[2] = model_copy_compat(elements[2], {"date": elements[2].date - 1})
        broken = model_copy_compat(
            ts, {"traces": [model_copy_compat(trace, {"elements": elements})]}
        )
        report = check_conservativeness(cfg, broken)
        assert [(v.tip, v.position) for v in report.violations] == [("d", 2)]

    def test_random_cfgs(self):
        checked = 0
        for seed in range(100):
            cfg = random_task(seed)
            cfg_config = config(max_traces=20_000)
            try:
                ts = enumerate_traces(build_tipsgraph(cfg, cfg_config), cfg_config)
                report = check_conservativeness(cfg, ts)
            except TraceExplosionError:
                continue
            assert report.ok, (seed, [v.describe() for v in report.violations])
            checked += 1
        assert checked >= 80

    @pytest.mark.parametrize(
        "task", [nested_break_task(), dowhile_task(), dowhile_task(body_access=False)]
    )
    def test_loops_left_from_the_body(self, task):
        ts = enumerate_traces(build_tipsgraph(task, config()), config())
        assert ts.traces
        report = check_conservativeness(task, ts)
        assert report.ok, [v.describe() for v in report.violations]

    def test_random_cfgs_with_breaks_and_do_while(self):
        checked = shaped = 0
        for seed in range(100):
            cfg = random_task(seed, max_blocks=12, exits=True)
            cfg_config = config(max_traces=20_000)
            try:
                ts = enumerate_traces(build_tipsgraph(cfg, cfg_config), cfg_config)
                report = check_conservativeness(cfg, ts)
            except TraceExplosionError:
                continue
            assert report.ok, (seed, [v.describe() for v in report.violations])
            checked += 1
            shaped += has_body_exit(cfg)
        assert checked > 0
        assert shaped > 0


class TestTraceShape:
    def test_loop_free_traces_are_graph_paths(self):
        for seed in range(100):
            cfg = random_task(seed, max_loops=0)
            tg = build_tipsgraph(cfg, config())
            ts = enumerate_traces(tg, config())
            paths = list(nx.all_simple_paths(tg.graph(), "start", "end"))
            assert len(ts.traces) == len(paths), seed
            assert {t.signature for t in ts.traces} == {tuple(p) for p in paths}

    def test_accesses_fit_between_dates(self):
        tasks = [load_fixture(name).tasks[0] for name in ("fig3b", "fig1a", "fig1b", "loop_minmax")]
        tasks += [random_task(seed, exits=seed % 2 == 0) for seed in range(60)]
        for cfg in tasks:
            cfg_config = config(max_traces=20_000)
            try:
                ts = enumerate_traces(build_tipsgraph(cfg, cfg_config), cfg_config)
            except TraceExplosionError:
                continue
            for trace in ts.traces:
                for here, following in zip(trace.elements, trace.elements[1:]):
                    assert following.date - here.date >= here.mu * cfg_config.access_time, (
                        cfg.name,
                        trace.id,
                        here.tip,
                    )
