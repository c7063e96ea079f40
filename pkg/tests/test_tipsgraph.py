import random

import pytest

from tips_profiles import (
    TipKind,
    build_tipsgraph,
    export_tipsgraph_text,
    extract_tips,
    verify_property1,
)
from tips_profiles.pydantic_compat import model_copy_compat
from tips_profiles.tipsgraph import END, START

from .factories import (
    block,
    config,
    diamond_task,
    dowhile_task,
    has_body_exit,
    hit,
    load_fixture,
    nc,
    nested_break_task,
    random_task,
    straight_task,
)


def weights(tg):
    return {(e.src, e.dst): e.w for e in tg.edges}


class TestExtractTips:
    def test_no_tips(self):
        task = straight_task("quiet", hit("a", 3), hit("b", 4))
        assert extract_tips(task) == []

    def test_fig1a_has_four(self):
        task = load_fixture("fig1a").tasks[0]
        assert [i.id for _, i in extract_tips(task)] == ["i1", "i2", "i3", "i4"]

    def test_block_order_preserved(self):
        task = straight_task("two", nc("x", 1), hit("y", 2), nc("z", 3))
        assert extract_tips(task) == [("B", task.blocks[0].instructions[0]),
                                      ("B", task.blocks[0].instructions[2])]


class TestBuild:
    def test_straight_line(self):
        system = load_fixture("fig3b")
        tg = build_tipsgraph(system.tasks[0], system.config)
        assert [t.id for t in tg.tips] == [START, "b", "d", END]
        assert weights(tg) == {(START, "b"): 5, ("b", "d"): 688, ("d", END): 14}

    def test_diamond_takes_the_longest_branch(self):
        tg = build_tipsgraph(diamond_task(10, 25), config())
        assert weights(tg)[("s", "t")] == 10 + 25

    def test_loop_head_created_for_loop_with_tips(self):
        system = load_fixture("fig1a")
        tg = build_tipsgraph(system.tasks[0], system.config)
        heads = [t for t in tg.tips if t.kind == TipKind.LOOP_HEAD]
        assert [h.id for h in heads] == ["head:H"]
        assert heads[0].mu == 0
        assert tg.loop_meta["head:H"].max_iter == 2
        assert sorted(tg.loop_meta["head:H"].tips) == ["head:H", "i2", "i3"]

    def test_fig1a_weights(self):
        system = load_fixture("fig1a")
        tg = build_tipsgraph(system.tasks[0], system.config)
        assert weights(tg) == {
            (START, "i1"): 2,
            ("i1", "head:H"): 10 + 7 + 1,
            ("head:H", "i2"): 5,
            ("head:H", "i3"): 3,
            ("head:H", "i4"): 6,
            ("i2", "head:H"): 13,
            ("i3", "head:H"): 23,
            ("i4", END): 12,
        }
        meta = tg.loop_meta["head:H"]
        assert sorted(meta.return_edges) == [("i2", "head:H"), ("i3", "head:H")]
        assert meta.entry_edges == [("i1", "head:H")]
        assert meta.exit_edges == [("head:H", "i4")]

    def test_tip_free_loop_is_collapsed(self):
        system = load_fixture("fig1b")
        tg = build_tipsgraph(system.tasks[0], system.config)
        assert all(t.kind != TipKind.LOOP_HEAD for t in tg.tips)
        # pre 2, three iterations of 7, post 4
        assert weights(tg)[("t1", "t2")] - 1 * system.config.access_time == 27

    def test_task_without_tips(self):
        task = straight_task("quiet", hit("a", 3), hit("b", 4))
        tg = build_tipsgraph(task, config())
        assert weights(tg) == {(START, END): 7}

    def test_deterministic(self):
        system = load_fixture("fig1a")
        first = build_tipsgraph(system.tasks[0], system.config)
        second = build_tipsgraph(system.tasks[0], system.config)
        assert first == second
        assert first.to_json() == second.to_json()

    def test_export_text(self):
        system = load_fixture("fig3b")
        text = export_tipsgraph_text(build_tipsgraph(system.tasks[0], system.config))
        assert text.splitlines() == [
            "tip start Start 0",
            "tip b Access 1",
            "tip d Access 1",
            "tip end End 0",
            "edge b d 688",
            "edge d end 14",
            "edge start b 5",
        ]

    def test_two_tips_in_one_block(self):
        task = straight_task("pair", nc("x", 4, mu=2), hit("y", 3), nc("z", 1))
        tg = build_tipsgraph(task, config(access_time=5))
        assert weights(tg) == {(START, "x"): 4, ("x", "z"): 10 + 3 + 1, ("z", END): 5}


class TestEdgeWeightOracle:
    @pytest.mark.parametrize("name", ["fig3b", "fig1a", "fig1b", "loop_minmax"])
    def test_fixtures_hold(self, name):
        system = load_fixture(name)
        for task in system.tasks:
            report = verify_property1(task, build_tipsgraph(task, system.config))
            assert report.ok, [v.describe() for v in report.violations]
            assert report.paths_checked > 0

    def test_diamond_holds(self):
        task = diamond_task()
        assert verify_property1(task, build_tipsgraph(task, config())).ok

    def test_decremented_weight_is_detected(self):
        task = diamond_task(10, 25)
        tg = build_tipsgraph(task, config())
        edges = [
            model_copy_compat(e, {"w": e.w - 1}) if (e.src, e.dst) == ("s", "t") else e
            for e in tg.edges
        ]
        broken = model_copy_compat(tg, {"edges": edges})
        report = verify_property1(task, broken)
        assert not report.ok
        assert [(v.src, v.dst) for v in report.violations] == [("s", "t")]
        assert report.violations[0].path_cost == 35

    def test_missing_edge_is_detected(self):
        task = diamond_task()
        tg = build_tipsgraph(task, config())
        broken = model_copy_compat(
            tg, {"edges": [e for e in tg.edges if (e.src, e.dst) != ("t", END)]}
        )
        report = verify_property1(task, broken)
        assert [(v.src, v.dst, v.weight) for v in report.violations] == [("t", END, None)]

    def test_random_cfgs(self):
        for seed in range(100):
            task = random_task(seed)
            tg = build_tipsgraph(task, config())
            report = verify_property1(task, tg)
            assert report.ok, (seed, [v.describe() for v in report.violations])

    def test_random_cfgs_catch_mutation(self):
        caught = 0
        for seed in range(100):
            task = random_task(seed)
            tg = build_tipsgraph(task, config())
            target = max(tg.edges, key=lambda e: (e.w, e.src, e.dst))
            if target.w == 0:
                continue
            edges = [model_copy_compat(e, {"w": e.w - 1}) if e == target else e for e in tg.edges]
            report = verify_property1(task, model_copy_compat(tg, {"edges": edges}))
            assert (target.src, target.dst) in {(v.src, v.dst) for v in report.violations}
            caught += 1
        assert caught > 0

    @pytest.mark.parametrize(
        "task", [nested_break_task(), dowhile_task(), dowhile_task(body_access=False)]
    )
    def test_loops_left_from_the_body(self, task):
        report = verify_property1(task, build_tipsgraph(task, config()))
        assert report.ok, [v.describe() for v in report.violations]

    def test_random_cfgs_with_breaks_and_do_while(self):
        shaped = 0
        for seed in range(100):
            task = random_task(seed, max_blocks=12, exits=True)
            report = verify_property1(task, build_tipsgraph(task, config()))
            assert report.ok, (seed, [v.describe() for v in report.violations])
            shaped += has_body_exit(task)
        assert shaped > 0


def with_slower_instruction(task, instr_id, extra):
    blocks = [
        model_copy_compat(
            b,
            {
                "instructions": [
                    model_copy_compat(i, {"wcet": i.wcet + extra}) if i.id == instr_id else i
                    for i in b.instructions
                ]
            },
        )
        for b in task.blocks
    ]
    return model_copy_compat(task, {"blocks": blocks})


class TestMonotonicity:
    def test_raising_a_wcet_never_lowers_a_weight(self):
        rng = random.Random(11)
        for seed in range(60):
            task = random_task(seed, exits=seed % 2 == 1)
            instr = rng.choice([i for b in task.blocks for i in b.instructions])
            before = weights(build_tipsgraph(task, config()))
            after = weights(build_tipsgraph(with_slower_instruction(task, instr.id, 7), config()))
            assert set(after) == set(before), seed
            assert all(after[key] >= w for key, w in before.items()), (seed, instr.id)

    def test_diamond_branch(self):
        before = weights(build_tipsgraph(diamond_task(10, 25), config()))
        after = weights(build_tipsgraph(diamond_task(30, 25), config()))
        assert after[("s", "t")] == before[("s", "t")] + 5


def test_loop_header_with_its_own_tip():
    from tips_profiles import LoopInfo, TaskCFG

    task = TaskCFG(
        name="selfloop",
        entry="A",
        exit="Z",
        blocks=[
            block("A", hit("a", 1)),
            block("H", nc("h", 2)),
            block("B", hit("b", 3)),
            block("Z", hit("z", 1)),
        ],
        edges=[("A", "H"), ("H", "B"), ("B", "H"), ("H", "Z")],
        loops=[
            LoopInfo(
                header="H",
                members=["B", "H"],
                back_edges=[("B", "H")],
                exit_edges=[("H", "Z")],
                max_iter=2,
            )
        ],
    )
    tg = build_tipsgraph(task, config())
    assert weights(tg) == {
        (START, "head:H"): 1,
        ("head:H", "h"): 2,
        ("h", "head:H"): 10 + 3,
        ("h", END): 10 + 1,
    }
    assert verify_property1(task, tg).ok
