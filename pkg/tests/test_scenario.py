import json
import math

import pytest

from virtual_fence.config import RunConfig
from virtual_fence.robot import VelocitySample
from virtual_fence.scenario import (
    HumanEvent,
    MethodKind,
    ScenarioError,
    ScenarioScript,
    ScenarioTimeout,
    compare,
    format_table,
    load_script,
    max_step_ratio,
    reference_script,
    profile_csv,
    run,
    table_csv,
)
from virtual_fence.zones import Command

CFG = RunConfig()


def _hand_timeline(event_end, period=0.033, t_buffer=3.0):
    # last frame that sees the person, then first frame at least t_buffer later
    k_last = max(k for k in range(10_000) if k * period < event_end)
    t_last = k_last * period
    k_rel = min(k for k in range(10_000) if k * period - t_last >= t_buffer - 1e-9)
    return k_rel * period


def test_empty_script_is_ideal():
    for m in MethodKind:
        r = run(ScenarioScript(6), m, CFG, measure_latency=False)
        assert r.total_time == pytest.approx(60.0, abs=0.1)
        assert r.operational_efficiency == pytest.approx(100.0, abs=1e-9)
        assert r.operational_efficiency <= 100.0
        assert r.collision_avoidance_rate == 100.0 and r.intrusions == 0


def test_attention_only_against_hand_timeline():
    script = ScenarioScript(2, events=(HumanEvent(0.0, 10.0, 160.0),))
    t_rel = _hand_timeline(10.0)
    # zone-based: slow (d=10) until release, then normal (d=5) for the rest of the 4 legs
    expect_zone = t_rel + (4 - t_rel / 10.0) * 5.0
    # immediate stop: halted until release, then 4 legs at d=5
    expect_stop = t_rel + 20.0
    zb = run(script, MethodKind.ZONE_BASED, CFG, measure_latency=False)
    st = run(script, MethodKind.IMMEDIATE_STOP, CFG, measure_latency=False)
    assert zb.total_time == pytest.approx(expect_zone, abs=1e-6)
    assert st.total_time == pytest.approx(expect_stop, abs=1e-6)
    assert st.operational_efficiency < zb.operational_efficiency < 100
    sqp = run(script, MethodKind.ZONE_BASED_SQP, CFG, measure_latency=False)
    assert st.operational_efficiency < sqp.operational_efficiency < 100


def test_reference_script_ordering():
    reports = compare(reference_script(), CFG, measure_latency=False)
    oe = {m: r.operational_efficiency for m, r in reports.items()}
    assert oe[MethodKind.ZONE_BASED] > oe[MethodKind.ZONE_BASED_SQP] > oe[MethodKind.IMMEDIATE_STOP]
    for r in reports.values():
        assert r.intrusions == 1 and r.collisions == 0


def test_permanent_critical_times_out():
    script = ScenarioScript(2, events=(HumanEvent(0.0, math.inf, 640.0),))
    with pytest.raises(ScenarioTimeout):
        run(script, MethodKind.ZONE_BASED_SQP, CFG.override(max_sim_time=20.0), measure_latency=False)


def test_anchor_waits_for_cycle_completion():
    script = ScenarioScript(3, anchor_cycle=1, events=(HumanEvent(0.0, 5.0, 640.0),))
    r = run(script, MethodKind.ZONE_BASED_SQP, CFG, measure_latency=False)
    first_halt = next(c.timestamp for c in r.command_timeline if c.is_halt)
    assert 10.0 <= first_halt < 10.0 + CFG.frame_period


def test_max_step_ratio_examples():
    flat = [VelocitySample(k, 0.2, Command.NORMAL) for k in range(5)]
    assert max_step_ratio(flat) == 0
    jump = [VelocitySample(0, 0.2, Command.NORMAL), VelocitySample(1, 0.1, Command.SLOW)]
    assert max_step_ratio(jump) == pytest.approx(0.5)
    smooth = [VelocitySample(0, 0.2, Command.NORMAL), VelocitySample(1, 1 / 7.702702702702703, Command.SLOW)]
    assert max_step_ratio(smooth) == pytest.approx(abs(1 / 5 - 1 / (14.25 / 1.85)) / (1 / 5), abs=1e-12)
    assert max_step_ratio(smooth) == pytest.approx(0.3509, abs=1e-4)
    with pytest.raises(ValueError):
        max_step_ratio([])


def test_halts_do_not_count_as_jerk():
    prof = [VelocitySample(0, 0.1, Command.SLOW), VelocitySample(1, 0.0, Command.STOP),
            VelocitySample(2, 0.1, Command.SLOW)]
    assert max_step_ratio(prof) == 0


def test_script_validation():
    with pytest.raises(ScenarioError):
        ScenarioScript(0)
    with pytest.raises(ScenarioError):
        ScenarioScript(2, events=(HumanEvent(5, 10, 100), HumanEvent(8, 12, 100)))
    with pytest.raises(ScenarioError):
        ScenarioScript(2, events=(HumanEvent(5, 10, 2000),))
    with pytest.raises(ScenarioError):
        ScenarioScript(2, events=(HumanEvent(5, 5, 100),))


def test_script_json_round_trip(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps(reference_script().to_dict()))
    assert load_script(path) == reference_script()
    path.write_text(json.dumps({"total_cycles": 1, "events": [{"t_start": 0, "t_end": None, "center_x": 5}]}))
    assert load_script(path).events[0].t_end == math.inf
    path.write_text("{not json")
    with pytest.raises(ScenarioError):
        load_script(path)
    path.write_text(json.dumps({"events": []}))
    with pytest.raises(ScenarioError):
        load_script(path)


def test_reports_are_deterministic():
    a = compare(reference_script(), CFG, seed=3, measure_latency=False)
    b = compare(reference_script(), CFG, seed=3, measure_latency=False)
    assert format_table(a) == format_table(b)
    assert table_csv(a) == table_csv(b)
    for m in MethodKind:
        assert profile_csv(a[m].velocity_profile) == profile_csv(b[m].velocity_profile)
        assert a[m].summary() == b[m].summary()


def test_latency_reported_when_measured():
    r = run(ScenarioScript(1), MethodKind.ZONE_BASED_SQP, CFG)
    assert r.latency_mean_ms > 0 and r.latency_p99_ms > 0


def test_table_layout():
    text = format_table(compare(ScenarioScript(1), CFG, measure_latency=False))
    lines = text.splitlines()
    assert "pipeline latency (sim)" in lines[0]
    assert [l.split("  ")[0] for l in lines[2:]] == ["Immediate Stop", "Zone-based", "Zone-based + SQP"]
    assert all("100.00%" in l for l in lines[2:])
