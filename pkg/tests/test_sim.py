from __future__ import annotations

import pytest

from ecuchain.adversary import AttackKind
from ecuchain.ecu import compute_state_root
from ecuchain.sim import (
    AttackPlanEntry,
    ConfigError,
    EventKind,
    EventQueue,
    MaintenancePlanEntry,
    SimClock,
    SimConfig,
    SimEvent,
    build_world,
    event_log_text,
    load_config,
    parse_config,
    run,
)
from ecuchain.transactions import ChallengeRecordTx

SMALL = SimConfig(n_vehicles=4, n_rsus=2, n_rounds=2, ecus_per_vehicle=4, seed=21)


# -- config ---------------------------------------------------------------------


def test_parse_config_full():
    cfg = parse_config(
        """
        # scenario
        n_vehicles = 6
        n_rsus = 3
        ecus_per_vehicle = 8
        n_rounds = 2
        seed = 99
        link_latency_ms = 5
        attack = replay,2,3
        attack = sybil,0,1
        maintenance = 1,4,2
        """
    )
    assert cfg.n_vehicles == 6
    assert cfg.attacks == (
        AttackPlanEntry(AttackKind.REPLAY, 2, 3),
        AttackPlanEntry(AttackKind.SYBIL, 0, 1),
    )
    assert cfg.maintenance == (MaintenancePlanEntry(1, 4, 2),)


def test_parse_config_rejects_unknown_key():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config("n_vehicels = 3")


def test_parse_config_rejects_unknown_attack():
    with pytest.raises(ConfigError, match="unknown attack kind"):
        parse_config("attack = downgrade,0,1")


def test_parse_config_rejects_bad_values():
    with pytest.raises(ConfigError):
        parse_config("n_vehicles = many")
    with pytest.raises(ConfigError):
        parse_config("n_vehicles = 0")
    with pytest.raises(ConfigError, match="out of range"):
        parse_config("n_vehicles = 3\nattack = sybil,7,1")
    with pytest.raises(ConfigError, match="replay"):
        parse_config("attack = replay,0,0")


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.cfg")


# -- event queue ------------------------------------------------------------------


def test_queue_rejects_scheduling_in_past():
    clock = SimClock()
    queue = EventQueue(clock)
    queue.schedule(SimEvent(5, EventKind.ARRIVAL, "v0"))
    queue.pop()
    assert clock.now == 5
    with pytest.raises(ValueError, match="past"):
        queue.schedule(SimEvent(3, EventKind.ARRIVAL, "v0"))


def test_queue_pop_order_is_sorted():
    queue = EventQueue(SimClock())
    for ts in (9, 1, 5, 3, 7):
        queue.schedule(SimEvent(ts, EventKind.ARRIVAL, "v0"))
    assert [queue.pop().fire_ts for _ in range(5)] == [1, 3, 5, 7, 9]


def test_queue_breaks_ties_by_kind_then_subject():
    queue = EventQueue(SimClock())
    queue.schedule(SimEvent(4, EventKind.ARRIVAL, "v1"))
    queue.schedule(SimEvent(4, EventKind.ARRIVAL, "v0"))
    queue.schedule(SimEvent(4, EventKind.ATTACK_TRIGGER, "v9"))
    popped = [(e.kind, e.subject) for e in (queue.pop(), queue.pop(), queue.pop())]
    assert popped == [
        (EventKind.ATTACK_TRIGGER, "v9"),
        (EventKind.ARRIVAL, "v0"),
        (EventKind.ARRIVAL, "v1"),
    ]


# -- build_world -------------------------------------------------------------------


def test_build_world_registers_all_vehicles():
    world = build_world(SimConfig(n_vehicles=10, seed=1))
    assert len(world.roadside.ledger) == 10
    assert world.roadside.ledger.validate()


def test_build_world_deterministic():
    a = build_world(SMALL).roadside.ledger.serialize()
    b = build_world(SMALL).roadside.ledger.serialize()
    assert a == b


def test_seed_changes_key_material():
    import dataclasses

    a = build_world(SMALL).roadside.ledger.serialize()
    b = build_world(dataclasses.replace(SMALL, seed=SMALL.seed + 1)).roadside.ledger.serialize()
    assert a != b


def test_build_world_rejects_invalid_config():
    with pytest.raises(ConfigError):
        build_world(SimConfig(n_vehicles=0))


# -- runs --------------------------------------------------------------------------


def test_honest_run_all_valid():
    result = run(build_world(SMALL))
    assert result.report.verdict_counts == {"Valid": 16}
    assert result.report.encounters == 4 * 2 * 2
    assert result.report.revoked == ()
    assert result.report.ledgers_valid


def test_run_deterministic_replay():
    cfg = SimConfig(
        n_vehicles=5,
        n_rsus=2,
        n_rounds=2,
        seed=123,
        attacks=(AttackPlanEntry(AttackKind.FAKE_DATA, 1, 2),),
        maintenance=(MaintenancePlanEntry(0, 1, 1),),
    )
    first_world = build_world(cfg)
    first = run(first_world)
    second_world = build_world(cfg)
    second = run(second_world)
    assert first.event_log == second.event_log
    assert (
        first_world.roadside.ledger.serialize()
        == second_world.roadside.ledger.serialize()
    )
    assert (
        first_world.authority_tier.ledger.serialize()
        == second_world.authority_tier.ledger.serialize()
    )


def test_attack_detected_at_trigger_round():
    cfg = SimConfig(
        n_vehicles=3,
        n_rsus=2,
        n_rounds=2,
        seed=5,
        attacks=(AttackPlanEntry(AttackKind.CODE_INJECTION, 2, 2),),
    )
    result = run(build_world(cfg))
    encounters_v2 = [
        line.split("\t")
        for line in result.event_log
        if line.split("\t")[1] == "encounter" and line.split("\t")[2] == "v2"
    ]
    verdicts = [row[3] for row in encounters_v2]
    assert verdicts[:2] == ["Valid", "Valid"]
    assert verdicts[2] == "StateMismatch"
    assert len(verdicts) == 3  # revoked afterwards: no further encounters
    assert result.report.revoked == ("v2",)
    assert result.report.refused == 1


def test_revoked_vehicle_completes_zero_further_rounds():
    cfg = SimConfig(
        n_vehicles=2,
        n_rsus=3,
        n_rounds=3,
        seed=6,
        attacks=(AttackPlanEntry(AttackKind.FAKE_DATA, 0, 1),),
    )
    result = run(build_world(cfg))
    v0_rows = [l.split("\t") for l in result.event_log if l.split("\t")[2] == "v0"]
    kinds = [row[1] for row in v0_rows]
    assert kinds.count("encounter") == 2  # one valid, one detected
    assert "revoke" in kinds
    revoke_at = kinds.index("revoke")
    assert all(k == "refused" for k in kinds[revoke_at + 1 :])


def test_conservation_records_match_valid_verdicts():
    cfg = SimConfig(n_vehicles=3, n_rsus=2, n_rounds=4, ecus_per_vehicle=4, seed=77)
    world = build_world(cfg)
    result = run(world)
    from ecuchain.ledger import reconstruct_history

    for i, vehicle in enumerate(world.vehicles):
        valid = sum(
            1
            for line in result.event_log
            if line.split("\t")[1:4] == ["encounter", f"v{i}", "Valid"]
        )
        block = world.roadside.ledger.lookup(vehicle.pk)
        history = reconstruct_history(block, world.roadside.archive)
        records = sum(1 for e in history if isinstance(e.payload, ChallengeRecordTx))
        assert records == valid


def test_honest_vehicle_state_matches_ledger_profile():
    world = build_world(SMALL)
    run(world)
    for vehicle in world.vehicles:
        profile = world.roadside.profiles[vehicle.pk]
        assert compute_state_root(vehicle.ecu_state).root == profile.expected_root


def test_revocations_match_reports():
    cfg = SimConfig(
        n_vehicles=4,
        n_rsus=2,
        n_rounds=2,
        seed=8,
        attacks=(
            AttackPlanEntry(AttackKind.FAKE_DATA, 0, 1),
            AttackPlanEntry(AttackKind.REPLAY, 3, 2),
        ),
    )
    world = build_world(cfg)
    result = run(world)
    reported = {
        world.subject_by_pk[e.vehicle_pk] for e in world.transport.reports
    }
    assert set(result.report.revoked) == reported == {"v0", "v3"}
    assert world.transport.revocation_list == world.legal.revocation_list


def test_maintenance_keeps_vehicle_valid():
    cfg = SimConfig(
        n_vehicles=2,
        n_rsus=2,
        n_rounds=3,
        seed=31,
        maintenance=(
            MaintenancePlanEntry(0, 3, 1),
            MaintenancePlanEntry(0, 1, 4),
        ),
    )
    result = run(build_world(cfg))
    assert result.report.verdict_counts == {"Valid": 12}


def test_link_latency_shifts_response_timestamps():
    cfg = SimConfig(n_vehicles=1, n_rsus=1, n_rounds=2, seed=2, link_latency_ms=7)
    world = build_world(cfg)
    run(world)
    profile = world.roadside.profiles[world.vehicles[0].pk]
    # last recorded response carries arrival time + latency
    assert profile.last_response_ts % 10 == 7


def test_event_log_text_format():
    result = run(build_world(SimConfig(n_vehicles=1, n_rsus=1, n_rounds=1, seed=1)))
    text = event_log_text(result.event_log)
    assert text.endswith("\n")
    rows = [line.split("\t") for line in text.strip().split("\n")]
    assert all(len(row) == 4 for row in rows)
    assert rows[0][1] == "init"
    assert rows[-1][1] == "encounter"
