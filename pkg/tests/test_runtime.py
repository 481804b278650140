import logging
import math

import numpy as np
import pytest

from runtime import (
    DeadlockError,
    Message,
    MessageKind,
    Mode,
    Runtime,
    WorkerError,
    WorkerTopology,
    reduce_norm,
    run_stage,
)


# stages live at module level so spawned pool processes can unpickle them


def double(ctx, item):
    return 2 * item


def send_right(ctx, item):
    if ctx.worker + 1 < ctx.num_workers:
        ctx.send(ctx.worker + 1, MessageKind.COUPLING_VECTOR, np.full(3, item))
        ctx.send(ctx.worker + 1, MessageKind.CONTROL, ctx.worker)
    return ctx.worker


def receive_left(ctx, item):
    if ctx.worker == 0:
        return None
    vector = ctx.recv(ctx.worker - 1, MessageKind.COUPLING_VECTOR)
    source = ctx.recv(ctx.worker - 1, MessageKind.CONTROL)
    return float(np.sum(vector)) + source


def receive_nothing_sent(ctx, item):
    return ctx.recv((ctx.worker + 1) % ctx.num_workers, MessageKind.ROW_BLOCK)


def fail_on_two(ctx, item):
    if ctx.worker == 2:
        raise ZeroDivisionError("bad level")
    return item


def send_twice(ctx, item):
    if ctx.worker == 0:
        ctx.send(1, MessageKind.COUPLING_VECTOR, 1.0)
        ctx.send(1, MessageKind.COUPLING_VECTOR, 2.0)


def send_to_nobody(ctx, item):
    ctx.send(ctx.num_workers, MessageKind.CONTROL, None)


def mix(ctx, item):
    rng = np.random.default_rng(item)
    values = rng.standard_normal(50)
    return values @ values + ctx.worker


def test_emulated_outputs_follow_worker_order():
    topology = WorkerTopology(5)
    result = run_stage(topology, double, [1, 2, 3, 4, 5])
    assert result.outputs == [2, 4, 6, 8, 10]
    assert result.messages == []


def test_messages_are_delivered_at_the_barrier():
    with Runtime(WorkerTopology(4)) as runtime:
        sent = runtime.run_stage(send_right, [1.0, 2.0, 3.0, 4.0])
        assert len(sent.messages) == 6
        got = runtime.run_stage(receive_left, inbox=sent.messages)
    assert got.outputs == [None, 3.0, 7.0, 11.0]


def test_sequence_numbers_per_channel():
    with Runtime(WorkerTopology(2)) as runtime:
        first = runtime.run_stage(send_twice)
        second = runtime.run_stage(send_twice)
    assert [m.sequence for m in first.messages] == [0, 1]
    assert [m.sequence for m in second.messages] == [2, 3]
    assert all(m.source == 0 and m.dest == 1 for m in first.messages)


def test_receive_without_message_is_a_deadlock():
    with pytest.raises(DeadlockError, match="worker 0 blocked"):
        run_stage(WorkerTopology(3), receive_nothing_sent)


def test_worker_exception_carries_worker_and_cause():
    with pytest.raises(WorkerError) as info:
        run_stage(WorkerTopology(4), fail_on_two, [0, 1, 2, 3])
    assert info.value.worker == 2
    assert isinstance(info.value.cause, ZeroDivisionError)
    assert "worker 2 failed" in str(info.value)


def test_send_to_unknown_worker_fails():
    with pytest.raises(WorkerError) as info:
        run_stage(WorkerTopology(2), send_to_nobody)
    assert isinstance(info.value.cause, ValueError)


def test_unconsumed_messages_are_logged(caplog):
    with Runtime(WorkerTopology(2)) as runtime:
        sent = runtime.run_stage(send_twice)
        with caplog.at_level(logging.WARNING):
            runtime.run_stage(double, [0, 0], inbox=sent.messages)
    assert "never received" in caplog.text


def test_stage_input_count_must_match_workers():
    with pytest.raises(ValueError):
        run_stage(WorkerTopology(3), double, [1, 2])


def test_topology_roles_and_partitions():
    topology = WorkerTopology(8, block_len=4)
    assert topology.role(2).fine_level == 3
    assert topology.role(2).coarse_level is None
    assert topology.role(3).coarse_level == 1
    assert topology.role(7).coarse_level == 2
    with pytest.raises(ValueError):
        topology.role(8)

    parallel = WorkerTopology(10, Mode.PARALLEL, physical_workers=3)
    assert parallel.partitions() == [range(0, 4), range(4, 7), range(7, 10)]
    assert WorkerTopology(10).partitions() == [range(0, 10)]
    assert WorkerTopology(2, Mode.PARALLEL, physical_workers=8).ways() == 2


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(num_workers=0),
        dict(num_workers=4, physical_workers=0),
        dict(num_workers=6, block_len=4),
        dict(num_workers=4, mode="threads"),
    ],
)
def test_invalid_topology(kwargs):
    with pytest.raises(ValueError):
        WorkerTopology(**kwargs)


def test_topology_from_environment(monkeypatch):
    monkeypatch.setenv("PARADIN_MODE", "parallel")
    monkeypatch.setenv("PARADIN_WORKERS", "3")
    topology = WorkerTopology.from_environment(12)
    assert topology.mode is Mode.PARALLEL
    assert topology.physical_workers == 3
    explicit = WorkerTopology.from_environment(12, "emulated", 2)
    assert explicit.mode is Mode.EMULATED
    assert explicit.physical_workers == 2
    monkeypatch.delenv("PARADIN_MODE")
    monkeypatch.delenv("PARADIN_WORKERS")
    assert WorkerTopology.from_environment(4).mode is Mode.EMULATED


def test_reduce_norm_sums_in_worker_order():
    values = np.random.default_rng(0).uniform(0.0, 1.0, 1000)
    expected = 0.0
    for value in values:
        expected += value
    assert reduce_norm(values) == expected
    assert reduce_norm(values) == pytest.approx(math.fsum(values), rel=1e-13)
    assert reduce_norm([]) == 0.0


def test_message_is_immutable():
    message = Message(MessageKind.CONTROL, 0, 1, None)
    assert message.sequence == -1
    with pytest.raises(AttributeError):
        message.sequence = 3


def _run_both_modes(stage_pairs, workers=6):
    results = {}
    for mode in Mode:
        topology = WorkerTopology(workers, mode, physical_workers=2)
        with Runtime(topology) as runtime:
            outputs = []
            inbox = ()
            for stage, data in stage_pairs:
                result = runtime.run_stage(stage, data, inbox)
                outputs.append(result.outputs)
                inbox = result.messages
            results[mode] = (outputs, inbox)
    return results


def test_parallel_mode_is_bitwise_identical_to_emulated():
    results = _run_both_modes(
        [(send_right, [0.5, 1.5, 2.5, 3.5, 4.5, 5.5]), (receive_left, None)]
    )
    assert results[Mode.EMULATED][0] == results[Mode.PARALLEL][0]

    vectors = _run_both_modes([(mix, list(range(6)))])
    assert vectors[Mode.EMULATED][0] == vectors[Mode.PARALLEL][0]


def test_parallel_errors_propagate():
    topology = WorkerTopology(4, Mode.PARALLEL, physical_workers=2)
    with Runtime(topology) as runtime:
        with pytest.raises(WorkerError) as info:
            runtime.run_stage(fail_on_two, [0, 1, 2, 3])
        assert info.value.worker == 2
        with pytest.raises(DeadlockError):
            runtime.run_stage(receive_nothing_sent)
