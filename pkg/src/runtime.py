"""
Bulk-synchronous worker/message runtime.

A stage is a picklable callable ``stage(ctx, data)`` run once per logical worker.
Messages sent during a stage are routed at the barrier and become the inbox of the
next stage, so a worker only ever reads messages from an earlier superstep. Both
modes therefore see the same messages in the same order:

- emulated: all logical workers run in ascending id order in this process;
- parallel: logical workers are split into contiguous ranges, one range per
  physical worker of a process pool, each range run in ascending id order.
"""

import logging
import multiprocessing as mp
import os
from collections import defaultdict, deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Callable, Sequence

log = logging.getLogger(__name__)


class Mode(str, Enum):
    EMULATED = "emulated"
    PARALLEL = "parallel"


class MessageKind(str, Enum):
    ROW_BLOCK = "RowBlock"
    COUPLING_VECTOR = "CouplingVector"
    NORM_CONTRIBUTION = "NormContribution"
    CONTROL = "Control"


class DeadlockError(RuntimeError):
    """A worker waited on a channel that nothing was sent to."""


class WorkerError(RuntimeError):
    """An exception raised inside a worker's stage function, kept as ``cause``."""

    def __init__(self, worker: int, message: str, cause: BaseException | None = None):
        super().__init__(worker, message, cause)
        self.worker = worker
        self.message = message
        self.cause = cause

    def __str__(self):
        return f"worker {self.worker} failed: {self.message}"


@dataclass(frozen=True)
class Message:
    kind: MessageKind
    source: int
    dest: int
    payload: Any
    sequence: int = -1


@dataclass(frozen=True)
class WorkerRole:
    fine_level: int  # 1-based
    coarse_level: int | None = None  # 1-based, block-end workers only


@dataclass(frozen=True)
class WorkerTopology:
    """
    Logical worker set. Worker ``w`` (0-based) owns fine time level ``w + 1``; with a
    block length J the block-end workers ``J - 1, 2J - 1, ...`` also own the coarse
    levels.
    """

    num_workers: int
    mode: Mode = Mode.EMULATED
    physical_workers: int | None = None
    block_len: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.num_workers < 1:
            raise ValueError(f"num_workers must be >= 1, got {self.num_workers}.")
        if self.physical_workers is not None and self.physical_workers < 1:
            raise ValueError(
                f"physical_workers must be >= 1, got {self.physical_workers}."
            )
        if self.block_len is not None and (
            self.block_len < 1 or self.num_workers % self.block_len
        ):
            raise ValueError(
                f"block_len={self.block_len} does not divide "
                f"{self.num_workers} workers."
            )

    @classmethod
    def from_environment(
        cls, num_workers: int, mode: str | None = None, workers: int | None = None
    ) -> "WorkerTopology":
        """Fill unset mode and worker count from PARADIN_MODE and PARADIN_WORKERS."""
        mode = mode or os.environ.get("PARADIN_MODE", Mode.EMULATED.value)
        if workers is None and os.environ.get("PARADIN_WORKERS"):
            workers = int(os.environ["PARADIN_WORKERS"])
        return cls(num_workers, Mode(mode), workers)

    def role(self, worker: int) -> WorkerRole:
        if not 0 <= worker < self.num_workers:
            raise ValueError(f"no worker {worker} in a topology of {self.num_workers}.")
        coarse = None
        if self.block_len is not None and (worker + 1) % self.block_len == 0:
            coarse = (worker + 1) // self.block_len
        return WorkerRole(worker + 1, coarse)

    def ways(self) -> int:
        if self.mode is Mode.EMULATED:
            return 1
        ways = self.physical_workers or mp.cpu_count()
        return max(1, min(ways, self.num_workers))

    def partitions(self) -> list[range]:
        """Contiguous logical-worker ranges, one per physical worker."""
        ways = self.ways()
        k, m = divmod(self.num_workers, ways)
        parts = (
            range(i * k + min(i, m), (i + 1) * k + min(i + 1, m)) for i in range(ways)
        )
        return [part for part in parts if len(part) > 0]


class WorkerContext:
    """What a stage function sees: its id, its inbox and a send primitive."""

    def __init__(self, worker: int, num_workers: int, inbox: Sequence[Message] = ()):
        self.worker = worker
        self.num_workers = num_workers
        self.outbox: list[Message] = []
        self._inbox: dict[tuple[int, MessageKind], deque] = defaultdict(deque)
        for message in inbox:
            self._inbox[(message.source, message.kind)].append(message)

    def send(self, dest: int, kind: MessageKind, payload: Any) -> None:
        if not 0 <= dest < self.num_workers:
            raise ValueError(f"worker {self.worker} sent to unknown worker {dest}.")
        self.outbox.append(Message(MessageKind(kind), self.worker, dest, payload))

    def recv(self, source: int, kind: MessageKind) -> Any:
        queue = self._inbox.get((source, MessageKind(kind)))
        if not queue:
            raise DeadlockError(
                f"worker {self.worker} blocked receiving {MessageKind(kind).value} "
                f"from worker {source}: no message pending"
            )
        return queue.popleft().payload

    def unconsumed(self) -> list[Message]:
        return [message for queue in self._inbox.values() for message in queue]


@dataclass
class StageResult:
    outputs: list
    messages: list[Message]


def _run_partition(stage, workers, num_workers, data, inboxes):
    # executed in this process (emulated) or in a pool process (parallel)
    results = []
    for worker, item in zip(workers, data):
        ctx = WorkerContext(worker, num_workers, inboxes.get(worker, ()))
        try:
            output = stage(ctx, item)
        except DeadlockError:
            raise
        except Exception as exc:
            raise WorkerError(worker, f"{type(exc).__name__}: {exc}", exc) from exc
        results.append((output, ctx.outbox, len(ctx.unconsumed())))
    return results


class Runtime:
    """
    Runs stages on a topology. In parallel mode it owns a process pool, so use it as
    a context manager.
    """

    def __init__(self, topology: WorkerTopology):
        self.topology = topology
        self._pool: ProcessPoolExecutor | None = None
        self._sequence: dict[tuple[int, int], int] = defaultdict(int)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    @property
    def num_workers(self) -> int:
        return self.topology.num_workers

    @property
    def mode(self) -> Mode:
        return self.topology.mode

    def _executor(self) -> ProcessPoolExecutor:
        if self._pool is None:
            ways = len(self.topology.partitions())
            log.debug(f"Starting a pool of {ways} worker processes.")
            self._pool = ProcessPoolExecutor(
                max_workers=ways, mp_context=mp.get_context("spawn")
            )
        return self._pool

    def run_stage(
        self,
        stage: Callable[[WorkerContext, Any], Any],
        data: Sequence | None = None,
        inbox: Sequence[Message] = (),
    ) -> StageResult:
        """
        Run ``stage`` on every logical worker.

        Parameters
        ----------
        stage
            Module-level callable ``stage(ctx, item)``.
        data
            One item per worker (``None`` for all when omitted).
        inbox
            Messages produced by the previous stage.

        Returns
        -------
        StageResult
            Outputs in worker order and the messages sent, sequence-stamped.
        """
        n = self.num_workers
        data = [None] * n if data is None else list(data)
        if len(data) != n:
            raise ValueError(f"got {len(data)} stage inputs for {n} workers.")
        inboxes: dict[int, list[Message]] = defaultdict(list)
        for message in inbox:
            inboxes[message.dest].append(message)

        if self.mode is Mode.EMULATED:
            results = _run_partition(stage, range(n), n, data, inboxes)
        else:
            pool = self._executor()
            futures = [
                pool.submit(
                    _run_partition,
                    stage,
                    part,
                    n,
                    [data[w] for w in part],
                    {w: inboxes[w] for w in part if w in inboxes},
                )
                for part in self.topology.partitions()
            ]
            results = [item for future in futures for item in future.result()]

        outputs, messages, leftover = [], [], 0
        for output, outbox, unconsumed in results:
            outputs.append(output)
            leftover += unconsumed
            for message in outbox:
                key = (message.source, message.dest)
                messages.append(replace(message, sequence=self._sequence[key]))
                self._sequence[key] += 1
        if leftover:
            log.warning(f"{leftover} message(s) were delivered but never received.")
        return StageResult(outputs, messages)


def run_stage(
    topology: WorkerTopology,
    stage: Callable[[WorkerContext, Any], Any],
    data: Sequence | None = None,
    inbox: Sequence[Message] = (),
) -> StageResult:
    """One-shot form of ``Runtime.run_stage``."""
    with Runtime(topology) as runtime:
        return runtime.run_stage(stage, data, inbox)


def reduce_norm(contributions) -> float:
    """Sum in ascending worker order."""
    total = 0.0
    for value in contributions:
        total += float(value)
    return total
