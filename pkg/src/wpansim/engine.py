"""Deterministic discrete-event kernel.

Simulated time is an integer count of microsecond ticks.  Events at equal
times are delivered in the order they were scheduled.  Protocol logic is
written either as plain callbacks or as generator processes that yield

* an ``int``: sleep for that many ticks,
* a :class:`Signal`: suspend until it fires, receiving its value.

Random streams are :class:`random.Random` (MT19937) instances, one per
``(node, purpose)`` pair, seeded from the first 8 bytes of
``sha256("<seed>:<node>:<purpose>")`` read little-endian.
"""

from __future__ import annotations

import hashlib
import heapq
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Generator


class ClockViolation(ValueError):
    """Raised when an event is scheduled before the current time."""


@dataclass(eq=False)
class Event:
    fire_at: int
    seq: int
    callback: Callable[..., Any]
    args: tuple = ()
    target: tuple[str | None, str | None] = (None, None)
    kind: str = ""
    payload: Any = None
    pending: bool = True

    def __lt__(self, other: Event) -> bool:
        return (self.fire_at, self.seq) < (other.fire_at, other.seq)


EventHandle = Event


class Simulator:
    def __init__(self, seed: int = 0):
        self.seed = seed
        self.now = 0
        self._queue: list[Event] = []
        self._seq = 0
        self._streams: dict[tuple[str, str], random.Random] = {}
        self.delivered = 0
        # optional hook called with every delivered event (replay tests)
        self.on_deliver: Callable[[Event], None] | None = None

    # -- scheduling ---------------------------------------------------------

    def schedule_at(self, t: int, callback: Callable[..., Any], *args: Any,
                    target: tuple[str | None, str | None] = (None, None),
                    kind: str = "", payload: Any = None) -> EventHandle:
        if t < self.now:
            raise ClockViolation(f"cannot schedule at t={t} < now={self.now}")
        ev = Event(int(t), self._seq, callback, args, target, kind, payload)
        self._seq += 1
        heapq.heappush(self._queue, ev)
        return ev

    def schedule(self, delay: int, callback: Callable[..., Any], *args: Any, **kw: Any) -> EventHandle:
        return self.schedule_at(self.now + delay, callback, *args, **kw)

    def cancel(self, handle: EventHandle | None) -> bool:
        if handle is None or not handle.pending:
            return False
        handle.pending = False
        return True

    def peek(self) -> int | None:
        while self._queue and not self._queue[0].pending:
            heapq.heappop(self._queue)
        return self._queue[0].fire_at if self._queue else None

    def run(self, until: int) -> int:
        """Deliver every event with ``fire_at <= until``.

        Returns the number of events delivered.  The clock is left at the
        time of the last delivered event; it does not jump to ``until``.
        """
        count = 0
        queue = self._queue
        while queue:
            ev = queue[0]
            if not ev.pending:
                heapq.heappop(queue)
                continue
            if ev.fire_at > until:
                break
            heapq.heappop(queue)
            ev.pending = False
            self.now = ev.fire_at
            count += 1
            if self.on_deliver is not None:
                self.on_deliver(ev)
            ev.callback(*ev.args)
        self.delivered += count
        return count

    # -- randomness ---------------------------------------------------------

    def rng(self, node: str, purpose: str) -> random.Random:
        key = (str(node), purpose)
        stream = self._streams.get(key)
        if stream is None:
            stream = random.Random(derive_seed(self.seed, node, purpose))
            self._streams[key] = stream
        return stream

    # -- processes ----------------------------------------------------------

    def signal(self) -> Signal:
        return Signal(self)

    def process(self, gen: Generator, name: str = "") -> Process:
        return Process(self, gen, name)

    def timeout(self, delay: int, value: Any = None) -> Signal:
        sig = Signal(self)
        self.schedule(delay, sig.succeed, value)
        return sig

    def first_of(self, sig: Signal, timeout: int) -> Signal:
        """Signal carrying ``sig``'s value, or :data:`TIMEOUT` after ``timeout`` ticks."""
        out = Signal(self)
        timer = self.schedule(timeout, _fire_once, out, TIMEOUT)

        def relay(value: Any) -> None:
            self.cancel(timer)
            _fire_once(out, value)

        sig.add_callback(relay)
        return out


def derive_seed(seed: int, node: Any, purpose: str) -> int:
    digest = hashlib.sha256(f"{seed}:{node}:{purpose}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


class _Timeout:
    def __repr__(self) -> str:
        return "TIMEOUT"


TIMEOUT = _Timeout()


def _fire_once(sig: Signal, value: Any) -> None:
    if not sig.triggered:
        sig.succeed(value)


class Signal:
    """One-shot notification.  Waiters are resumed through the event queue."""

    __slots__ = ("_sim", "triggered", "value", "_callbacks")

    def __init__(self, sim: Simulator):
        self._sim = sim
        self.triggered = False
        self.value: Any = None
        self._callbacks: list[Callable[[Any], None]] = []

    def succeed(self, value: Any = None) -> None:
        if self.triggered:
            raise RuntimeError("signal already triggered")
        self.triggered = True
        self.value = value
        for cb in self._callbacks:
            self._sim.schedule(0, cb, value)
        self._callbacks.clear()

    def add_callback(self, cb: Callable[[Any], None]) -> None:
        if self.triggered:
            self._sim.schedule(0, cb, self.value)
        else:
            self._callbacks.append(cb)


@dataclass(eq=False)
class Process:
    sim: Simulator
    gen: Generator
    name: str = ""
    alive: bool = True
    done: Signal = field(init=False)
    _timer: Event | None = field(default=None, init=False, repr=False)
    _token: int = field(default=0, init=False, repr=False)

    def __post_init__(self) -> None:
        self.done = Signal(self.sim)
        self._timer = self.sim.schedule(0, self._step, None, 0)

    def kill(self) -> None:
        if not self.alive:
            return
        self.alive = False
        self.sim.cancel(self._timer)
        self.gen.close()
        self.done.succeed(None)

    def _step(self, value: Any, token: int) -> None:
        # stale wake-ups (from an abandoned wait) carry an old token
        if not self.alive or token != self._token:
            return
        self._timer = None
        try:
            cmd = self.gen.send(value)
        except StopIteration as stop:
            self.alive = False
            self.done.succeed(stop.value)
            return
        self._token += 1
        token = self._token
        if isinstance(cmd, int):
            self._timer = self.sim.schedule(cmd, self._step, None, token)
        elif isinstance(cmd, Signal):
            cmd.add_callback(lambda v: self._step(v, token))
        elif isinstance(cmd, Process):
            cmd.done.add_callback(lambda v: self._step(v, token))
        else:
            raise TypeError(f"process {self.name!r} yielded {cmd!r}")
