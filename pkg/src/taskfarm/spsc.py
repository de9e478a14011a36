"""Lock-free bounded single-producer/single-consumer FIFO queue.

The queue is a fixed ring of slots where fullness is tracked per slot, not
by comparing head and tail: a slot is writable iff it holds the EMPTY
marker, readable iff it does not.  Consequences:

* The producer reads and writes only its own index (``pwrite``); the
  consumer only ``pread``.  Neither index is shared state, so the two
  threads never contend on an index word and no compare-and-swap is needed.
* All ``capacity`` slots are usable (no sacrificial empty slot).
* Re-pushing a previously popped object is always safe -- the protocol
  keys on slot occupancy, never on payload identity, so there is no ABA
  hazard.

Slot occupancy is expressed with a private unforgeable marker object
rather than a reserved user value, so every user payload -- including
``None``, ``0`` and ``False`` -- is legal.  ``EOS`` is a second marker
used by the layers above as an end-of-stream control token; unlike EMPTY
it travels through queues like any payload.

CPython note: the interpreter executes each bytecode under the global
lock and publishes stores in program order, so the plain list/int
assignments below are the moral equivalent of release/acquire slot
accesses.  On a free-threaded or weakly ordered runtime the slot store in
``push`` must become a release store and the slot load in ``pop`` an
acquire load.
"""

from __future__ import annotations


class _Marker:
    """Unforgeable sentinel; compared by identity only."""

    __slots__ = ("_name",)

    def __init__(self, name: str):
        self._name = name

    def __repr__(self):
        return self._name

    def __reduce__(self):
        # Pickling would forge a second identity; these tokens are
        # process-local by design.
        raise TypeError(f"{self._name} marker cannot be pickled")


#: Slot-vacancy marker.  Returned by pop() when nothing is available;
#: never a valid payload.
EMPTY = _Marker("EMPTY")

#: End-of-stream control token.  Pushed and popped like a payload; layers
#: above interpret it as "no more input on this channel".
EOS = _Marker("EOS")


class SpscQueue:
    """Bounded lock-free FIFO for exactly one producer and one consumer.

    The producer role and the consumer role must each be exercised by a
    single thread at a time (the handle itself may be passed between
    threads).  ``push`` and ``pop`` never block and complete in a bounded
    number of steps regardless of what the peer thread is doing.
    """

    __slots__ = ("_buf", "_size", "_pwrite", "_pread")

    def __init__(self, capacity: int):
        if capacity <= 1:
            # A 1-slot queue degenerates to a rendezvous, which defeats
            # the point of a buffered channel.
            raise ValueError(f"capacity must be > 1, got {capacity}")
        self._size = capacity
        self._buf = [EMPTY] * capacity
        self._pwrite = 0  # producer-owned
        self._pread = 0   # consumer-owned

    def push(self, data) -> bool:
        """Producer side: publish one payload.

        Returns False (queue unchanged) when the queue is full or when
        ``data`` is the EMPTY marker itself.
        """
        if data is EMPTY:
            return False
        w = self._pwrite
        buf = self._buf
        if buf[w] is EMPTY:
            buf[w] = data
            self._pwrite = w + (1 - self._size if w + 1 >= self._size else 1)
            return True
        return False

    def pop(self):
        """Consumer side: take the oldest payload, or return EMPTY."""
        r = self._pread
        buf = self._buf
        data = buf[r]
        if data is EMPTY:
            return EMPTY
        buf[r] = EMPTY
        self._pread = r + (1 - self._size if r + 1 >= self._size else 1)
        return data

    def capacity(self) -> int:
        return self._size

    def unsafe_len(self) -> int:
        """Occupied-slot count.  Only meaningful while both ends are quiescent."""
        buf = self._buf
        return self._size - sum(1 for slot in buf if slot is EMPTY)

    def free_slots_hint(self) -> int:
        """Producer-side stale estimate of free slots.

        The consumer only ever *frees* slots, so a stale read of its index
        can only understate the true value; the hint is safe to use for
        admission decisions (it never promises a slot that is not there).
        """
        w = self._pwrite
        r = self._pread  # racy read, may lag the consumer
        if r == w:
            # Ambiguous: completely empty and completely full look alike
            # from the indices; the slot under pwrite disambiguates.
            return 0 if self._buf[w] is not EMPTY else self._size
        return (r - w) % self._size

    def check_invariants(self) -> None:
        """Debug assertion: index ranges and occupancy layout.

        Requires quiescence.  Occupied slots must form one contiguous run
        from pread up to (not including) pwrite, modulo wraparound.
        """
        size = self._size
        assert 0 <= self._pwrite < size, self._pwrite
        assert 0 <= self._pread < size, self._pread
        occupied = [slot is not EMPTY for slot in self._buf]
        n = sum(occupied)
        if self._pwrite == self._pread:
            assert n in (0, size), f"ambiguous index overlap with {n} occupied"
        else:
            expect = (self._pwrite - self._pread) % size
            assert n == expect, f"{n} occupied, indices imply {expect}"
        for i in range(n):
            assert occupied[(self._pread + i) % size], f"hole at offset {i}"

    def __repr__(self):
        return (f"SpscQueue(capacity={self._size}, "
                f"pwrite={self._pwrite}, pread={self._pread})")
