use alloc::collections::BinaryHeap;
use core::cmp::Ordering;

use crate::model::SimTime;

struct Entry<K> {
    time: SimTime,
    seq: u64,
    kind: K,
}

impl<K> PartialEq for Entry<K> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<K> Eq for Entry<K> {}

impl<K> PartialOrd for Entry<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<K> Ord for Entry<K> {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Future event list popping in strict `(time, seq)` order. `seq` is assigned
/// at insertion and breaks every time tie.
pub struct EventQueue<K> {
    heap: BinaryHeap<Entry<K>>,
    next_seq: u64,
    last: Option<(SimTime, u64)>,
}

impl<K> Default for EventQueue<K> {
    fn default() -> Self {
        EventQueue { heap: BinaryHeap::new(), next_seq: 0, last: None }
    }
}

impl<K> EventQueue<K> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Schedules `kind` at `time`; returns the assigned sequence number.
    ///
    /// Scheduling into the past is a logic error.
    pub fn push(&mut self, time: SimTime, kind: K) -> u64 {
        debug_assert!(self.last.is_none_or(|(t, _)| time >= t), "event scheduled before current time");
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry { time, seq, kind });
        seq
    }

    pub fn pop(&mut self) -> Option<(SimTime, u64, K)> {
        let e = self.heap.pop()?;
        self.last = Some((e.time, e.seq));
        Some((e.time, e.seq, e.kind))
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|e| e.time)
    }

    /// Time of the most recently popped event.
    pub fn now(&self) -> Option<SimTime> {
        self.last.map(|(t, _)| t)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
