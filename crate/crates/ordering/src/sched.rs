use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// A message in flight inside the simulator.
#[derive(Debug, Clone)]
pub struct SimMessage<A, M> {
    pub from: A,
    pub to: A,
    pub payload: M,
    pub deliver_at: u64,
}

struct Queued<A, M> {
    key: (u64, u64),
    msg: SimMessage<A, M>,
}

impl<A, M> PartialEq for Queued<A, M> {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}
impl<A, M> Eq for Queued<A, M> {}
impl<A, M> PartialOrd for Queued<A, M> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<A, M> Ord for Queued<A, M> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key.cmp(&other.key)
    }
}

/// Tick-ordered message queue with seeded uniform latency. Ties on delivery
/// tick are broken by send order, so a run is fully determined by the seed.
pub struct Scheduler<A, M> {
    queue: BinaryHeap<Reverse<Queued<A, M>>>,
    seq: u64,
    rng: ChaCha20Rng,
    latency: (u64, u64),
}

impl<A, M> Scheduler<A, M> {
    pub fn new(seed: u64, min_latency: u64, max_latency: u64) -> Self {
        assert!(min_latency >= 1 && min_latency <= max_latency);
        Scheduler {
            queue: BinaryHeap::new(),
            seq: 0,
            rng: ChaCha20Rng::seed_from_u64(seed),
            latency: (min_latency, max_latency),
        }
    }

    pub fn send(&mut self, now: u64, from: A, to: A, payload: M) -> u64 {
        let deliver_at = now + self.rng.gen_range(self.latency.0..=self.latency.1);
        self.seq += 1;
        let msg = SimMessage { from, to, payload, deliver_at };
        self.queue.push(Reverse(Queued { key: (deliver_at, self.seq), msg }));
        deliver_at
    }

    /// Next message due at or before `now`.
    pub fn pop_due(&mut self, now: u64) -> Option<SimMessage<A, M>> {
        if self.queue.peek()?.0.key.0 > now {
            return None;
        }
        self.queue.pop().map(|q| q.0.msg)
    }

    pub fn next_due(&self) -> Option<u64> {
        self.queue.peek().map(|q| q.0.key.0)
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }
}
