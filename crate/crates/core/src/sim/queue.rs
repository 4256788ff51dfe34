use std::collections::BTreeMap;

use crate::net::Micros;

/// Time-ordered events; equal times pop in insertion order.
#[derive(Debug)]
pub struct EventQueue<E> {
    events: BTreeMap<(Micros, u64), E>,
    seq: u64,
    now: Micros,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        EventQueue { events: BTreeMap::new(), seq: 0, now: 0 }
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> Micros {
        self.now
    }

    /// Events in the past are clamped to now.
    pub fn schedule(&mut self, at: Micros, event: E) {
        let at = at.max(self.now);
        self.events.insert((at, self.seq), event);
        self.seq += 1;
    }

    pub fn peek_time(&self) -> Option<Micros> {
        self.events.keys().next().map(|&(t, _)| t)
    }

    pub fn pop(&mut self) -> Option<(Micros, E)> {
        let ((t, _), e) = self.events.pop_first()?;
        self.now = t;
        Some((t, e))
    }

    pub fn advance_to(&mut self, t: Micros) {
        self.now = self.now.max(t);
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_and_ties() {
        let mut q = EventQueue::new();
        q.schedule(5, "b");
        q.schedule(1, "a");
        q.schedule(5, "c");
        let order: Vec<_> = std::iter::from_fn(|| q.pop()).collect();
        assert_eq!(order, vec![(1, "a"), (5, "b"), (5, "c")]);
    }

    #[test]
    fn past_is_clamped() {
        let mut q = EventQueue::new();
        q.schedule(10, 1);
        q.pop();
        q.schedule(3, 2);
        assert_eq!(q.pop(), Some((10, 2)));
    }
}
