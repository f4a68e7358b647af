use std::collections::VecDeque;

/// Outcome of offering a packet to a queue.
#[derive(Debug, PartialEq, Eq)]
pub enum Enqueue<T> {
    Accepted,
    Dropped(T),
}

/// FIFO that discards arrivals once `capacity` packets are waiting.
#[derive(Debug, Clone)]
pub struct DropTailQueue<T> {
    capacity: usize,
    items: VecDeque<T>,
    max_occupancy: usize,
    drops: u64,
}

impl<T> DropTailQueue<T> {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            items: VecDeque::with_capacity(capacity.min(1024)),
            max_occupancy: 0,
            drops: 0,
        }
    }

    pub fn enqueue(&mut self, item: T) -> Enqueue<T> {
        if self.items.len() >= self.capacity {
            self.drops += 1;
            return Enqueue::Dropped(item);
        }
        self.items.push_back(item);
        self.max_occupancy = self.max_occupancy.max(self.items.len());
        Enqueue::Accepted
    }

    pub fn dequeue(&mut self) -> Option<T> {
        self.items.pop_front()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn max_occupancy(&self) -> usize {
        self.max_occupancy
    }

    pub fn drops(&self) -> u64 {
        self.drops
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn filled(n: usize) -> DropTailQueue<usize> {
        let mut q = DropTailQueue::new(100);
        for i in 0..n {
            assert_eq!(q.enqueue(i), Enqueue::Accepted);
        }
        q
    }

    #[test]
    fn accepts_below_capacity() {
        let mut q = filled(99);
        assert_eq!(q.enqueue(99), Enqueue::Accepted);
        assert_eq!(q.len(), 100);
    }

    #[test]
    fn drops_at_capacity() {
        let mut q = filled(100);
        assert_eq!(q.enqueue(100), Enqueue::Dropped(100));
        assert_eq!(q.drops(), 1);
        assert_eq!(q.len(), 100);
    }

    #[test]
    fn drained_queue_accepts() {
        let mut q = filled(100);
        while q.dequeue().is_some() {}
        assert_eq!(q.enqueue(7), Enqueue::Accepted);
        assert_eq!(q.max_occupancy(), 100);
    }

    #[test]
    fn fifo_order() {
        let mut q = filled(10);
        let out: Vec<_> = std::iter::from_fn(|| q.dequeue()).collect();
        assert_eq!(out, (0..10).collect::<Vec<_>>());
    }
}
