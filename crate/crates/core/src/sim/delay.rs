use std::collections::VecDeque;

/// FIFO that returns each sample exactly `delay` pushes later.
///
/// Until the line has filled, the oldest sample seen so far is repeated.
#[derive(Debug, Clone)]
pub struct DelayLine<T> {
    delay: usize,
    buf: VecDeque<T>,
}

impl<T: Clone> DelayLine<T> {
    pub fn new(delay: usize) -> Self {
        Self {
            delay,
            buf: VecDeque::with_capacity(delay + 1),
        }
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    /// Push the newest sample and return the one from `delay` cycles ago.
    pub fn push(&mut self, sample: T) -> T {
        self.buf.push_back(sample);
        if self.buf.len() > self.delay + 1 {
            self.buf.pop_front();
        }
        self.buf.front().cloned().expect("buffer holds at least one sample")
    }
}
