//! Compensated accumulation for reproducible energy sums.

/// Neumaier compensated accumulator.
///
/// Error is O(n·ε²), essentially independent of the number of terms,
/// versus O(n·ε) for a naive running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sum an iterator with compensation, in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = Accumulator::new();
    for v in iter {
        acc.add(v);
    }
    acc.value()
}

/// Reduce per-block partial sums in block order.
///
/// Parallel callers compute one compensated partial per fixed index block and
/// feed them here; the result does not depend on thread scheduling.
pub fn reduce_blocks(partials: &[f64]) -> f64 {
    compensated_sum(partials.iter().copied())
}
