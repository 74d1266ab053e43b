//! Exactly rounded floating-point summation.
//!
//! Shewchuk's non-overlapping partials: the final value is the correctly
//! rounded sum of the inputs, so it does not depend on the order in which
//! terms arrive or on how the work was split across threads.

/// Accumulator whose result is the correctly rounded sum of every term added.
#[derive(Debug, Clone, Default)]
pub struct ExactSum {
    partials: Vec<f64>,
    // Infinite or NaN terms bypass the partials and are folded in at the end.
    special: f64,
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, mut x: f64) {
        if !x.is_finite() {
            self.special += x;
            return;
        }
        let mut i = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    /// Multiplies the accumulated value by two; exact barring overflow.
    pub fn double(&mut self) {
        self.partials.iter_mut().for_each(|p| *p *= 2.0);
        self.special *= 2.0;
    }

    pub fn merge(&mut self, other: &ExactSum) {
        for &p in &other.partials {
            self.add(p);
        }
        self.special += other.special;
    }

    pub fn value(&self) -> f64 {
        if self.special != 0.0 || self.special.is_nan() {
            return self.special;
        }
        let p = &self.partials;
        let mut n = p.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = p[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        // Round-half-even correction across the remaining partials.
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            let yr = x - hi;
            if y == yr {
                hi = x;
            }
        }
        hi
    }
}

impl std::iter::FromIterator<f64> for ExactSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = ExactSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Correctly rounded sum of a slice.
pub fn exact_sum(values: &[f64]) -> f64 {
    values.iter().copied().collect::<ExactSum>().value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cancels_catastrophically_cancelling_terms() {
        let v = [1e100, 1.0, -1e100, 1e-20];
        assert_eq!(exact_sum(&v), 1.0 + 1e-20);
        let v = [0.1; 10];
        assert_eq!(exact_sum(&v), 1.0);
    }

    #[test]
    fn merge_equals_single_pass() {
        let a: Vec<f64> = (1..500).map(|k| 1.0 / k as f64).collect();
        let mut left: ExactSum = a[..200].iter().copied().collect();
        let right: ExactSum = a[200..].iter().copied().collect();
        left.merge(&right);
        assert_eq!(left.value(), exact_sum(&a));
    }

    proptest! {
        #[test]
        fn order_independent(mut v in prop::collection::vec(-1e6f64..1e6, 1..200), seed in any::<u64>()) {
            let forward = exact_sum(&v);
            // Deterministic shuffle.
            let mut state = seed | 1;
            for i in (1..v.len()).rev() {
                state ^= state << 13; state ^= state >> 7; state ^= state << 17;
                v.swap(i, (state % (i as u64 + 1)) as usize);
            }
            prop_assert_eq!(forward.to_bits(), exact_sum(&v).to_bits());
        }
    }
}
