//! Compensated summation primitives.
//!
//! Every quadrature in the crate sums in a fixed order (height-major, then
//! boundary index) through one of these accumulators, so results are
//! byte-reproducible for a given input and robust against cancellation.

/// Neumaier compensated accumulator for sequential sums.
#[derive(Clone, Copy, Debug, Default)]
pub struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sums an iterator with compensation.
pub fn sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut acc = Accumulator::new();
    for x in it {
        acc.add(x);
    }
    acc.value()
}

/// Double-double value: an unevaluated sum `hi + lo` with |lo| <= ulp(hi)/2.
///
/// Prefix tables store cumulative sums in this form so that differences of
/// nearby prefixes do not lose the low-order bits of small interval sums.
#[derive(Clone, Copy, Debug, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let ap = s - b;
    let bp = s - ap;
    (s, (a - ap) + (b - bp))
}

#[inline]
fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    // requires |a| >= |b|
    let s = a + b;
    (s, b - (s - a))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    #[inline]
    pub fn add_f64(self, x: f64) -> Dd {
        let (s, e) = two_sum(self.hi, x);
        let lo = self.lo + e;
        let (hi, lo) = if s.abs() >= lo.abs() {
            fast_two_sum(s, lo)
        } else {
            fast_two_sum(lo, s)
        };
        Dd { hi, lo }
    }

    /// self - other, rounded to f64.
    #[inline]
    pub fn diff(self, other: Dd) -> f64 {
        let (s, e) = two_sum(self.hi, -other.hi);
        s + (e + (self.lo - other.lo))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.hi + self.lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accumulator_recovers_cancelled_tail() {
        let mut acc = Accumulator::new();
        acc.add(1.0);
        for _ in 0..10 {
            acc.add(1e-17);
        }
        acc.add(-1.0);
        let got = acc.value();
        assert!((got - 1e-16).abs() < 1e-30, "got {got}");
    }

    #[test]
    fn dd_prefix_difference_is_exact_for_small_windows() {
        // big head followed by a tiny tail; the window over the tail must come
        // out exact even though the prefixes are dominated by the head
        let mut p = vec![Dd::ZERO];
        let mut cur = Dd::ZERO;
        cur = cur.add_f64(1e12);
        p.push(cur);
        for _ in 0..100 {
            cur = cur.add_f64(1e-7);
            p.push(cur);
        }
        // plain f64 prefixes would be off by ~1e-4 here (2^-53 * 1e12); the
        // double-double window must stay far inside 1e-12 relative
        let window = p[51].diff(p[41]);
        assert!(
            (window - 1e-6).abs() <= 1e-18,
            "window {window} should be 1e-6"
        );
    }

    #[test]
    fn sum_matches_naive_on_benign_data() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        let comp = sum(xs.iter().copied());
        assert!((naive - comp).abs() <= 1e-12 * comp.abs().max(1.0));
    }
}
