//! Double-double arithmetic (~31 significant decimal digits).
//!
//! A value is an unevaluated sum `hi + lo` with `|lo| ≤ ½ulp(hi)`. Used where
//! a long recurrence would otherwise accumulate rounding at every step — the
//! `J_n` recursion multiplies by `(2n+1)/2n ≈ 1` and subtracts a small term
//! up to a million times, which drifts visibly in plain f64.

/// Error-free sum: returns `(s, e)` with `s = fl(a+b)` and `a + b = s + e`.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// `two_sum` requiring `|a| ≥ |b|`.
#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

/// Error-free product via FMA: `a·b = p + e` exactly.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// A double-double number.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    /// π to double-double precision (`lo` is the standard f64 tail of π).
    pub const PI: Dd = Dd { hi: std::f64::consts::PI, lo: 1.224_646_799_147_353_2e-16 };

    #[inline]
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    /// Exact integer ratio `p/q` rounded once into a double-double.
    pub fn from_ratio(p: i64, q: i64) -> Dd {
        Dd::from_f64(p as f64).div(Dd::from_f64(q as f64))
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn add(self, o: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, o.hi);
        let (t1, t2) = two_sum(self.lo, o.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    #[inline]
    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    #[inline]
    pub fn mul(self, o: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, o.hi);
        let p2 = p2 + self.hi * o.lo + self.lo * o.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::from_f64(q1)));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul(Dd::from_f64(q2)));
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }.add(Dd::from_f64(q3))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn third_round_trips() {
        let third = Dd::from_ratio(1, 3);
        let one = third.mul(Dd::from_f64(3.0));
        assert!((one.to_f64() - 1.0).abs() < 1e-30);
        assert!((one.sub(Dd::from_f64(1.0)).hi).abs() < 1e-30);
    }

    #[test]
    fn pi_squared_matches_f64_rounding() {
        let pi2 = Dd::PI.mul(Dd::PI);
        // π² = 9.869604401089358…; the double-double must round to the nearest f64.
        assert_eq!(pi2.to_f64(), 9.869_604_401_089_358);
    }

    #[test]
    fn cancellation_is_error_free() {
        let a = Dd::from_f64(1.0).add(Dd::from_f64(1e-20));
        let b = a.sub(Dd::from_f64(1.0));
        assert_eq!(b.to_f64(), 1e-20);
    }

    #[test]
    fn long_alternating_sum_stays_exact() {
        // Σ (1/3 − 1/3) a million times must be exactly zero in dd.
        let third = Dd::from_ratio(1, 3);
        let mut acc = Dd::ZERO;
        for _ in 0..1_000_000 {
            acc = acc.add(third).sub(third);
        }
        assert_eq!(acc.to_f64(), 0.0);
    }
}
