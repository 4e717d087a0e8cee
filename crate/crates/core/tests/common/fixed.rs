//! Binary fixed-point reals on big integers, 320 fractional bits (about 96
//! decimal digits). Only what the link-rate formulas need.

use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

const FRAC_BITS: u64 = 320;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Fx(BigInt);

impl Fx {
    pub fn zero() -> Self {
        Fx(BigInt::zero())
    }

    pub fn one() -> Self {
        Fx(BigInt::one() << FRAC_BITS)
    }

    pub fn int(n: i64) -> Self {
        Fx(BigInt::from(n) << FRAC_BITS)
    }

    /// Exact conversion of a finite double.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite());
        if x == 0.0 {
            return Self::zero();
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1 } else { 1 };
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
        let m = BigInt::from(mant) * sign;
        let shift = e + FRAC_BITS as i64;
        Fx(if shift >= 0 { m << shift as u64 } else { m >> (-shift) as u64 })
    }

    pub fn to_f64(&self) -> f64 {
        // keep 64 significant bits, then scale
        let bits = self.0.bits();
        if bits <= 64 {
            return self.0.to_f64().unwrap() * 2f64.powi(-(FRAC_BITS as i32));
        }
        let drop = bits - 64;
        let top = (&self.0 >> drop).to_f64().unwrap();
        top * 2f64.powi(drop as i32 - FRAC_BITS as i32)
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn sqrt(&self) -> Self {
        assert!(!self.is_negative(), "sqrt of negative");
        Fx((&self.0 << FRAC_BITS).sqrt())
    }

    /// Natural logarithm of a positive value.
    pub fn ln(&self) -> Self {
        assert!(self.is_positive(), "ln of non-positive");
        // x = m · 2^k with m in [1, 2)
        let k = self.0.bits() as i64 - 1 - FRAC_BITS as i64;
        let m = if k >= 0 { Fx(&self.0 >> k as u64) } else { Fx(&self.0 << (-k) as u64) };
        ln_unit(&m) + Fx::int(k) * ln2()
    }

    pub fn log2(&self) -> Self {
        self.ln() / ln2()
    }

    pub fn exp(&self) -> Self {
        // x = k ln2 + r, |r| <= ln2 / 2
        let l2 = ln2();
        let k = (self.clone() / l2.clone()).round_to_int();
        let r = self.clone() - Fx::int(k) * l2;
        let mut term = Fx::one();
        let mut sum = Fx::one();
        for n in 1.. {
            term = term * r.clone() / Fx::int(n);
            if term.0.is_zero() {
                break;
            }
            sum = sum + term.clone();
        }
        if k >= 0 {
            Fx(sum.0 << k as u64)
        } else {
            Fx(sum.0 >> (-k) as u64)
        }
    }

    fn round_to_int(&self) -> i64 {
        let half = BigInt::one() << (FRAC_BITS - 1);
        ((&self.0 + half) >> FRAC_BITS).to_i64().unwrap()
    }
}

/// ln(m) for m in [1, 2), via ln m = 2 atanh((m − 1)/(m + 1)).
fn ln_unit(m: &Fx) -> Fx {
    let z = (m.clone() - Fx::one()) / (m.clone() + Fx::one());
    atanh_series(&z) + atanh_series(&z)
}

fn atanh_series(z: &Fx) -> Fx {
    let z2 = z.clone() * z.clone();
    let mut power = z.clone();
    let mut sum = z.clone();
    for n in (3..).step_by(2) {
        power = power * z2.clone();
        let term = power.clone() / Fx::int(n);
        if term.0.is_zero() {
            break;
        }
        sum = sum + term;
    }
    sum
}

pub fn ln2() -> Fx {
    static LN2: OnceLock<Fx> = OnceLock::new();
    LN2.get_or_init(|| {
        let third = Fx::one() / Fx::int(3);
        atanh_series(&third) + atanh_series(&third)
    })
    .clone()
}

pub fn ln10() -> Fx {
    static LN10: OnceLock<Fx> = OnceLock::new();
    LN10.get_or_init(|| Fx::int(10).ln()).clone()
}

impl Add for Fx {
    type Output = Fx;
    fn add(self, o: Fx) -> Fx {
        Fx(self.0 + o.0)
    }
}

impl Sub for Fx {
    type Output = Fx;
    fn sub(self, o: Fx) -> Fx {
        Fx(self.0 - o.0)
    }
}

impl Neg for Fx {
    type Output = Fx;
    fn neg(self) -> Fx {
        Fx(-self.0)
    }
}

impl Mul for Fx {
    type Output = Fx;
    fn mul(self, o: Fx) -> Fx {
        Fx((self.0 * o.0) >> FRAC_BITS)
    }
}

impl Div for Fx {
    type Output = Fx;
    fn div(self, o: Fx) -> Fx {
        assert!(!o.0.is_zero(), "division by zero");
        Fx((self.0 << FRAC_BITS) / o.0)
    }
}
