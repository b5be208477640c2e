//! Exact coefficients: rational combinations of square roots, and Laurent
//! polynomials in `e^{i dphi}` over them.
//!
//! A [`Surd`] is `sum_r q_r sqrt(r)` with each `r` square-free and each `q_r`
//! a non-zero rational. Square-free radicands are linearly independent over
//! the rationals, so this representation is unique and equality is
//! structural.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};

pub type Rational = Ratio<i128>;

#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct Surd {
    terms: BTreeMap<u64, Rational>,
}

/// Splits `n` into `s^2 * r` with `r` square-free; returns `(s, r)`.
fn square_split(mut n: u64) -> (u64, u64) {
    let (mut s, mut r) = (1u64, 1u64);
    let mut p = 2u64;
    while p * p <= n {
        let mut e = 0;
        while n.is_multiple_of(p) {
            n /= p;
            e += 1;
        }
        s *= p.pow(e / 2);
        if e % 2 == 1 {
            r *= p;
        }
        p += 1;
    }
    (s, r * n)
}

impl Surd {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::rational(Rational::one())
    }

    pub fn rational(q: Rational) -> Self {
        Self::radical(q, 1)
    }

    pub fn integer(n: i128) -> Self {
        Self::rational(Rational::from_integer(n))
    }

    /// `q * sqrt(r)` for square-free `r`.
    fn radical(q: Rational, r: u64) -> Self {
        let mut terms = BTreeMap::new();
        if !q.is_zero() {
            terms.insert(r, q);
        }
        Self { terms }
    }

    /// `sqrt(n)`.
    pub fn sqrt(n: u64) -> Self {
        if n == 0 {
            return Self::zero();
        }
        let (s, r) = square_split(n);
        Self::radical(Rational::from_integer(s as i128), r)
    }

    /// `sqrt(num / den)`, rewritten as `sqrt(num * den) / den`.
    pub fn sqrt_ratio(num: u64, den: u64) -> Self {
        assert!(den > 0, "zero denominator");
        let g = num.gcd(&den);
        let (num, den) = (num / g, den / g);
        let root = Self::sqrt(num.checked_mul(den).expect("radicand overflow"));
        root * Self::rational(Rational::new(1, den as i128))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, &Rational)> {
        self.terms.iter().map(|(&r, q)| (r, q))
    }

    pub fn to_f64(&self) -> f64 {
        self.terms.iter().map(|(&r, q)| q.to_f64().expect("finite rational") * (r as f64).sqrt()).sum()
    }

    fn accumulate(&mut self, r: u64, q: Rational) {
        let entry = self.terms.entry(r).or_insert_with(Rational::zero);
        *entry += q;
        if entry.is_zero() {
            self.terms.remove(&r);
        }
    }
}

impl Add for &Surd {
    type Output = Surd;
    fn add(self, rhs: &Surd) -> Surd {
        let mut out = self.clone();
        for (&r, q) in &rhs.terms {
            out.accumulate(r, *q);
        }
        out
    }
}

impl Add for Surd {
    type Output = Surd;
    fn add(self, rhs: Surd) -> Surd {
        &self + &rhs
    }
}

impl Neg for &Surd {
    type Output = Surd;
    fn neg(self) -> Surd {
        Surd { terms: self.terms.iter().map(|(&r, q)| (r, -q)).collect() }
    }
}

impl Sub for &Surd {
    type Output = Surd;
    fn sub(self, rhs: &Surd) -> Surd {
        self + &(-rhs)
    }
}

impl Mul for &Surd {
    type Output = Surd;
    fn mul(self, rhs: &Surd) -> Surd {
        let mut out = Surd::zero();
        for (&r1, q1) in &self.terms {
            for (&r2, q2) in &rhs.terms {
                // sqrt(r1) sqrt(r2) = g sqrt(r1 r2 / g^2), g = gcd(r1, r2)
                let g = r1.gcd(&r2);
                let r = (r1 / g) * (r2 / g);
                out.accumulate(r, q1 * q2 * Rational::from_integer(g as i128));
            }
        }
        out
    }
}

impl Mul for Surd {
    type Output = Surd;
    fn mul(self, rhs: Surd) -> Surd {
        &self * &rhs
    }
}

fn fmt_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

impl fmt::Display for Surd {
    /// `p/q` for rational parts and `p/q * 2^(-1/2)` for multiples of
    /// `sqrt(2)`; other radicands render as `p/q * sqrt(r)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (&r, q)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            match r {
                1 => write!(f, "{}", fmt_rational(q))?,
                2 => write!(f, "{} * 2^(-1/2)", fmt_rational(&(q * Rational::from_integer(2))))?,
                _ => write!(f, "{} * sqrt({r})", fmt_rational(q))?,
            }
        }
        Ok(())
    }
}

/// `sum_k c_k e^{i k dphi}` with exact real coefficients `c_k`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct ExactAmplitude {
    terms: BTreeMap<i32, Surd>,
}

impl ExactAmplitude {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(Surd::one(), 0)
    }

    /// `c e^{i k dphi}`.
    pub fn monomial(c: Surd, k: i32) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(k, c);
        }
        Self { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, &Surd)> {
        self.terms.iter().map(|(&k, c)| (k, c))
    }

    /// Phase exponents present, ascending.
    pub fn exponents(&self) -> Vec<i32> {
        self.terms.keys().copied().collect()
    }

    pub fn coefficient(&self, k: i32) -> Surd {
        self.terms.get(&k).cloned().unwrap_or_default()
    }

    pub fn scale(&self, c: &Surd) -> Self {
        let mut out = Self::zero();
        for (&k, v) in &self.terms {
            out.accumulate(k, v * c);
        }
        out
    }

    /// Complex conjugate for real `dphi`: `k -> -k`.
    pub fn conj(&self) -> Self {
        Self { terms: self.terms.iter().map(|(&k, c)| (-k, c.clone())).collect() }
    }

    /// `|self|^2` as a symmetric Laurent polynomial.
    pub fn norm_sqr(&self) -> Self {
        &self.conj() * self
    }

    pub fn evaluate(&self, delta_phi: f64) -> Complex64 {
        self.terms.iter().map(|(&k, c)| Complex64::from_polar(c.to_f64(), f64::from(k) * delta_phi)).sum()
    }

    fn accumulate(&mut self, k: i32, c: Surd) {
        let entry = self.terms.entry(k).or_default();
        *entry = &*entry + &c;
        if entry.is_zero() {
            self.terms.remove(&k);
        }
    }
}

impl Add for &ExactAmplitude {
    type Output = ExactAmplitude;
    fn add(self, rhs: &ExactAmplitude) -> ExactAmplitude {
        let mut out = self.clone();
        for (&k, c) in &rhs.terms {
            out.accumulate(k, c.clone());
        }
        out
    }
}

impl Mul for &ExactAmplitude {
    type Output = ExactAmplitude;
    fn mul(self, rhs: &ExactAmplitude) -> ExactAmplitude {
        let mut out = ExactAmplitude::zero();
        for (&k1, c1) in &self.terms {
            for (&k2, c2) in &rhs.terms {
                out.accumulate(k1 + k2, c1 * c2);
            }
        }
        out
    }
}

impl fmt::Display for ExactAmplitude {
    /// Terms like `1/8 * e^(i 4 dphi)`, joined by ` + `.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut first = true;
        for (&k, c) in &self.terms {
            for (r, q) in c.terms() {
                if !first {
                    f.write_str(" + ")?;
                }
                first = false;
                write!(f, "{} * e^(i {k} dphi)", Surd::radical(*q, r))?;
            }
        }
        Ok(())
    }
}
