//! Univariate polynomials: exact (rational coefficients) for assembling
//! transforms, floating point for evaluation and root finding.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// The simplest rational (smallest denominator, then smallest magnitude)
/// that rounds to the same double as `x`.
///
/// Parameters such as `0.3333333333333333` therefore map back to `1/3`.
pub fn rationalize(x: f64) -> BigRational {
    assert!(x.is_finite(), "cannot rationalize a non-finite value");
    if x == 0.0 {
        return BigRational::zero();
    }
    if x < 0.0 {
        return -rationalize(-x);
    }
    let exact = |v: f64| BigRational::from_float(v).expect("finite");
    let two = BigRational::from_integer(BigInt::from(2));
    let lo = (exact(x) + exact(x.next_down())) / &two;
    let hi = (exact(x) + exact(x.next_up())) / &two;
    simplest_between(&lo, &hi)
}

/// Simplest rational strictly inside `(lo, hi)`, `0 <= lo < hi`.
fn simplest_between(lo: &BigRational, hi: &BigRational) -> BigRational {
    let fl = lo.floor();
    let next = &fl + BigRational::one();
    if &next < hi {
        return next;
    }
    if lo == &fl {
        let k = (BigRational::one() / (hi - &fl)).floor() + BigRational::one();
        return fl + k.recip();
    }
    let inner = simplest_between(&(hi - &fl).recip(), &(lo - &fl).recip());
    fl + inner.recip()
}

/// Polynomial with exact rational coefficients, lowest degree first.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct QPoly {
    coeffs: Vec<BigRational>,
}

impl QPoly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        QPoly { coeffs }
    }

    pub fn zero() -> Self {
        QPoly { coeffs: vec![] }
    }

    pub fn constant(c: BigRational) -> Self {
        QPoly::new(vec![c])
    }

    pub fn one() -> Self {
        QPoly::constant(BigRational::one())
    }

    /// `a + b r`
    pub fn linear(a: BigRational, b: BigRational) -> Self {
        QPoly::new(vec![a, b])
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        QPoly::new(
            coeffs
                .iter()
                .map(|&c| BigRational::from_integer(c.into()))
                .collect(),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn leading(&self) -> BigRational {
        self.coeffs.last().cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(QPoly::one(), |acc, _| &acc * self)
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        QPoly::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn derivative(&self) -> Self {
        QPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let lc = self.leading().recip();
        self.scale(&lc)
    }

    /// Euclidean division: `self = q * d + r`, `deg r < deg d`.
    pub fn div_rem(&self, d: &QPoly) -> (QPoly, QPoly) {
        assert!(!d.is_zero(), "division by the zero polynomial");
        let mut rem = self.coeffs.clone();
        let dd = d.degree();
        let lc = d.leading();
        if rem.len() <= dd {
            return (QPoly::zero(), self.clone());
        }
        let mut quot = vec![BigRational::zero(); rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let c = &rem[k + dd] / &lc;
            if !c.is_zero() {
                for (i, dc) in d.coeffs.iter().enumerate() {
                    rem[k + i] = &rem[k + i] - &c * dc;
                }
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        (QPoly::new(quot), QPoly::new(rem))
    }

    /// Exact quotient; panics when `d` does not divide `self`.
    pub fn div_exact(&self, d: &QPoly) -> QPoly {
        let (q, r) = self.div_rem(d);
        assert!(r.is_zero(), "inexact polynomial division");
        q
    }

    /// Monic greatest common divisor (zero only if both inputs are zero).
    ///
    /// Runs a primitive pseudo-remainder sequence over the integers, which
    /// avoids the coefficient blow-up of Euclid over the rationals.
    pub fn gcd(&self, other: &QPoly) -> QPoly {
        let (mut a, mut b) = (primitive_part(self), primitive_part(other));
        if a.len() < b.len() {
            std::mem::swap(&mut a, &mut b);
        }
        while !b.is_empty() {
            let r = primitive_part_int(pseudo_rem(&a, &b));
            a = b;
            b = r;
        }
        QPoly::new(a.into_iter().map(BigRational::from_integer).collect()).monic()
    }

    pub fn lcm(&self, other: &QPoly) -> QPoly {
        if self.is_zero() || other.is_zero() {
            return QPoly::zero();
        }
        (self * other).div_exact(&self.gcd(other)).monic()
    }

    /// Scale so the coefficients are coprime integers with positive leading
    /// coefficient; returns the scaled polynomial and the factor used.
    pub fn primitive_integer(&self) -> (QPoly, BigRational) {
        if self.is_zero() {
            return (self.clone(), BigRational::one());
        }
        let den_lcm = self
            .coeffs
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints: Vec<BigInt> = self
            .coeffs
            .iter()
            .map(|c| (c * BigRational::from_integer(den_lcm.clone())).to_integer())
            .collect();
        let g = ints
            .iter()
            .fold(BigInt::zero(), |acc, c| acc.gcd(c));
        let mut factor = BigRational::new(den_lcm, g);
        if self.leading().is_negative() {
            factor = -factor;
        }
        (self.scale(&factor), factor)
    }

    pub fn to_f64(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .map(|c| c.to_f64().unwrap_or(f64::NAN))
                .collect(),
        )
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.coeffs
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    /// Integer coefficients, lowest degree first, if all are integral.
    pub fn integer_coeffs(&self) -> Option<Vec<BigInt>> {
        self.coeffs
            .iter()
            .map(|c| c.is_integer().then(|| c.to_integer()))
            .collect()
    }
}

impl fmt::Display for QPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let a = c.abs();
            match i {
                0 => write!(f, "{a}")?,
                1 => write!(f, "{a} r")?,
                _ => write!(f, "{a} r^{i}")?,
            }
        }
        Ok(())
    }
}

impl Add for &QPoly {
    type Output = QPoly;
    fn add(self, rhs: &QPoly) -> QPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let zero = BigRational::zero();
        QPoly::new(
            (0..n)
                .map(|i| {
                    self.coeffs.get(i).unwrap_or(&zero) + rhs.coeffs.get(i).unwrap_or(&zero)
                })
                .collect(),
        )
    }
}

impl Sub for &QPoly {
    type Output = QPoly;
    fn sub(self, rhs: &QPoly) -> QPoly {
        self + &(-rhs)
    }
}

impl Neg for &QPoly {
    type Output = QPoly;
    fn neg(self) -> QPoly {
        QPoly::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl Mul for &QPoly {
    type Output = QPoly;
    fn mul(self, rhs: &QPoly) -> QPoly {
        if self.is_zero() || rhs.is_zero() {
            return QPoly::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        QPoly::new(out)
    }
}

/// Coprime integer coefficients of `p` (empty for zero).
fn primitive_part(p: &QPoly) -> Vec<BigInt> {
    if p.is_zero() {
        return Vec::new();
    }
    let den = p.coeffs.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let ints = p
        .coeffs
        .iter()
        .map(|c| c.numer() * (&den / c.denom()))
        .collect();
    primitive_part_int(ints)
}

fn primitive_part_int(mut p: Vec<BigInt>) -> Vec<BigInt> {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    let g = p.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
    if !g.is_zero() && !g.is_one() {
        for c in p.iter_mut() {
            *c = &*c / &g;
        }
    }
    p
}

/// Remainder of `lc(b)^k a` by `b` with integer arithmetic only.
fn pseudo_rem(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut rem = a.to_vec();
    let db = b.len() - 1;
    let lc = &b[db];
    while rem.len() > db {
        let top = rem.pop().unwrap();
        if top.is_zero() {
            continue;
        }
        let shift = rem.len() - db;
        for c in rem.iter_mut() {
            *c *= lc;
        }
        for (i, bc) in b[..db].iter().enumerate() {
            rem[shift + i] -= &top * bc;
        }
        while rem.last().is_some_and(|c| c.is_zero()) {
            rem.pop();
        }
    }
    rem
}

/// Exact rational function `num / den` kept in lowest terms with monic
/// denominator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatFn {
    pub num: QPoly,
    pub den: QPoly,
}

impl RatFn {
    pub fn new(num: QPoly, den: QPoly) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        if num.is_zero() {
            return RatFn {
                num,
                den: QPoly::one(),
            };
        }
        let g = num.gcd(&den);
        let num = num.div_exact(&g);
        let den = den.div_exact(&g);
        let lc = den.leading().recip();
        RatFn {
            num: num.scale(&lc),
            den: den.scale(&lc),
        }
    }

    pub fn poly(p: QPoly) -> Self {
        RatFn::new(p, QPoly::one())
    }

    pub fn constant(c: BigRational) -> Self {
        RatFn::poly(QPoly::constant(c))
    }

    pub fn add(&self, other: &RatFn) -> RatFn {
        let l = self.den.lcm(&other.den);
        let a = &self.num * &l.div_exact(&self.den);
        let b = &other.num * &l.div_exact(&other.den);
        RatFn::new(&a + &b, l)
    }

    pub fn mul(&self, other: &RatFn) -> RatFn {
        RatFn::new(&self.num * &other.num, &self.den * &other.den)
    }
}

/// Polynomial with double coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == 0.0) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    /// Monic polynomial with the given roots (real or complex conjugate
    /// closed); imaginary parts of the product are discarded.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut c = vec![Complex64::new(1.0, 0.0)];
        for &z in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
            for (i, &a) in c.iter().enumerate() {
                next[i + 1] += a;
                next[i] -= a * z;
            }
            c = next;
        }
        Poly::new(c.into_iter().map(|z| z.re).collect())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn eval_c(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * i as f64)
                .collect(),
        )
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, c| acc.max(c.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn rationalize_recovers_simple_fractions() {
        assert_eq!(rationalize(1.0 / 3.0), q(1, 3));
        assert_eq!(rationalize(0.5), q(1, 2));
        assert_eq!(rationalize(0.1), q(1, 10));
        assert_eq!(rationalize(-2.75), q(-11, 4));
        assert_eq!(rationalize(7.0), q(7, 1));
        assert_eq!(rationalize(0.0), q(0, 1));
        assert_eq!(rationalize(2.0 / 7.0), q(2, 7));
    }

    #[test]
    fn rationalize_round_trips_arbitrary_doubles() {
        for &x in &[0.7316283719, 1e-300, 123456.789, 3.0e15 + 1.0, 0.9999999999999999] {
            let r = rationalize(x);
            assert_eq!(r.to_f64().unwrap(), x);
        }
    }

    #[test]
    fn gcd_cancels_common_factor() {
        // (r-1)(r+2) and (r-1)(r+3)
        let a = &QPoly::from_i64(&[-1, 1]) * &QPoly::from_i64(&[2, 1]);
        let b = &QPoly::from_i64(&[-1, 1]) * &QPoly::from_i64(&[3, 1]);
        assert_eq!(a.gcd(&b), QPoly::from_i64(&[-1, 1]));
        let f = RatFn::new(a, b);
        assert_eq!(f.num, QPoly::from_i64(&[2, 1]));
        assert_eq!(f.den, QPoly::from_i64(&[3, 1]));
    }

    #[test]
    fn division_identity() {
        let a = QPoly::from_i64(&[5, -3, 0, 2, 7]);
        let d = QPoly::from_i64(&[1, 4, 3]);
        let (qq, r) = a.div_rem(&d);
        assert_eq!(&(&qq * &d) + &r, a);
        assert!(r.degree() < d.degree());
    }

    #[test]
    fn primitive_integer_normalization() {
        let p = QPoly::new(vec![q(-1, 2), q(0, 1), q(-3, 4)]);
        let (n, _) = p.primitive_integer();
        assert_eq!(n, QPoly::from_i64(&[2, 0, 3]));
    }

    #[test]
    fn display_is_readable() {
        assert_eq!(QPoly::from_i64(&[-8, -51, 0, 48]).to_string(), "48 r^3 - 51 r - 8");
    }
}
