//! Exact coefficient arithmetic: the cyclotomic field `Q(zeta_24)` extended by a
//! formal invertible scalar `Lambda` (standing for `2*pi*i`).
//!
//! Every constant the pipelines need (`i`, `eps = e^{2 pi i/3}`, `e^{2 pi i/6}`,
//! `e^{i pi/4}`, `sqrt(3)`) lives in the single field `Q(zeta_24)`, so one static
//! power basis `1, z, ..., z^7` modulo `z^8 - z^4 + 1` covers the whole build.
//! `Lambda` is never expanded numerically in core operations; it only cancels.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Zero};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact rational scalar used throughout the crate.
pub type Rat = BigRational;

/// Fixed conductor of the coefficient field.
pub const CONDUCTOR: u32 = 24;
/// Degree of `Q(zeta_24)` over `Q`, i.e. `phi(24)`.
pub const PHI_DEGREE: usize = 8;

pub fn rat(num: i64, den: i64) -> Rat {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(num: i64) -> Rat {
    BigRational::from(BigInt::from(num))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoeffError {
    /// Addition of two values carrying different powers of `Lambda`.
    #[error("cannot add values with Lambda exponents {0} and {1}")]
    MixedLambda(i64, i64),
    #[error("division by zero")]
    DivisionByZero,
    /// A root of unity whose order does not divide the conductor.
    #[error("order {0} does not divide the conductor {CONDUCTOR}")]
    BadConductor(u32),
}

/// Dense or rational-fast-path representation in the power basis.
#[derive(Debug, Clone, PartialEq)]
enum Repr {
    /// Only the basis element `1` carries a coefficient.
    Rational(Rat),
    /// Full coordinate vector in the power basis `1, z, ..., z^7`.
    Full(Box<[Rat; PHI_DEGREE]>),
}

/// An exact element `c * Lambda^k` with `c` in `Q(zeta_24)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cyclotomic {
    lambda_exp: i64,
    repr: Repr,
}

fn zero_coeffs() -> [Rat; PHI_DEGREE] {
    std::array::from_fn(|_| Rat::zero())
}

/// Reduce a raw coefficient list modulo `z^8 = z^4 - 1`.
fn reduce(raw: &mut Vec<Rat>) -> [Rat; PHI_DEGREE] {
    for d in (PHI_DEGREE..raw.len()).rev() {
        let v = std::mem::replace(&mut raw[d], Rat::zero());
        if !v.is_zero() {
            raw[d - 4] = &raw[d - 4] + &v;
            raw[d - 8] = &raw[d - 8] - &v;
        }
    }
    std::array::from_fn(|i| raw.get(i).cloned().unwrap_or_else(Rat::zero))
}

impl Cyclotomic {
    pub fn zero() -> Self {
        Cyclotomic { lambda_exp: 0, repr: Repr::Rational(Rat::zero()) }
    }

    pub fn one() -> Self {
        Cyclotomic { lambda_exp: 0, repr: Repr::Rational(Rat::one()) }
    }

    pub fn from_rat(r: Rat) -> Self {
        Cyclotomic { lambda_exp: 0, repr: Repr::Rational(r) }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rat(rat_int(n))
    }

    pub fn rational(num: i64, den: i64) -> Self {
        Self::from_rat(rat(num, den))
    }

    /// `zeta_24^k`.
    pub fn zeta(k: i64) -> Self {
        let k = k.rem_euclid(24) as usize;
        let mut raw = vec![Rat::zero(); k + 1];
        raw[k] = Rat::one();
        Cyclotomic { lambda_exp: 0, repr: Repr::Full(Box::new(reduce(&mut raw))) }.normalized()
    }

    /// `zeta_m^k` for any order `m` dividing the conductor.
    pub fn root_of_unity(m: u32, k: i64) -> Result<Self, CoeffError> {
        if m == 0 || CONDUCTOR % m != 0 {
            return Err(CoeffError::BadConductor(m));
        }
        Ok(Self::zeta(k * (CONDUCTOR / m) as i64))
    }

    /// The imaginary unit, our fixed choice of `(-1)^{1/2}`.
    pub fn i() -> Self {
        Self::zeta(6)
    }

    /// `e^{2 pi i / 3}`.
    pub fn eps() -> Self {
        Self::zeta(8)
    }

    /// `e^{2 pi i / 6}`.
    pub fn eta6() -> Self {
        Self::zeta(4)
    }

    /// `sqrt(3) = zeta_24^2 + zeta_24^{-2}`, exact in the field.
    pub fn sqrt3() -> Self {
        Self::zeta(2) + Self::zeta(22)
    }

    /// `Lambda^k` as a value.
    pub fn lambda_pow(k: i64) -> Self {
        Cyclotomic { lambda_exp: k, repr: Repr::Rational(Rat::one()) }
    }

    /// Multiply by `Lambda^k`.
    pub fn shift_lambda(mut self, k: i64) -> Self {
        if !self.is_zero() {
            self.lambda_exp += k;
        }
        self
    }

    pub fn lambda_exp(&self) -> i64 {
        self.lambda_exp
    }

    pub fn conductor(&self) -> u32 {
        CONDUCTOR
    }

    pub fn is_zero(&self) -> bool {
        match &self.repr {
            Repr::Rational(r) => r.is_zero(),
            Repr::Full(c) => c.iter().all(|x| x.is_zero()),
        }
    }

    pub fn is_one(&self) -> bool {
        self.lambda_exp == 0 && self.as_rational().map(|r| r.is_one()).unwrap_or(false)
    }

    pub fn is_rational(&self) -> bool {
        matches!(&self.repr, Repr::Rational(_))
            || matches!(&self.repr, Repr::Full(c) if c[1..].iter().all(|x| x.is_zero()))
    }

    /// The rational value, when the element is `Lambda`-free and rational.
    pub fn as_rational(&self) -> Option<Rat> {
        if self.lambda_exp != 0 {
            return None;
        }
        match &self.repr {
            Repr::Rational(r) => Some(r.clone()),
            Repr::Full(c) => c[1..].iter().all(|x| x.is_zero()).then(|| c[0].clone()),
        }
    }

    /// Power-basis coordinates, always of length `phi(24) = 8`.
    pub fn coeff_vector(&self) -> Vec<Rat> {
        match &self.repr {
            Repr::Rational(r) => {
                let mut v = vec![Rat::zero(); PHI_DEGREE];
                v[0] = r.clone();
                v
            }
            Repr::Full(c) => c.to_vec(),
        }
    }

    fn normalized(mut self) -> Self {
        let collapse = match &self.repr {
            Repr::Full(c) => c[1..].iter().all(|x| x.is_zero()),
            Repr::Rational(_) => false,
        };
        if collapse {
            if let Repr::Full(c) = std::mem::replace(&mut self.repr, Repr::Rational(Rat::zero())) {
                self.repr = Repr::Rational(c[0].clone());
            }
        }
        if self.is_zero() {
            self.lambda_exp = 0;
        }
        self
    }

    /// Checked addition; `Err` when the `Lambda` exponents differ and neither side is zero.
    pub fn try_add(&self, other: &Self) -> Result<Self, CoeffError> {
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.lambda_exp != other.lambda_exp {
            return Err(CoeffError::MixedLambda(self.lambda_exp, other.lambda_exp));
        }
        let repr = match (&self.repr, &other.repr) {
            (Repr::Rational(a), Repr::Rational(b)) => Repr::Rational(a + b),
            _ => {
                let a = self.coeff_vector();
                let b = other.coeff_vector();
                let mut c = zero_coeffs();
                for i in 0..PHI_DEGREE {
                    c[i] = &a[i] + &b[i];
                }
                Repr::Full(Box::new(c))
            }
        };
        Ok(Cyclotomic { lambda_exp: self.lambda_exp, repr }.normalized())
    }

    pub fn mul_ref(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let lambda_exp = self.lambda_exp + other.lambda_exp;
        let repr = match (&self.repr, &other.repr) {
            (Repr::Rational(a), Repr::Rational(b)) => Repr::Rational(a * b),
            (Repr::Rational(a), Repr::Full(b)) | (Repr::Full(b), Repr::Rational(a)) => {
                let mut c = zero_coeffs();
                for i in 0..PHI_DEGREE {
                    c[i] = a * &b[i];
                }
                Repr::Full(Box::new(c))
            }
            (Repr::Full(a), Repr::Full(b)) => {
                let mut raw = vec![Rat::zero(); 2 * PHI_DEGREE];
                for (i, x) in a.iter().enumerate() {
                    if x.is_zero() {
                        continue;
                    }
                    for (j, y) in b.iter().enumerate() {
                        if !y.is_zero() {
                            raw[i + j] = &raw[i + j] + &(x * y);
                        }
                    }
                }
                Repr::Full(Box::new(reduce(&mut raw)))
            }
        };
        Cyclotomic { lambda_exp, repr }.normalized()
    }

    pub fn scale(&self, r: &Rat) -> Self {
        self.mul_ref(&Cyclotomic::from_rat(r.clone()))
    }

    /// Multiplicative inverse; `Lambda` inverts formally.
    pub fn inverse(&self) -> Result<Self, CoeffError> {
        if self.is_zero() {
            return Err(CoeffError::DivisionByZero);
        }
        if let Repr::Rational(r) = &self.repr {
            return Ok(Cyclotomic {
                lambda_exp: -self.lambda_exp,
                repr: Repr::Rational(r.recip()),
            });
        }
        // Solve (self * x) = 1 as an 8x8 linear system over Q.
        let mut cols: Vec<Vec<Rat>> = Vec::with_capacity(PHI_DEGREE);
        for k in 0..PHI_DEGREE {
            let mut basis = Cyclotomic::zeta(0);
            if k > 0 {
                basis = Cyclotomic::zeta(k as i64);
            }
            let mut probe = self.clone();
            probe.lambda_exp = 0;
            cols.push(probe.mul_ref(&basis).coeff_vector());
        }
        let mut m: Vec<Vec<Rat>> = (0..PHI_DEGREE)
            .map(|i| {
                let mut row: Vec<Rat> = (0..PHI_DEGREE).map(|j| cols[j][i].clone()).collect();
                row.push(if i == 0 { Rat::one() } else { Rat::zero() });
                row
            })
            .collect();
        for col in 0..PHI_DEGREE {
            let piv = (col..PHI_DEGREE)
                .find(|&r| !m[r][col].is_zero())
                .expect("unit in a field must be invertible");
            m.swap(col, piv);
            let pv = m[col][col].clone();
            for v in m[col].iter_mut() {
                *v = &*v / &pv;
            }
            for r in 0..PHI_DEGREE {
                if r != col && !m[r][col].is_zero() {
                    let f = m[r][col].clone();
                    for c in 0..=PHI_DEGREE {
                        let delta = &f * &m[col][c];
                        m[r][c] = &m[r][c] - &delta;
                    }
                }
            }
        }
        let mut c = zero_coeffs();
        for i in 0..PHI_DEGREE {
            c[i] = m[i][PHI_DEGREE].clone();
        }
        Ok(Cyclotomic { lambda_exp: -self.lambda_exp, repr: Repr::Full(Box::new(c)) }.normalized())
    }

    pub fn try_div(&self, other: &Self) -> Result<Self, CoeffError> {
        Ok(self.mul_ref(&other.inverse()?))
    }

    pub fn pow(&self, n: i64) -> Self {
        if n == 0 {
            return Self::one();
        }
        let base = if n < 0 {
            self.inverse().expect("negative power of zero")
        } else {
            self.clone()
        };
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_ref(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul_ref(&sq);
            }
        }
        acc
    }

    /// Complex conjugation `zeta -> zeta^{-1}`, defined for `Lambda`-free values.
    pub fn conj(&self) -> Self {
        assert_eq!(self.lambda_exp, 0, "conjugation is only defined for Lambda-free values");
        match &self.repr {
            Repr::Rational(_) => self.clone(),
            Repr::Full(c) => {
                let mut acc = Cyclotomic::from_rat(c[0].clone());
                for (k, x) in c.iter().enumerate().skip(1) {
                    if !x.is_zero() {
                        acc = acc
                            .try_add(&Cyclotomic::zeta(-(k as i64)).scale(x))
                            .expect("lambda-free");
                    }
                }
                acc
            }
        }
    }

    /// Numeric embedding `zeta_24 -> exp(2 pi i/24)`, `Lambda -> lambda_value`.
    /// Reporting only; core checks never call this.
    pub fn embed(&self, lambda_value: Complex64) -> Complex64 {
        let root = Complex64::new(0.0, 2.0 * std::f64::consts::PI / 24.0).exp();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut pw = Complex64::new(1.0, 0.0);
        for c in self.coeff_vector() {
            acc += pw * rat_to_f64(&c);
            pw *= root;
        }
        acc * lambda_value.powi(self.lambda_exp as i32)
    }
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    let num = r.numer();
    let den = r.denom();
    // Good enough for reporting: go through string only for huge values.
    match (num.to_string().parse::<f64>(), den.to_string().parse::<f64>()) {
        (Ok(n), Ok(d)) => n / d,
        _ => f64::NAN,
    }
}

/// The spec-level checked arithmetic entry point.
pub enum CycOp {
    Add,
    Mul,
    Div,
}

pub fn cyc_arith(a: &Cyclotomic, b: &Cyclotomic, op: CycOp) -> Result<Cyclotomic, CoeffError> {
    match op {
        CycOp::Add => a.try_add(b),
        CycOp::Mul => Ok(a.mul_ref(b)),
        CycOp::Div => a.try_div(b),
    }
}

impl std::ops::Add for &Cyclotomic {
    type Output = Cyclotomic;
    fn add(self, rhs: &Cyclotomic) -> Cyclotomic {
        self.try_add(rhs).expect("mixed Lambda exponents in addition")
    }
}

impl std::ops::Add for Cyclotomic {
    type Output = Cyclotomic;
    fn add(self, rhs: Cyclotomic) -> Cyclotomic {
        (&self) + (&rhs)
    }
}

impl std::ops::Sub for &Cyclotomic {
    type Output = Cyclotomic;
    fn sub(self, rhs: &Cyclotomic) -> Cyclotomic {
        self + &(-rhs)
    }
}

impl std::ops::Sub for Cyclotomic {
    type Output = Cyclotomic;
    fn sub(self, rhs: Cyclotomic) -> Cyclotomic {
        (&self) - (&rhs)
    }
}

impl std::ops::Mul for &Cyclotomic {
    type Output = Cyclotomic;
    fn mul(self, rhs: &Cyclotomic) -> Cyclotomic {
        self.mul_ref(rhs)
    }
}

impl std::ops::Mul for Cyclotomic {
    type Output = Cyclotomic;
    fn mul(self, rhs: Cyclotomic) -> Cyclotomic {
        self.mul_ref(&rhs)
    }
}

impl std::ops::Neg for &Cyclotomic {
    type Output = Cyclotomic;
    fn neg(self) -> Cyclotomic {
        Cyclotomic {
            lambda_exp: self.lambda_exp,
            repr: match &self.repr {
                Repr::Rational(r) => Repr::Rational(-r),
                Repr::Full(c) => {
                    let mut out = zero_coeffs();
                    for i in 0..PHI_DEGREE {
                        out[i] = -&c[i];
                    }
                    Repr::Full(Box::new(out))
                }
            },
        }
    }
}

impl std::ops::Neg for Cyclotomic {
    type Output = Cyclotomic;
    fn neg(self) -> Cyclotomic {
        -(&self)
    }
}

/// JSON shape `{conductor, lambda_exp, coeffs: [[num, den], ...]}`.
#[derive(Serialize, Deserialize)]
pub struct CyclotomicJson {
    pub conductor: u32,
    pub lambda_exp: i64,
    pub coeffs: Vec<[String; 2]>,
}

impl Cyclotomic {
    pub fn to_json(&self) -> CyclotomicJson {
        CyclotomicJson {
            conductor: CONDUCTOR,
            lambda_exp: self.lambda_exp,
            coeffs: self
                .coeff_vector()
                .iter()
                .map(|r| [r.numer().to_string(), r.denom().to_string()])
                .collect(),
        }
    }

    pub fn from_json(j: &CyclotomicJson) -> Result<Self, CoeffError> {
        if j.conductor != CONDUCTOR {
            return Err(CoeffError::BadConductor(j.conductor));
        }
        let mut acc = Cyclotomic::zero();
        for (k, [n, d]) in j.coeffs.iter().enumerate() {
            let num: BigInt = n.parse().map_err(|_| CoeffError::DivisionByZero)?;
            let den: BigInt = d.parse().map_err(|_| CoeffError::DivisionByZero)?;
            if den.is_zero() {
                return Err(CoeffError::DivisionByZero);
            }
            let c = Cyclotomic::zeta(k as i64).scale(&BigRational::new(num, den));
            acc = acc.try_add(&c)?;
        }
        Ok(acc.shift_lambda(j.lambda_exp))
    }

    /// Short human-readable form used by text emitters.
    pub fn display_string(&self) -> String {
        if let Some(r) = self.as_rational() {
            return r.to_string();
        }
        let mut parts: Vec<String> = Vec::new();
        for (k, c) in self.coeff_vector().iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let base = if k == 0 { String::from("1") } else { format!("z24^{k}") };
            if c.is_one() && k > 0 {
                parts.push(base);
            } else if (-c).is_one() && k > 0 {
                parts.push(format!("-{base}"));
            } else if k == 0 {
                parts.push(c.to_string());
            } else {
                parts.push(format!("{c}*{base}"));
            }
        }
        let body = parts.join(" + ");
        if self.lambda_exp == 0 {
            body
        } else {
            format!("({body})*L^{}", self.lambda_exp)
        }
    }
}

impl std::fmt::Display for Cyclotomic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.display_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_of_third_root_is_one() {
        let e = Cyclotomic::eps();
        assert!(e.pow(3).is_one());
        // 1 + eps + eps^2 = 0
        let s = Cyclotomic::one() + e.clone() + e.pow(2);
        assert!(s.is_zero());
    }

    #[test]
    fn lambda_is_formally_invertible() {
        let a = Cyclotomic::lambda_pow(1);
        let b = Cyclotomic::lambda_pow(-1);
        let p = a.mul_ref(&b);
        assert!(p.is_one());
        assert_eq!(p.lambda_exp(), 0);
    }

    #[test]
    fn mixed_lambda_addition_is_rejected() {
        let a = Cyclotomic::lambda_pow(1);
        let b = Cyclotomic::one();
        assert!(matches!(a.try_add(&b), Err(CoeffError::MixedLambda(1, 0))));
        // zero absorbs any exponent
        assert!(Cyclotomic::zero().try_add(&a).is_ok());
    }

    #[test]
    fn inverse_of_generic_element() {
        let x = Cyclotomic::zeta(1) + Cyclotomic::rational(3, 7) + Cyclotomic::zeta(5);
        let inv = x.inverse().unwrap();
        assert!(x.mul_ref(&inv).is_one());
    }

    #[test]
    fn sqrt3_squares_to_three() {
        let s = Cyclotomic::sqrt3();
        assert_eq!(s.mul_ref(&s).as_rational().unwrap(), rat_int(3));
    }

    #[test]
    fn numeric_embedding_sanity() {
        let i = Cyclotomic::i().embed(Complex64::new(0.0, 0.0));
        assert!((i - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        let zero = (Cyclotomic::one() + Cyclotomic::eps() + Cyclotomic::eps().pow(2))
            .embed(Complex64::new(1.0, 0.0));
        assert!(zero.norm() < 1e-15);
        let two_pi_i = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
        let l = Cyclotomic::lambda_pow(1).embed(two_pi_i);
        assert!((l - two_pi_i).norm() < 1e-12);
    }

    #[test]
    fn conjugate_norm_is_nonnegative() {
        let x = Cyclotomic::zeta(7) + Cyclotomic::rational(-2, 5) + Cyclotomic::zeta(3);
        let n = x.conj().mul_ref(&x).embed(Complex64::new(1.0, 0.0));
        assert!(n.im.abs() < 1e-12 && n.re >= 0.0);
    }

    #[test]
    fn json_round_trip() {
        let x = Cyclotomic::zeta(5).scale(&rat(22, 7)).shift_lambda(-2);
        let j = x.to_json();
        assert_eq!(j.conductor, 24);
        let y = Cyclotomic::from_json(&j).unwrap();
        assert_eq!(x, y);
    }
}
