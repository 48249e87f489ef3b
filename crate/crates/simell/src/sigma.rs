//! Univariate polynomials and rational functions in the deformation parameter
//! `sigma`, with exact expansion at `sigma = infinity` in the chart `u = -1/sigma`.

use crate::coeffs::{Cyclotomic, Rat};
use crate::series::{Exp, LogSeries, PuiseuxSeries, SeriesError, Var};

/// Dense polynomial in `sigma` over the cyclotomic coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaPoly {
    /// Coefficient of `sigma^k` at index `k`; no trailing zeros.
    coeffs: Vec<Cyclotomic>,
}

impl SigmaPoly {
    pub fn new(coeffs: Vec<Cyclotomic>) -> Self {
        let mut p = SigmaPoly { coeffs };
        p.trim();
        p
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Cyclotomic::from_int(c)).collect())
    }

    pub fn zero() -> Self {
        SigmaPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::new(vec![Cyclotomic::one()])
    }

    pub fn constant(c: Cyclotomic) -> Self {
        Self::new(vec![c])
    }

    /// `sigma^k`.
    pub fn sigma_pow(k: usize) -> Self {
        let mut v = vec![Cyclotomic::zero(); k + 1];
        v[k] = Cyclotomic::one();
        Self::new(v)
    }

    fn trim(&mut self) {
        while self.coeffs.last().map(|c| c.is_zero()).unwrap_or(false) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&Cyclotomic> {
        self.coeffs.last()
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let a = self.coeffs.get(i).cloned().unwrap_or_else(Cyclotomic::zero);
            let b = other.coeffs.get(i).cloned().unwrap_or_else(Cyclotomic::zero);
            out.push(&a + &b);
        }
        Self::new(out)
    }

    pub fn neg(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| -c).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![Cyclotomic::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    out[i + j] = &out[i + j] + &a.mul_ref(b);
                }
            }
        }
        Self::new(out)
    }

    pub fn scale(&self, c: &Cyclotomic) -> Self {
        Self::new(self.coeffs.iter().map(|x| x.mul_ref(c)).collect())
    }

    pub fn deriv(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c.scale(&Rat::from_integer((k as i64).into())))
                .collect(),
        )
    }

    /// Euclidean division, valid because coefficients form a field.
    pub fn div_rem(&self, other: &Self) -> (Self, Self) {
        assert!(!other.is_zero(), "division by the zero polynomial");
        let mut rem = self.clone();
        let mut quot = vec![Cyclotomic::zero(); self.coeffs.len().saturating_sub(other.coeffs.len()) + 1];
        let dlead = other.leading().unwrap().inverse().expect("field");
        while !rem.is_zero() && rem.coeffs.len() >= other.coeffs.len() {
            let shift = rem.coeffs.len() - other.coeffs.len();
            let f = rem.leading().unwrap().mul_ref(&dlead);
            quot[shift] = &quot[shift] + &f;
            let mut sub = vec![Cyclotomic::zero(); shift];
            sub.extend(other.coeffs.iter().map(|c| c.mul_ref(&f)));
            rem = rem.sub(&Self::new(sub));
        }
        (Self::new(quot), rem)
    }

    pub fn gcd(&self, other: &Self) -> Self {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        if let Some(l) = a.leading() {
            let li = l.inverse().unwrap();
            a = a.scale(&li);
        }
        a
    }

    /// Expand in `u = -1/sigma`: `sigma^k = (-1)^k u^{-k}`.
    pub fn expand_u(&self, trunc_order: Exp) -> PuiseuxSeries {
        let mut out = PuiseuxSeries::zero(Var::U, crate::series::DEFAULT_DENOM, trunc_order);
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let sign = if k % 2 == 0 { Cyclotomic::one() } else { Cyclotomic::from_int(-1) };
            let mono = PuiseuxSeries::monomial(
                Var::U,
                c.mul_ref(&sign),
                Exp::from_integer(-(k as i64)),
                crate::series::DEFAULT_DENOM,
                trunc_order,
            );
            out = out.try_add(&mono).expect("same variable");
        }
        out
    }

    pub fn display_string(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| match k {
                0 => format!("({})", c.display_string()),
                1 => format!("({})*s", c.display_string()),
                _ => format!("({})*s^{k}", c.display_string()),
            })
            .collect();
        parts.join(" + ")
    }
}

/// Rational function `num/den` in `sigma`, reduced and with monic denominator.
#[derive(Debug, Clone)]
pub struct SigmaRat {
    pub num: SigmaPoly,
    pub den: SigmaPoly,
}

impl SigmaRat {
    pub fn new(num: SigmaPoly, den: SigmaPoly) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let mut r = SigmaRat { num, den };
        r.reduce();
        r
    }

    pub fn from_poly(p: SigmaPoly) -> Self {
        SigmaRat { num: p, den: SigmaPoly::one() }
    }

    pub fn zero() -> Self {
        Self::from_poly(SigmaPoly::zero())
    }

    pub fn one() -> Self {
        Self::from_poly(SigmaPoly::one())
    }

    pub fn constant_rat(r: Rat) -> Self {
        Self::from_poly(SigmaPoly::constant(Cyclotomic::from_rat(r)))
    }

    fn reduce(&mut self) {
        if self.num.is_zero() {
            self.den = SigmaPoly::one();
            return;
        }
        let g = self.num.gcd(&self.den);
        if g.degree().unwrap_or(0) > 0 {
            self.num = self.num.div_rem(&g).0;
            self.den = self.den.div_rem(&g).0;
        }
        let l = self.den.leading().unwrap().inverse().expect("field");
        self.num = self.num.scale(&l);
        self.den = self.den.scale(&l);
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(
            self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        SigmaRat { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    pub fn div(&self, other: &Self) -> Self {
        assert!(!other.is_zero(), "division by zero rational function");
        Self::new(self.num.mul(&other.den), self.den.mul(&other.num))
    }

    pub fn scale(&self, c: &Cyclotomic) -> Self {
        SigmaRat { num: self.num.scale(c), den: self.den.clone() }
    }

    pub fn eq_ratfun(&self, other: &Self) -> bool {
        self.num.mul(&other.den) == other.num.mul(&self.den)
    }

    /// Expand in `u = -1/sigma` as a truncated Laurent-Puiseux series.
    pub fn expand_u(&self, trunc_order: Exp) -> Result<PuiseuxSeries, SeriesError> {
        // widen internal precision so the quotient is exact to trunc_order
        let extra = self.den.degree().unwrap_or(0) as i64 + self.num.degree().unwrap_or(0) as i64 + 1;
        let wide = trunc_order + Exp::from_integer(extra);
        let n = self.num.expand_u(wide);
        let d = self.den.expand_u(wide);
        Ok(n.try_div(&d)?.truncated(trunc_order))
    }

    pub fn display_string(&self) -> String {
        format!("({}) / ({})", self.num.display_string(), self.den.display_string())
    }
}

/// A linear differential operator `sum_i c_i(sigma) * (d/d sigma)^i`.
#[derive(Debug, Clone)]
pub struct OdeOp {
    pub terms: Vec<(SigmaRat, usize)>,
    pub name: String,
}

impl OdeOp {
    pub fn new(name: &str, terms: Vec<(SigmaRat, usize)>) -> Self {
        OdeOp { terms, name: name.to_string() }
    }

    pub fn max_order(&self) -> usize {
        self.terms.iter().map(|(_, k)| *k).max().unwrap_or(0)
    }
}

/// Apply the operator to a log-extended series in `u = -1/sigma`.
///
/// The chain rule `d/d sigma = u^2 d/du` and `dL/d sigma = -u` are handled by
/// [`LogSeries::d_sigma`]. The caller asserts vanishing to the order it needs.
pub fn apply_ode(op: &OdeOp, f: &LogSeries, check_order: Exp) -> Result<LogSeries, SeriesError> {
    let have = f.base.trunc_order().min(f.log_part.trunc_order());
    if have < check_order {
        return Err(SeriesError::TruncationTooShort { have, want: check_order });
    }
    let mut derivs: Vec<LogSeries> = vec![f.clone()];
    for _ in 0..op.max_order() {
        let last = derivs.last().unwrap();
        derivs.push(last.d_sigma()?);
    }
    let mut acc: Option<LogSeries> = None;
    for (coeff, order) in &op.terms {
        let c = coeff.expand_u(check_order)?;
        let term = derivs[*order].mul_ps(&c)?;
        acc = Some(match acc {
            None => term,
            Some(a) => a.try_add(&term)?,
        });
    }
    Ok(acc.unwrap_or_else(|| {
        LogSeries::from_base(PuiseuxSeries::zero(Var::U, crate::series::DEFAULT_DENOM, check_order))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::rat;

    #[test]
    fn rational_function_reduction() {
        // (s^2 - 1)/(s - 1) = s + 1
        let num = SigmaPoly::from_ints(&[-1, 0, 1]);
        let den = SigmaPoly::from_ints(&[-1, 1]);
        let r = SigmaRat::new(num, den);
        assert_eq!(r.num, SigmaPoly::from_ints(&[1, 1]));
        assert_eq!(r.den, SigmaPoly::one());
    }

    #[test]
    fn expand_inverse_of_27_plus_sigma_cubed() {
        // 1/(27+s^3) = -u^3 (1 + 27u^3 + ...)
        let r = SigmaRat::new(SigmaPoly::one(), SigmaPoly::from_ints(&[27, 0, 0, 1]));
        let s = r.expand_u(Exp::from_integer(10)).unwrap();
        assert_eq!(s.coeff(Exp::from_integer(3)), Cyclotomic::from_int(-1));
        assert_eq!(s.coeff(Exp::from_integer(6)), Cyclotomic::from_int(-27));
        assert_eq!(s.coeff(Exp::from_integer(9)), Cyclotomic::from_int(-729));
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let op = OdeOp::new("d", vec![(SigmaRat::one(), 1)]);
        let c = LogSeries::from_base(PuiseuxSeries::constant(
            Var::U,
            Cyclotomic::rational(3, 5),
            12,
            Exp::from_integer(10),
        ));
        let r = apply_ode(&op, &c, Exp::from_integer(8)).unwrap();
        assert!(r.is_zero());
    }

    #[test]
    fn ode_linearity_on_samples() {
        let op = OdeOp::new(
            "toy",
            vec![
                (SigmaRat::new(SigmaPoly::from_ints(&[0, 3]), SigmaPoly::from_ints(&[1, 0, 2])), 1),
                (SigmaRat::constant_rat(rat(2, 7)), 0),
            ],
        );
        let ord = Exp::from_integer(9);
        let f = LogSeries::new(
            SigmaPoly::from_ints(&[1, 4]).expand_u(ord),
            SigmaPoly::from_ints(&[2]).expand_u(ord),
        );
        let g = LogSeries::new(
            SigmaPoly::from_ints(&[0, 0, 5]).expand_u(ord),
            SigmaPoly::from_ints(&[1, 1]).expand_u(ord),
        );
        let chk = Exp::from_integer(4);
        let lhs = apply_ode(&op, &f.try_add(&g).unwrap(), chk).unwrap();
        let rhs = apply_ode(&op, &f, chk).unwrap().try_add(&apply_ode(&op, &g, chk).unwrap()).unwrap();
        assert_eq!(lhs.base.truncated(chk), rhs.base.truncated(chk));
        assert_eq!(lhs.log_part.truncated(chk), rhs.log_part.truncated(chk));
    }

    #[test]
    fn truncation_guard() {
        let op = OdeOp::new("d", vec![(SigmaRat::one(), 1)]);
        let c = LogSeries::from_base(PuiseuxSeries::one(Var::U, 12, Exp::from_integer(5)));
        assert!(matches!(
            apply_ode(&op, &c, Exp::from_integer(50)),
            Err(SeriesError::TruncationTooShort { .. })
        ));
    }
}
