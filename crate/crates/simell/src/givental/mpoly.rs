//! Multivariate polynomials and rational functions over the cyclotomic
//! coefficients, for the exact symbolic identity checks of the matrix layer.
//!
//! The variable set is fixed and small; equality of rational functions is
//! decided by cross-multiplication, so no multivariate gcd is needed.

use crate::coeffs::{Cyclotomic, Rat};
use std::collections::BTreeMap;

/// Fixed symbol table.
pub const N_SYMS: usize = 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sym(pub usize);

pub mod syms {
    use super::Sym;
    /// Flat coordinates `t_{-1}, t_0, t_1, ..., t_6`.
    pub const T: [Sym; 8] =
        [Sym(0), Sym(1), Sym(2), Sym(3), Sym(4), Sym(5), Sym(6), Sym(7)];
    /// Anti-holomorphic partner of `t_{-1}`.
    pub const TBAR: Sym = Sym(8);
    /// Group-element entries (the `n11` entry is eliminated by `det = 1`).
    pub const N12: Sym = Sym(9);
    pub const N21: Sym = Sym(10);
    pub const N22: Sym = Sym(11);
    /// Second group element for composition checks.
    pub const M12: Sym = Sym(12);
    pub const M21: Sym = Sym(13);
    pub const M22: Sym = Sym(14);
    /// `y = 1/(t_{-1} - tbar_{-1})` as an independent symbol.
    pub const Y: Sym = Sym(15);
    /// Parameter of the one-dimensional toys.
    pub const S: Sym = Sym(16);
    /// Stand-alone automorphy factor for the weight bookkeeping oracle.
    pub const J: Sym = Sym(17);

    pub fn name(s: Sym) -> &'static str {
        match s.0 {
            0 => "t-1",
            1 => "t0",
            2 => "t1",
            3 => "t2",
            4 => "t3",
            5 => "t4",
            6 => "t5",
            7 => "t6",
            8 => "tbar",
            9 => "n12",
            10 => "n21",
            11 => "n22",
            12 => "m12",
            13 => "m21",
            14 => "m22",
            15 => "y",
            16 => "s",
            17 => "j",
            _ => "?",
        }
    }
}

pub type ExpVec = [u8; N_SYMS];

#[derive(Debug, Clone, PartialEq)]
pub struct MPoly {
    pub terms: BTreeMap<ExpVec, Cyclotomic>,
}

impl MPoly {
    pub fn zero() -> Self {
        MPoly { terms: BTreeMap::new() }
    }

    pub fn constant(c: Cyclotomic) -> Self {
        let mut t = BTreeMap::new();
        if !c.is_zero() {
            t.insert([0u8; N_SYMS], c);
        }
        MPoly { terms: t }
    }

    pub fn one() -> Self {
        Self::constant(Cyclotomic::one())
    }

    pub fn var(s: Sym) -> Self {
        let mut e = [0u8; N_SYMS];
        e[s.0] = 1;
        let mut t = BTreeMap::new();
        t.insert(e, Cyclotomic::one());
        MPoly { terms: t }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, e: ExpVec, c: &Cyclotomic) {
        if c.is_zero() {
            return;
        }
        match self.terms.remove(&e) {
            None => {
                self.terms.insert(e, c.clone());
            }
            Some(old) => {
                let s = &old + c;
                if !s.is_zero() {
                    self.terms.insert(e, s);
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(*e, c);
        }
        out
    }

    pub fn neg(&self) -> Self {
        MPoly { terms: self.terms.iter().map(|(e, c)| (*e, -c)).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = MPoly::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let mut e = *e1;
                for i in 0..N_SYMS {
                    e[i] += e2[i];
                }
                out.add_term(e, &c1.mul_ref(c2));
            }
        }
        out
    }

    pub fn scale(&self, c: &Cyclotomic) -> Self {
        if c.is_zero() {
            return MPoly::zero();
        }
        MPoly { terms: self.terms.iter().map(|(e, x)| (*e, x.mul_ref(c))).collect() }
    }

    pub fn deriv(&self, s: Sym) -> Self {
        let mut out = MPoly::zero();
        for (e, c) in &self.terms {
            if e[s.0] > 0 {
                let mut d = *e;
                d[s.0] -= 1;
                out.add_term(d, &c.scale(&Rat::from_integer((e[s.0] as i64).into())));
            }
        }
        out
    }

    /// Substitute rational functions for a subset of the symbols.
    pub fn subst(&self, map: &[Option<RatFn>; N_SYMS]) -> RatFn {
        let mut acc = RatFn::zero();
        for (e, c) in &self.terms {
            let mut term = RatFn::constant(c.clone());
            for (i, &p) in e.iter().enumerate() {
                if p == 0 {
                    continue;
                }
                let base = match &map[i] {
                    Some(r) => r.clone(),
                    None => RatFn::from_poly(MPoly::var(Sym(i))),
                };
                for _ in 0..p {
                    term = term.mul(&base);
                }
            }
            acc = acc.add(&term);
        }
        acc
    }

    pub fn constant_value(&self) -> Option<Cyclotomic> {
        if self.is_zero() {
            return Some(Cyclotomic::zero());
        }
        if self.terms.len() == 1 {
            if let Some(c) = self.terms.get(&[0u8; N_SYMS]) {
                return Some(c.clone());
            }
        }
        None
    }

    pub fn display_string(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (e, c) in &self.terms {
            let mut s = format!("({})", c.display_string());
            for (i, &p) in e.iter().enumerate() {
                if p == 1 {
                    s.push_str(&format!("*{}", syms::name(Sym(i))));
                } else if p > 1 {
                    s.push_str(&format!("*{}^{}", syms::name(Sym(i)), p));
                }
            }
            parts.push(s);
        }
        parts.join(" + ")
    }
}

/// Rational function `num/den`; the denominator is normalized to leading
/// coefficient one, equality is exact cross-multiplication.
#[derive(Debug, Clone)]
pub struct RatFn {
    pub num: MPoly,
    pub den: MPoly,
}

impl RatFn {
    pub fn from_poly(p: MPoly) -> Self {
        RatFn { num: p, den: MPoly::one() }
    }

    pub fn zero() -> Self {
        Self::from_poly(MPoly::zero())
    }

    pub fn one() -> Self {
        Self::from_poly(MPoly::one())
    }

    pub fn constant(c: Cyclotomic) -> Self {
        Self::from_poly(MPoly::constant(c))
    }

    pub fn constant_rat(r: Rat) -> Self {
        Self::constant(Cyclotomic::from_rat(r))
    }

    pub fn var(s: Sym) -> Self {
        Self::from_poly(MPoly::var(s))
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    fn normalized(mut self) -> Self {
        assert!(!self.den.is_zero(), "zero denominator");
        if self.num.is_zero() {
            self.den = MPoly::one();
            return self;
        }
        // cancel identical num/den cheaply (common after mul by inverses)
        if self.num == self.den {
            return RatFn { num: MPoly::one(), den: MPoly::one() };
        }
        let lead = self.den.terms.values().next().unwrap().clone();
        if !lead.is_one() {
            let li = lead.inverse().expect("field");
            self.num = self.num.scale(&li);
            self.den = self.den.scale(&li);
        }
        self
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.den == other.den {
            return RatFn { num: self.num.add(&other.num), den: self.den.clone() }.normalized();
        }
        RatFn {
            num: self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            den: self.den.mul(&other.den),
        }
        .normalized()
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        RatFn { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        // light cross-cancellation keeps the j-powers from piling up
        if self.num == other.den {
            return RatFn { num: other.num.clone(), den: self.den.clone() }.normalized();
        }
        if other.num == self.den {
            return RatFn { num: self.num.clone(), den: other.den.clone() }.normalized();
        }
        RatFn { num: self.num.mul(&other.num), den: self.den.mul(&other.den) }.normalized()
    }

    pub fn div(&self, other: &Self) -> Self {
        assert!(!other.is_zero(), "division by zero");
        RatFn { num: self.num.mul(&other.den), den: self.den.mul(&other.num) }.normalized()
    }

    pub fn inv(&self) -> Self {
        RatFn::one().div(self)
    }

    pub fn scale(&self, c: &Cyclotomic) -> Self {
        RatFn { num: self.num.scale(c), den: self.den.clone() }
    }

    pub fn eq_exact(&self, other: &Self) -> bool {
        self.num.mul(&other.den) == other.num.mul(&self.den)
    }

    pub fn deriv(&self, s: Sym) -> Self {
        // (n/d)' = (n' d - n d')/d^2
        RatFn {
            num: self.num.deriv(s).mul(&self.den).sub(&self.num.mul(&self.den.deriv(s))),
            den: self.den.mul(&self.den),
        }
        .normalized()
    }

    pub fn subst(&self, map: &[Option<RatFn>; N_SYMS]) -> RatFn {
        self.num.subst(map).div(&self.den.subst(map))
    }

    pub fn constant_value(&self) -> Option<Cyclotomic> {
        let n = self.num.constant_value()?;
        let d = self.den.constant_value()?;
        Some(n.try_div(&d).expect("nonzero denominator"))
    }

    pub fn display_string(&self) -> String {
        if self.den.constant_value().map(|c| c.is_one()).unwrap_or(false) {
            self.num.display_string()
        } else {
            format!("({}) / ({})", self.num.display_string(), self.den.display_string())
        }
    }
}

impl PartialEq for RatFn {
    fn eq(&self, other: &Self) -> bool {
        self.eq_exact(other)
    }
}

/// The empty substitution map.
pub fn no_subst() -> [Option<RatFn>; N_SYMS] {
    std::array::from_fn(|_| None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::rat;

    #[test]
    fn cross_multiplication_equality() {
        // (t^2 - 1)/(t - 1) == t + 1
        let t = MPoly::var(syms::T[0]);
        let lhs = RatFn {
            num: t.mul(&t).sub(&MPoly::one()),
            den: t.sub(&MPoly::one()),
        };
        let rhs = RatFn::from_poly(t.add(&MPoly::one()));
        assert!(lhs.eq_exact(&rhs));
    }

    #[test]
    fn quotient_rule() {
        let t = syms::T[0];
        let f = RatFn::one().div(&RatFn::var(t)); // 1/t
        let d = f.deriv(t); // -1/t^2
        let expect = RatFn {
            num: MPoly::constant(Cyclotomic::from_int(-1)),
            den: MPoly::var(t).mul(&MPoly::var(t)),
        };
        assert!(d.eq_exact(&expect));
    }

    #[test]
    fn substitution_composes() {
        // f = (n12 t + n22), substitute t -> 1/s
        let f = RatFn::from_poly(
            MPoly::var(syms::N12).mul(&MPoly::var(syms::T[0])).add(&MPoly::var(syms::N22)),
        );
        let mut map = no_subst();
        map[syms::T[0].0] = Some(RatFn::one().div(&RatFn::var(syms::S)));
        let g = f.subst(&map);
        // g = (n12 + n22 s)/s
        let expect = RatFn {
            num: MPoly::var(syms::N12).add(&MPoly::var(syms::N22).mul(&MPoly::var(syms::S))),
            den: MPoly::var(syms::S),
        };
        assert!(g.eq_exact(&expect));
    }

    #[test]
    fn constant_fold() {
        let c = RatFn::constant_rat(rat(3, 4)).mul(&RatFn::constant_rat(rat(8, 3)));
        assert_eq!(c.constant_value().unwrap(), Cyclotomic::from_int(2));
    }
}
