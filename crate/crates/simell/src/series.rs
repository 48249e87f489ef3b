//! Truncated Puiseux series over [`Cyclotomic`] and the log-extended series used
//! for the second period.
//!
//! Exponents live on the grid `(1/denom) * Z` and are stored scaled by `denom`.
//! Every series carries an exclusive truncation bound; binary operations take
//! the tightest bound that is still exact (adjusted for valuations under
//! multiplication and division).

use crate::coeffs::{Cyclotomic, Rat};
use num::rational::Ratio;
use num::traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Exponent value as an exact rational.
pub type Exp = Ratio<i64>;

/// Default exponent denominator: covers all fractional powers in the catalogs.
pub const DEFAULT_DENOM: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Var {
    U,
    Q,
    Y,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::U => "u",
            Var::Q => "q",
            Var::Y => "y",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeriesError {
    #[error("variable mismatch: {0} vs {1}")]
    VariableMismatch(&'static str, &'static str),
    #[error("leading coefficient is not invertible")]
    NonInvertibleLeading,
    #[error("operation requires a nonzero series")]
    ZeroSeries,
    #[error("exp requires positive valuation, found constant term")]
    NonzeroConstantTerm,
    #[error("log/pow requires leading coefficient 1 at exponent 0")]
    BadLeading,
    #[error("reversion requires valuation exactly one grid unit")]
    BadValuation,
    #[error("truncation order {have} too short for requested order {want}")]
    TruncationTooShort { have: Exp, want: Exp },
    #[error("exponent {0} does not fit the grid 1/{1}")]
    GridMismatch(Exp, u32),
    #[error("branch choice does not match the leading coefficient")]
    BranchMismatch,
    #[error("log parts failed to cancel")]
    LogResidue,
}

/// A truncated Puiseux series: finitely many terms `c * x^(e/denom)` with
/// `e < trunc`, zero coefficients never stored.
#[derive(Debug, Clone)]
pub struct PuiseuxSeries {
    var: Var,
    denom: u32,
    trunc: i64,
    terms: BTreeMap<i64, Cyclotomic>,
}

/// Equality is semantic: the exponent grid refinement does not matter.
impl PartialEq for PuiseuxSeries {
    fn eq(&self, other: &Self) -> bool {
        self.var == other.var
            && self.trunc_order() == other.trunc_order()
            && self.terms.len() == other.terms.len()
            && self
                .terms()
                .zip(other.terms())
                .all(|((e1, c1), (e2, c2))| e1 == e2 && c1 == c2)
    }
}

impl PuiseuxSeries {
    pub fn zero(var: Var, denom: u32, trunc_order: Exp) -> Self {
        let trunc = scale_exp(trunc_order, denom).expect("truncation must fit the grid");
        PuiseuxSeries { var, denom, trunc, terms: BTreeMap::new() }
    }

    pub fn constant(var: Var, c: Cyclotomic, denom: u32, trunc_order: Exp) -> Self {
        let mut s = Self::zero(var, denom, trunc_order);
        s.set(0, c);
        s
    }

    pub fn one(var: Var, denom: u32, trunc_order: Exp) -> Self {
        Self::constant(var, Cyclotomic::one(), denom, trunc_order)
    }

    pub fn monomial(var: Var, c: Cyclotomic, e: Exp, denom: u32, trunc_order: Exp) -> Self {
        let mut s = Self::zero(var, denom, trunc_order);
        let k = scale_exp(e, denom).expect("exponent must fit the grid");
        s.set(k, c);
        s
    }

    pub fn var(&self) -> Var {
        self.var
    }

    pub fn denom(&self) -> u32 {
        self.denom
    }

    pub fn trunc_order(&self) -> Exp {
        Exp::new(self.trunc, self.denom as i64)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Smallest stored exponent, if any term exists.
    pub fn min_exp(&self) -> Option<Exp> {
        self.terms.keys().next().map(|&k| Exp::new(k, self.denom as i64))
    }

    pub fn leading(&self) -> Option<(Exp, &Cyclotomic)> {
        self.terms
            .iter()
            .next()
            .map(|(&k, c)| (Exp::new(k, self.denom as i64), c))
    }

    pub fn coeff(&self, e: Exp) -> Cyclotomic {
        match scale_exp(e, self.denom) {
            Some(k) => self.terms.get(&k).cloned().unwrap_or_else(Cyclotomic::zero),
            None => Cyclotomic::zero(),
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (Exp, &Cyclotomic)> {
        let d = self.denom as i64;
        self.terms.iter().map(move |(&k, c)| (Exp::new(k, d), c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    fn set(&mut self, k: i64, c: Cyclotomic) {
        if k < self.trunc && !c.is_zero() {
            self.terms.insert(k, c);
        }
    }

    fn add_at(&mut self, k: i64, c: &Cyclotomic) {
        if k >= self.trunc || c.is_zero() {
            return;
        }
        match self.terms.remove(&k) {
            None => {
                self.terms.insert(k, c.clone());
            }
            Some(old) => {
                let s = &old + c;
                if !s.is_zero() {
                    self.terms.insert(k, s);
                }
            }
        }
    }

    /// Valuation scaled by denom; the truncation bound for the zero series.
    fn val_scaled(&self) -> i64 {
        self.terms.keys().next().copied().unwrap_or(self.trunc)
    }

    /// Rescale the internal grid to a multiple of the current denominator.
    pub fn with_denom(&self, denom: u32) -> Self {
        assert!(denom % self.denom == 0, "can only refine the exponent grid");
        let f = (denom / self.denom) as i64;
        PuiseuxSeries {
            var: self.var,
            denom,
            trunc: self.trunc * f,
            terms: self.terms.iter().map(|(&k, c)| (k * f, c.clone())).collect(),
        }
    }

    fn align(a: &Self, b: &Self) -> Result<(Self, Self), SeriesError> {
        if a.var != b.var {
            return Err(SeriesError::VariableMismatch(a.var.name(), b.var.name()));
        }
        if a.denom == b.denom {
            return Ok((a.clone(), b.clone()));
        }
        let d = num::integer::lcm(a.denom, b.denom);
        Ok((a.with_denom(d), b.with_denom(d)))
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, SeriesError> {
        let (a, mut b) = Self::align(self, other)?;
        let trunc = a.trunc.min(b.trunc);
        let mut out = PuiseuxSeries { var: a.var, denom: a.denom, trunc, terms: a.terms };
        out.terms.retain(|&k, _| k < trunc);
        let terms = std::mem::take(&mut b.terms);
        for (k, c) in terms {
            out.add_at(k, &c);
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.try_add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        PuiseuxSeries {
            var: self.var,
            denom: self.denom,
            trunc: self.trunc,
            terms: self.terms.iter().map(|(&k, c)| (k, -c)).collect(),
        }
    }

    pub fn scale(&self, c: &Cyclotomic) -> Self {
        if c.is_zero() {
            return PuiseuxSeries {
                var: self.var,
                denom: self.denom,
                trunc: self.trunc,
                terms: BTreeMap::new(),
            };
        }
        PuiseuxSeries {
            var: self.var,
            denom: self.denom,
            trunc: self.trunc,
            terms: self.terms.iter().map(|(&k, x)| (k, x.mul_ref(c))).collect(),
        }
    }

    pub fn scale_rat(&self, r: &Rat) -> Self {
        self.scale(&Cyclotomic::from_rat(r.clone()))
    }

    /// Multiply by `x^e`.
    pub fn shift(&self, e: Exp) -> Self {
        let denom = num::integer::lcm(self.denom, *e.denom() as u32);
        let s = self.with_denom(denom);
        let k = scale_exp(e, denom).expect("lcm grid");
        PuiseuxSeries {
            var: s.var,
            denom,
            trunc: s.trunc + k,
            terms: s.terms.into_iter().map(|(kk, c)| (kk + k, c)).collect(),
        }
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, SeriesError> {
        let (a, b) = Self::align(self, other)?;
        let trunc = (a.trunc + b.val_scaled()).min(b.trunc + a.val_scaled());
        let mut out = PuiseuxSeries { var: a.var, denom: a.denom, trunc, terms: BTreeMap::new() };
        for (&ka, ca) in &a.terms {
            for (&kb, cb) in &b.terms {
                let k = ka + kb;
                if k < trunc {
                    out.add_at(k, &ca.mul_ref(cb));
                } else {
                    break;
                }
            }
        }
        Ok(out)
    }

    /// Multiplicative inverse; requires an invertible leading coefficient.
    pub fn try_inv(&self) -> Result<Self, SeriesError> {
        let (lead_exp, lead) = self.leading().ok_or(SeriesError::NonInvertibleLeading)?;
        let li = lead.inverse().map_err(|_| SeriesError::NonInvertibleLeading)?;
        let v = scale_exp(lead_exp, self.denom).unwrap();
        // r = tail / (lead x^v); relative precision trunc - v
        let rel = self.trunc - v;
        let mut r = PuiseuxSeries {
            var: self.var,
            denom: self.denom,
            trunc: rel,
            terms: BTreeMap::new(),
        };
        for (&k, c) in self.terms.iter().skip(1) {
            r.set(k - v, c.mul_ref(&li));
        }
        let mut acc = PuiseuxSeries::one(self.var, self.denom, Exp::new(rel, self.denom as i64));
        let mut term = acc.clone();
        if !r.is_zero() {
            let rv = r.val_scaled();
            let mut total = 0;
            loop {
                total += rv;
                if total >= rel {
                    break;
                }
                term = term.try_mul(&r)?.neg();
                acc = acc.try_add(&term)?;
            }
        }
        // shift exponents down by v and scale by lead^{-1}
        Ok(PuiseuxSeries {
            var: self.var,
            denom: self.denom,
            trunc: rel - v,
            terms: acc.terms.into_iter().map(|(k, c)| (k - v, c.mul_ref(&li))).collect(),
        })
    }

    pub fn try_div(&self, other: &Self) -> Result<Self, SeriesError> {
        self.try_mul(&other.try_inv()?)
    }

    pub fn pow_int(&self, n: i64) -> Result<Self, SeriesError> {
        if n == 0 {
            return Ok(PuiseuxSeries::one(self.var, self.denom, self.trunc_order()));
        }
        let base = if n < 0 { self.try_inv()? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc: Option<Self> = None;
        let mut sq = base;
        loop {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => sq.clone(),
                    Some(a) => a.try_mul(&sq)?,
                });
            }
            e >>= 1;
            if e == 0 {
                break;
            }
            sq = sq.try_mul(&sq)?;
        }
        Ok(acc.unwrap())
    }

    /// `a^(r)` with the branch of the leading coefficient supplied explicitly:
    /// for `a = c x^v (1 + tail)` the result is
    /// `leading_choice * x^(v r) * (1 + tail)^r`, and `leading_choice` must
    /// satisfy `leading_choice^q = c^p` where `r = p/q` in lowest terms.
    pub fn pow_rational(
        &self,
        r: Exp,
        leading_choice: &Cyclotomic,
    ) -> Result<Self, SeriesError> {
        let (lead_exp, lead) = self.leading().ok_or(SeriesError::ZeroSeries)?;
        if r.is_zero() {
            return Ok(PuiseuxSeries::one(self.var, self.denom, self.trunc_order()));
        }
        let p = *r.numer();
        let q = *r.denom();
        if leading_choice.pow(q) != lead.pow(p) {
            return Err(SeriesError::BranchMismatch);
        }
        let new_lead_exp = lead_exp * r;
        let denom = num::integer::lcm(self.denom, *new_lead_exp.denom() as u32);
        let s = self.with_denom(denom);
        let v = scale_exp(lead_exp, denom).unwrap();
        let li = lead.inverse().map_err(|_| SeriesError::NonInvertibleLeading)?;
        let rel = s.trunc - v;
        let mut unit = PuiseuxSeries { var: s.var, denom, trunc: rel, terms: BTreeMap::new() };
        unit.set(0, Cyclotomic::one());
        for (&k, c) in s.terms.iter().skip(1) {
            unit.set(k - v, c.mul_ref(&li));
        }
        let powered = unit.log_of_unit()?.scale_rat(&exp_to_rat(r)).exp_of_positive()?;
        let shift = scale_exp(new_lead_exp, denom).ok_or(SeriesError::GridMismatch(new_lead_exp, denom))?;
        Ok(PuiseuxSeries {
            var: s.var,
            denom,
            trunc: powered.trunc + shift,
            terms: powered
                .terms
                .into_iter()
                .map(|(k, c)| (k + shift, c.mul_ref(leading_choice)))
                .collect(),
        })
    }

    /// `exp` of a series with positive valuation, through the differential
    /// recurrence `k f_k = sum_i i a_i f_{k-i}` (no factorial denominators).
    pub fn exp_of_positive(&self) -> Result<Self, SeriesError> {
        if let Some(v) = self.min_exp() {
            if v <= Exp::zero() {
                return Err(SeriesError::NonzeroConstantTerm);
            }
        }
        let mut out = PuiseuxSeries::one(self.var, self.denom, self.trunc_order());
        if self.is_zero() {
            return Ok(out);
        }
        let weighted: Vec<(i64, Cyclotomic)> = self
            .terms
            .iter()
            .map(|(&i, c)| (i, c.scale(&Rat::from_integer(i.into()))))
            .collect();
        let mut keys: Vec<i64> = vec![0];
        let mut k = self.val_scaled();
        while k < self.trunc {
            let mut acc = Cyclotomic::zero();
            for (i, ai) in &weighted {
                if *i > k {
                    break;
                }
                if let Some(f) = out.terms.get(&(k - i)) {
                    acc = &acc + &ai.mul_ref(f);
                }
            }
            if !acc.is_zero() {
                let fk = acc.scale(&Rat::new(1.into(), k.into()));
                out.terms.insert(k, fk);
                keys.push(k);
            }
            k += 1;
        }
        Ok(out)
    }

    /// `log` of a series with leading coefficient exactly `1` at exponent `0`,
    /// through `f' a = a'` solved triangularly, then integrated.
    pub fn log_of_unit(&self) -> Result<Self, SeriesError> {
        match self.leading() {
            Some((e, c)) if e.is_zero() && c.is_one() => {}
            _ => return Err(SeriesError::BadLeading),
        }
        let mut out = PuiseuxSeries::zero(self.var, self.denom, self.trunc_order());
        let tail: Vec<(i64, &Cyclotomic)> =
            self.terms.iter().filter(|(&i, _)| i != 0).map(|(&i, c)| (i, c)).collect();
        if tail.is_empty() {
            return Ok(out);
        }
        // g := u f' scaled by denom: g_k = k a_k - sum_{i >= 1} a_i g_{k-i}
        let mut g: BTreeMap<i64, Cyclotomic> = BTreeMap::new();
        let v = self.terms.iter().filter(|(&i, _)| i != 0).map(|(&i, _)| i).min().unwrap();
        let mut k = v;
        while k < self.trunc {
            let mut acc = self
                .terms
                .get(&k)
                .map(|c| c.scale(&Rat::from_integer(k.into())))
                .unwrap_or_else(Cyclotomic::zero);
            for (i, ai) in &tail {
                if *i > k {
                    break;
                }
                if let Some(gk) = g.get(&(k - i)) {
                    acc = &acc - &ai.mul_ref(gk);
                }
            }
            if !acc.is_zero() {
                g.insert(k, acc);
            }
            k += 1;
        }
        for (k, c) in g {
            out.terms.insert(k, c.scale(&Rat::new(1.into(), k.into())));
        }
        Ok(out)
    }

    /// Derivative with respect to the series variable.
    pub fn deriv(&self) -> Self {
        let d = self.denom as i64;
        PuiseuxSeries {
            var: self.var,
            denom: self.denom,
            trunc: self.trunc - d,
            terms: self
                .terms
                .iter()
                .filter(|(&k, _)| k != 0)
                .map(|(&k, c)| (k - d, c.scale(&Rat::new(k.into(), d.into()))))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        }
    }

    /// Composition `self(other)` where `self` lives on the integer grid and
    /// `other` has positive valuation.
    pub fn compose_integer(&self, other: &Self) -> Result<Self, SeriesError> {
        let d = self.denom as i64;
        if self.terms.keys().any(|&k| k % d != 0) || self.trunc % d != 0 {
            return Err(SeriesError::GridMismatch(self.trunc_order(), self.denom));
        }
        if other.min_exp().map(|v| v <= Exp::zero()).unwrap_or(false) {
            return Err(SeriesError::BadValuation);
        }
        let coeffs: BTreeMap<i64, &Cyclotomic> =
            self.terms.iter().map(|(&k, c)| (k / d, c)).collect();
        let top = coeffs.keys().next_back().copied().unwrap_or(0);
        let bv = other.val_scaled().max(1);
        // output exactness: self known to trunc/d powers of other
        let out_trunc = ((self.trunc / d) * bv).min(other.trunc);
        let mut acc = PuiseuxSeries {
            var: other.var,
            denom: other.denom,
            trunc: out_trunc,
            terms: BTreeMap::new(),
        };
        for k in (0..=top).rev() {
            acc = acc.try_mul(other)?;
            acc.trunc = out_trunc;
            if let Some(c) = coeffs.get(&k) {
                acc.add_at(0, c);
            }
        }
        Ok(acc)
    }

    /// Compositional inverse of a series `c1 x + ...` on the integer grid.
    pub fn revert(&self) -> Result<Self, SeriesError> {
        let d = self.denom as i64;
        if self.terms.keys().any(|&k| k % d != 0) {
            return Err(SeriesError::BadValuation);
        }
        match self.leading() {
            Some((e, c)) if e.is_one() && !c.is_zero() => {
                c.inverse().map_err(|_| SeriesError::NonInvertibleLeading)?;
            }
            _ => return Err(SeriesError::BadValuation),
        }
        let c1 = self.terms.get(&d).unwrap().clone();
        let c1i = c1.inverse().unwrap();
        let full = self.trunc;
        // Newton iteration with precision doubling: g <- g - (a(g) - x)/a'(g).
        let mut prec = (2 * d).min(full);
        let mut g = PuiseuxSeries {
            var: self.var,
            denom: self.denom,
            trunc: prec,
            terms: BTreeMap::from([(d, c1i)]),
        };
        loop {
            let a = self.truncated(Exp::new(prec, d));
            let ag = a.compose_integer(&g)?;
            let x = PuiseuxSeries::monomial(
                self.var,
                Cyclotomic::one(),
                Exp::one(),
                self.denom,
                Exp::new(prec, d),
            );
            let err = ag.try_sub(&x)?;
            if !err.is_zero() {
                let dag = a.deriv().compose_integer(&g)?;
                let corr = err.try_div(&dag)?;
                g = g.try_sub(&corr)?;
            }
            g.trunc = prec;
            if prec >= full {
                break;
            }
            prec = (2 * prec).min(full);
            g = PuiseuxSeries { var: g.var, denom: g.denom, trunc: prec, terms: g.terms };
        }
        g.trunc = full;
        Ok(g)
    }

    /// Tighten the truncation bound.
    pub fn truncated(&self, order: Exp) -> Self {
        let k = scale_exp_ceil(order, self.denom);
        let trunc = k.min(self.trunc);
        PuiseuxSeries {
            var: self.var,
            denom: self.denom,
            trunc,
            terms: self.terms.iter().filter(|(&kk, _)| kk < trunc).map(|(&kk, c)| (kk, c.clone())).collect(),
        }
    }

    /// Rename the variable without touching exponents.
    pub fn renamed(&self, var: Var) -> Self {
        let mut s = self.clone();
        s.var = var;
        s
    }

    /// Rescale every exponent by the positive rational `factor` (grading change
    /// between two uniformizer conventions).
    pub fn regrade(&self, factor: Exp, var: Var) -> Result<Self, SeriesError> {
        assert!(factor > Exp::zero());
        let mut denom = self.denom;
        // choose a grid that holds every rescaled exponent
        for &k in self.terms.keys() {
            let e = Exp::new(k, self.denom as i64) * factor;
            denom = num::integer::lcm(denom, *e.denom() as u32);
        }
        let trunc_e = self.trunc_order() * factor;
        denom = num::integer::lcm(denom, *trunc_e.denom() as u32);
        let mut out = PuiseuxSeries {
            var,
            denom,
            trunc: scale_exp(trunc_e, denom).unwrap(),
            terms: BTreeMap::new(),
        };
        for (&k, c) in &self.terms {
            let e = Exp::new(k, self.denom as i64) * factor;
            let kk = scale_exp(e, denom).ok_or(SeriesError::GridMismatch(e, denom))?;
            out.set(kk, c.clone());
        }
        Ok(out)
    }

    /// Substitute the series variable by `inner`, which must have unit leading
    /// coefficient at valuation one grid unit (handles fractional exponents of
    /// `self` through exact fractional powers of `inner / x`).
    pub fn substitute(&self, inner: &Self) -> Result<Self, SeriesError> {
        match inner.leading() {
            Some((e, c)) if e.is_one() && c.is_one() => {}
            _ => return Err(SeriesError::BadValuation),
        }
        let unit = inner.shift(-Exp::one());
        // (inner/x)^(1/denom): exponent grid is preserved by fractional powers
        let root = unit.pow_rational(Exp::new(1, self.denom as i64), &Cyclotomic::one())?;
        let out_trunc = inner.trunc_order().min(self.trunc_order());
        let denom = num::integer::lcm(self.denom, root.denom);
        let mut out = PuiseuxSeries::zero(inner.var, denom, out_trunc);
        // cache powers of root by repeated squaring over the needed exponents
        let mut cache: BTreeMap<i64, PuiseuxSeries> = BTreeMap::new();
        cache.insert(0, PuiseuxSeries::one(inner.var, root.denom, out_trunc));
        cache.insert(1, root.truncated(out_trunc));
        fn get_pow(
            cache: &mut BTreeMap<i64, PuiseuxSeries>,
            e: i64,
            bound: Exp,
        ) -> Result<PuiseuxSeries, SeriesError> {
            if let Some(p) = cache.get(&e) {
                return Ok(p.clone());
            }
            let r = if e < 0 {
                get_pow(cache, -e, bound)?.try_inv()?.truncated(bound)
            } else {
                let h = get_pow(cache, e / 2, bound)?;
                let mut p = h.try_mul(&h)?;
                if e % 2 == 1 {
                    let one = cache.get(&1).unwrap().clone();
                    p = p.try_mul(&one)?;
                }
                p.truncated(bound)
            };
            cache.insert(e, r.clone());
            Ok(r)
        }
        for (e, c) in self.terms() {
            // x^e -> q^e * (inner/q)^e, with (inner/q)^e = root^(e*denom)
            let scaled = e * Exp::from_integer(self.denom as i64);
            debug_assert!(scaled.is_integer());
            let pw = get_pow(&mut cache, scaled.to_integer(), out_trunc)?;
            out = out.try_add(&pw.shift(e).scale(c).truncated(out_trunc))?;
        }
        Ok(out)
    }

    /// JSON shape from the external interface contract.
    pub fn to_json(&self) -> SeriesJson {
        SeriesJson {
            variable: self.var.name().to_string(),
            denom: self.denom,
            trunc_order: [self.trunc_order().numer().to_string(), self.trunc_order().denom().to_string()],
            terms: self
                .terms()
                .map(|(e, c)| SeriesTermJson {
                    exp_num: *e.numer(),
                    exp_den: *e.denom(),
                    coeff: c.to_json(),
                })
                .collect(),
        }
    }

    pub fn display_string(&self, max_terms: usize) -> String {
        let mut parts: Vec<String> = Vec::new();
        for (e, c) in self.terms().take(max_terms) {
            if e.is_zero() {
                parts.push(format!("({})", c.display_string()));
            } else {
                parts.push(format!("({})*{}^{}", c.display_string(), self.var.name(), e));
            }
        }
        if self.terms.len() > max_terms {
            parts.push("...".into());
        }
        format!("{} + O({}^{})", parts.join(" + "), self.var.name(), self.trunc_order())
    }
}

#[derive(Serialize, Deserialize)]
pub struct SeriesTermJson {
    pub exp_num: i64,
    pub exp_den: i64,
    pub coeff: crate::coeffs::CyclotomicJson,
}

#[derive(Serialize, Deserialize)]
pub struct SeriesJson {
    pub variable: String,
    pub denom: u32,
    pub trunc_order: [String; 2],
    pub terms: Vec<SeriesTermJson>,
}

fn scale_exp(e: Exp, denom: u32) -> Option<i64> {
    let scaled = e * Exp::from_integer(denom as i64);
    scaled.is_integer().then(|| scaled.to_integer())
}

fn scale_exp_ceil(e: Exp, denom: u32) -> i64 {
    let scaled = e * Exp::from_integer(denom as i64);
    scaled.ceil().to_integer()
}

fn exp_to_rat(e: Exp) -> Rat {
    Rat::new((*e.numer()).into(), (*e.denom()).into())
}

/// Arithmetic entry point mirroring the operation contract.
pub enum PsOp {
    Add,
    Mul,
    Div,
}

pub fn ps_arith(a: &PuiseuxSeries, b: &PuiseuxSeries, op: PsOp) -> Result<PuiseuxSeries, SeriesError> {
    match op {
        PsOp::Add => a.try_add(b),
        PsOp::Mul => a.try_mul(b),
        PsOp::Div => a.try_div(b),
    }
}

/// `f0 + f1 * L` where `L` is the fixed log symbol `log(-sigma)`.
///
/// `L` never squares: every solution in scope has log-degree at most one.
#[derive(Debug, Clone, PartialEq)]
pub struct LogSeries {
    pub base: PuiseuxSeries,
    pub log_part: PuiseuxSeries,
}

impl LogSeries {
    pub fn from_base(base: PuiseuxSeries) -> Self {
        let log_part = PuiseuxSeries::zero(base.var(), base.denom(), base.trunc_order());
        LogSeries { base, log_part }
    }

    pub fn new(base: PuiseuxSeries, log_part: PuiseuxSeries) -> Self {
        LogSeries { base, log_part }
    }

    pub fn is_zero(&self) -> bool {
        self.base.is_zero() && self.log_part.is_zero()
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, SeriesError> {
        Ok(LogSeries {
            base: self.base.try_add(&other.base)?,
            log_part: self.log_part.try_add(&other.log_part)?,
        })
    }

    pub fn neg(&self) -> Self {
        LogSeries { base: self.base.neg(), log_part: self.log_part.neg() }
    }

    pub fn scale(&self, c: &Cyclotomic) -> Self {
        LogSeries { base: self.base.scale(c), log_part: self.log_part.scale(c) }
    }

    pub fn mul_ps(&self, s: &PuiseuxSeries) -> Result<Self, SeriesError> {
        Ok(LogSeries { base: self.base.try_mul(s)?, log_part: self.log_part.try_mul(s)? })
    }

    /// Divide by a plain series.
    pub fn div_ps(&self, s: &PuiseuxSeries) -> Result<Self, SeriesError> {
        let inv = s.try_inv()?;
        self.mul_ps(&inv)
    }

    /// Derivative in `sigma`, for series in `u = -1/sigma`:
    /// `d/d sigma = u^2 d/du` and `dL/d sigma = 1/sigma = -u`.
    pub fn d_sigma(&self) -> Result<Self, SeriesError> {
        let u2 = |s: &PuiseuxSeries| -> PuiseuxSeries { s.deriv().shift(Exp::from_integer(2)) };
        let log_term = self.log_part.shift(Exp::one()).neg();
        Ok(LogSeries {
            base: u2(&self.base).try_add(&log_term)?,
            log_part: u2(&self.log_part),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::rat;

    fn ord(n: i64) -> Exp {
        Exp::from_integer(n)
    }

    fn x(var: Var, n: i64) -> PuiseuxSeries {
        PuiseuxSeries::monomial(var, Cyclotomic::one(), Exp::one(), DEFAULT_DENOM, ord(n))
    }

    #[test]
    fn product_of_conjugates() {
        let one = PuiseuxSeries::one(Var::U, 12, ord(10));
        let a = one.try_add(&x(Var::U, 10)).unwrap();
        let b = one.try_sub(&x(Var::U, 10)).unwrap();
        let p = a.try_mul(&b).unwrap();
        assert!(p.coeff(ord(0)).is_one());
        assert!(p.coeff(ord(1)).is_zero());
        assert_eq!(p.coeff(ord(2)), Cyclotomic::from_int(-1));
    }

    #[test]
    fn geometric_series() {
        let one = PuiseuxSeries::one(Var::U, 12, ord(8));
        let g = one.try_div(&one.try_sub(&x(Var::U, 8)).unwrap()).unwrap();
        for k in 0..8 {
            assert!(g.coeff(ord(k)).is_one(), "coefficient at {k}");
        }
    }

    #[test]
    fn monomial_division_drops_valuation() {
        // (q + q^4)/q = 1 + q^3
        let q = x(Var::Q, 9);
        let s = q.try_add(&q.pow_int(4).unwrap()).unwrap();
        let r = s.try_div(&q).unwrap();
        assert!(r.coeff(ord(0)).is_one());
        assert!(r.coeff(ord(3)).is_one());
        assert_eq!(r.num_terms(), 2);
    }

    #[test]
    fn binomial_cube_root() {
        // (1 + 27 u^3)^{1/3} = 1 + 9u^3 - 81u^6 + ...; cube recovers the input
        let one = PuiseuxSeries::one(Var::U, 12, ord(12));
        let a = one
            .try_add(&PuiseuxSeries::monomial(Var::U, Cyclotomic::from_int(27), ord(3), 12, ord(12)))
            .unwrap();
        let r = a.pow_rational(Exp::new(1, 3), &Cyclotomic::one()).unwrap();
        assert_eq!(r.coeff(ord(3)), Cyclotomic::from_int(9));
        assert_eq!(r.coeff(ord(6)), Cyclotomic::from_int(-81));
        let cubed = r.pow_int(3).unwrap();
        assert_eq!(cubed.truncated(ord(12)), a.truncated(ord(12)));
    }

    #[test]
    fn sqrt_squares_back() {
        let one = PuiseuxSeries::one(Var::U, 12, ord(9));
        let a = one.try_add(&x(Var::U, 9)).unwrap();
        let r = a.pow_rational(Exp::new(1, 2), &Cyclotomic::one()).unwrap();
        assert_eq!(r.pow_int(2).unwrap().truncated(ord(9)), a);
    }

    #[test]
    fn pow_zero_is_one() {
        let a = x(Var::U, 5);
        let p = a.pow_rational(Exp::zero(), &Cyclotomic::one()).unwrap();
        assert!(p.coeff(ord(0)).is_one());
        assert_eq!(p.num_terms(), 1);
    }

    #[test]
    fn branch_contract_is_enforced() {
        // sqrt of -u^{-3}(1 - 27u^3)-type leading needs a branch with square -1
        let a = PuiseuxSeries::monomial(Var::U, Cyclotomic::from_int(-1), ord(1), 12, ord(7));
        assert!(matches!(
            a.pow_rational(Exp::new(1, 2), &Cyclotomic::one()),
            Err(SeriesError::BranchMismatch)
        ));
        assert!(a.pow_rational(Exp::new(1, 2), &Cyclotomic::i()).is_ok());
    }

    #[test]
    fn exp_log_round_trip() {
        let q = x(Var::Q, 10);
        let a = q.try_add(&q.pow_int(2).unwrap().scale_rat(&rat(1, 2))).unwrap();
        let e = a.exp_of_positive().unwrap();
        assert_eq!(e.log_of_unit().unwrap(), a);
        let back = e.try_mul(&a.neg().exp_of_positive().unwrap()).unwrap();
        assert!(back.coeff(ord(0)).is_one());
        assert_eq!(back.num_terms(), 1);
    }

    #[test]
    fn exp_needs_positive_valuation() {
        let one = PuiseuxSeries::one(Var::Q, 12, ord(5));
        assert!(matches!(one.exp_of_positive(), Err(SeriesError::NonzeroConstantTerm)));
        // exp(0) = 1
        let z = PuiseuxSeries::zero(Var::Q, 12, ord(5));
        assert!(z.exp_of_positive().unwrap().coeff(ord(0)).is_one());
    }

    #[test]
    fn reversion_of_x_plus_x_squared() {
        let q = x(Var::Q, 8);
        let a = q.try_add(&q.pow_int(2).unwrap()).unwrap();
        let g = a.revert().unwrap();
        // alternating Catalan numbers: x - x^2 + 2x^3 - 5x^4 + 14x^5 - ...
        let expect = [1i64, -1, 2, -5, 14, -42, 132];
        for (k, v) in expect.iter().enumerate() {
            assert_eq!(g.coeff(ord(k as i64 + 1)), Cyclotomic::from_int(*v), "term {k}");
        }
        let round = a.compose_integer(&g).unwrap();
        assert_eq!(round.coeff(ord(1)), Cyclotomic::one());
        assert_eq!(round.num_terms(), 1, "a(revert(a)) = x: {}", round.display_string(6));
    }

    #[test]
    fn revert_identity() {
        let q = x(Var::Q, 6);
        assert_eq!(q.revert().unwrap(), q);
    }

    #[test]
    fn substitute_handles_fractional_exponents() {
        // self = u^{1/2}, inner = q(1+q): subst = q^{1/2}(1+q)^{1/2}
        let half = PuiseuxSeries::monomial(Var::U, Cyclotomic::one(), Exp::new(1, 2), 12, ord(6));
        let q = x(Var::Q, 6);
        let inner = q.try_add(&q.pow_int(2).unwrap()).unwrap();
        let s = half.substitute(&inner).unwrap();
        let direct = inner
            .pow_rational(Exp::new(1, 2), &Cyclotomic::one())
            .unwrap()
            .truncated(s.trunc_order());
        assert_eq!(s, direct);
    }

    #[test]
    fn regrade_rescales_exponents() {
        let s = PuiseuxSeries::monomial(Var::Q, Cyclotomic::one(), Exp::new(9, 4), 12, ord(9));
        let r = s.regrade(Exp::new(4, 9), Var::Q).unwrap();
        assert!(r.coeff(Exp::one()).is_one());
    }

    #[test]
    fn log_series_sigma_derivative() {
        // d/d sigma (L) = -u; with f0 = 0, f1 = 1
        let one = PuiseuxSeries::one(Var::U, 12, ord(8));
        let l = LogSeries::new(PuiseuxSeries::zero(Var::U, 12, ord(8)), one);
        let d = l.d_sigma().unwrap();
        assert!(d.log_part.is_zero());
        assert_eq!(d.base.coeff(ord(1)), Cyclotomic::from_int(-1));
    }

    #[test]
    fn variable_mismatch_is_reported() {
        let a = x(Var::U, 5);
        let b = x(Var::Q, 5);
        assert!(matches!(a.try_add(&b), Err(SeriesError::VariableMismatch(_, _))));
    }
}
