//! The mirror map: Fourier expansion of `u = -1/sigma` in the uniformizer
//! `q = e^{Lambda tau / r}`, with the exponent `r` derived rather than assumed,
//! and substitution of closed sigma-expressions into q-series.

use crate::coeffs::Cyclotomic;
use crate::family::Family;
use crate::hypergeom::PeriodPair;
use crate::modular;
use crate::series::{Exp, PuiseuxSeries, SeriesError, Var};
use crate::sexpr::SigmaSum;
use num::traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MirrorError {
    /// The formal `2 pi i` failed to cancel out of `Lambda * tau`.
    #[error("Lambda failed to cancel in the exponentiated flat coordinate")]
    LambdaResidue,
    /// No integer exponent `r` makes `e^{Lambda tau / r}` a unit power series.
    #[error("no integer uniformizer exponent: log coefficient {0}")]
    NoUniformizer(String),
    #[error("series error: {0}")]
    Series(#[from] SeriesError),
}

/// The mirror map data for one family.
#[derive(Debug, Clone)]
pub struct MirrorMap {
    pub family: Family,
    /// Derived exponent: `q_ser = e^{Lambda tau / r_derived}` is the unit-root
    /// uniformizer in which `u` expands with leading coefficient one.
    pub r_derived: i64,
    /// The exponent used by the quoted Fourier expansions of this family.
    pub r_quoted: i64,
    /// `u` as a series in the derived uniformizer.
    pub u_of_q: PuiseuxSeries,
    /// The derived uniformizer as a series in `u`.
    pub q_of_u: PuiseuxSeries,
}

/// Build the mirror map from a period pair.
///
/// `Lambda tau = -r L + (power series in u)` exactly; the log coefficient
/// yields the derived `r`, `Lambda` must cancel, and `e^{-L} = u` turns the
/// exponential into a unit power series which is then reverted.
pub fn build_mirror(p: &PeriodPair, order: Exp) -> Result<MirrorMap, MirrorError> {
    let lam_tau = p
        .pi_b
        .scale(&Cyclotomic::lambda_pow(1))
        .div_ps(&p.pi_a)?;
    for (_, c) in lam_tau.base.terms().chain(lam_tau.log_part.terms()) {
        if c.lambda_exp() != 0 {
            return Err(MirrorError::LambdaResidue);
        }
    }
    // the log part must be a negative integer constant -r
    let log = &lam_tau.log_part;
    let r = match log.leading() {
        Some((e, c)) if e.is_zero() && log.num_terms() == 1 => match c.as_rational() {
            Some(v) if v.is_integer() && v.is_negative() => -v.to_integer(),
            _ => return Err(MirrorError::NoUniformizer(c.display_string())),
        },
        _ => {
            return Err(MirrorError::NoUniformizer(log.display_string(4)));
        }
    };
    let r_i64: i64 = r.to_string().parse().expect("small integer");
    // q_of_u = u * exp(base / r); the exp argument must be a pure power series
    let arg = lam_tau.base.scale_rat(&crate::coeffs::rat(1, r_i64)).truncated(order);
    if arg.min_exp().map(|e| e <= Exp::zero()).unwrap_or(false) {
        return Err(MirrorError::NoUniformizer(arg.display_string(4)));
    }
    let q_of_u = arg.exp_of_positive()?.shift(Exp::one()).truncated(order);
    let u_of_q = q_of_u.renamed(Var::Q).revert()?.renamed(Var::Q);
    Ok(MirrorMap {
        family: p.family,
        r_derived: r_i64,
        r_quoted: p.family.theorem_q_denominator(),
        u_of_q,
        q_of_u,
    })
}

impl MirrorMap {
    /// Substitute a u-expansion into the derived uniformizer.
    pub fn substitute_u_series(&self, s: &PuiseuxSeries) -> Result<PuiseuxSeries, SeriesError> {
        s.substitute(&self.u_of_q)
    }

    /// Regrade a series in the derived uniformizer to the family's quoted one:
    /// `q_ser^e = q_quoted^(e r_quoted / r_derived)`.
    pub fn to_quoted_grading(&self, s: &PuiseuxSeries) -> Result<PuiseuxSeries, SeriesError> {
        s.regrade(Exp::new(self.r_quoted, self.r_derived), Var::Q)
    }

    /// The j-invariant of the family's elliptic curve at infinity, expanded in
    /// the derived uniformizer.
    pub fn j_expansion(&self, order: Exp) -> Result<PuiseuxSeries, SeriesError> {
        let ju = j_formula_u(self.family, order + Exp::from_integer(12))?;
        self.substitute_u_series(&ju.truncated(order + Exp::from_integer(10)))
            .map(|s| s.truncated(order))
    }

    /// Klein-j reference expansion in the derived uniformizer: the classical
    /// series in `e^{Lambda tau} = q_ser^{r_derived}`.
    pub fn klein_j_reference(&self, order: Exp) -> PuiseuxSeries {
        let n = (order / Exp::from_integer(self.r_derived)).ceil().to_integer() + 1;
        modular::klein_j_oracle(n, 1)
            .regrade(Exp::from_integer(self.r_derived), Var::Q)
            .unwrap()
            .truncated(order)
    }
}

/// The closed j-invariant formulas, expanded in `u`.
///
/// `P8`: `-sigma^3 (sigma^3 - 216)^3 / (27 + sigma^3)^3`;
/// `X9`, `J10`: `-(24 sigma + sigma^4)^3 / (27 + sigma^3)`.
pub fn j_formula_u(family: Family, order: Exp) -> Result<PuiseuxSeries, SeriesError> {
    use crate::sigma::{SigmaPoly, SigmaRat};
    let num_den = match family {
        Family::P8 => {
            let mut m216 = SigmaPoly::from_ints(&[-216, 0, 0, 1]);
            m216 = m216.mul(&m216.clone()).mul(&m216.clone());
            let num = SigmaPoly::from_ints(&[0, 0, 0, -1]).mul(&m216);
            let mut den = SigmaPoly::from_ints(&[27, 0, 0, 1]);
            den = den.mul(&den.clone()).mul(&den.clone());
            SigmaRat::new(num, den)
        }
        Family::X9 | Family::J10 => {
            let lin = SigmaPoly::from_ints(&[0, 24, 0, 0, 1]);
            let num = lin.mul(&lin).mul(&lin).neg();
            SigmaRat::new(num, SigmaPoly::from_ints(&[27, 0, 0, 1]))
        }
    };
    num_den.expand_u(order)
}

/// Substitute a pinned-branch sigma-expression into the mirror uniformizer.
pub fn substitute_sigma(
    expr: &SigmaSum,
    m: &MirrorMap,
    order: Exp,
) -> Result<PuiseuxSeries, SeriesError> {
    let u_series = expr.expand_u(order + Exp::from_integer(6))?;
    m.substitute_u_series(&u_series).map(|s| s.truncated(order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergeom::build_periods;

    fn ord(n: i64) -> Exp {
        Exp::from_integer(n)
    }

    fn mirror(f: Family, n: i64) -> MirrorMap {
        build_mirror(&build_periods(f, ord(n)), ord(n)).unwrap()
    }

    #[test]
    fn derived_uniformizers() {
        assert_eq!(mirror(Family::P8, 16).r_derived, 3);
        assert_eq!(mirror(Family::X9, 16).r_derived, 9);
        let j10 = mirror(Family::J10, 16);
        // quoted text and theorem disagree (9 vs 6); the series-level fact is 9
        assert_eq!(j10.r_derived, 9);
        assert_eq!(j10.r_quoted, 6);
    }

    #[test]
    fn mirror_series_prefix() {
        let m = mirror(Family::P8, 20);
        // q_of_u = u(1 + 5u^3 + 68u^6 + ...); u_of_q = q - 5q^4 + 32q^7 - 198q^10 + ...
        assert_eq!(m.q_of_u.coeff(ord(4)), Cyclotomic::from_int(5));
        assert_eq!(m.q_of_u.coeff(ord(7)), Cyclotomic::from_int(68));
        assert_eq!(m.u_of_q.coeff(ord(1)), Cyclotomic::one());
        assert_eq!(m.u_of_q.coeff(ord(4)), Cyclotomic::from_int(-5));
        assert_eq!(m.u_of_q.coeff(ord(7)), Cyclotomic::from_int(32));
        assert_eq!(m.u_of_q.coeff(ord(10)), Cyclotomic::from_int(-198));
        assert_eq!(m.u_of_q.coeff(ord(13)), Cyclotomic::from_int(1214));
    }

    #[test]
    fn mirror_maps_are_mutual_inverses() {
        let m = mirror(Family::P8, 18);
        let comp = m.q_of_u.renamed(Var::Q).compose_integer(&m.u_of_q).unwrap();
        assert_eq!(comp.coeff(Exp::one()), Cyclotomic::one());
        assert_eq!(comp.num_terms(), 1);
    }

    #[test]
    fn mirror_prefix_is_stable_under_order_increase() {
        let short = mirror(Family::P8, 14);
        let long = mirror(Family::P8, 26);
        assert_eq!(long.u_of_q.truncated(short.u_of_q.trunc_order()), short.u_of_q);
    }

    #[test]
    fn lambda_residue_is_detected() {
        let mut p = build_periods(Family::P8, ord(12));
        // breaking the Lambda balance of pi_B must surface as LambdaResidue
        p.pi_b = p.pi_b.scale(&Cyclotomic::lambda_pow(1));
        assert!(matches!(build_mirror(&p, ord(12)), Err(MirrorError::LambdaResidue)));
    }

    #[test]
    fn p8_j_expansion_matches_klein_j() {
        let m = mirror(Family::P8, 26);
        let j = m.j_expansion(ord(16)).unwrap();
        assert_eq!(j.coeff(ord(-3)), Cyclotomic::one());
        assert_eq!(j.coeff(ord(0)), Cyclotomic::from_int(744));
        assert_eq!(j.coeff(ord(3)), Cyclotomic::from_int(196884));
        assert_eq!(j.coeff(ord(6)), Cyclotomic::from_int(21493760));
        let oracle = m.klein_j_reference(ord(16));
        assert_eq!(j.truncated(ord(16)), oracle.truncated(j.trunc_order()));
    }

    #[test]
    fn x9_j_expansion_matches_klein_j() {
        // same identity, different j-formula and uniformizer exponent
        let m = mirror(Family::X9, 32);
        let j = m.j_expansion(ord(20)).unwrap();
        let oracle = m.klein_j_reference(ord(20));
        assert_eq!(j.coeff(ord(-9)), Cyclotomic::one());
        assert_eq!(j.coeff(ord(0)), Cyclotomic::from_int(744));
        assert_eq!(j.coeff(ord(9)), Cyclotomic::from_int(196884));
        assert_eq!(j.truncated(ord(20)), oracle.truncated(j.trunc_order()));
    }

    #[test]
    fn substitution_is_multiplicative_on_samples() {
        use crate::sexpr::{PowBase, SigmaExpr};
        use crate::hypergeom::principal_power;
        let m = mirror(Family::P8, 20);
        let (b, e, br) = principal_power(PowBase::SigmaCubedPlus27, Exp::new(1, 3));
        let f = SigmaSum(vec![SigmaExpr::new(Cyclotomic::one()).power(b, e, br)]);
        let g = SigmaSum(vec![SigmaExpr::new(Cyclotomic::rational(2, 3)).rational(
            crate::sigma::SigmaRat::new(
                crate::sigma::SigmaPoly::from_ints(&[1, 1]),
                crate::sigma::SigmaPoly::from_ints(&[27, 0, 0, 1]),
            ),
        )]);
        let ord14 = ord(14);
        let fg = SigmaSum(vec![{
            let mut x = g.0[0].clone();
            let (b2, e2, br2) = principal_power(PowBase::SigmaCubedPlus27, Exp::new(1, 3));
            x = x.power(b2, e2, br2);
            x
        }]);
        let lhs = substitute_sigma(&fg, &m, ord14).unwrap();
        let rhs = substitute_sigma(&f, &m, ord14)
            .unwrap()
            .try_mul(&substitute_sigma(&g, &m, ord14).unwrap())
            .unwrap()
            .truncated(lhs.trunc_order());
        assert_eq!(lhs.truncated(rhs.trunc_order()), rhs);
    }

    #[test]
    fn constant_expression_substitutes_to_itself() {
        use crate::sexpr::SigmaExpr;
        let m = mirror(Family::P8, 12);
        let c = SigmaSum(vec![SigmaExpr::new(Cyclotomic::rational(7, 5))]);
        let s = substitute_sigma(&c, &m, ord(8)).unwrap();
        assert_eq!(s.coeff(Exp::zero()), Cyclotomic::rational(7, 5));
        assert_eq!(s.num_terms(), 1);
    }
}
