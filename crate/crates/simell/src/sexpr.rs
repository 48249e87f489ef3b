//! Closed-form expressions in `sigma` with explicitly pinned fractional-power
//! branches and hypergeometric factors, expandable at `sigma = infinity`.
//!
//! Every fractional power carries its own leading root: no implicit principal
//! branch anywhere. The branch contract is checked at expansion time.

use crate::coeffs::Cyclotomic;
use crate::hypergeom::Hyper2F1;
use crate::series::{Exp, PuiseuxSeries, SeriesError, Var, DEFAULT_DENOM};
use crate::sigma::SigmaRat;

/// Bases for pinned fractional powers. The `u = -1/sigma` expansions are
/// `sigma = -u^{-1}`, `27 + sigma^3 = -u^{-3}(1 - 27u^3)`,
/// `-sigma/3 = (1/3) u^{-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowBase {
    Sigma,
    SigmaCubedPlus27,
    NegSigmaOver3,
}

#[derive(Debug, Clone)]
pub enum SigmaFactor {
    /// An exact rational function of `sigma`.
    Rational(SigmaRat),
    /// `base^(num/den)` with the stated leading coefficient (the branch).
    Power { base: PowBase, exp: Exp, branch: Cyclotomic },
    /// `2F1(a, b; c; -27/sigma^3)`.
    Hyper(Hyper2F1),
}

/// A scalar multiple of a product of factors.
#[derive(Debug, Clone)]
pub struct SigmaExpr {
    pub coeff: Cyclotomic,
    pub factors: Vec<SigmaFactor>,
}

impl SigmaExpr {
    pub fn new(coeff: Cyclotomic) -> Self {
        SigmaExpr { coeff, factors: Vec::new() }
    }

    pub fn rational(mut self, r: SigmaRat) -> Self {
        self.factors.push(SigmaFactor::Rational(r));
        self
    }

    pub fn power(mut self, base: PowBase, exp: Exp, branch: Cyclotomic) -> Self {
        self.factors.push(SigmaFactor::Power { base, exp, branch });
        self
    }

    pub fn hyper(mut self, h: Hyper2F1) -> Self {
        self.factors.push(SigmaFactor::Hyper(h));
        self
    }

    pub fn expand_u(&self, order: Exp) -> Result<PuiseuxSeries, SeriesError> {
        let mut acc = PuiseuxSeries::constant(Var::U, self.coeff.clone(), DEFAULT_DENOM, order);
        for f in &self.factors {
            let s = expand_factor(f, order)?;
            acc = acc.try_mul(&s)?;
        }
        Ok(acc)
    }
}

fn expand_factor(f: &SigmaFactor, order: Exp) -> Result<PuiseuxSeries, SeriesError> {
    match f {
        SigmaFactor::Rational(r) => r.expand_u(order),
        SigmaFactor::Hyper(h) => Ok(h.series_in_u(order)),
        SigmaFactor::Power { base, exp, branch } => {
            let p = *exp.numer();
            let q = *exp.denom();
            match base {
                PowBase::Sigma => {
                    // sigma = -u^{-1}: branch^q must equal (-1)^p
                    let want = Cyclotomic::from_int(-1).pow(p);
                    if branch.pow(q) != want {
                        return Err(SeriesError::BranchMismatch);
                    }
                    Ok(PuiseuxSeries::monomial(Var::U, branch.clone(), -*exp, DEFAULT_DENOM, order))
                }
                PowBase::NegSigmaOver3 => {
                    // -sigma/3 = (1/3) u^{-1}: branch^q must equal 3^{-p}
                    let want = Cyclotomic::rational(1, 3).pow(p);
                    if branch.pow(q) != want {
                        return Err(SeriesError::BranchMismatch);
                    }
                    Ok(PuiseuxSeries::monomial(Var::U, branch.clone(), -*exp, DEFAULT_DENOM, order))
                }
                PowBase::SigmaCubedPlus27 => {
                    // -u^{-3}(1 - 27u^3): branch^q must equal (-1)^p
                    let want = Cyclotomic::from_int(-1).pow(p);
                    if branch.pow(q) != want {
                        return Err(SeriesError::BranchMismatch);
                    }
                    let unit_order = order + *exp * Exp::from_integer(3) + Exp::from_integer(1);
                    let unit = PuiseuxSeries::one(Var::U, DEFAULT_DENOM, unit_order)
                        .try_add(&PuiseuxSeries::monomial(
                            Var::U,
                            Cyclotomic::from_int(-27),
                            Exp::from_integer(3),
                            DEFAULT_DENOM,
                            unit_order,
                        ))?
                        .pow_rational(*exp, &Cyclotomic::one())?;
                    Ok(unit
                        .shift(-*exp * Exp::from_integer(3))
                        .scale(branch)
                        .truncated(order))
                }
            }
        }
    }
}

/// A sum of closed-form products.
#[derive(Debug, Clone)]
pub struct SigmaSum(pub Vec<SigmaExpr>);

impl SigmaSum {
    pub fn expand_u(&self, order: Exp) -> Result<PuiseuxSeries, SeriesError> {
        let mut acc = PuiseuxSeries::zero(Var::U, DEFAULT_DENOM, order);
        for e in &self.0 {
            acc = acc.try_add(&e.expand_u(order)?)?;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigma::SigmaPoly;

    #[test]
    fn cube_of_third_root_branch() {
        // ((27+s^3)^{1/3})^3 should recover -u^{-3}(1-27u^3) with branch^3 = -1
        let branch = Cyclotomic::eta6(); // e^{i pi/3}
        let e = SigmaExpr::new(Cyclotomic::one()).power(
            PowBase::SigmaCubedPlus27,
            Exp::new(1, 3),
            branch,
        );
        let s = e.expand_u(Exp::from_integer(9)).unwrap();
        let cubed = s.pow_int(3).unwrap();
        let direct = SigmaRat::from_poly(SigmaPoly::from_ints(&[27, 0, 0, 1]))
            .expand_u(cubed.trunc_order())
            .unwrap();
        assert_eq!(cubed, direct.truncated(cubed.trunc_order()));
    }

    #[test]
    fn bad_branch_is_rejected() {
        let e = SigmaExpr::new(Cyclotomic::one()).power(
            PowBase::Sigma,
            Exp::new(-1, 2),
            Cyclotomic::one(), // 1^2 = 1 != -1
        );
        assert!(matches!(e.expand_u(Exp::from_integer(4)), Err(SeriesError::BranchMismatch)));
    }
}
