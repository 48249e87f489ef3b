//! Exact q-expansions of the standard (quasi-)modular objects and an exact
//! linear-algebra certifier that writes a target q-series as a polynomial in
//! the weight-two Eisenstein series with modular-form coefficients.

use crate::coeffs::{rat, Cyclotomic, Rat};
use crate::series::{Exp, PuiseuxSeries, SeriesError, Var};
use num::traits::Zero;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModularError {
    #[error("eta-quotient prefactor exponent {0} does not fit the grading 1/{1}")]
    FractionalExponent(Exp, u32),
    #[error("series error: {0}")]
    Series(#[from] SeriesError),
}

/// One named q-expansion with its bookkeeping data.
#[derive(Debug, Clone)]
pub struct ModularCatalogEntry {
    pub name: String,
    pub weight: i64,
    /// Quasi-modular depth: 1 for the Eisenstein G2 entries, 0 for true forms.
    pub depth: u32,
    pub level_tag: String,
    /// The series is graded in `q^rescale` steps (G2 entries only; used by the
    /// anomaly bookkeeping).
    pub rescale: u32,
    pub series: PuiseuxSeries,
}

/// Divisor power sum `sigma_k(n)`.
pub fn divisor_sigma(k: u32, n: u64) -> u64 {
    let mut s = 0u64;
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            s += d.pow(k);
            let e = n / d;
            if e != d {
                s += e.pow(k);
            }
        }
        d += 1;
    }
    s
}

/// `G2 = -1/24 + sum_n sigma_1(n) q^{a n}` to the requested order.
pub fn eisenstein_g2(order: i64, rescale: u32) -> ModularCatalogEntry {
    let trunc = Exp::from_integer(order);
    let mut s = PuiseuxSeries::constant(Var::Q, Cyclotomic::rational(-1, 24), 1, trunc);
    let a = rescale as i64;
    let mut n = 1i64;
    while a * n < order {
        let c = Cyclotomic::from_int(divisor_sigma(1, n as u64) as i64);
        s = s
            .try_add(&PuiseuxSeries::monomial(Var::Q, c, Exp::from_integer(a * n), 1, trunc))
            .unwrap();
        n += 1;
    }
    ModularCatalogEntry {
        name: format!("G2[{rescale}]"),
        weight: 2,
        depth: 1,
        level_tag: format!("grading {rescale}"),
        rescale,
        series: s,
    }
}

/// `E4 = 1 + 240 sum sigma_3(n) q^{a n}`.
pub fn eisenstein_e4(order: i64, rescale: u32) -> PuiseuxSeries {
    let trunc = Exp::from_integer(order);
    let mut s = PuiseuxSeries::one(Var::Q, 1, trunc);
    let a = rescale as i64;
    let mut n = 1i64;
    while a * n < order {
        let c = Cyclotomic::from_int(240 * divisor_sigma(3, n as u64) as i64);
        s = s
            .try_add(&PuiseuxSeries::monomial(Var::Q, c, Exp::from_integer(a * n), 1, trunc))
            .unwrap();
        n += 1;
    }
    s
}

/// `q^{sum a e / 24} prod_n prod_(a,e) (1 - q^{a n})^e`, exactly.
pub fn eta_quotient(
    spec: &[(u32, i32)],
    q_denominator: u32,
    order: Exp,
) -> Result<ModularCatalogEntry, ModularError> {
    let pref: Exp = spec
        .iter()
        .map(|&(a, e)| Exp::new(a as i64 * e as i64, 24))
        .sum();
    if !(pref * Exp::from_integer(q_denominator as i64)).is_integer() {
        return Err(ModularError::FractionalExponent(pref, q_denominator));
    }
    let denom = num::integer::lcm(q_denominator, *pref.denom() as u32);
    let work = order + Exp::from_integer(1) - pref.min(Exp::zero());
    let mut prod = PuiseuxSeries::one(Var::Q, denom, work);
    for &(a, e) in spec {
        let mut n = 1i64;
        while Exp::from_integer(a as i64 * n) < work {
            let factor = PuiseuxSeries::one(Var::Q, denom, work)
                .try_sub(&PuiseuxSeries::monomial(
                    Var::Q,
                    Cyclotomic::one(),
                    Exp::from_integer(a as i64 * n),
                    denom,
                    work,
                ))
                .unwrap();
            prod = prod.try_mul(&factor.pow_int(e as i64)?)?;
            n += 1;
        }
    }
    let weight: i64 = spec.iter().map(|&(_, e)| e as i64).sum();
    Ok(ModularCatalogEntry {
        name: format!(
            "eta{}",
            spec.iter().map(|(a, e)| format!("[{a}^{e}]")).collect::<String>()
        ),
        weight: weight / 2,
        depth: 0,
        level_tag: "eta-quotient".into(),
        rescale: 1,
        series: prod.shift(pref).truncated(order),
    })
}

/// Klein j from the Eisenstein catalog: `E4^3 / Delta`, graded in `q^rescale`.
pub fn klein_j_oracle(order: i64, rescale: u32) -> PuiseuxSeries {
    let a = rescale as i64;
    let inner = order / a + 3;
    let e4 = eisenstein_e4(inner, 1);
    let delta_over_q = eta_quotient(&[(1, 24)], 1, Exp::from_integer(inner))
        .unwrap()
        .series
        .shift(Exp::from_integer(-1));
    let j = e4
        .pow_int(3)
        .unwrap()
        .try_div(&delta_over_q)
        .unwrap()
        .shift(Exp::from_integer(-1));
    j.regrade(Exp::from_integer(a), Var::Q)
        .unwrap()
        .truncated(Exp::from_integer(order))
}

/// A monomial in catalog entries together with its solved coefficient.
#[derive(Debug, Clone, Serialize)]
pub struct CertTerm {
    pub coefficient: [String; 2],
    pub entries: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuasiModularCertificate {
    pub target_name: String,
    pub weight: i64,
    pub depth: u32,
    pub combination: Vec<CertTerm>,
    pub matched_order: String,
    pub residual_zero: bool,
    /// Dimension of the solution space beyond the reported representative.
    pub kernel_dim: usize,
}

impl QuasiModularCertificate {
    /// Solved coefficient of a basis entry by name (zero when absent).
    pub fn coefficient_of(&self, name: &str) -> Rat {
        for t in &self.combination {
            if t.entries.len() == 1 && t.entries[0] == name {
                return Rat::new(
                    t.coefficient[0].parse().unwrap(),
                    t.coefficient[1].parse().unwrap(),
                );
            }
        }
        Rat::zero()
    }
}

/// Write `target` as a depth-bounded polynomial in the G2-type entries with
/// modular coefficients, by exact linear solve on q-coefficients up to `order`.
///
/// The combination ranges over products of basis entries whose weights sum to
/// `weight` and whose total depth is at most `depth`. Inconsistency is
/// reported through `residual_zero = false`; non-uniqueness through
/// `kernel_dim > 0`.
pub fn decompose_quasimodular(
    target: &PuiseuxSeries,
    target_name: &str,
    weight: i64,
    depth: u32,
    basis: &[ModularCatalogEntry],
    order: Exp,
) -> Result<QuasiModularCertificate, ModularError> {
    // enumerate monomials in the basis with weight sum = weight, depth sum <= depth
    let mut monomials: Vec<(Vec<usize>, PuiseuxSeries)> = Vec::new();
    fn walk(
        basis: &[ModularCatalogEntry],
        start: usize,
        weight_left: i64,
        depth_left: i64,
        chosen: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if weight_left == 0 {
            if !chosen.is_empty() {
                out.push(chosen.clone());
            }
            return;
        }
        if weight_left < 0 {
            return;
        }
        for i in start..basis.len() {
            let d = basis[i].depth as i64;
            if d > depth_left || basis[i].weight > weight_left || basis[i].weight <= 0 {
                continue;
            }
            chosen.push(i);
            walk(basis, i, weight_left - basis[i].weight, depth_left - d, chosen, out);
            chosen.pop();
        }
    }
    let mut idx_sets = Vec::new();
    walk(basis, 0, weight, depth as i64, &mut Vec::new(), &mut idx_sets);
    for set in idx_sets {
        let mut s = PuiseuxSeries::one(Var::Q, 1, order);
        for &i in &set {
            s = s.try_mul(&basis[i].series)?;
        }
        monomials.push((set, s.truncated(order)));
    }

    // collect the exponent grid
    let mut grid: std::collections::BTreeSet<Exp> = target
        .terms()
        .map(|(e, _)| e)
        .filter(|e| *e < order)
        .collect();
    for (_, s) in &monomials {
        grid.extend(s.terms().map(|(e, _)| e).filter(|e| *e < order));
    }
    let rows: Vec<Exp> = grid.into_iter().collect();
    let ncols = monomials.len();
    let mut a: Vec<Vec<Rat>> = rows
        .iter()
        .map(|&e| {
            monomials
                .iter()
                .map(|(_, s)| s.coeff(e).as_rational().expect("rational catalog entries"))
                .collect()
        })
        .collect();
    let mut b: Vec<Rat> = rows
        .iter()
        .map(|&e| target.coeff(e).as_rational().expect("rational target"))
        .collect();

    // exact Gaussian elimination
    let nrows = rows.len();
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; ncols];
    let mut r0 = 0usize;
    for c in 0..ncols {
        let Some(pr) = (r0..nrows).find(|&r| !a[r][c].is_zero()) else { continue };
        a.swap(r0, pr);
        b.swap(r0, pr);
        let inv = a[r0][c].recip();
        for v in a[r0].iter_mut() {
            *v = &*v * &inv;
        }
        b[r0] = &b[r0] * &inv;
        for r in 0..nrows {
            if r != r0 && !a[r][c].is_zero() {
                let f = a[r][c].clone();
                for cc in 0..ncols {
                    let d = &f * &a[r0][cc];
                    a[r][cc] = &a[r][cc] - &d;
                }
                let d = &f * &b[r0];
                b[r] = &b[r] - &d;
            }
        }
        pivot_of_col[c] = Some(r0);
        r0 += 1;
        if r0 == nrows {
            break;
        }
    }
    let residual_zero = (r0..nrows).all(|r| b[r].is_zero());
    let rank = r0;
    let kernel_dim = ncols - rank;

    let mut combination = Vec::new();
    for (c, piv) in pivot_of_col.iter().enumerate() {
        let Some(r) = piv else { continue };
        let v = b[*r].clone();
        if v.is_zero() {
            continue;
        }
        combination.push(CertTerm {
            coefficient: [v.numer().to_string(), v.denom().to_string()],
            entries: monomials[c].0.iter().map(|&i| basis[i].name.clone()).collect(),
        });
    }
    Ok(QuasiModularCertificate {
        target_name: target_name.to_string(),
        weight,
        depth,
        combination,
        matched_order: order.to_string(),
        residual_zero,
        kernel_dim,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AnomalyReport {
    pub mu: u32,
    pub expected: [String; 2],
    pub from_certificate: [String; 2],
    pub matches: bool,
}

/// Compare the total G2 content of a weight-two depth-one certificate against
/// the genus-one anomaly coefficient `mu/24 - 1/2`.
///
/// A G2 entry graded in `q^a` completes to a form by adding
/// `-(1/(2a)) / (t - tbar)`; under a modular transformation the completion
/// law turns the coefficient `alpha_a` into an anomaly `-(alpha_a/(2a)) n12 j`.
/// The factor `1/(4 pi i)` of the classical statement cancels against the
/// flat-coordinate normalization carried by `Lambda`.
pub fn g2_anomaly_check(
    cert: &QuasiModularCertificate,
    basis: &[ModularCatalogEntry],
    mu: u32,
) -> AnomalyReport {
    let mut total = Rat::zero();
    for entry in basis {
        if entry.depth == 0 {
            continue;
        }
        let alpha = cert.coefficient_of(&entry.name);
        total = total - alpha / rat(2 * entry.rescale as i64, 1);
    }
    let expected = rat(mu as i64, 24) - rat(1, 2);
    AnomalyReport {
        mu,
        expected: [expected.numer().to_string(), expected.denom().to_string()],
        from_certificate: [total.numer().to_string(), total.denom().to_string()],
        matches: total == expected,
    }
}

/// The weight-two basis used for the quasi-modular certificates in the `P8`
/// grading `q = e^{t_{-1}}`: three G2 gradings plus the eta-quotient forms
/// `b^2, bc, c^2` of the cubic-theta level. Adequacy is judged solely by the
/// certificate's residual.
pub fn weight2_basis_p8(order: i64) -> Vec<ModularCatalogEntry> {
    let ord = Exp::from_integer(order);
    let mut out = vec![
        eisenstein_g2(order, 1),
        eisenstein_g2(order, 3),
        eisenstein_g2(order, 9),
    ];
    let mut b2 = eta_quotient(&[(3, 6), (9, -2)], 1, ord).unwrap();
    b2.name = "b^2".into();
    b2.weight = 2;
    let mut bc = eta_quotient(&[(3, 2), (9, 2)], 1, ord).unwrap();
    bc.name = "bc".into();
    bc.weight = 2;
    let mut c2 = eta_quotient(&[(9, 6), (3, -2)], 1, ord).unwrap();
    c2.name = "c^2".into();
    c2.weight = 2;
    out.push(b2);
    out.push(bc);
    out.push(c2);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::traits::One;

    #[test]
    fn g2_leading_coefficients() {
        let g = eisenstein_g2(12, 1);
        assert_eq!(g.series.coeff(Exp::zero()), Cyclotomic::rational(-1, 24));
        assert_eq!(g.series.coeff(Exp::one()), Cyclotomic::from_int(1));
        assert_eq!(g.series.coeff(Exp::from_integer(4)), Cyclotomic::from_int(7));
        assert_eq!(g.series.coeff(Exp::from_integer(6)), Cyclotomic::from_int(12));
    }

    #[test]
    fn sigma1_multiplicative_on_coprime_pairs() {
        for (m, n) in [(2u64, 3u64), (4, 9), (5, 8), (7, 12)] {
            assert_eq!(divisor_sigma(1, m * n), divisor_sigma(1, m) * divisor_sigma(1, n));
        }
    }

    #[test]
    fn empty_eta_spec_is_one() {
        let e = eta_quotient(&[], 1, Exp::from_integer(6)).unwrap();
        assert!(e.series.coeff(Exp::zero()).is_one());
        assert_eq!(e.series.num_terms(), 1);
    }

    #[test]
    fn cancelling_eta_spec_is_one() {
        let e = eta_quotient(&[(1, 3), (1, -3)], 1, Exp::from_integer(8)).unwrap();
        assert!(e.series.coeff(Exp::zero()).is_one());
        assert_eq!(e.series.num_terms(), 1);
    }

    #[test]
    fn saito_product_prefix() {
        // q prod (1-q^{9n})^3 (1-q^{3n})^{-1} = q + q^4 + 2q^7 + 0 q^10 + 2q^13 + q^16 + 2q^19
        let e = eta_quotient(&[(9, 3), (3, -1)], 1, Exp::from_integer(20)).unwrap();
        let expect = [(1, 1), (4, 1), (7, 2), (10, 0), (13, 2), (16, 1), (19, 2)];
        for (k, v) in expect {
            assert_eq!(
                e.series.coeff(Exp::from_integer(k)),
                Cyclotomic::from_int(v),
                "coefficient of q^{k}"
            );
        }
    }

    #[test]
    fn fractional_eta_grading_rejected() {
        assert!(matches!(
            eta_quotient(&[(1, 1)], 1, Exp::from_integer(4)),
            Err(ModularError::FractionalExponent(_, _))
        ));
    }

    #[test]
    fn klein_j_prefix() {
        let j = klein_j_oracle(4, 1);
        assert_eq!(j.coeff(Exp::from_integer(-1)), Cyclotomic::one());
        assert_eq!(j.coeff(Exp::zero()), Cyclotomic::from_int(744));
        assert_eq!(j.coeff(Exp::one()), Cyclotomic::from_int(196884));
        assert_eq!(j.coeff(Exp::from_integer(2)), Cyclotomic::from_int(21493760));
        assert_eq!(j.coeff(Exp::from_integer(3)), Cyclotomic::from_int(864299970));
    }

    #[test]
    fn j_delta_e4_consistency() {
        // j * Delta = E4^3 exactly to order (internal oracle consistency)
        let n = 12;
        let j = klein_j_oracle(n, 1);
        let delta = eta_quotient(&[(1, 24)], 1, Exp::from_integer(n)).unwrap().series;
        let lhs = j.try_mul(&delta).unwrap();
        let rhs = eisenstein_e4(n, 1).pow_int(3).unwrap().truncated(lhs.trunc_order());
        assert_eq!(lhs.truncated(rhs.trunc_order()), rhs);
    }

    #[test]
    fn decompose_g2_against_itself() {
        let basis = vec![eisenstein_g2(30, 1)];
        let target = basis[0].series.clone();
        let cert =
            decompose_quasimodular(&target, "G2", 2, 1, &basis, Exp::from_integer(28)).unwrap();
        assert!(cert.residual_zero);
        assert_eq!(cert.combination.len(), 1);
        assert_eq!(cert.coefficient_of("G2[1]"), Rat::one());
        assert_eq!(cert.kernel_dim, 0);
    }

    #[test]
    fn decompose_zero_target() {
        let basis = vec![eisenstein_g2(20, 1)];
        let target = PuiseuxSeries::zero(Var::Q, 1, Exp::from_integer(18));
        let cert =
            decompose_quasimodular(&target, "0", 2, 1, &basis, Exp::from_integer(18)).unwrap();
        assert!(cert.residual_zero);
        assert!(cert.combination.is_empty());
    }

    #[test]
    fn inconsistent_target_is_flagged() {
        let basis = vec![eisenstein_g2(20, 2)]; // even support only
        let target = PuiseuxSeries::monomial(Var::Q, Cyclotomic::one(), Exp::one(), 1, Exp::from_integer(18));
        let cert =
            decompose_quasimodular(&target, "q", 2, 1, &basis, Exp::from_integer(18)).unwrap();
        assert!(!cert.residual_zero);
    }

    #[test]
    fn anomaly_zero_for_mu_twelve() {
        let basis = weight2_basis_p8(24);
        let target = PuiseuxSeries::zero(Var::Q, 1, Exp::from_integer(20));
        let cert =
            decompose_quasimodular(&target, "0", 2, 1, &basis, Exp::from_integer(20)).unwrap();
        let rep = g2_anomaly_check(&cert, &basis, 12);
        assert!(rep.matches, "mu = 12 is the anomaly-free case");
    }
}
