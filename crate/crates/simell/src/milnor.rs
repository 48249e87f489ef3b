//! Weighted-graded reduction in the Jacobi algebra of a family's normal form,
//! over the exact coefficient field `Q(zeta_24)(sigma)`.
//!
//! Two consumers: socle coefficients for three-point functions, and the
//! two-step de Rham reduction that derives the scalar primitive-form equation.

use crate::coeffs::Cyclotomic;
use crate::family::{Family, XMono};
use crate::series::Exp;
use crate::sigma::{SigmaPoly, SigmaRat};
use num::traits::Zero;
use std::collections::BTreeMap;

/// Sparse polynomial in `x0, x1, x2` with rational-function coefficients.
pub type XPoly = BTreeMap<XMono, SigmaRat>;

pub fn xpoly_add_term(p: &mut XPoly, c: SigmaRat, m: XMono) {
    if c.is_zero() {
        return;
    }
    match p.remove(&m) {
        None => {
            p.insert(m, c);
        }
        Some(old) => {
            let s = old.add(&c);
            if !s.is_zero() {
                p.insert(m, s);
            }
        }
    }
}

/// All monomials of the given weighted degree.
pub fn monomials_of_weight(family: Family, w: Exp) -> Vec<XMono> {
    let wt = family.weights();
    let bound = |i: usize| -> u32 {
        let b = w / wt[i];
        if b < Exp::zero() {
            0
        } else {
            b.floor().to_integer() as u32
        }
    };
    let mut out = Vec::new();
    for a in 0..=bound(0) {
        for b in 0..=bound(1) {
            for c in 0..=bound(2) {
                let m = [a, b, c];
                if family.mono_weight(m) == w {
                    out.push(m);
                }
            }
        }
    }
    out
}

/// Partial derivatives of the defining polynomial.
pub fn jacobian_partials(family: Family) -> [Vec<(SigmaPoly, XMono)>; 3] {
    let f = family.defining_poly();
    std::array::from_fn(|i| {
        f.iter()
            .filter(|(_, m)| m[i] > 0)
            .map(|(c, m)| {
                let mut d = *m;
                d[i] -= 1;
                (c.scale(&Cyclotomic::from_int(m[i] as i64)), d)
            })
            .collect()
    })
}

/// Result of reducing a weight-homogeneous polynomial modulo the Jacobian
/// ideal: `input = remainder + sum_i multipliers[i] * df/dx_i` with the
/// remainder supported on the Milnor basis monomials of that weight.
pub struct GradedDecomposition {
    pub remainder: XPoly,
    pub multipliers: [XPoly; 3],
}

/// Decompose a weight-`w` homogeneous polynomial. Panics if the linear system
/// is inconsistent, which cannot happen for a weight at or below the socle.
pub fn graded_decompose(family: Family, poly: &XPoly, w: Exp) -> GradedDecomposition {
    let mons = monomials_of_weight(family, w);
    let index: BTreeMap<XMono, usize> = mons.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let partials = jacobian_partials(family);
    let wt = family.weights();

    // columns: (generator multiplier monomial, which partial) then basis monomials
    enum Col {
        Gen(usize, XMono),
        Basis(XMono),
    }
    let mut cols: Vec<Col> = Vec::new();
    let mut matrix: Vec<Vec<SigmaRat>> = Vec::new(); // column-major
    for (i, partial) in partials.iter().enumerate() {
        let mw = w - (Exp::from_integer(1) - wt[i]);
        if mw < Exp::zero() {
            continue;
        }
        for m in monomials_of_weight(family, mw) {
            let mut col = vec![SigmaRat::zero(); mons.len()];
            for (c, pm) in partial {
                let prod = [m[0] + pm[0], m[1] + pm[1], m[2] + pm[2]];
                if let Some(&row) = index.get(&prod) {
                    col[row] = col[row].add(&SigmaRat::from_poly(c.clone()));
                }
            }
            cols.push(Col::Gen(i, m));
            matrix.push(col);
        }
    }
    for &bm in family.milnor_basis().iter() {
        if family.mono_weight(bm) == w {
            let mut col = vec![SigmaRat::zero(); mons.len()];
            col[index[&bm]] = SigmaRat::one();
            cols.push(Col::Basis(bm));
            matrix.push(col);
        }
    }

    let mut rhs: Vec<SigmaRat> = vec![SigmaRat::zero(); mons.len()];
    for (m, c) in poly {
        let row = *index.get(m).unwrap_or_else(|| panic!("monomial off weight {w}"));
        rhs[row] = rhs[row].add(c);
    }

    // Gaussian elimination over the rational-function field, row-major view.
    let nrows = mons.len();
    let ncols = cols.len();
    let mut a: Vec<Vec<SigmaRat>> = (0..nrows)
        .map(|r| (0..ncols).map(|c| matrix[c][r].clone()).collect())
        .collect();
    let mut b = rhs;
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; ncols];
    let mut r0 = 0usize;
    for c in 0..ncols {
        let Some(pr) = (r0..nrows).find(|&r| !a[r][c].is_zero()) else {
            continue;
        };
        a.swap(r0, pr);
        b.swap(r0, pr);
        let inv = SigmaRat::one().div(&a[r0][c]);
        for cc in 0..ncols {
            a[r0][cc] = a[r0][cc].mul(&inv);
        }
        b[r0] = b[r0].mul(&inv);
        for r in 0..nrows {
            if r != r0 && !a[r][c].is_zero() {
                let f = a[r][c].clone();
                for cc in 0..ncols {
                    let d = f.mul(&a[r0][cc]);
                    a[r][cc] = a[r][cc].sub(&d);
                }
                let d = f.mul(&b[r0]);
                b[r] = b[r].sub(&d);
            }
        }
        pivot_of_col[c] = Some(r0);
        r0 += 1;
        if r0 == nrows {
            break;
        }
    }
    for r in r0..nrows {
        assert!(b[r].is_zero(), "inconsistent reduction at weight {w}");
    }

    let mut remainder: XPoly = XPoly::new();
    let mut multipliers: [XPoly; 3] = [XPoly::new(), XPoly::new(), XPoly::new()];
    for (c, col) in cols.iter().enumerate() {
        let Some(r) = pivot_of_col[c] else { continue };
        let v = b[r].clone();
        if v.is_zero() {
            continue;
        }
        match col {
            Col::Gen(i, m) => xpoly_add_term(&mut multipliers[*i], v, *m),
            Col::Basis(m) => xpoly_add_term(&mut remainder, v, *m),
        }
    }
    GradedDecomposition { remainder, multipliers }
}

/// Socle coefficient of a weight-one monomial: the rational function `c(sigma)`
/// with `m = c * x0 x1 x2` in the Jacobi algebra.
pub fn socle_table(family: Family) -> BTreeMap<XMono, SigmaRat> {
    let one = Exp::from_integer(1);
    let mut out = BTreeMap::new();
    for m in monomials_of_weight(family, one) {
        let mut p = XPoly::new();
        xpoly_add_term(&mut p, SigmaRat::one(), m);
        let dec = graded_decompose(family, &p, one);
        let c = dec.remainder.get(&[1, 1, 1]).cloned().unwrap_or_else(SigmaRat::zero);
        out.insert(m, c);
    }
    out
}

fn xpoly_partial(p: &XPoly, i: usize) -> XPoly {
    let mut out = XPoly::new();
    for (m, c) in p {
        if m[i] > 0 {
            let mut d = *m;
            d[i] -= 1;
            xpoly_add_term(
                &mut out,
                c.scale(&Cyclotomic::from_int(m[i] as i64)),
                d,
            );
        }
    }
    out
}

/// Derive the scalar equation forced on a degree-zero volume rescaling:
/// reduce `phi_{-1}^2` through the twisted de Rham relations
/// (`g * df/dx_i * d3x = -z * d(g)/dx_i * d3x`) and read off the coefficients
/// `(B, A)` of `u'' = B u' + A u`.
pub fn primitive_form_ode(family: Family) -> (SigmaRat, SigmaRat) {
    let two = Exp::from_integer(2);
    let one = Exp::from_integer(1);
    let mut target = XPoly::new();
    xpoly_add_term(&mut target, SigmaRat::one(), [2, 2, 2]);
    let step1 = graded_decompose(family, &target, two);
    assert!(step1.remainder.is_empty(), "marginal square must lie in the ideal");
    let mut s1 = XPoly::new();
    for i in 0..3 {
        for (m, c) in xpoly_partial(&step1.multipliers[i], i) {
            xpoly_add_term(&mut s1, c, m);
        }
    }
    let step2 = graded_decompose(family, &s1, one);
    let c = step2
        .remainder
        .get(&[1, 1, 1])
        .cloned()
        .unwrap_or_else(SigmaRat::zero);
    let mut s0 = SigmaRat::zero();
    for i in 0..3 {
        for (m, v) in xpoly_partial(&step2.multipliers[i], i) {
            assert_eq!(m, [0, 0, 0]);
            s0 = s0.add(&v);
        }
    }
    (c.neg(), s0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::rat;

    #[test]
    fn p8_socle_coefficients() {
        let t = socle_table(Family::P8);
        // x0^3 = -(sigma/3) x0x1x2, the socle itself maps to 1, cross terms vanish
        let x03 = t.get(&[3, 0, 0]).unwrap();
        let expect = SigmaRat::from_poly(SigmaPoly::new(vec![
            Cyclotomic::zero(),
            Cyclotomic::from_rat(rat(-1, 3)),
        ]));
        assert!(x03.eq_ratfun(&expect));
        assert!(t.get(&[1, 1, 1]).unwrap().eq_ratfun(&SigmaRat::one()));
        assert!(t.get(&[0, 1, 2]).unwrap().is_zero());
    }

    #[test]
    fn x9_socle_x0_fourth() {
        // x0^4 = sigma(sigma^3 + 24)/9 * x0x1x2
        let t = socle_table(Family::X9);
        let got = t.get(&[4, 0, 0]).unwrap();
        let expect = SigmaRat::new(
            SigmaPoly::from_ints(&[0, 24, 0, 0, 1]),
            SigmaPoly::from_ints(&[9]),
        );
        assert!(got.eq_ratfun(&expect));
    }

    #[test]
    fn j10_socle_sample() {
        // x0^4 x1 = (-sigma^3/9 - 2) x0x1x2
        let t = socle_table(Family::J10);
        let got = t.get(&[4, 1, 0]).unwrap();
        let expect = SigmaRat::new(
            SigmaPoly::from_ints(&[-18, 0, 0, -1]),
            SigmaPoly::from_ints(&[9]),
        );
        assert!(got.eq_ratfun(&expect), "got {}", got.display_string());
    }
}
