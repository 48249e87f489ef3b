//! The recursion determining the asymptotic R-matrix coefficients, verified on
//! small semisimple toys with exact rational-function data in one parameter.

use super::matrices::{GiventalError, Mat};
use super::mpoly::{syms, RatFn};

/// A semisimple toy: distinct critical values `u_i(s)` and a frame `Psi(s)`
/// whose logarithmic derivative has vanishing diagonal.
#[derive(Debug, Clone)]
pub struct SemisimpleToy {
    pub u: Vec<RatFn>,
    pub psi: Mat,
}

impl SemisimpleToy {
    pub fn dim(&self) -> usize {
        self.u.len()
    }

    /// `Psi^{-1} dPsi/ds`, inverted by 2x2 adjugate or 1x1 directly.
    pub fn connection(&self) -> Mat {
        let n = self.dim();
        let dpsi = {
            let mut m = Mat::zero(n);
            for i in 0..n {
                for j in 0..n {
                    m.e[i][j] = self.psi.e[i][j].deriv(syms::S);
                }
            }
            m
        };
        let psi_inv = match n {
            1 => {
                let mut m = Mat::zero(1);
                m.e[0][0] = self.psi.e[0][0].inv();
                m
            }
            2 => {
                let det = self.psi.e[0][0]
                    .mul(&self.psi.e[1][1])
                    .sub(&self.psi.e[0][1].mul(&self.psi.e[1][0]));
                let mut m = Mat::zero(2);
                m.e[0][0] = self.psi.e[1][1].div(&det);
                m.e[1][1] = self.psi.e[0][0].div(&det);
                m.e[0][1] = self.psi.e[0][1].neg().div(&det);
                m.e[1][0] = self.psi.e[1][0].neg().div(&det);
                m
            }
            _ => panic!("toys are one- or two-dimensional"),
        };
        psi_inv.mul(&dpsi)
    }

    fn du(&self, i: usize) -> RatFn {
        self.u[i].deriv(syms::S)
    }
}

/// Verify that `u_i` are pairwise distinct as rational functions.
pub fn check_semisimple(toy: &SemisimpleToy) -> Result<(), GiventalError> {
    for i in 0..toy.dim() {
        for j in (i + 1)..toy.dim() {
            if toy.u[i].eq_exact(&toy.u[j]) {
                return Err(GiventalError::RepeatedCriticalValue);
            }
        }
    }
    Ok(())
}

/// One step of the recursion: the off-diagonal entries of `R_{k+1}` from
/// `(d + Psi^{-1} dPsi) R_k = [dU, R_{k+1}]` and the diagonal from
/// `R_{k+1}^{ii} = (1/(k+1)) sum_{j != i} R_1^{ij} R_{k+1}^{ji} (u_i - u_j)`.
pub fn recursion_step(
    toy: &SemisimpleToy,
    r1: &Mat,
    rk: &Mat,
    k: u32,
) -> Result<Mat, GiventalError> {
    check_semisimple(toy)?;
    let n = toy.dim();
    let conn = toy.connection();
    let mut next = Mat::zero(n);
    // lhs = dR_k + (Psi^{-1} dPsi) R_k
    let mut lhs = conn.mul(rk);
    for i in 0..n {
        for j in 0..n {
            lhs.e[i][j] = lhs.e[i][j].add(&rk.e[i][j].deriv(syms::S));
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let denom = toy.du(i).sub(&toy.du(j));
            next.e[i][j] = lhs.e[i][j].div(&denom);
        }
    }
    for i in 0..n {
        let mut acc = RatFn::zero();
        for j in 0..n {
            if j == i {
                continue;
            }
            let diff = toy.u[i].sub(&toy.u[j]);
            acc = acc.add(&r1.e[i][j].mul(&next.e[j][i]).mul(&diff));
        }
        next.e[i][i] = acc.scale(&crate::coeffs::Cyclotomic::rational(1, (k as i64) + 1));
    }
    Ok(next)
}

/// Build `R_1` from the base case `(d + Psi^{-1} dPsi) I = [dU, R_1]`, with the
/// diagonal from the stated rule at `k = 0`.
pub fn r1_from_frame(toy: &SemisimpleToy) -> Result<Mat, GiventalError> {
    check_semisimple(toy)?;
    let n = toy.dim();
    let conn = toy.connection();
    for i in 0..n {
        assert!(
            conn.e[i][i].is_zero(),
            "frame must have traceless-diagonal connection for consistency"
        );
    }
    let mut r1 = Mat::zero(n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let denom = toy.du(i).sub(&toy.du(j));
                r1.e[i][j] = conn.e[i][j].div(&denom);
            }
        }
    }
    for i in 0..n {
        let mut acc = RatFn::zero();
        for j in 0..n {
            if j != i {
                let diff = toy.u[i].sub(&toy.u[j]);
                acc = acc.add(&r1.e[i][j].mul(&r1.e[j][i]).mul(&diff));
            }
        }
        r1.e[i][i] = acc;
    }
    Ok(r1)
}

/// A report on whether a supplied R-sequence satisfies both relations.
#[derive(Debug, Clone)]
pub struct RecursionReport {
    pub off_diagonal_ok: Vec<bool>,
    pub diagonal_ok: Vec<bool>,
    pub all_ok: bool,
}

/// Check a supplied sequence `R_1, R_2, ..` against the recursion relations.
pub fn r_recursion_check(
    toy: &SemisimpleToy,
    rs: &[Mat],
) -> Result<RecursionReport, GiventalError> {
    check_semisimple(toy)?;
    let n = toy.dim();
    let conn = toy.connection();
    let mut off = Vec::new();
    let mut diag = Vec::new();
    for (idx, pair) in rs.windows(2).enumerate() {
        let rk = &pair[0];
        let rk1 = &pair[1];
        // off-diagonal: lhs_{ij} = (du_i - du_j) R_{k+1}^{ij}
        let mut lhs = conn.mul(rk);
        for i in 0..n {
            for j in 0..n {
                lhs.e[i][j] = lhs.e[i][j].add(&rk.e[i][j].deriv(syms::S));
            }
        }
        let mut ok = true;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let rhs = toy.du(i).sub(&toy.du(j)).mul(&rk1.e[i][j]);
                if !lhs.e[i][j].eq_exact(&rhs) {
                    ok = false;
                }
            }
        }
        off.push(ok);
        // diagonal rule for R_{k+1} with k+1 = idx + 2
        let kp1 = (idx + 2) as i64;
        let mut ok = true;
        for i in 0..n {
            let mut acc = RatFn::zero();
            for j in 0..n {
                if j != i {
                    let diff = toy.u[i].sub(&toy.u[j]);
                    acc = acc.add(&rs[0].e[i][j].mul(&rk1.e[j][i]).mul(&diff));
                }
            }
            let expect = acc.scale(&crate::coeffs::Cyclotomic::rational(1, kp1));
            if !rk1.e[i][i].eq_exact(&expect) {
                ok = false;
            }
        }
        diag.push(ok);
    }
    let all_ok = off.iter().all(|x| *x) && diag.iter().all(|x| *x);
    Ok(RecursionReport { off_diagonal_ok: off, diagonal_ok: diag, all_ok })
}

/// The rational two-point toy: `u = (s, -s)` with the rational rotation frame.
pub fn two_point_toy() -> SemisimpleToy {
    let s = RatFn::var(syms::S);
    let one = RatFn::one();
    let denom = one.add(&s.mul(&s)); // 1 + s^2
    let a = one.sub(&s.mul(&s)).div(&denom); // (1 - s^2)/(1 + s^2)
    let b = s.scale(&crate::coeffs::Cyclotomic::from_int(2)).div(&denom); // 2s/(1+s^2)
    let mut psi = Mat::zero(2);
    psi.e[0][0] = a.clone();
    psi.e[0][1] = b.clone();
    psi.e[1][0] = b.neg();
    psi.e[1][1] = a;
    SemisimpleToy { u: vec![s.clone(), s.neg()], psi }
}

/// Solve the four entries of `R_2` as a linear system rather than entrywise:
/// the independent route for the two-point toy.
pub fn r2_direct_solve(toy: &SemisimpleToy, r1: &Mat) -> Result<Mat, GiventalError> {
    check_semisimple(toy)?;
    let n = toy.dim();
    assert_eq!(n, 2);
    let conn = toy.connection();
    let mut lhs = conn.mul(r1);
    for i in 0..n {
        for j in 0..n {
            lhs.e[i][j] = lhs.e[i][j].add(&r1.e[i][j].deriv(syms::S));
        }
    }
    // unknowns x = (R2_00, R2_01, R2_10, R2_11), equations:
    //   (du_0 - du_1) x_1 = lhs_01 ; (du_1 - du_0) x_2 = lhs_10 ;
    //   2 x_0 = R1_01 x_2 (u_0 - u_1) ; 2 x_3 = R1_10 x_1 (u_1 - u_0)
    // assemble and eliminate over the rational-function field
    let d01 = toy.du(0).sub(&toy.du(1));
    let u01 = toy.u[0].sub(&toy.u[1]);
    let two = RatFn::constant_rat(crate::coeffs::rat(2, 1));
    let mut a: Vec<Vec<RatFn>> = vec![vec![RatFn::zero(); 4]; 4];
    let mut b: Vec<RatFn> = vec![RatFn::zero(); 4];
    a[0][1] = d01.clone();
    b[0] = lhs.e[0][1].clone();
    a[1][2] = d01.neg();
    b[1] = lhs.e[1][0].clone();
    a[2][0] = two.clone();
    a[2][2] = r1.e[0][1].mul(&u01).neg();
    a[3][3] = two;
    a[3][1] = r1.e[1][0].mul(&u01);
    // Gaussian elimination
    for col in 0..4 {
        let piv = (col..4).find(|&r| !a[r][col].is_zero()).expect("solvable system");
        a.swap(col, piv);
        b.swap(col, piv);
        let inv = a[col][col].inv();
        for c in 0..4 {
            a[col][c] = a[col][c].mul(&inv);
        }
        b[col] = b[col].mul(&inv);
        for r in 0..4 {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in 0..4 {
                    let d = f.mul(&a[col][c]);
                    a[r][c] = a[r][c].sub(&d);
                }
                let d = f.mul(&b[col]);
                b[r] = b[r].sub(&d);
            }
        }
    }
    let mut out = Mat::zero(2);
    out.e[0][0] = b[0].clone();
    out.e[0][1] = b[1].clone();
    out.e[1][0] = b[2].clone();
    out.e[1][1] = b[3].clone();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::rat;

    #[test]
    fn one_dimensional_toy_forces_identity() {
        let toy = SemisimpleToy {
            u: vec![RatFn::var(syms::S)],
            psi: {
                let mut m = Mat::zero(1);
                m.e[0][0] = RatFn::one();
                m
            },
        };
        let r1 = r1_from_frame(&toy).unwrap();
        assert!(r1.eq_exact(&Mat::zero(1)), "empty off-diagonal sum forces R_k = 0");
        let r2 = recursion_step(&toy, &r1, &r1, 1).unwrap();
        assert!(r2.eq_exact(&Mat::zero(1)));
    }

    #[test]
    fn two_point_toy_recursion_and_direct_solve_agree() {
        let toy = two_point_toy();
        let r1 = r1_from_frame(&toy).unwrap();
        // R1 off-diagonal = w/2 with w = 2/(1+s^2)
        let w = RatFn::one()
            .add(&RatFn::var(syms::S).mul(&RatFn::var(syms::S)))
            .inv();
        assert!(r1.e[0][1].eq_exact(&w), "got {}", r1.e[0][1].display_string());
        assert!(r1.e[1][0].eq_exact(&w));
        let r2 = recursion_step(&toy, &r1, &r1, 1).unwrap();
        let r2_direct = r2_direct_solve(&toy, &r1).unwrap();
        assert!(r2.eq_exact(&r2_direct), "the two solution routes agree");
        // the full sequence passes the checker
        let rep = r_recursion_check(&toy, &[r1.clone(), r2]).unwrap();
        assert!(rep.all_ok);
    }

    #[test]
    fn perturbed_sequence_is_rejected() {
        let toy = two_point_toy();
        let r1 = r1_from_frame(&toy).unwrap();
        let r2 = recursion_step(&toy, &r1, &r1, 1).unwrap();
        let mut bad = r1.clone();
        bad.e[0][1] = bad.e[0][1].add(&RatFn::constant_rat(rat(1, 7)));
        let rep = r_recursion_check(&toy, &[bad, r2]).unwrap();
        assert!(!rep.all_ok);
    }

    #[test]
    fn repeated_critical_values_are_caught() {
        let s = RatFn::var(syms::S);
        let toy = SemisimpleToy {
            u: vec![s.clone(), s],
            psi: Mat::identity(2),
        };
        assert!(matches!(
            r1_from_frame(&toy),
            Err(GiventalError::RepeatedCriticalValue)
        ));
    }
}
