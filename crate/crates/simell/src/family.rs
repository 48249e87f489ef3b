//! Static singularity data for the three families.

use crate::series::Exp;
use crate::sigma::SigmaPoly;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    P8,
    X9,
    J10,
}

/// Monomial exponents `(a, b, c)` for `x0^a x1^b x2^c`.
pub type XMono = [u32; 3];

impl Family {
    pub const ALL: [Family; 3] = [Family::P8, Family::X9, Family::J10];

    pub fn name(self) -> &'static str {
        match self {
            Family::P8 => "P8",
            Family::X9 => "X9",
            Family::J10 => "J10",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        match s.to_ascii_lowercase().as_str() {
            "p8" => Some(Family::P8),
            "x9" => Some(Family::X9),
            "j10" => Some(Family::J10),
            _ => None,
        }
    }

    /// Milnor number.
    pub fn mu(self) -> u32 {
        match self {
            Family::P8 => 8,
            Family::X9 => 9,
            Family::J10 => 10,
        }
    }

    /// The second period is this multiple of the `P8` one.
    pub fn pi_b_multiplier(self) -> i64 {
        match self {
            Family::P8 => 1,
            Family::X9 | Family::J10 => 3,
        }
    }

    /// Denominator `r` in the flat coordinate `t_{-1} = Lambda * tau / r`
    /// used when quoting Fourier expansions for this family.
    pub fn theorem_q_denominator(self) -> i64 {
        match self {
            Family::P8 => 3,
            Family::X9 => 4,
            Family::J10 => 6,
        }
    }

    /// Weights (charges) of `x0, x1, x2` making the normal form homogeneous
    /// of degree 1.
    pub fn weights(self) -> [Exp; 3] {
        match self {
            Family::P8 => [Exp::new(1, 3), Exp::new(1, 3), Exp::new(1, 3)],
            Family::X9 => [Exp::new(1, 4), Exp::new(1, 4), Exp::new(1, 2)],
            Family::J10 => [Exp::new(1, 6), Exp::new(1, 3), Exp::new(1, 2)],
        }
    }

    /// The marginal deformation of the normal form, with the coefficient of
    /// each monomial a polynomial in `sigma`.
    pub fn defining_poly(self) -> Vec<(SigmaPoly, XMono)> {
        let one = SigmaPoly::one;
        let sigma = || SigmaPoly::sigma_pow(1);
        match self {
            Family::P8 => vec![
                (one(), [3, 0, 0]),
                (one(), [0, 3, 0]),
                (one(), [0, 0, 3]),
                (sigma(), [1, 1, 1]),
            ],
            Family::X9 => vec![
                (one(), [2, 0, 1]),
                (one(), [1, 3, 0]),
                (one(), [0, 0, 2]),
                (sigma(), [1, 1, 1]),
            ],
            Family::J10 => vec![
                (one(), [3, 0, 1]),
                (one(), [0, 3, 0]),
                (one(), [0, 0, 2]),
                (sigma(), [1, 1, 1]),
            ],
        }
    }

    /// Monomial basis of the Milnor ring, ordered as `phi_{-1}, phi_0, phi_1, ...`.
    pub fn milnor_basis(self) -> Vec<XMono> {
        match self {
            Family::P8 => vec![
                [1, 1, 1],
                [0, 0, 0],
                [1, 0, 0],
                [0, 1, 0],
                [0, 0, 1],
                [1, 1, 0],
                [1, 0, 1],
                [0, 1, 1],
            ],
            Family::X9 => vec![
                [1, 1, 1],
                [0, 0, 0],
                [1, 0, 0],
                [0, 1, 0],
                [0, 0, 1],
                [0, 2, 0],
                [1, 1, 0],
                [1, 0, 1],
                [0, 1, 1],
            ],
            Family::J10 => vec![
                [1, 1, 1],
                [0, 0, 0],
                [1, 0, 0],
                [2, 0, 0],
                [0, 1, 0],
                [3, 0, 0],
                [1, 1, 0],
                [4, 0, 0],
                [0, 2, 0],
                [5, 0, 0],
            ],
        }
    }

    /// Weighted degree of a monomial.
    pub fn mono_weight(self, m: XMono) -> Exp {
        let w = self.weights();
        Exp::from_integer(m[0] as i64) * w[0]
            + Exp::from_integer(m[1] as i64) * w[1]
            + Exp::from_integer(m[2] as i64) * w[2]
    }

    /// Deformation-parameter degrees `d_i = 1 - deg(phi_i)` in the basis order
    /// of [`Family::milnor_basis`].
    pub fn degrees(self) -> Vec<Exp> {
        self.milnor_basis()
            .into_iter()
            .map(|m| Exp::from_integer(1) - self.mono_weight(m))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::traits::One;

    #[test]
    fn charges_sum_to_one() {
        for f in Family::ALL {
            let s: Exp = f.weights().into_iter().sum();
            assert!(s.is_one(), "{}", f.name());
        }
    }

    #[test]
    fn p8_degrees_match_the_fixed_list() {
        let d = Family::P8.degrees();
        let expect = [
            Exp::new(0, 1),
            Exp::new(1, 1),
            Exp::new(2, 3),
            Exp::new(2, 3),
            Exp::new(2, 3),
            Exp::new(1, 3),
            Exp::new(1, 3),
            Exp::new(1, 3),
        ];
        assert_eq!(d, expect);
    }

    #[test]
    fn basis_sizes_match_milnor_numbers() {
        for f in Family::ALL {
            assert_eq!(f.milnor_basis().len() as u32, f.mu());
            // defining polynomial is weighted homogeneous of degree 1
            for (_, m) in f.defining_poly() {
                assert!(f.mono_weight(m).is_one());
            }
        }
    }
}
