//! Givental's symplectic/quantization layer at desk scale: exact symbolic
//! transformation-matrix identities, the quantized-operator kernels, a
//! truncated Fock-space action, and the weight bookkeeping of the modularity
//! statement.

pub mod fock;
pub mod matrices;
pub mod mpoly;
pub mod rrec;

pub use matrices::{
    build_nu_matrices, jacobian_is_differential_inverse, jacobian_preserves_pairing,
    m0_limit_identities, nu_composition_law, p8_involution, symplectic_check, v_kernel, w_kernel,
    xtilde_composition_law, GiventalError, Mat, NuMatrices, ZMatrix,
};
pub use fock::{apply_r_hat, apply_s_hat_inverse, cocycle, weight_bookkeeping, weight_rescaling_oracle, CapReport, Darboux, TruncatedPotential};
pub use mpoly::{syms, MPoly, RatFn, Sym};
pub use rrec::{r_recursion_check, two_point_toy, SemisimpleToy};
