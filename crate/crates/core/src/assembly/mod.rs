//! Finite-element matrices, load vectors and energies for the P1, P0 and
//! RT0 spaces.

mod energy;
pub(crate) mod p1;
mod quadrature;
pub mod rt0;

pub use energy::{compound_terms, primal_energy, CompoundTerms};
pub use p1::{hat_gradients, p1_gradient, p1_p0_mass, p1_stiffness};
pub use quadrature::pos_neg_part_integrals;
pub use rt0::{rt0_div_load, rt0_divdiv, rt0_divergence, rt0_flux_load, rt0_mass};
