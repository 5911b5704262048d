//! Structural steady-state sensitivity analysis of reaction networks.
//!
//! From stoichiometry alone, compute which reaction-rate perturbations
//! influence which steady-state fluxes and metabolite concentrations:
//! assemble the block matrix B = [[-I, R], [S, 0]] with random rates over
//! GF(p), read the influence relation off the zero pattern of B^-1, and
//! condense it into a hierarchical flux influence graph. Independent
//! child-selection (brute-force) and floating-point finite-perturbation
//! oracles verify the structural predictions.

pub mod augment;
pub mod gf;
pub mod graphkit;
pub mod influence;
pub mod linalg;
pub mod network;
pub mod numcheck;
pub mod oracle;
pub mod report;
