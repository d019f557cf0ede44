//! Exact N-boson simulator for a three-site ring lattice: Fock-space
//! dynamics, atom-interferometric measurement schemes, and rotation-precision
//! analysis via quantum Fisher information, with loss and interaction
//! robustness studies.

pub mod constants;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod metrology;
pub mod robustness;
pub mod schemes;

pub use dynamics::{
    apply_gate, build_bose_hubbard, build_bose_hubbard_rotating, build_flow_hamiltonian, evolve,
    flow_to_site_matrix, site_to_flow_matrix, GateKind, GateSpec, HamiltonianMatrix, RingParams,
};
pub use error::{Error, Result};
pub use fock::{
    apply_mode_phase, enumerate_basis, enumerate_basis_with_capacity, fock_state, mode_transform,
    DensityOperator, FockBasis, OccupationVector, StateVector,
};
pub use linalg::{Spectrum, C64};
pub use metrology::{
    crlb, delta_theta_from_phi, fidelity_qfi_oracle, flow_state_qfi, loss_qfi, loss_qfi_oracle,
    loss_sectors, mixed_qfi, pure_qfi, qfi_with_loss, scheme_coefficients, FlowCoefficients,
    LossConvention, LossModel, LossSector, PrecisionContext, PrecisionReport, SLDDecomposition,
    SchemeFamily,
};
pub use robustness::{
    estimate_coupling, estimate_interaction, interaction_fidelity_point,
    interaction_fidelity_sweep, max_tolerable_offset, metastability_bound,
    number_fluctuation_point, number_fluctuation_study, sensitivity, FidelityCurve,
    FluctuationPoint, FluctuationStudy, PhysicalParams, SensitivityReport, SweepPerturbation,
};
pub use schemes::{
    apply_rotation, apply_rotation_tracked, detection_distribution, inverse_quantum_beam_splitter,
    omega_from_theta, quantum_beam_splitter, rotation_phase, run_scheme, run_scheme1, run_scheme2,
    run_scheme3, theta_from_omega, DetectionDistribution, QBSResult, QbsVariant, SchemeConfig,
    SchemeResult,
};
