//! Spectral Faedo-Galerkin laboratory for fluid-type SPDEs driven by
//! Wiener and Poisson noise.
//!
//! The crate builds eigenbasis Galerkin truncations of incompressible
//! hydrodynamic systems (Navier-Stokes, MHD, Boussinesq), simulates the
//! truncated stochastic dynamics with a jump-adapted Euler scheme, and
//! verifies the structural assumptions behind the well-posedness theory
//! as runnable certificates: operator identities, coercivity of the
//! noise, energy-ledger consistency, moment bounds, and path-regularity
//! statistics.

pub mod basis;
pub mod config;
pub mod domain;
pub mod error;
pub mod ledger;
pub mod manifest;
pub mod moments;
pub mod noise;
pub mod pathdiag;
pub mod runner;
pub mod sim;
pub mod state;
pub mod system;
pub mod tensor;
pub mod triple;
pub mod util;

pub use basis::{build_basis, seminorm_local, GridField, Mode, Phase, SpectralBasis};
pub use config::{load_config, load_config_str, DiagnosticsConfig, RunConfig, ToleranceConfig};
pub use domain::{BoxDomain, LocalWindow};
pub use error::{Error, Result};
pub use ledger::{
    accumulate_ledger, jump_phi_compensator, martingale_mean_test, martingale_mean_test_values,
    EnergyLedger, MartingaleGate, MartingaleTerm,
};
pub use manifest::{RunManifest, OUTPUT_ROOT_ENV};
pub use moments::{estimate_moments, MomentReport, MomentRow, UniformityVerdict};
pub use noise::{
    certify_noise, path_rng, CoercivityCertificate, GDirection, JumpEvent, JumpSpec, MarkLaw,
    NoiseCertificate, NoiseModel, NoiseSkeleton, StreamRole, WienerOperator, WienerSpec,
};
pub use pathdiag::{
    aldous_statistic, modulus, modulus_curve, seminorms_on_windows, AldousFit, AldousReport,
    AldousRow, ModulusCurve, PathDiagnostics, PathNorm, SeminormRow, StoppingRule,
};
pub use runner::{run, Command, Gate, RunOutcome, SummaryReport, Workbench};
pub use sim::{
    simulate_on_skeleton, simulate_path, FaultMode, Forcing, JumpMarker, SimConfig,
    TrajectoryRecord,
};
pub use state::GalerkinState;
pub use system::{Block, SystemKind, SystemSpec};
pub use triple::{
    assemble_stokes_triple, assemble_triple, check_assumptions, smooth_cutoff, AssumptionReport,
    CheckTolerances, OperatorTriple,
};
