//! Norms, certificates and the numerical experiments built on them.

mod certificate;
mod consistency;
mod convergence;
mod experiments;
mod fit;
mod norms;

use std::sync::Arc;

use crate::assembly::AssembledSystem;
use crate::error::Result;
use crate::hypo::{HypoMatrix, PenaltyConfig, Scheme};
use crate::mesh::{generate_rect_mesh, Mesh, Rect};
use crate::space::FeSpace;

pub use certificate::{coercivity_certificate, coercivity_ratio, exact_coercivity_bound, CoercivityReport, CERTIFICATE_THRESHOLD};
pub use consistency::{consistency_residual, consistency_residual_unchecked, identity_sides, IdentitySides};
pub use convergence::{run_convergence_experiment, ConvergenceConfig, ConvergenceRow, ConvergenceTable};
pub use experiments::{run_baseline_comparison, run_decay_experiment, BaselineReport, DecayConfig, DecayReport};
pub use fit::fit_decay_rate;
pub use norms::{compute_norms, field_norms, triple_norm_matrix, NormReport};

/// Mesh, discretisation and stabilisation parameters of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setup {
    pub rect: Rect,
    pub nx: usize,
    pub ny: usize,
    pub perturb: f64,
    pub seed: u64,
    pub p: usize,
    pub scheme: Scheme,
    pub alpha: f64,
    pub penalty: PenaltyConfig,
}

impl Default for Setup {
    fn default() -> Self {
        Setup {
            rect: Rect::UNIT,
            nx: 16,
            ny: 16,
            perturb: 0.0,
            seed: 0,
            p: 2,
            scheme: Scheme::Parabolic,
            alpha: 0.35060,
            penalty: PenaltyConfig::auto(),
        }
    }
}

impl Setup {
    pub fn mesh(&self) -> Result<Arc<Mesh>> {
        generate_rect_mesh(self.rect, self.nx, self.ny, self.perturb, self.seed).map(Arc::new)
    }

    pub fn hypo(&self) -> Result<HypoMatrix> {
        HypoMatrix::new(self.alpha, self.scheme)
    }

    pub fn space(&self) -> Result<Arc<FeSpace>> {
        FeSpace::new(self.mesh()?, self.p).map(Arc::new)
    }

    pub fn system(&self) -> Result<AssembledSystem> {
        self.penalty.validate()?;
        AssembledSystem::new(self.space()?, self.hypo()?, self.penalty)
    }

    /// Same setup at a different resolution.
    pub fn with_resolution(&self, nx: usize, ny: usize) -> Self {
        Setup { nx, ny, ..*self }
    }
}
