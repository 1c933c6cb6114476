//! Decoder family over an upper-triangular system `y = Rx + n`.
//!
//! Every decoder returns a [`DecodeOutcome`] carrying the candidate list and
//! the node counters used by the complexity bounds: `visited_nodes` (|S|)
//! counts saved nodes only, `probe_count` the children that were examined
//! and rejected.

mod babai;
mod fincke_pohst;
mod klein;
mod pruning;
mod radius;

use std::fmt::Write as _;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use babai::{babai_outcome, babai_sic};
pub use fincke_pohst::{fincke_pohst, ml_reference};
pub use klein::klein_sampler_decode;
pub use pruning::{esd, rsd};
pub use radius::{
    equivalent_radius, gain_upper_bound, gain_upper_bound_rigorous, k_for_radius,
    regularized_radius_along_path, PruningSize,
};

use crate::error::{Error, Result};
use crate::gaussian::SigmaPolicy;
use crate::lattice::{lll_reduce, qr_decompose, LatticeBasis, QrFactors, DEFAULT_LLL_DELTA};

/// Default safety cap on saved nodes per decode.
pub const DEFAULT_NODE_CAP: u64 = 10_000_000;

/// Default number of children examined per node by the regularized decoder.
pub const DEFAULT_J_MAX: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeOptions {
    /// Initial pruning size `K >= 1`; real-valued.
    pub initial_k: f64,
    pub sigma_policy: SigmaPolicy,
    /// Children per node for the regularized decoder.
    pub j_max: usize,
    pub candidate_protection: bool,
    /// Optional cap on children per node for the equivalent decoder.
    pub esd_child_limit: Option<usize>,
    pub use_lll: bool,
    pub lll_delta: f64,
    pub node_cap: u64,
    /// Record every saved node in [`DecodeOutcome::trace`].
    pub trace: bool,
}

impl DecodeOptions {
    /// Options for the equivalent decoder: protection off, unlimited children.
    pub fn esd(initial_k: f64) -> Self {
        Self {
            initial_k,
            sigma_policy: SigmaPolicy::PaperDefault,
            j_max: DEFAULT_J_MAX,
            candidate_protection: false,
            esd_child_limit: None,
            use_lll: false,
            lll_delta: DEFAULT_LLL_DELTA,
            node_cap: DEFAULT_NODE_CAP,
            trace: false,
        }
    }

    /// Options for the regularized decoder: protection on, three children.
    pub fn rsd(initial_k: f64) -> Self {
        Self { candidate_protection: true, ..Self::esd(initial_k) }
    }

    pub fn with_sigma(mut self, policy: SigmaPolicy) -> Self {
        self.sigma_policy = policy;
        self
    }

    pub fn with_protection(mut self, on: bool) -> Self {
        self.candidate_protection = on;
        self
    }

    pub fn with_trace(mut self, on: bool) -> Self {
        self.trace = on;
        self
    }

    pub fn with_lll(mut self, on: bool) -> Self {
        self.use_lll = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.initial_k >= 1.0) || !self.initial_k.is_finite() {
            return Err(Error::InvalidConfig(format!("initial K must be >= 1, got {}", self.initial_k)));
        }
        if self.j_max == 0 || self.esd_child_limit == Some(0) {
            return Err(Error::InvalidConfig("child limit must be at least 1".into()));
        }
        if !(self.lll_delta > 0.25 && self.lll_delta <= 1.0) {
            return Err(Error::InvalidConfig(format!("LLL delta must lie in (0.25, 1], got {}", self.lll_delta)));
        }
        Ok(())
    }
}

/// A saved node of the pruned search: the assignment of layers
/// `layer + 1..=n` (1-based), i.e. `x[layer..]` in 0-based indexing.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchNode {
    /// 0 for a complete assignment, `n` for the root.
    pub layer: usize,
    /// Values for the assigned layers, highest layer first.
    pub assignment: Vec<i64>,
    pub pruning_size: f64,
    pub partial_sq_dist: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub x: Vec<i64>,
    /// Euclidean distance `||Rx - y||`.
    pub dist: f64,
    /// Emitted by completing a low-budget node with nearest-plane rounding.
    pub protected: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DecodeOutcome {
    pub best: Option<Vec<i64>>,
    pub best_dist: f64,
    pub candidates: Vec<Candidate>,
    pub visited_nodes: u64,
    pub probe_count: u64,
    pub protected_count: u64,
    pub trace: Vec<SearchNode>,
}

impl DecodeOutcome {
    pub fn candidate_count(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.best.is_none()
    }

    /// Candidates as a sorted set of vectors, for set comparisons.
    pub fn candidate_set(&self) -> std::collections::BTreeSet<Vec<i64>> {
        self.candidates.iter().map(|c| c.x.clone()).collect()
    }

    /// One tab-separated line per saved node: layer, assignment (comma
    /// separated, highest layer first), pruning size, partial distance.
    pub fn trace_tsv(&self) -> String {
        let mut out = String::new();
        for node in &self.trace {
            let assignment: Vec<String> = node.assignment.iter().map(i64::to_string).collect();
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                node.layer,
                assignment.join(","),
                node.pruning_size,
                node.partial_sq_dist
            );
        }
        out
    }

    /// Recompute `best` from the candidate list; ties keep the earliest.
    pub(crate) fn finish(&mut self) {
        let mut best: Option<&Candidate> = None;
        for c in &self.candidates {
            if best.is_none_or(|b| c.dist < b.dist) {
                best = Some(c);
            }
        }
        self.best = best.map(|c| c.x.clone());
        self.best_dist = best.map_or(f64::INFINITY, |c| c.dist);
    }
}

/// Decoder selection for the high-level entry points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderKind {
    Babai,
    FinckePohst { radius: f64 },
    Esd,
    Rsd,
    Klein { samples: usize, seed: u64 },
    Ml,
}

impl DecoderKind {
    pub fn run(&self, r: &QrFactors, y: &[f64], opts: &DecodeOptions) -> Result<DecodeOutcome> {
        match *self {
            DecoderKind::Babai => Ok(babai_outcome(r, y)),
            DecoderKind::FinckePohst { radius } => fincke_pohst(r, y, radius, opts.node_cap),
            DecoderKind::Esd => esd(r, y, opts),
            DecoderKind::Rsd => rsd(r, y, opts),
            DecoderKind::Klein { samples, seed } => {
                let sigma = opts.sigma_policy.resolve(r)?;
                klein_sampler_decode(r, y, sigma, samples, seed)
            }
            DecoderKind::Ml => ml_reference(r, y, opts.node_cap),
        }
    }
}

/// Decode `c` against a general square basis: QR, optional LLL on `R`, decode,
/// and map candidates back to the original coordinates. Distances are
/// invariant under the transformations and reported as is.
pub fn decode_basis(
    basis: &LatticeBasis,
    c: &DVector<f64>,
    kind: DecoderKind,
    opts: &DecodeOptions,
) -> Result<DecodeOutcome> {
    opts.validate()?;
    let qr = qr_decompose(basis)?;
    let y = qr.project(c)?;
    if !opts.use_lll {
        return kind.run(&qr, &y, opts);
    }
    let r_basis = LatticeBasis::new(qr.r().clone())?;
    let (reduced, u) = lll_reduce(&r_basis, opts.lll_delta)?;
    let qr2 = qr_decompose(&reduced)?;
    let y2 = qr2.project(&DVector::from_vec(y))?;
    let mut out = kind.run(&qr2, &y2, opts)?;
    for cand in &mut out.candidates {
        cand.x = u.apply(&cand.x);
    }
    if let Some(b) = &out.best {
        out.best = Some(u.apply(b));
    }
    Ok(out)
}
