//! Depth-first pruned search shared by the equivalent and regularized
//! decoders. A node's pruning size is its parent's multiplied by the child
//! weight: the Gaussian weight `f` for the equivalent decoder, the Klein
//! layer probability `p` for the regularized one. Sizes are carried as logs.

use std::collections::HashSet;
use std::f64::consts::LN_2;

use crate::decoders::babai::complete_from;
use crate::decoders::{Candidate, DecodeOptions, DecodeOutcome, SearchNode};
use crate::error::{Error, Result};
use crate::gaussian::{ln_rho_z, LayerContext, ZigZag, DEFAULT_RHO_TOL};
use crate::lattice::QrFactors;

/// Slack on `ln K >= 0`, i.e. a relative tolerance on `K >= 1`.
const LN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Weighting {
    Gaussian,
    Klein,
}

/// Equivalent sphere decoder: keeps every child with `K(parent) f(child) >= 1`.
pub fn esd(r: &QrFactors, y: &[f64], opts: &DecodeOptions) -> Result<DecodeOutcome> {
    run(r, y, opts, Weighting::Gaussian)
}

/// Regularized sphere decoder: keeps the `j_max` closest children with
/// `K(parent) p(child) >= 1`, completing nodes with `K < 2` by nearest-plane
/// rounding when candidate protection is on.
pub fn rsd(r: &QrFactors, y: &[f64], opts: &DecodeOptions) -> Result<DecodeOutcome> {
    run(r, y, opts, Weighting::Klein)
}

fn run(r: &QrFactors, y: &[f64], opts: &DecodeOptions, weighting: Weighting) -> Result<DecodeOutcome> {
    opts.validate()?;
    let n = r.dim();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!("target has length {}, expected {n}", y.len())));
    }
    let sigma = opts.sigma_policy.resolve(r)?;
    let child_limit = match weighting {
        Weighting::Gaussian => opts.esd_child_limit.unwrap_or(usize::MAX),
        Weighting::Klein => opts.j_max,
    };
    let mut search = Search {
        r,
        y,
        sigma,
        weighting,
        child_limit,
        protection: opts.candidate_protection,
        trace: opts.trace,
        node_cap: opts.node_cap,
        x: vec![0; n],
        seen: HashSet::new(),
        out: DecodeOutcome::default(),
    };
    let ln_k = opts.initial_k.ln();
    if search.protection && ln_k < LN_2 {
        // The root itself is a low-budget node.
        search.complete(n)?;
    } else {
        search.expand(n, ln_k, 0.0)?;
    }
    let mut out = search.out;
    out.finish();
    Ok(out)
}

struct Search<'a> {
    r: &'a QrFactors,
    y: &'a [f64],
    sigma: f64,
    weighting: Weighting,
    child_limit: usize,
    protection: bool,
    trace: bool,
    node_cap: u64,
    x: Vec<i64>,
    seen: HashSet<Vec<i64>>,
    out: DecodeOutcome,
}

impl Search<'_> {
    fn count_nodes(&mut self, k: u64) -> Result<()> {
        self.out.visited_nodes += k;
        if self.out.visited_nodes > self.node_cap {
            return Err(Error::NodeCapExceeded { cap: self.node_cap });
        }
        Ok(())
    }

    fn emit(&mut self, dist: f64, protected: bool) {
        if self.seen.insert(self.x.clone()) {
            self.out.candidates.push(Candidate { x: self.x.clone(), dist, protected });
            if protected {
                self.out.protected_count += 1;
            }
        }
    }

    /// Expand the children at layer `top - 1` of a saved node with log
    /// pruning size `ln_k`.
    fn expand(&mut self, top: usize, ln_k: f64, partial: f64) -> Result<()> {
        let i = top - 1;
        let ctx = LayerContext::new(self.r, self.y, &self.x, i, self.sigma);
        let ln_norm = match self.weighting {
            Weighting::Gaussian => 0.0,
            Weighting::Klein => ln_rho_z(&ctx, DEFAULT_RHO_TOL),
        };
        let rii = self.r.diag(i);
        // Zig-zag order is closest first, so the first failure ends the layer.
        for v in ZigZag::new(ctx.center).take(self.child_limit) {
            let ln_child = ln_k + ctx.ln_weight(v) - ln_norm;
            if ln_child < -LN_EPS {
                self.out.probe_count += 1;
                break;
            }
            self.count_nodes(1)?;
            self.x[i] = v;
            let e = rii * (v as f64 - ctx.center);
            let dist = partial + e * e;
            if self.trace {
                self.out.trace.push(SearchNode {
                    layer: i,
                    assignment: self.x[i..].iter().rev().copied().collect(),
                    pruning_size: ln_child.exp(),
                    partial_sq_dist: dist,
                });
            }
            if i == 0 {
                self.emit(dist.sqrt(), false);
            } else if self.protection && ln_child < LN_2 {
                self.complete(i)?;
            } else {
                self.expand(i, ln_child, dist)?;
            }
        }
        Ok(())
    }

    /// Nearest-plane completion of layers below `top`; each rounded layer
    /// counts as a visited node.
    fn complete(&mut self, top: usize) -> Result<()> {
        self.count_nodes(top as u64)?;
        complete_from(self.r, self.y, &mut self.x, top);
        let dist = self.r.sq_dist(&self.x, self.y).sqrt();
        self.emit(dist, true);
        Ok(())
    }
}
