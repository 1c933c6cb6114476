//! Monte-Carlo sweeps over SNR and decoders.
//!
//! Trial `t` draws its channel, bits and unit noise from a ChaCha stream
//! keyed by `(seed, t)`; the same draws are reused at every SNR point and by
//! every decoder, so comparisons are paired. Aggregates are integer sums,
//! which makes the result independent of how trials are scheduled.

use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::{Complex, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decoders::{DecodeOptions, DecoderKind};
use crate::error::{Error, Result};
use crate::mimo::channel::{noise_sigma, sample_channel, sample_unit_noise};
use crate::mimo::pipeline::{detect, prepare, Preprocessing};
use crate::mimo::qam::Qam;

/// A decoder in a sweep, with its options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderSpec {
    pub kind: DecoderKind,
    pub options: DecodeOptions,
}

impl DecoderSpec {
    pub fn babai() -> Self {
        Self { kind: DecoderKind::Babai, options: DecodeOptions::rsd(1.0) }
    }

    pub fn ml() -> Self {
        Self { kind: DecoderKind::Ml, options: DecodeOptions::rsd(1.0) }
    }

    pub fn esd(k: f64) -> Self {
        Self { kind: DecoderKind::Esd, options: DecodeOptions::esd(k) }
    }

    pub fn rsd(k: f64) -> Self {
        Self { kind: DecoderKind::Rsd, options: DecodeOptions::rsd(k) }
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            DecoderKind::Babai => "babai",
            DecoderKind::FinckePohst { .. } => "fp",
            DecoderKind::Esd => "esd",
            DecoderKind::Rsd => "rsd",
            DecoderKind::Klein { .. } => "klein",
            DecoderKind::Ml => "ml",
        }
    }

    /// Initial pruning size, for the decoders that have one.
    pub fn k(&self) -> Option<f64> {
        match self.kind {
            DecoderKind::Esd | DecoderKind::Rsd => Some(self.options.initial_k),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MimoConfig {
    /// Transmit antennas (complex dimension).
    pub n_tx: usize,
    pub qam_order: usize,
    /// `E_b/N_0` points in dB; `inf` gives noise-free trials.
    pub snr_db_grid: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub lll: bool,
    pub mmse: bool,
    pub lll_delta: f64,
    pub decoders: Vec<DecoderSpec>,
    /// Measure wall-clock decode time; off keeps output reproducible.
    pub timing: bool,
}

impl MimoConfig {
    pub fn validate(&self) -> Result<Qam> {
        let qam = Qam::new(self.qam_order)?;
        if self.n_tx == 0 {
            return Err(Error::InvalidConfig("n_tx must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.snr_db_grid.is_empty() || self.snr_db_grid.iter().any(|s| s.is_nan()) {
            return Err(Error::InvalidConfig("SNR grid must be non-empty and numeric".into()));
        }
        if self.decoders.is_empty() {
            return Err(Error::InvalidConfig("at least one decoder is required".into()));
        }
        for d in &self.decoders {
            d.options.validate()?;
        }
        Ok(qam)
    }

    fn preprocessing(&self) -> Preprocessing {
        Preprocessing { lll: self.lll, mmse: self.mmse, lll_delta: self.lll_delta }
    }
}

/// Outcome of one decoder on one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrialRecord {
    pub bit_errors: u64,
    pub bits: u64,
    pub visited_nodes: u64,
    pub candidate_count: u64,
    pub elapsed_ns: u64,
    pub fell_back: bool,
}

/// Aggregate over all trials of one (SNR, decoder) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellStats {
    pub snr_db: f64,
    pub decoder: String,
    pub k: Option<f64>,
    /// Real lattice dimension `2 n_tx`.
    pub dim: usize,
    pub trials: u64,
    pub bit_errors: u64,
    pub bits: u64,
    pub sum_s: u64,
    pub max_s: u64,
    pub sum_l: u64,
    pub max_l: u64,
    pub time_ns: u64,
    pub fallbacks: u64,
    /// Per-trial bit-error counts, kept when requested for paired analysis.
    #[serde(skip)]
    pub per_trial_errors: Vec<u32>,
}

impl CellStats {
    fn empty(snr_db: f64, spec: &DecoderSpec, dim: usize) -> Self {
        Self {
            snr_db,
            decoder: spec.label().to_string(),
            k: spec.k(),
            dim,
            trials: 0,
            bit_errors: 0,
            bits: 0,
            sum_s: 0,
            max_s: 0,
            sum_l: 0,
            max_l: 0,
            time_ns: 0,
            fallbacks: 0,
            per_trial_errors: Vec::new(),
        }
    }

    fn add(&mut self, r: &TrialRecord) {
        self.trials += 1;
        self.bit_errors += r.bit_errors;
        self.bits += r.bits;
        self.sum_s += r.visited_nodes;
        self.max_s = self.max_s.max(r.visited_nodes);
        self.sum_l += r.candidate_count;
        self.max_l = self.max_l.max(r.candidate_count);
        self.time_ns += r.elapsed_ns;
        self.fallbacks += u64::from(r.fell_back);
    }

    fn merge(&mut self, other: &CellStats) {
        self.trials += other.trials;
        self.bit_errors += other.bit_errors;
        self.bits += other.bits;
        self.sum_s += other.sum_s;
        self.max_s = self.max_s.max(other.max_s);
        self.sum_l += other.sum_l;
        self.max_l = self.max_l.max(other.max_l);
        self.time_ns += other.time_ns;
        self.fallbacks += other.fallbacks;
    }

    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.bits as f64
    }

    pub fn avg_s(&self) -> f64 {
        self.sum_s as f64 / self.trials as f64
    }

    pub fn avg_l(&self) -> f64 {
        self.sum_l as f64 / self.trials as f64
    }

    pub fn avg_time_ns(&self) -> u64 {
        self.time_ns / self.trials
    }
}

/// Run one trial: every SNR point and every decoder on the same draws.
/// Records are laid out SNR-major.
pub fn run_trial(cfg: &MimoConfig, qam: &Qam, trial: u64) -> Result<Vec<TrialRecord>> {
    let n = cfg.n_tx;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(trial);
    let h = sample_channel(&mut rng, n);
    let bits: Vec<u8> = (0..n * qam.bits_per_symbol()).map(|_| rng.random_range(0..2u8)).collect();
    let s = DVector::from_vec(qam.map(&bits)?);
    let w = sample_unit_noise(&mut rng, n);
    let clean = &h * s;
    let energy = qam.symbol_energy().sqrt();
    let mut records = Vec::with_capacity(cfg.snr_db_grid.len() * cfg.decoders.len());
    for &snr in &cfg.snr_db_grid {
        let sigma_w = if snr.is_infinite() && snr > 0.0 { 0.0 } else { noise_sigma(snr, n, cfg.qam_order) };
        let c = &clean + w.map(|z| z * Complex::new(sigma_w * energy, 0.0));
        let sys = prepare(&h, &c, qam, sigma_w, cfg.preprocessing())?;
        for spec in &cfg.decoders {
            let kind = match spec.kind {
                DecoderKind::Klein { samples, seed } => DecoderKind::Klein { samples, seed: seed ^ trial },
                k => k,
            };
            let start = cfg.timing.then(Instant::now);
            let det = detect(&sys, kind, &spec.options, qam)?;
            let elapsed_ns = start.map_or(0, |t| t.elapsed().as_nanos() as u64);
            let decided = qam.demap_indices(&det.indices);
            let bit_errors = decided.iter().zip(&bits).filter(|(a, b)| a != b).count() as u64;
            records.push(TrialRecord {
                bit_errors,
                bits: bits.len() as u64,
                visited_nodes: det.outcome.visited_nodes,
                candidate_count: det.outcome.candidate_count() as u64,
                elapsed_ns,
                fell_back: det.fell_back,
            });
        }
    }
    Ok(records)
}

/// Aggregate a sweep. Rows are sorted by (SNR, decoder label, K).
pub fn run_sweep(cfg: &MimoConfig) -> Result<Vec<CellStats>> {
    run_sweep_inner(cfg, false)
}

/// As [`run_sweep`], additionally keeping per-trial bit-error counts.
pub fn run_sweep_paired(cfg: &MimoConfig) -> Result<Vec<CellStats>> {
    run_sweep_inner(cfg, true)
}

fn run_sweep_inner(cfg: &MimoConfig, keep_trials: bool) -> Result<Vec<CellStats>> {
    let qam = cfg.validate()?;
    let dim = 2 * cfg.n_tx;
    let blank: Vec<CellStats> = cfg
        .snr_db_grid
        .iter()
        .flat_map(|&snr| cfg.decoders.iter().map(move |d| CellStats::empty(snr, d, dim)))
        .collect();

    let fold = |mut acc: Vec<CellStats>, records: Vec<TrialRecord>| {
        for (cell, rec) in acc.iter_mut().zip(&records) {
            cell.add(rec);
        }
        acc
    };
    let merge = |mut a: Vec<CellStats>, b: Vec<CellStats>| {
        for (x, y) in a.iter_mut().zip(&b) {
            x.merge(y);
        }
        a
    };

    let mut cells = if keep_trials {
        // Per-trial detail is stored in trial order.
        let mut cells = blank.clone();
        for cell in &mut cells {
            cell.per_trial_errors = vec![0; cfg.trials as usize];
        }
        let all = collect_trials(cfg, &qam)?;
        for (t, records) in all.into_iter().enumerate() {
            for (cell, rec) in cells.iter_mut().zip(&records) {
                cell.add(rec);
                cell.per_trial_errors[t] = rec.bit_errors as u32;
            }
        }
        cells
    } else {
        fold_trials(cfg, &qam, blank, fold, merge)?
    };
    sort_cells(&mut cells);
    Ok(cells)
}

#[cfg(feature = "parallel")]
fn collect_trials(cfg: &MimoConfig, qam: &Qam) -> Result<Vec<Vec<TrialRecord>>> {
    use rayon::prelude::*;
    (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, qam, t)).collect()
}

#[cfg(not(feature = "parallel"))]
fn collect_trials(cfg: &MimoConfig, qam: &Qam) -> Result<Vec<Vec<TrialRecord>>> {
    (0..cfg.trials).map(|t| run_trial(cfg, qam, t)).collect()
}

#[cfg(feature = "parallel")]
fn fold_trials(
    cfg: &MimoConfig,
    qam: &Qam,
    blank: Vec<CellStats>,
    fold: impl Fn(Vec<CellStats>, Vec<TrialRecord>) -> Vec<CellStats> + Sync + Send,
    merge: impl Fn(Vec<CellStats>, Vec<CellStats>) -> Vec<CellStats> + Sync + Send,
) -> Result<Vec<CellStats>> {
    use rayon::prelude::*;
    (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, qam, t))
        .try_fold(|| blank.clone(), |acc, rec| rec.map(|r| fold(acc, r)))
        .try_reduce(|| blank.clone(), |a, b| Ok(merge(a, b)))
}

#[cfg(not(feature = "parallel"))]
fn fold_trials(
    cfg: &MimoConfig,
    qam: &Qam,
    blank: Vec<CellStats>,
    fold: impl Fn(Vec<CellStats>, Vec<TrialRecord>) -> Vec<CellStats>,
    _merge: impl Fn(Vec<CellStats>, Vec<CellStats>) -> Vec<CellStats>,
) -> Result<Vec<CellStats>> {
    let mut acc = blank;
    for t in 0..cfg.trials {
        acc = fold(acc, run_trial(cfg, qam, t)?);
    }
    Ok(acc)
}

fn sort_cells(cells: &mut [CellStats]) {
    cells.sort_by(|a, b| {
        a.snr_db
            .total_cmp(&b.snr_db)
            .then_with(|| a.decoder.cmp(&b.decoder))
            .then_with(|| match (a.k, b.k) {
                (Some(x), Some(y)) => x.total_cmp(&y),
                (x, y) => x.is_some().cmp(&y.is_some()),
            })
    });
}

fn fmt_k(k: Option<f64>) -> String {
    k.map(|v| v.to_string()).unwrap_or_default()
}

pub const BER_CSV_HEADER: &str = "snr_db,decoder,k,trials,bit_errors,bits,ber,avg_s,avg_l,avg_time_ns";
pub const NODES_CSV_HEADER: &str = "snr_db,decoder,k,trials,dim,avg_s,max_s,avg_l,max_l";

/// BER table. Floats use the shortest representation that round-trips.
pub fn ber_csv(cells: &[CellStats]) -> String {
    let mut out = String::new();
    out.push_str(BER_CSV_HEADER);
    out.push('\n');
    for c in cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            c.snr_db,
            c.decoder,
            fmt_k(c.k),
            c.trials,
            c.bit_errors,
            c.bits,
            c.ber(),
            c.avg_s(),
            c.avg_l(),
            c.avg_time_ns()
        );
    }
    out
}

/// Node-count table.
pub fn nodes_csv(cells: &[CellStats]) -> String {
    let mut out = String::new();
    out.push_str(NODES_CSV_HEADER);
    out.push('\n');
    for c in cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            c.snr_db,
            c.decoder,
            fmt_k(c.k),
            c.trials,
            c.dim,
            c.avg_s(),
            c.max_s,
            c.avg_l(),
            c.max_l
        );
    }
    out
}
