//! Browser demo bindings. Every export returns a JSON string so the page
//! needs no generated type glue, and the same functions are testable natively.

use lgsd_core::decoders::{babai_sic, equivalent_radius, esd, rsd, DecodeOptions};
use lgsd_core::gaussian::{default_sigma, klein_layer_pmf, rho_z, LayerContext, DEFAULT_RHO_TOL};
use lgsd_core::lattice::{covering_ranges, qr_decompose, LatticeBasis};
use lgsd_core::mimo::{run_sweep, DecoderSpec, MimoConfig};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Most lattice points returned for plotting.
const MAX_PLOT_POINTS: usize = 4_000;
const MAX_DEMO_TRIALS: u64 = 20_000;

#[derive(Serialize)]
struct Point {
    x: Vec<i64>,
    /// Position `Bx` in the plane.
    at: [f64; 2],
    dist: f64,
}

#[derive(Serialize)]
struct TraceNode {
    layer: usize,
    assignment: Vec<i64>,
    pruning_size: f64,
}

#[derive(Serialize)]
struct Search2d {
    decoder: String,
    sigma: f64,
    /// Sphere radius equivalent to `k` at this sigma.
    radius: f64,
    babai: Vec<i64>,
    best: Option<Vec<i64>>,
    best_dist: Option<f64>,
    candidates: Vec<Point>,
    protected: Vec<bool>,
    visited_nodes: u64,
    probe_count: u64,
    trace: Vec<TraceNode>,
    lattice: Vec<Point>,
}

#[derive(Serialize)]
struct ErrorReply {
    error: String,
}

fn reply<T: Serialize>(r: Result<T, String>) -> String {
    let out = match r {
        Ok(v) => serde_json::to_string(&v),
        Err(error) => serde_json::to_string(&ErrorReply { error }),
    };
    out.unwrap_or_else(|e| format!("{{\"error\":\"{e}\"}}"))
}

/// Run `esd` or `rsd` on the 2-D lattice with columns `(b11, b21)` and
/// `(b12, b22)` and target `(y1, y2)`, at the default sigma.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn search_2d(b11: f64, b12: f64, b21: f64, b22: f64, y1: f64, y2: f64, k: f64, decoder: &str, protection: bool) -> String {
    reply(search_2d_inner([[b11, b12], [b21, b22]], [y1, y2], k, decoder, protection))
}

fn search_2d_inner(b: [[f64; 2]; 2], target: [f64; 2], k: f64, decoder: &str, protection: bool) -> Result<Search2d, String> {
    let m = DMatrix::from_row_slice(2, 2, &[b[0][0], b[0][1], b[1][0], b[1][1]]);
    let basis = LatticeBasis::new(m.clone()).map_err(|e| e.to_string())?;
    let qr = qr_decompose(&basis).map_err(|e| e.to_string())?;
    let c = DVector::from_row_slice(&target);
    let y = qr.project(&c).map_err(|e| e.to_string())?;
    let opts = match decoder {
        "esd" => DecodeOptions::esd(k),
        "rsd" => DecodeOptions::rsd(k),
        other => return Err(format!("unknown decoder {other:?}")),
    }
    .with_protection(protection)
    .with_trace(true);
    opts.validate().map_err(|e| e.to_string())?;
    let out = if decoder == "esd" { esd(&qr, &y, &opts) } else { rsd(&qr, &y, &opts) }.map_err(|e| e.to_string())?;
    let sigma = default_sigma(&qr);

    let place = |x: &[i64]| -> Point {
        let p = &m * DVector::from_iterator(2, x.iter().map(|&v| v as f64));
        Point { x: x.to_vec(), at: [p[0], p[1]], dist: (&p - &c).norm() }
    };
    // Enough of the lattice to fill a view a few radii around the target.
    let view = 3.0 * equivalent_radius(sigma, k.max(2.0)) + 2.0 * m.amax();
    let ranges = covering_ranges(&qr, &y, view).map_err(|e| e.to_string())?;
    let mut lattice = Vec::new();
    'outer: for a in ranges[0].0..=ranges[0].1 {
        for bb in ranges[1].0..=ranges[1].1 {
            if lattice.len() == MAX_PLOT_POINTS {
                break 'outer;
            }
            lattice.push(place(&[a, bb]));
        }
    }

    Ok(Search2d {
        decoder: decoder.to_string(),
        sigma,
        radius: equivalent_radius(sigma, k),
        babai: babai_sic(&qr, &y),
        best: out.best.clone(),
        best_dist: out.best.as_ref().map(|_| out.best_dist),
        candidates: out.candidates.iter().map(|cand| place(&cand.x)).collect(),
        protected: out.candidates.iter().map(|cand| cand.protected).collect(),
        visited_nodes: out.visited_nodes,
        probe_count: out.probe_count,
        trace: out
            .trace
            .iter()
            .map(|n| TraceNode { layer: n.layer, assignment: n.assignment.clone(), pruning_size: n.pruning_size })
            .collect(),
        lattice,
    })
}

#[derive(Serialize)]
struct LayerPmf {
    sigma_i: f64,
    mass: f64,
    /// `(integer, probability)` closest first.
    children: Vec<(i64, f64)>,
    /// Children that survive a parent pruning size `k` (`k p >= 1`).
    survivors: Vec<i64>,
}

/// One-dimensional Klein distribution at `center` with deviation `sigma_i`.
#[wasm_bindgen]
pub fn layer_pmf(center: f64, sigma_i: f64, j_max: usize, k: f64) -> String {
    reply(layer_pmf_inner(center, sigma_i, j_max, k))
}

fn layer_pmf_inner(center: f64, sigma_i: f64, j_max: usize, k: f64) -> Result<LayerPmf, String> {
    if !(sigma_i > 0.0 && sigma_i.is_finite()) || !center.is_finite() {
        return Err("center must be finite and sigma_i positive".into());
    }
    if !(1..=50).contains(&j_max) {
        return Err("j_max must be between 1 and 50".into());
    }
    let ctx = LayerContext::with_center(1, center, sigma_i);
    let children = klein_layer_pmf(&ctx, j_max);
    let survivors = children.iter().filter(|(_, p)| k * p >= 1.0).map(|c| c.0).collect();
    Ok(LayerPmf { sigma_i, mass: rho_z(&ctx, DEFAULT_RHO_TOL), children, survivors })
}

#[derive(Serialize)]
struct NodeRow {
    k: f64,
    avg_s: f64,
    max_s: u64,
    avg_l: f64,
    bound: f64,
    ber: f64,
}

/// Average node and candidate counts against K for a small MIMO system
/// with LLL and MMSE preprocessing. `k_grid` is comma-separated.
#[wasm_bindgen]
pub fn node_curve(n_tx: usize, qam: usize, snr_db: f64, trials: u32, seed: u32, decoder: &str, k_grid: &str) -> String {
    reply(node_curve_inner(n_tx, qam, snr_db, u64::from(trials), u64::from(seed), decoder, k_grid))
}

fn node_curve_inner(
    n_tx: usize,
    qam: usize,
    snr_db: f64,
    trials: u64,
    seed: u64,
    decoder: &str,
    k_grid: &str,
) -> Result<Vec<NodeRow>, String> {
    if !(1..=8).contains(&n_tx) || trials > MAX_DEMO_TRIALS {
        return Err(format!("demo limits: 1 <= n_tx <= 8, trials <= {MAX_DEMO_TRIALS}"));
    }
    let ks = k_grid
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| format!("bad K value {s:?}")))
        .collect::<Result<Vec<f64>, String>>()?;
    let decoders = ks
        .iter()
        .map(|&k| match decoder {
            "esd" => Ok(DecoderSpec::esd(k)),
            "rsd" => Ok(DecoderSpec::rsd(k)),
            other => Err(format!("unknown decoder {other:?}")),
        })
        .collect::<Result<Vec<_>, String>>()?;
    let cfg = MimoConfig {
        n_tx,
        qam_order: qam,
        snr_db_grid: vec![snr_db],
        trials,
        seed,
        lll: true,
        mmse: true,
        lll_delta: 0.75,
        decoders,
        timing: false,
    };
    let cells = run_sweep(&cfg).map_err(|e| e.to_string())?;
    Ok(cells
        .iter()
        .map(|c| NodeRow {
            k: c.k.unwrap_or(f64::NAN),
            avg_s: c.avg_s(),
            max_s: c.max_s,
            avg_l: c.avg_l(),
            bound: c.dim as f64 * c.k.unwrap_or(f64::NAN),
            ber: c.ber(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn search_on_identity_lattice() {
        let v: Value = serde_json::from_str(&search_2d(1.0, 0.0, 0.0, 1.0, 0.2, -0.3, 10.0, "rsd", true)).unwrap();
        assert_eq!(v["best"], serde_json::json!([0, 0]));
        assert_eq!(v["babai"], serde_json::json!([0, 0]));
        assert!(v["visited_nodes"].as_u64().unwrap() <= 20);
        assert!(v["lattice"].as_array().unwrap().len() > 4);
        assert_eq!(v["trace"].as_array().unwrap().len() as u64, v["visited_nodes"].as_u64().unwrap());
    }

    #[test]
    fn search_reports_errors() {
        let v: Value = serde_json::from_str(&search_2d(1.0, 2.0, 2.0, 4.0, 0.0, 0.0, 10.0, "esd", false)).unwrap();
        assert!(v["error"].is_string());
        let v: Value = serde_json::from_str(&search_2d(1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 10.0, "viterbi", false)).unwrap();
        assert!(v["error"].is_string());
    }

    #[test]
    fn pmf_at_integer_centre() {
        let s = 1.0 / (2.0 * std::f64::consts::PI.sqrt());
        let v: Value = serde_json::from_str(&layer_pmf(0.0, s, 3, 10.0)).unwrap();
        let p0 = v["children"][0][1].as_f64().unwrap();
        assert!((p0 - 0.99628).abs() < 1e-5);
        assert_eq!(v["survivors"], serde_json::json!([0]));
        assert!(serde_json::from_str::<Value>(&layer_pmf(0.0, -1.0, 3, 10.0)).unwrap()["error"].is_string());
    }

    #[test]
    fn node_curve_respects_bound() {
        let rows: Value = serde_json::from_str(&node_curve(2, 16, 12.0, 200, 1, "rsd", "1, 10, 100")).unwrap();
        let rows = rows.as_array().unwrap();
        assert_eq!(rows.len(), 3);
        for r in rows {
            assert!(r["max_s"].as_f64().unwrap() <= r["bound"].as_f64().unwrap());
        }
        assert_eq!(rows[0]["avg_l"].as_f64(), Some(1.0));
    }
}
