//! Sweep configuration files (TOML) and the decoder list syntax.

use std::path::Path;

use anyhow::{bail, Context, Result};
use lgsd_core::decoders::{DecodeOptions, DecoderKind};
use lgsd_core::gaussian::SigmaPolicy;
use lgsd_core::mimo::DecoderSpec;
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub experiment: Experiment,
    #[serde(default)]
    pub preprocessing: PreprocessingSection,
    #[serde(default)]
    pub decoders: DecodersSection,
    #[serde(default)]
    pub nodes: NodesSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub n_tx: Option<usize>,
    pub qam: Option<usize>,
    pub snr_db: Option<Vec<f64>>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessingSection {
    pub lll: Option<bool>,
    pub mmse: Option<bool>,
    pub lll_delta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodersSection {
    /// Entries such as `babai`, `ml`, `esd:10`, `rsd:100`, `klein:50`.
    pub list: Option<Vec<String>>,
    pub sigma: Option<f64>,
    pub sigma_policy: Option<String>,
    pub j_max: Option<usize>,
    pub esd_protection: Option<bool>,
    pub rsd_protection: Option<bool>,
    pub node_cap: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodesSection {
    pub k_grid: Option<Vec<f64>>,
    pub decoder: Option<String>,
    pub snr_db: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub out: Option<String>,
    pub timing: Option<bool>,
}

pub fn load(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Shared decoder settings applied to every entry of a decoder list.
#[derive(Debug, Clone, Copy)]
pub struct DecoderSettings {
    pub sigma: SigmaPolicy,
    pub j_max: usize,
    pub esd_protection: bool,
    pub rsd_protection: bool,
    pub node_cap: u64,
}

pub fn sigma_policy(sigma: Option<f64>, policy: Option<&str>) -> Result<SigmaPolicy> {
    match (sigma, policy) {
        (Some(_), Some(_)) => bail!("give either a fixed sigma or a sigma policy, not both"),
        (Some(s), None) if s > 0.0 && s.is_finite() => Ok(SigmaPolicy::Fixed(s)),
        (Some(s), None) => bail!("sigma must be positive, got {s}"),
        (None, None) | (None, Some("paper")) => Ok(SigmaPolicy::PaperDefault),
        (None, Some(other)) => bail!("unknown sigma policy {other:?} (expected \"paper\")"),
    }
}

/// Parse `name[:value]`.
pub fn parse_decoder(entry: &str, settings: &DecoderSettings) -> Result<DecoderSpec> {
    let (name, arg) = match entry.split_once(':') {
        Some((n, a)) => (n.trim(), Some(a.trim())),
        None => (entry.trim(), None),
    };
    let number = |what: &str| -> Result<f64> {
        let a = arg.with_context(|| format!("decoder {name:?} needs {what}, e.g. {name}:10"))?;
        a.parse::<f64>().with_context(|| format!("bad {what} {a:?} for decoder {name:?}"))
    };
    let mut spec = match name {
        "babai" => DecoderSpec::babai(),
        "ml" => DecoderSpec::ml(),
        "esd" => {
            let mut s = DecoderSpec::esd(number("an initial pruning size")?);
            s.options.candidate_protection = settings.esd_protection;
            s
        }
        "rsd" => {
            let mut s = DecoderSpec::rsd(number("an initial pruning size")?);
            s.options.candidate_protection = settings.rsd_protection;
            s
        }
        "klein" => {
            let samples = number("a sample count")?;
            if samples < 1.0 || samples.fract() != 0.0 {
                bail!("klein sample count must be a positive integer, got {samples}");
            }
            DecoderSpec {
                kind: DecoderKind::Klein { samples: samples as usize, seed: 0 },
                options: DecodeOptions::rsd(1.0),
            }
        }
        other => bail!("unknown decoder {other:?} (expected babai, ml, esd:K, rsd:K or klein:N)"),
    };
    if arg.is_some() && matches!(name, "babai" | "ml") {
        bail!("decoder {name:?} takes no argument");
    }
    spec.options.sigma_policy = settings.sigma;
    spec.options.j_max = settings.j_max;
    spec.options.node_cap = settings.node_cap;
    spec.options.validate()?;
    Ok(spec)
}
