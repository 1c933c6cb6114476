//! Monte-Carlo MIMO detection harness.

pub mod channel;
pub mod pipeline;
pub mod qam;
pub mod stats;
pub mod sweep;

pub use channel::{mmse_augment, noise_sigma, sample_channel, sample_unit_noise};
pub use pipeline::{detect, prepare, Detection, PreparedSystem, Preprocessing};
pub use qam::{qam_demap, qam_map, Qam};
pub use stats::{compare_rates, wilson, OrderingVerdict, Z_95};
pub use sweep::{
    ber_csv, nodes_csv, run_sweep, run_sweep_paired, run_trial, CellStats, DecoderSpec, MimoConfig,
    TrialRecord, BER_CSV_HEADER, NODES_CSV_HEADER,
};
