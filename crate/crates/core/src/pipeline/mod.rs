//! End-to-end corpus preparation driven by a TOML config.

mod config;
mod mix;
mod report;
mod run;

pub use config::{default_stages, InputSpec, PipelineConfig, Stage, StageConfig};
pub use mix::{build_mix, MixBlock, MixFile, MixManifest, MixPreset, MixSource, DA_MIX_FILE, MIX_MANIFEST, MSA_MIX_FILE};
pub use report::{emit_funnel_report, FunnelReport, StageReport, FUNNEL_JSON, FUNNEL_TEXT, FUNNEL_TIMINGS};
pub use run::{
    bpe_file_name, joint_frequencies, run_pipeline, AUDIT_FILE, BPE_MODEL, CHUNK_SIZE, CLEAN_FILE, DEV_FILE,
    SPLIT_MANIFEST, TRAIN_FILE,
};

/// Reference funnel of the full OPUS MSA collection, in pairs.
pub mod reference {
    pub const OPUS_TOTAL: u64 = 61_000_000;
    pub const OPUS_BAND_REMOVED: u64 = 5_700_000;
    pub const OPUS_FINAL: u64 = 55_200_000;
}
