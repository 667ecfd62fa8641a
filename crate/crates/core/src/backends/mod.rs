//! The two colorizer roles: caption-guided candidate generation and
//! exemplar-guided propagation, built in or behind the external file protocol.

pub mod external;
pub mod palette;
pub mod propagate;

pub use external::{
    external_candidates, external_propagate, prepare_job, run_builtin_job, run_external_backend, BackendCommand,
    BackendJob, BackendOutput, BackendRole,
};
pub use palette::{caption_rules, palette_colorize, Band, PaletteRule};
pub use propagate::{build_chroma_lut, exemplar_propagate, propagate_chroma, ChromaLut, DEFAULT_ALPHA};
