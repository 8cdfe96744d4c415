//! Weierstrass elliptic positional encoding (WePE).
//!
//! Maps 2D patch-grid coordinates onto the complex plane and encodes each
//! position through the Weierstrass ℘-function and its derivative, evaluated
//! by truncated modulus-ordered lattice summation. The crate covers the full
//! pipeline: the period lattice and its enumeration ([`lattice`]), ℘/℘′
//! evaluation with error bounds and identity checks ([`mod@wp`]), the
//! four-channel tanh-stabilized encoder with linear projection ([`encoder`]),
//! the bounded fine-tuning surrogate field ([`surrogate`]), lookup-table
//! acceleration with a defined binary format ([`lut`]), and distance-decay /
//! sensitivity analyses ([`analysis`]).

pub mod analysis;
pub mod config;
pub mod encoder;
pub mod lattice;
pub mod lut;
pub mod surrogate;
pub mod util;
pub mod verify;
pub mod wp;

pub use num_complex::Complex64;

pub use analysis::{
    cosine_similarity, dissimilarity_correlation, distance_decay_report,
    distance_decay_report_fused, feature_stats, local_attenuation_check, AttenuationReport,
    DecayReport, FeatureStats,
};
pub use config::{RunConfig, RunMode};
pub use encoder::{
    encode_grid, map_to_complex, normalize_coords, project, raw_features, stabilize,
    EncoderConfig, Encodings, FeatureField, FeatureVec4, GridEncoder, ProjectionSpec,
};
pub use lattice::{
    enumerate_sorted_lattice, lattice_invariants, nearest_lattice_distance, reduce_to_cell,
    LatticeParams, LEMNISCATIC_OMEGA1,
};
pub use lut::{error_scan, ConfigSnapshot, ErrorScan, Lut};
pub use surrogate::{
    ft_features, ft_map, hybrid_blend, project_finetune, surrogate_deriv, surrogate_field,
    SurrogateConfig,
};
pub use wp::{
    check_differential_eq, relative_wp, relative_wp_with_floor, truncation_bound, wp, wp_addition,
    wp_laurent, wp_prime, WpEvaluator, WpValue,
};
