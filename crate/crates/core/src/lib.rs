//! Synaptic partner detection from directed long-range voxel edges.
//!
//! Each voxel of an anisotropic EM volume owns a fixed set of directed edges
//! (offsets in nm). A partner pair is represented by the edges that start in
//! the ball around the presynaptic point and end in the ball around the
//! postsynaptic point, each ball clipped to its neuron segment.
//!
//! The crate covers the pipeline around the edge classifier:
//!
//! - [`offsets`] and [`coverage`]: offset sets and the coverage grid search.
//! - [`regions`] and [`encode`]: synaptic regions and ground-truth edge labels.
//! - [`extract`]: candidate synapses from edge scores.
//! - [`eval`] and [`hungarian`]: matching-based precision/recall/f-score.
//! - [`connectome`]: connectivity matrices and their differences.
//! - [`synth`] and [`noise`]: seeded synthetic volumes and simulated scores.
//! - [`io`]: the HDF5 container and text formats.

pub mod annotation;
pub mod components;
pub mod connectome;
pub mod coverage;
pub mod encode;
pub mod error;
pub mod eval;
pub mod extract;
pub mod geometry;
pub mod hungarian;
pub mod io;
pub mod noise;
pub mod offsets;
pub mod regions;
pub mod synth;
pub mod volume;

pub use annotation::{PointAnnotationSet, SynapticPartnerAnnotation};
pub use components::Connectivity;
pub use connectome::{build_matrix, diff_matrix, ConnectivityMatrix};
pub use coverage::{coverage, grid_search_offsets, is_covered, CoverageReport, GridSearchResult};
pub use encode::{encode_labels, EdgeScoreVolume};
pub use error::{Error, Result};
pub use eval::{aggregate_reports, evaluate, feasible, EvalReport, MatchingConstraint, PartnerPair, ReportSummary};
pub use extract::{extract, CandidateSynapse, ExtractionParams};
pub use geometry::{anisotropic_distance_nm, Point3, VolumeGeometry, Voxel};
pub use hungarian::{hungarian_assign, Assignment, CostMatrix};
pub use noise::{labels_to_oracle_scores, NoiseSpec};
pub use offsets::{paper_offset_set, OffsetSet};
pub use regions::expand_region;
pub use synth::{end_to_end_roundtrip, generate, SynthSpec};
pub use volume::{Label, SegmentationVolume};

/// Version of the on-disk formats written by this crate.
pub const FORMAT_VERSION: &str = "1";
