//! Feature-match filtering with grid-based motion statistics (GMS) and a
//! confidence-prioritized RANSAC.
//!
//! The pipeline runs in four stages:
//!
//! ```text
//! Image A, Image B
//!     │
//!     ├─→ features::extract      FAST corners, intensity-centroid angle, rotated BRIEF
//!     │
//!     ├─→ matcher::match_bruteforce   nearest neighbour under Hamming distance
//!     │
//!     ├─→ gms::gms_filter        neighbourhood support count = confidence
//!     │
//!     └─→ robust::ransac         minimal samples drawn from the high-confidence
//!                                group first, widened to all matches if needed
//! ```
//!
//! [`bench`] wraps the pipeline in a reproducible experiment harness (preset
//! sweeps, grouping-ratio sweeps, method comparison) writing CSV or JSON lines.
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod bench;
pub mod features;
pub mod geometry;
pub mod gms;
pub mod imageio;
pub mod matcher;
pub mod metrics;
pub mod robust;

pub use features::{Descriptor, FeatureSet, Keypoint};
pub use gms::{GridShift, GridSpec, GmsConfig, ScoredMatch};
pub use imageio::{GroundTruth, Image};
pub use matcher::Match;
pub use robust::{Candidate, Model, ModelKind, RansacConfig, SamplingMode};

/// 2-D point in pixel coordinates.
pub type Point = nalgebra::Point2<f64>;
