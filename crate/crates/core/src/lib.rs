//! Soft-boundary numerics for depth refinement and view synthesis.
//!
//! The crate turns image-matting data into training pairs for depth
//! refinement and view synthesis, applies gated-residual refinement, forward
//! warps images through disparity, flow or full pinhole reprojection, fills
//! and fuses the results, and scores everything with pixel, boundary and
//! zero-shot depth metrics. Learned components (depth, flow, matting,
//! inpainting networks) stay outside: they exchange data with this crate as
//! PFM / PNM / FLO files, see [`mapio`].
//!
//! Runnable walkthroughs live in `examples/`:
//!
//! ```bash
//! cargo run -p softedge --example depth_pair_curation
//! cargo run -p softedge --example stereo_conversion
//! ```

pub mod cli;
pub mod curation;
pub mod error;
pub mod imagecore;
pub mod losses;
pub mod mapio;
pub mod metrics;
pub mod paintfuse;
pub mod pipeline;
pub mod refine;
pub mod warp;

pub use error::{Error, FormatError, Result};
pub use imagecore::{
    BinaryMask, CameraIntrinsics, DepthConvention, FlowField, ImageRgb, Planar, RigidPose,
    ScalarMap,
};
