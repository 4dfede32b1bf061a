//! Byte-level readers and writers for every on-disk format the toolkit
//! exchanges with external models: binary PNM (P5/P6, maxval 255), grayscale
//! PFM, Middlebury FLO, and JSON Lines sample manifests.
//!
//! Readers operate on complete byte buffers and never look past the declared
//! payload. Writers refuse to emit non-finite floats.

mod flo;
mod header;
mod manifest;
mod pfm;
mod pnm;

pub use flo::{read_flo, write_flo, FLO_MAGIC};
pub use manifest::{read_manifest, read_manifests, write_manifest, SampleKind, SampleManifest};
pub use pfm::{read_pfm, read_pfm_with_endianness, write_pfm, Endianness};
pub use pnm::{mask_from_gray, read_pnm, write_pgm, write_pgm_mask, write_ppm, PnmImage};
