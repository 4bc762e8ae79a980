//! Core algorithms for crop/weed plant classification.
//!
//! Everything in this crate is pure computation over in-memory data and builds
//! without `std` (only `alloc` is required). File formats, image decoding and
//! the command line live in the `weednet` companion crate.
//!
//! Pipeline stages:
//!
//! 1. [`imaging`]: HSV vegetation masking, morphological opening, connected
//!    components and segment extraction from field photos.
//! 2. [`dataset`]: taxonomy, weed re-sampling toward a 1:1 weed:crop ratio,
//!    stratified splits.
//! 3. [`nn`]: small CNN families (Vanilla, Conv, Dilated) with hand-written
//!    forward/backward passes and momentum SGD.
//! 4. [`objectives`]: exact-match and crop-safe indicators, their training
//!    surrogates, CKR / Recall_crop metrics and the error taxonomy.
//! 5. [`search`]: multi-dataset architecture selection over a bounded
//!    genotype space.
//! 6. [`ensemble`]: consensus / majority-crop voting under per-crop budgets.
#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod dataset;
pub mod ensemble;
mod error;
pub mod imaging;
pub mod nn;
pub mod objectives;
pub mod search;
mod util;

pub use error::{Error, Result};
pub use util::{fnv1a, mix_seed};
