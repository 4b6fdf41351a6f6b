//! Procedural synthetic aerial-image dataset engine for UAV detection.
//!
//! Renders parametric multirotor models with randomized, deliberately
//! atypical textures under HDR sky lighting, labels every object with a tight
//! bounding box, and ships the evaluation tools used on the result
//! (AP/mAP, anchor clustering, illumination stress perturbation).

pub mod cli;
pub mod environment;
pub mod evalkit;
pub mod image;
pub mod labeler;
pub mod materials;
pub mod math;
pub mod noise;
pub mod pipeline;
pub mod renderer;
pub mod rng;
pub mod sampler;
pub mod scene;
