use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::labeler::Annotation;
use crate::materials::TextureMixture;
use crate::sampler::{DatasetPlan, SceneSample};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const ANNOTATIONS_FILE: &str = "annotations.json";
pub const TOOL_NAME: &str = "airforge";

/// One rendered image: the sample that produced it and its labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    #[serde(flatten)]
    pub sample: SceneSample,
    pub image_file: String,
    pub label_file: String,
    pub annotation_count: usize,
    pub annotations: Vec<Annotation>,
    /// Placed objects that produced no label.
    pub dropped: usize,
}

/// Everything needed to reproduce or audit a dataset. Contains no
/// timestamps or host details, so identical configs give identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub width: u32,
    pub height: u32,
    pub plan_summary: String,
    pub plan: DatasetPlan,
    pub mixture: TextureMixture,
    /// Sorted by `image_id`.
    pub records: Vec<ImageRecord>,
    pub complete: bool,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })?;
        serde_json::from_str(&text).map_err(|e| PipelineError::Manifest {
            path: path.to_path_buf(),
            message: format!("line {} column {}: {e}", e.line(), e.column()),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

/// Writes `bytes` beside `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    let io = |source| PipelineError::Io { path: path.to_path_buf(), source };
    std::fs::write(&tmp, bytes).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

/// Human-readable breakdown of the plan arithmetic.
pub fn plan_summary(plan: &DatasetPlan) -> String {
    let mut s = format!(
        "{} model(s) x {} environment(s) x {} texture(s) = {} combinations; \
         {} pose(s) x {} yaw step(s) = {} images per combination; {} images",
        plan.models.len(),
        plan.environments.len(),
        plan.mixture_size,
        plan.combinations(),
        plan.poses_per_combo,
        plan.yaw_steps,
        plan.images_per_combo(),
        plan.target_images,
    );
    if plan.was_rounded() {
        s.push_str(&format!(" (requested {}, rounded up)", plan.requested_images));
    }
    s
}
