use std::collections::BTreeSet;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::rng::Stream;

pub const MAX_ITERATIONS: usize = 300;
/// Independent k-means++ seedings per call; the lowest objective wins.
pub const RESTARTS: u64 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorDistance {
    /// `1 − IoU` of the two boxes sharing a corner.
    Iou,
    /// Squared Euclidean distance in `(w, h)`.
    Euclidean,
}

impl FromStr for AnchorDistance {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "iou" => Ok(AnchorDistance::Iou),
            "euclidean" => Ok(AnchorDistance::Euclidean),
            other => Err(format!("unknown anchor distance `{other}` (iou, euclidean)")),
        }
    }
}

impl AnchorDistance {
    pub fn eval(self, a: (f64, f64), b: (f64, f64)) -> f64 {
        match self {
            AnchorDistance::Euclidean => {
                let (dw, dh) = (a.0 - b.0, a.1 - b.1);
                dw * dw + dh * dh
            }
            AnchorDistance::Iou => {
                let inter = a.0.min(b.0) * a.1.min(b.1);
                let union = a.0 * a.1 + b.0 * b.1 - inter;
                if union <= 0.0 {
                    0.0
                } else {
                    1.0 - inter / union
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorSet {
    pub centroids: Vec<(f64, f64)>,
    /// Centroid index of every input box.
    pub assignment: Vec<usize>,
    /// Sum of distances from each box to its centroid.
    pub objective: f64,
    /// Objective after seeding and after each Lloyd iteration.
    pub history: Vec<f64>,
    pub iterations: usize,
}

impl AnchorSet {
    /// Centroids sorted by area, smallest first.
    pub fn sorted_by_area(&self) -> Vec<(f64, f64)> {
        let mut c = self.centroids.clone();
        c.sort_by(|a, b| (a.0 * a.1).total_cmp(&(b.0 * b.1)).then(a.0.total_cmp(&b.0)));
        c
    }
}

fn nearest(distance: AnchorDistance, p: (f64, f64), centroids: &[(f64, f64)]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, &c) in centroids.iter().enumerate() {
        let d = distance.eval(p, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn cluster_cost(distance: AnchorDistance, boxes: &[(f64, f64)], assignment: &[usize], k: usize, c: (f64, f64)) -> f64 {
    boxes.iter().zip(assignment).filter(|(_, &a)| a == k).map(|(&b, _)| distance.eval(b, c)).sum()
}

/// Best of [`RESTARTS`] runs of k-means++ seeding followed by Lloyd
/// iterations until the assignment stops changing or [`MAX_ITERATIONS`] is
/// reached. A centroid moves to its cluster mean only when that does not
/// raise the cluster's cost, which keeps the objective non-increasing for the
/// IoU distance as well.
pub fn cluster_anchors(boxes: &[(f64, f64)], k: usize, distance: AnchorDistance, seed: u64) -> Result<AnchorSet, EvalError> {
    if boxes.is_empty() {
        return Err(EvalError::NoBoxes);
    }
    if let Some(i) = boxes.iter().position(|b| !(b.0.is_finite() && b.1.is_finite() && b.0 > 0.0 && b.1 > 0.0)) {
        return Err(EvalError::BadBox(i));
    }
    let distinct: BTreeSet<(u64, u64)> = boxes.iter().map(|b| (b.0.to_bits(), b.1.to_bits())).collect();
    if k == 0 || k > distinct.len() {
        return Err(EvalError::TooFewBoxes { k, distinct: distinct.len() });
    }
    let mut best: Option<AnchorSet> = None;
    for restart in 0..RESTARTS {
        let run = lloyd(boxes, k, distance, Stream::from_parts(&[0xA4C4_0001, seed, boxes.len() as u64, k as u64, restart]));
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn lloyd(boxes: &[(f64, f64)], k: usize, distance: AnchorDistance, mut rng: Stream) -> AnchorSet {
    let mut centroids = vec![boxes[rng.below(boxes.len() as u64) as usize]];
    let mut d2: Vec<f64> = boxes.iter().map(|&b| distance.eval(b, centroids[0]).powi(2)).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.next_f64() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    chosen = Some(i);
                    break;
                }
            }
            chosen.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).expect("positive total"))
        } else {
            // Remaining boxes coincide with centroids under this distance;
            // fall back to any box not yet chosen.
            (0..boxes.len()).find(|&i| !centroids.contains(&boxes[i])).expect("k <= distinct")
        };
        centroids.push(boxes[pick]);
        for (w, &b) in d2.iter_mut().zip(boxes) {
            *w = w.min(distance.eval(b, boxes[pick]).powi(2));
        }
    }

    let assign = |centroids: &[(f64, f64)]| -> (Vec<usize>, f64) {
        let mut total = 0.0;
        let a = boxes
            .iter()
            .map(|&b| {
                let (i, d) = nearest(distance, b, centroids);
                total += d;
                i
            })
            .collect();
        (a, total)
    };
    let (mut assignment, mut objective) = assign(&centroids);
    let mut history = vec![objective];
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        for (c, centroid) in centroids.iter_mut().enumerate() {
            let (mut sw, mut sh, mut n) = (0.0, 0.0, 0usize);
            for (b, &a) in boxes.iter().zip(&assignment) {
                if a == c {
                    sw += b.0;
                    sh += b.1;
                    n += 1;
                }
            }
            if n == 0 {
                continue;
            }
            let mean = (sw / n as f64, sh / n as f64);
            if cluster_cost(distance, boxes, &assignment, c, mean) <= cluster_cost(distance, boxes, &assignment, c, *centroid) {
                *centroid = mean;
            }
        }
        let (next, obj) = assign(&centroids);
        let changed = next != assignment;
        assignment = next;
        // Reassignment to the nearest centroid can only lower each term; the
        // clamp absorbs last-bit rounding in the summation.
        objective = obj.min(objective);
        history.push(objective);
        if !changed {
            break;
        }
    }
    AnchorSet { centroids, assignment, objective, history, iterations }
}
