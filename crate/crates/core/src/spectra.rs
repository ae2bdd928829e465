//! Eigenvalue extraction from Schur forms and cluster planning.
//!
//! Each 1×1 block contributes a real eigenvalue and each 2×2 block a
//! conjugate pair; both are treated as a single point `(re, |im|)` when
//! clustering, so a pair can never be split across layers.

use crate::linalg::{block_eigenvalues, BlockLayout, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnitKind {
    Real,
    Pair,
}

/// Eigenvalue (or conjugate pair) carried by one diagonal Schur block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenUnit {
    pub block: usize,
    pub offset: usize,
    pub re: f64,
    /// Non-negative imaginary part.
    pub im: f64,
    pub kind: UnitKind,
}

impl EigenUnit {
    pub fn size(&self) -> usize {
        match self.kind {
            UnitKind::Real => 1,
            UnitKind::Pair => 2,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("layer count must be positive")]
    ZeroLayers,
    #[error("{requested} layers requested but only {distinct} distinct eigenvalues exist; identical eigenvalues cannot be split")]
    ForcedSplit { requested: usize, distinct: usize },
}

/// Assignment of eigenvalue units to clusters. Cluster `0` holds the
/// eigenvalues with the largest real part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterPlan {
    /// Cluster index of every unit, in unit order.
    pub assignment: Vec<usize>,
    pub n_clusters: usize,
}

impl ClusterPlan {
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&u| self.assignment[u] == cluster)
            .collect()
    }
}

/// Reads the eigenvalues off the diagonal blocks of a quasi-triangular matrix.
pub fn extract_eigenvalues(r: &Matrix, block_sizes: &[usize]) -> Vec<EigenUnit> {
    let layout = BlockLayout::new(block_sizes.to_vec());
    (0..layout.len())
        .map(|b| {
            let off = layout.offsets()[b];
            let size = layout.sizes()[b];
            let [(re, im), _] = block_eigenvalues(r, off, size);
            EigenUnit {
                block: b,
                offset: off,
                re,
                im: im.abs(),
                kind: if size == 1 { UnitKind::Real } else { UnitKind::Pair },
            }
        })
        .collect()
}

fn identical(a: &EigenUnit, b: &EigenUnit) -> bool {
    let mag = a.re.hypot(a.im);
    (a.re - b.re).hypot(a.im - b.im) <= 1e-9 * (1.0 + mag)
}

/// Groups numerically identical eigenvalues. Returns the group of each unit
/// and the representative unit of each group.
fn distinct_groups(units: &[EigenUnit]) -> (Vec<usize>, Vec<usize>) {
    let mut reps: Vec<usize> = Vec::new();
    let mut group = Vec::with_capacity(units.len());
    for (u, unit) in units.iter().enumerate() {
        match reps.iter().position(|&r| identical(&units[r], unit)) {
            Some(g) => group.push(g),
            None => {
                group.push(reps.len());
                reps.push(u);
            }
        }
    }
    (group, reps)
}

/// Lloyd iteration settings.
#[derive(Debug, Clone, Copy)]
pub struct KMeansConfig {
    pub max_iter: usize,
    pub tol: f64,
    pub restarts: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            max_iter: 300,
            tol: 1e-10,
            restarts: 10,
        }
    }
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn nearest(p: [f64; 2], centers: &[[f64; 2]]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, &ctr) in centers.iter().enumerate() {
        let d = dist2(p, ctr);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init(points: &[[f64; 2]], weights: &[f64], k: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let pick = |scores: &[f64], rng: &mut ChaCha8Rng| {
        let total: f64 = scores.iter().sum();
        if total <= 0.0 {
            return None;
        }
        let mut target = rng.random::<f64>() * total;
        for (i, s) in scores.iter().enumerate() {
            if *s <= 0.0 {
                continue;
            }
            if target < *s {
                return Some(i);
            }
            target -= s;
        }
        scores.iter().rposition(|s| *s > 0.0)
    };
    let mut centers = Vec::with_capacity(k);
    let first = pick(weights, rng).unwrap_or(0);
    centers.push(points[first]);
    let mut d2: Vec<f64> = points.iter().map(|&p| dist2(p, points[first])).collect();
    while centers.len() < k {
        let scores: Vec<f64> = d2.iter().zip(weights).map(|(d, w)| d * w).collect();
        let Some(next) = pick(&scores, rng) else { break };
        centers.push(points[next]);
        for (d, &p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, points[next]));
        }
    }
    centers
}

/// Weighted k-means with k-means++ seeding. Returns the assignment of every
/// point and the weighted inertia.
pub fn kmeans(points: &[[f64; 2]], weights: &[f64], k: usize, seed: u64, cfg: KMeansConfig) -> (Vec<usize>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..cfg.restarts.max(1) {
        let mut centers = plus_plus_init(points, weights, k, &mut rng);
        let mut assign = vec![0usize; points.len()];
        for _ in 0..cfg.max_iter {
            for (a, &p) in assign.iter_mut().zip(points) {
                *a = nearest(p, &centers).0;
            }
            // refill clusters that lost all their points
            let mut counts = vec![0usize; k];
            for &a in &assign {
                counts[a] += 1;
            }
            for c in 0..k {
                if c < centers.len() && counts[c] > 0 {
                    continue;
                }
                let far = (0..points.len())
                    .filter(|&i| counts[assign[i]] > 1)
                    .max_by(|&i, &j| {
                        let di = weights[i] * dist2(points[i], centers[assign[i]]);
                        let dj = weights[j] * dist2(points[j], centers[assign[j]]);
                        di.total_cmp(&dj)
                    });
                if let Some(i) = far {
                    counts[assign[i]] -= 1;
                    assign[i] = c;
                    counts[c] = 1;
                    if c < centers.len() {
                        centers[c] = points[i];
                    } else {
                        centers.push(points[i]);
                    }
                }
            }
            let mut sums = vec![[0.0_f64; 3]; k];
            for (i, &a) in assign.iter().enumerate() {
                sums[a][0] += weights[i] * points[i][0];
                sums[a][1] += weights[i] * points[i][1];
                sums[a][2] += weights[i];
            }
            let mut shift = 0.0_f64;
            let mut scale = 0.0_f64;
            for (c, s) in sums.iter().enumerate() {
                if s[2] > 0.0 {
                    let next = [s[0] / s[2], s[1] / s[2]];
                    shift = shift.max(dist2(next, centers[c]).sqrt());
                    centers[c] = next;
                }
                scale = scale.max(centers[c][0].hypot(centers[c][1]));
            }
            if shift <= cfg.tol * (1.0 + scale) {
                break;
            }
        }
        for (a, &p) in assign.iter_mut().zip(points) {
            *a = nearest(p, &centers).0;
        }
        let inertia: f64 = assign
            .iter()
            .enumerate()
            .map(|(i, &a)| weights[i] * dist2(points[i], centers[a]))
            .sum();
        let used: std::collections::BTreeSet<usize> = assign.iter().copied().collect();
        if used.len() < k.min(points.len()) {
            continue;
        }
        if best.as_ref().is_none_or(|b| inertia < b.1) {
            best = Some((assign, inertia));
        }
    }
    best.unwrap_or_else(|| ((0..points.len()).map(|i| i.min(k - 1)).collect(), f64::INFINITY))
}

/// Partitions the eigenvalue units into `layers` clusters.
///
/// Identical eigenvalues always share a cluster; asking for more clusters
/// than there are distinct eigenvalues is an error.
pub fn plan_clusters(units: &[EigenUnit], layers: usize, seed: u64) -> Result<ClusterPlan, ClusterError> {
    if layers == 0 {
        return Err(ClusterError::ZeroLayers);
    }
    let (group, reps) = distinct_groups(units);
    if layers > reps.len() {
        return Err(ClusterError::ForcedSplit {
            requested: layers,
            distinct: reps.len(),
        });
    }
    let points: Vec<[f64; 2]> = reps.iter().map(|&r| [units[r].re, units[r].im]).collect();
    let mut weights = vec![0.0; reps.len()];
    for &g in &group {
        weights[g] += 1.0;
    }
    let (raw, _) = if layers == reps.len() {
        ((0..reps.len()).collect(), 0.0)
    } else {
        kmeans(&points, &weights, layers, seed, KMeansConfig::default())
    };
    // order clusters by descending maximal real part, ties by first unit
    let mut key = vec![(f64::NEG_INFINITY, usize::MAX); layers];
    for (u, unit) in units.iter().enumerate() {
        let c = raw[group[u]];
        key[c].0 = key[c].0.max(unit.re);
        key[c].1 = key[c].1.min(u);
    }
    let mut order: Vec<usize> = (0..layers).collect();
    order.sort_by(|&a, &b| key[b].0.total_cmp(&key[a].0).then(key[a].1.cmp(&key[b].1)));
    let mut rank = vec![0; layers];
    for (pos, &c) in order.iter().enumerate() {
        rank[c] = pos;
    }
    let assignment = units.iter().enumerate().map(|(u, _)| rank[raw[group[u]]]).collect();
    Ok(ClusterPlan {
        assignment,
        n_clusters: layers,
    })
}

/// Target block order for the Schur reordering and the per-cluster layout.
///
/// Within a cluster real eigenvalues come first, then pairs; each group is
/// sorted by ascending `|re|`, then `|im|`, then block index. Identical
/// eigenvalues keep their original relative order.
pub fn sequence_blocks(units: &[EigenUnit], plan: &ClusterPlan) -> (Vec<usize>, BlockLayout) {
    let (group, reps) = distinct_groups(units);
    let mut target = Vec::with_capacity(units.len());
    let mut sizes = Vec::with_capacity(plan.n_clusters);
    for c in 0..plan.n_clusters {
        let mut members = plan.members(c);
        members.sort_by(|&a, &b| {
            let ra = &units[reps[group[a]]];
            let rb = &units[reps[group[b]]];
            let kind = |u: &EigenUnit| u.kind == UnitKind::Pair;
            kind(&units[a])
                .cmp(&kind(&units[b]))
                .then(ra.re.abs().total_cmp(&rb.re.abs()))
                .then(ra.im.total_cmp(&rb.im))
                .then(units[a].block.cmp(&units[b].block))
        });
        sizes.push(members.iter().map(|&u| units[u].size()).sum());
        target.extend(members.iter().map(|&u| units[u].block));
    }
    (target, BlockLayout::new(sizes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(block: usize, re: f64) -> EigenUnit {
        EigenUnit {
            block,
            offset: block,
            re,
            im: 0.0,
            kind: UnitKind::Real,
        }
    }

    #[test]
    fn separated_reals() {
        let units = vec![real(0, -1.0), real(1, -1.1), real(2, -10.0), real(3, -10.2)];
        let plan = plan_clusters(&units, 2, 7).unwrap();
        assert_eq!(plan.assignment, vec![0, 0, 1, 1]);
        let (target, layout) = sequence_blocks(&units, &plan);
        assert_eq!(target, vec![0, 1, 2, 3]);
        assert_eq!(layout.sizes(), &[2, 2]);
    }

    #[test]
    fn identical_eigenvalues_cannot_split() {
        let units = vec![real(0, -1.0), real(1, -1.0)];
        assert_eq!(
            plan_clusters(&units, 2, 0),
            Err(ClusterError::ForcedSplit { requested: 2, distinct: 1 })
        );
    }

    #[test]
    fn reals_precede_pairs() {
        let pair = EigenUnit {
            block: 0,
            offset: 0,
            re: -1.0,
            im: 0.5,
            kind: UnitKind::Pair,
        };
        let units = vec![pair, real(1, -1.2)];
        let plan = plan_clusters(&units, 1, 0).unwrap();
        let (target, layout) = sequence_blocks(&units, &plan);
        assert_eq!(target, vec![1, 0]);
        assert_eq!(layout.sizes(), &[3]);
    }
}
