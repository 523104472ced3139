use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{FeatureMatrix, Result, UnitSequence, UnitsError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KmeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Stop once the relative inertia change falls below this.
    pub tol: f64,
}

impl Default for KmeansConfig {
    fn default() -> Self {
        Self {
            k: 1000,
            seed: 0,
            max_iters: 100,
            tol: 1e-6,
        }
    }
}

/// `k` centroids of dimension `dim`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub k: usize,
    pub dim: usize,
    pub seed: u64,
    centroids: Vec<f64>,
    /// Final training objective; not stored in codebook files.
    pub inertia: Option<f64>,
}

impl Codebook {
    pub fn new(k: usize, dim: usize, seed: u64, centroids: Vec<f64>, inertia: Option<f64>) -> Result<Self> {
        if k == 0 || dim == 0 {
            return Err(UnitsError::InvalidParameter(format!("codebook {k} x {dim}")));
        }
        if centroids.len() != k * dim {
            return Err(UnitsError::DimensionMismatch {
                expected: k * dim,
                found: centroids.len(),
            });
        }
        if let Some(i) = centroids.iter().position(|v| !v.is_finite()) {
            return Err(UnitsError::NonFinite(i));
        }
        Ok(Self {
            k,
            dim,
            seed,
            centroids,
            inertia,
        })
    }

    pub fn centroid(&self, id: usize) -> &[f64] {
        &self.centroids[id * self.dim..(id + 1) * self.dim]
    }

    pub fn centroids(&self) -> &[f64] {
        &self.centroids
    }

    /// Nearest centroid id and its squared distance; ties go to the lowest id.
    pub fn nearest(&self, row: &[f64]) -> (u32, f64) {
        let mut best = (0, f64::INFINITY);
        for (id, c) in self.centroids.chunks_exact(self.dim).enumerate() {
            let d = squared_distance(row, c);
            if d < best.1 {
                best = (id as u32, d);
            }
        }
        best
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Training result with the per-iteration objective.
#[derive(Debug, Clone)]
pub struct KmeansTrace {
    pub codebook: Codebook,
    /// Inertia after the initial assignment, then after each Lloyd iteration.
    pub inertia_history: Vec<f64>,
    pub repaired_clusters: usize,
}

pub fn train_kmeans(features: &FeatureMatrix, cfg: &KmeansConfig) -> Result<Codebook> {
    Ok(train_kmeans_rows(features.values(), features.dim, cfg)?.codebook)
}

/// k-means++ seeding followed by Lloyd iterations over row-major `data`.
pub fn train_kmeans_rows(data: &[f64], dim: usize, cfg: &KmeansConfig) -> Result<KmeansTrace> {
    if dim == 0 || data.len() % dim != 0 {
        return Err(UnitsError::DimensionMismatch {
            expected: dim,
            found: data.len(),
        });
    }
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(UnitsError::NonFinite(i));
    }
    let n = data.len() / dim;
    if cfg.k == 0 {
        return Err(UnitsError::InvalidParameter("k = 0".into()));
    }
    if n < cfg.k {
        return Err(UnitsError::TooFewRows { n, k: cfg.k });
    }
    let rows: Vec<&[f64]> = data.chunks_exact(dim).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centroids = kmeans_plus_plus(&rows, cfg.k, &mut rng);

    let mut assignment = assign(&rows, &centroids, dim);
    let mut history = vec![inertia(&assignment)];
    let mut repaired = 0;
    for _ in 0..cfg.max_iters {
        repaired += update(&rows, &assignment, &mut centroids, dim);
        let next = assign(&rows, &centroids, dim);
        let changed = next.iter().zip(&assignment).any(|(a, b)| a.0 != b.0);
        let prev = *history.last().unwrap();
        let current = inertia(&next);
        history.push(current);
        assignment = next;
        if !changed || current == 0.0 || (prev - current).abs() <= cfg.tol * prev {
            break;
        }
    }
    let inertia = *history.last().unwrap();
    Ok(KmeansTrace {
        codebook: Codebook::new(cfg.k, dim, cfg.seed, centroids, Some(inertia))?,
        inertia_history: history,
        repaired_clusters: repaired,
    })
}

fn kmeans_plus_plus(rows: &[&[f64]], k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = rows.len();
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..n));
    let mut d2: Vec<f64> = rows.par_iter().map(|r| squared_distance(r, rows[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, d) in d2.iter().enumerate() {
                acc += d;
                if acc > target && *d > 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            // fewer distinct points than k: take the lowest unused index
            (0..n).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        let c = rows[next];
        d2.par_iter_mut()
            .zip(rows.par_iter())
            .for_each(|(d, r)| *d = d.min(squared_distance(r, c)));
    }
    chosen.iter().flat_map(|&i| rows[i].iter().copied()).collect()
}

fn assign(rows: &[&[f64]], centroids: &[f64], dim: usize) -> Vec<(u32, f64)> {
    rows.par_iter()
        .map(|r| {
            let mut best = (0u32, f64::INFINITY);
            for (id, c) in centroids.chunks_exact(dim).enumerate() {
                let d = squared_distance(r, c);
                if d < best.1 {
                    best = (id as u32, d);
                }
            }
            best
        })
        .collect()
}

fn inertia(assignment: &[(u32, f64)]) -> f64 {
    assignment.iter().map(|a| a.1).sum()
}

/// Moves each centroid to its cluster mean. An empty cluster takes the row
/// farthest from its own updated centroid. Returns the number of repairs.
fn update(rows: &[&[f64]], assignment: &[(u32, f64)], centroids: &mut [f64], dim: usize) -> usize {
    let k = centroids.len() / dim;
    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    for (r, &(id, _)) in rows.iter().zip(assignment) {
        let id = id as usize;
        counts[id] += 1;
        for (s, v) in sums[id * dim..(id + 1) * dim].iter_mut().zip(r.iter()) {
            *s += v;
        }
    }
    for id in 0..k {
        if counts[id] > 0 {
            for d in 0..dim {
                centroids[id * dim + d] = sums[id * dim + d] / counts[id] as f64;
            }
        }
    }
    let empty: Vec<usize> = (0..k).filter(|&id| counts[id] == 0).collect();
    if empty.is_empty() {
        return 0;
    }
    let mut spread: Vec<(f64, usize)> = rows
        .iter()
        .zip(assignment)
        .enumerate()
        .map(|(i, (r, &(id, _)))| {
            let id = id as usize;
            (squared_distance(r, &centroids[id * dim..(id + 1) * dim]), i)
        })
        .collect();
    spread.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for (&id, &(_, row)) in empty.iter().zip(&spread) {
        centroids[id * dim..(id + 1) * dim].copy_from_slice(rows[row]);
    }
    empty.len()
}

/// Nearest-centroid unit per frame.
pub fn quantize(features: &FeatureMatrix, codebook: &Codebook) -> Result<UnitSequence> {
    if features.dim != codebook.dim {
        return Err(UnitsError::DimensionMismatch {
            expected: codebook.dim,
            found: features.dim,
        });
    }
    let rows: Vec<&[f64]> = features.rows().collect();
    let units = rows.par_iter().map(|r| codebook.nearest(r).0).collect();
    Ok(UnitSequence {
        grid: features.grid,
        units,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn cfg(k: usize, seed: u64) -> KmeansConfig {
        KmeansConfig {
            k,
            seed,
            max_iters: 100,
            tol: 0.0,
        }
    }

    #[test]
    fn two_clouds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut data = Vec::new();
        for center in [[-5.0, 2.0], [6.0, -1.0]] {
            for _ in 0..200 {
                for c in center {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    data.push(c + 0.1 * z);
                }
            }
        }
        let mean = |from: usize| -> [f64; 2] {
            let pts = &data[from * 2..(from + 200) * 2];
            let sx: f64 = pts.iter().step_by(2).sum();
            let sy: f64 = pts.iter().skip(1).step_by(2).sum();
            [sx / 200.0, sy / 200.0]
        };
        let expected = [mean(0), mean(200)];
        let cb = train_kmeans_rows(&data, 2, &cfg(2, 11)).unwrap().codebook;
        for e in expected {
            let (id, _) = cb.nearest(&e);
            let c = cb.centroid(id as usize);
            assert!((c[0] - e[0]).abs() < 1e-6 && (c[1] - e[1]).abs() < 1e-6, "{c:?} vs {e:?}");
        }
    }

    #[test]
    fn single_cluster_is_global_mean() {
        let data = [1.0, 2.0, 3.0, 4.0, 5.0, 9.0];
        let cb = train_kmeans_rows(&data, 2, &cfg(1, 0)).unwrap().codebook;
        assert!((cb.centroid(0)[0] - 3.0).abs() < 1e-12);
        assert!((cb.centroid(0)[1] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn distinct_points_give_zero_inertia() {
        let data = [0.0, 1.0, 5.0, 5.0, 1.0, 0.0, 0.0];
        let trace = train_kmeans_rows(&data, 1, &cfg(4, 2)).unwrap();
        assert_eq!(trace.codebook.inertia, Some(0.0));
    }

    #[test]
    fn too_few_rows() {
        assert!(matches!(
            train_kmeans_rows(&[1.0, 2.0], 1, &cfg(3, 0)),
            Err(UnitsError::TooFewRows { n: 2, k: 3 })
        ));
    }

    #[test]
    fn quantize_ties_and_hits() {
        let grid = crate::audio::FrameGrid::new(0.025, 0.02, 16_000, 400 + 320).unwrap();
        let mut centroids = vec![0.0; 8 * 2];
        for id in 0..8 {
            centroids[id * 2] = id as f64 * 10.0;
        }
        centroids[2 * 2 + 1] = 1.0;
        centroids[5 * 2 + 1] = -1.0;
        centroids[5 * 2] = 20.0;
        let cb = Codebook::new(8, 2, 0, centroids, None).unwrap();
        let features = FeatureMatrix::new(grid, 2, vec![70.0, 0.0, 20.0, 0.0]).unwrap();
        let units = quantize(&features, &cb).unwrap().units;
        assert_eq!(units, vec![7, 2]);
    }
}
