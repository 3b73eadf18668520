//! K-means partitioning of counties, elbow/silhouette model selection and
//! per-cluster summaries.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{CaseSeries, CountyKey, FeatureMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances to the assigned centroids.
    pub inertia: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Inertia after each assignment step of the winning restart.
    pub inertia_history: Vec<f64>,
}

/// Cluster labels aligned with the rows of the fitted matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub labels: Vec<usize>,
}

impl Assignment {
    pub fn n_clusters(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub restarts: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            max_iter: 300,
            tol: 1e-6,
            restarts: 10,
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(row: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(row, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Distance-weighted seeding: the first centre is uniform, each later one is
/// drawn with probability proportional to its squared distance from the
/// nearest centre chosen so far.
pub fn kmeans_pp_init(rows: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut centroids = vec![rows[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = rows.iter().map(|r| sq_dist(r, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, w) in d2.iter().enumerate() {
                if *w > 0.0 && target < *w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            // rounding can leave `chosen` on a zero-weight row
            if d2[chosen] == 0.0 {
                chosen = d2.iter().rposition(|w| *w > 0.0).unwrap_or(chosen);
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = rows[pick].clone();
        for (w, r) in d2.iter_mut().zip(rows) {
            *w = w.min(sq_dist(r, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// One Lloyd run from fixed initial centroids.
#[derive(Debug, Clone)]
pub struct LloydRun {
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
}

/// Alternates assignment and mean updates until the labels stop changing,
/// the largest centroid shift drops below `tol`, or `max_iter` is reached.
/// An emptied cluster is reseeded at the row farthest from its centroid.
pub fn lloyd(rows: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, max_iter: usize, tol: f64) -> LloydRun {
    let k = centroids.len();
    let m = rows[0].len();
    let mut labels: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let mut dists = Vec::with_capacity(rows.len());
        let new_labels: Vec<usize> = rows
            .iter()
            .map(|r| {
                let (j, d) = nearest(r, &centroids);
                dists.push(d);
                j
            })
            .collect();
        history.push(dists.iter().sum());
        let stable = new_labels == labels;
        labels = new_labels;
        if stable || iterations >= max_iter {
            break;
        }
        iterations += 1;

        let mut sums = vec![vec![0.0; m]; k];
        let mut counts = vec![0usize; k];
        for (r, &l) in rows.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(r) {
                *s += x;
            }
        }
        let mut shift: f64 = 0.0;
        for j in 0..k {
            let next = if counts[j] > 0 {
                sums[j].iter().map(|s| s / counts[j] as f64).collect()
            } else {
                let far = (0..rows.len())
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]))
                    .unwrap_or(0);
                dists[far] = 0.0;
                rows[far].clone()
            };
            shift = shift.max(sq_dist(&next, &centroids[j]).sqrt());
            centroids[j] = next;
        }
        if shift < tol {
            // one last assignment so labels match the final centroids
            let final_labels: Vec<usize> = rows.iter().map(|r| nearest(r, &centroids).0).collect();
            let inertia = rows
                .iter()
                .zip(&final_labels)
                .map(|(r, &l)| sq_dist(r, &centroids[l]))
                .sum();
            history.push(inertia);
            labels = final_labels;
            break;
        }
    }
    let inertia = *history.last().unwrap_or(&0.0);
    LloydRun {
        centroids,
        labels,
        inertia,
        iterations,
        history,
    }
}

/// Renumbers clusters so centroids appear in lexicographic order. Makes
/// labels independent of seeding order.
fn canonicalize(run: &mut LloydRun) {
    let k = run.centroids.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        run.centroids[a]
            .iter()
            .zip(&run.centroids[b])
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut relabel = vec![0; k];
    for (new, &old) in order.iter().enumerate() {
        relabel[old] = new;
    }
    run.centroids = order.iter().map(|&o| run.centroids[o].clone()).collect();
    for l in run.labels.iter_mut() {
        *l = relabel[*l];
    }
}

pub fn kmeans_fit(m: &FeatureMatrix, k: usize, seed: u64) -> Result<(KMeansModel, Assignment)> {
    kmeans_fit_with(m, k, seed, &KMeansOptions::default())
}

/// Best of `opts.restarts` seeded Lloyd runs by inertia.
pub fn kmeans_fit_with(
    m: &FeatureMatrix,
    k: usize,
    seed: u64,
    opts: &KMeansOptions,
) -> Result<(KMeansModel, Assignment)> {
    let rows = m.rows();
    if rows.is_empty() || m.n_cols() == 0 {
        return Err(Error::EmptyMatrix);
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if k > rows.len() {
        return Err(Error::KTooLarge { k, n: rows.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<LloydRun> = None;
    for _ in 0..opts.restarts.max(1) {
        let init = kmeans_pp_init(rows, k, &mut rng);
        let run = lloyd(rows, init, opts.max_iter, opts.tol);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let mut run = best.expect("at least one restart");
    canonicalize(&mut run);
    Ok((
        KMeansModel {
            k,
            centroids: run.centroids,
            inertia: run.inertia,
            iterations: run.iterations,
            seed,
            inertia_history: run.history,
        },
        Assignment { labels: run.labels },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElbowCurve {
    pub k_values: Vec<usize>,
    pub sse: Vec<f64>,
}

pub fn elbow_scan(m: &FeatureMatrix, k_min: usize, k_max: usize, seed: u64) -> Result<ElbowCurve> {
    if k_min == 0 || k_min >= k_max {
        return Err(Error::InvalidArgument(format!(
            "elbow range needs 1 <= k_min < k_max, got {k_min}..{k_max}"
        )));
    }
    if k_max > m.n_rows() {
        return Err(Error::KTooLarge {
            k: k_max,
            n: m.n_rows(),
        });
    }
    let k_values: Vec<usize> = (k_min..=k_max).collect();
    let sse = k_values
        .iter()
        .map(|&k| kmeans_fit(m, k, seed).map(|(model, _)| model.inertia))
        .collect::<Result<Vec<_>>>()?;
    Ok(ElbowCurve { k_values, sse })
}

/// The k whose SSE lies farthest from the chord joining the curve's end
/// points. Ties (within rounding) go to the smaller k, so a perfectly linear
/// curve yields `k_min + 1`.
pub fn knee_detect(c: &ElbowCurve) -> Result<usize> {
    let n = c.k_values.len();
    if n < 3 || c.sse.len() != n {
        return Err(Error::TooFewPoints(n.min(c.sse.len())));
    }
    let (x0, y0) = (c.k_values[0] as f64, c.sse[0]);
    let (x1, y1) = (c.k_values[n - 1] as f64, c.sse[n - 1]);
    let (dx, dy) = (x1 - x0, y1 - y0);
    let norm = dx.hypot(dy);
    let scale = c.sse.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1.0);
    let mut best = (c.k_values[1], f64::NEG_INFINITY);
    for i in 1..n - 1 {
        let (x, y) = (c.k_values[i] as f64, c.sse[i]);
        let dist = (dy * (x - x0) - dx * (y - y0)).abs() / norm;
        if dist > best.1 + 1e-12 * scale {
            best = (c.k_values[i], dist);
        }
    }
    Ok(best.0)
}

/// Mean silhouette over all rows using Euclidean distance. Rows in singleton
/// clusters score 0.
pub fn silhouette(m: &FeatureMatrix, a: &Assignment) -> Result<f64> {
    let rows = m.rows();
    if rows.len() != a.labels.len() {
        return Err(Error::InvalidArgument(
            "assignment length differs from matrix rows".into(),
        ));
    }
    let k = a.n_clusters();
    let mut sizes = vec![0usize; k];
    for &l in &a.labels {
        sizes[l] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::SingleCluster);
    }
    let mut total = 0.0;
    for (i, ri) in rows.iter().enumerate() {
        let own = a.labels[i];
        if sizes[own] == 1 {
            continue;
        }
        let mut sums = vec![0.0; k];
        for (j, rj) in rows.iter().enumerate() {
            if i != j {
                sums[a.labels[j]] += sq_dist(ri, rj).sqrt();
            }
        }
        let intra = sums[own] / (sizes[own] - 1) as f64;
        let inter = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = intra.max(inter);
        if denom > 0.0 {
            total += (inter - intra) / denom;
        }
    }
    Ok(total / rows.len() as f64)
}

/// Chance-corrected agreement between two labelings (1 when identical up to
/// renaming).
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings differ in length");
    let choose2 = |x: u64| (x * x.saturating_sub(1)) as f64 / 2.0;
    let mut table: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut rows: BTreeMap<usize, u64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, u64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&v| choose2(v)).sum();
    let sum_a: f64 = rows.values().map(|&v| choose2(v)).sum();
    let sum_b: f64 = cols.values().map(|&v| choose2(v)).sum();
    let expected = sum_a * sum_b / choose2(a.len() as u64);
    let max = (sum_a + sum_b) / 2.0;
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub cluster: usize,
    pub counties: usize,
    /// Mean of each unscaled feature, in feature-name order.
    pub feature_means: Vec<f64>,
    /// `None` when no county in the cluster has a case series.
    pub mean_cases: Option<f64>,
    pub mean_deaths: Option<f64>,
    /// Counties lacking a case series, excluded from the case means.
    pub missing_series: Vec<String>,
}

pub fn cluster_summary(
    profiles: &FeatureMatrix,
    cases: &BTreeMap<CountyKey, CaseSeries>,
    a: &Assignment,
) -> Result<Vec<ClusterSummary>> {
    if profiles.n_rows() != a.labels.len() {
        return Err(Error::InvalidArgument(
            "assignment length differs from profile rows".into(),
        ));
    }
    let k = a.n_clusters();
    let m = profiles.n_cols();
    let mut out: Vec<ClusterSummary> = (0..k)
        .map(|cluster| ClusterSummary {
            cluster,
            counties: 0,
            feature_means: vec![0.0; m],
            mean_cases: None,
            mean_deaths: None,
            missing_series: Vec::new(),
        })
        .collect();
    let mut case_sums = vec![(0.0, 0.0, 0usize); k];
    for (i, key) in profiles.county_keys().iter().enumerate() {
        let s = &mut out[a.labels[i]];
        s.counties += 1;
        for (acc, x) in s.feature_means.iter_mut().zip(profiles.row(i)) {
            *acc += x;
        }
        match cases.get(key) {
            Some(series) => {
                let c = &mut case_sums[a.labels[i]];
                c.0 += series.total_cases() as f64;
                c.1 += series.total_deaths() as f64;
                c.2 += 1;
            }
            None => s.missing_series.push(key.normalized.clone()),
        }
    }
    for (s, (cases, deaths, n)) in out.iter_mut().zip(case_sums) {
        if s.counties > 0 {
            for v in s.feature_means.iter_mut() {
                *v /= s.counties as f64;
            }
        }
        if n > 0 {
            s.mean_cases = Some(cases / n as f64);
            s.mean_deaths = Some(deaths / n as f64);
        }
    }
    Ok(out)
}
