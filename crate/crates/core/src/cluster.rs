//! K-means with silhouette-driven K selection, 1-D agglomerative clustering
//! with elbow-driven K selection, and partition-comparison metrics
//! (ARI, AMI, CAS).

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::ClusterError;

/// Lloyd iteration cap per restart.
pub const MAX_LLOYD_ITERATIONS: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterAlgorithm {
    Kmeans,
    Agglomerative,
}

/// A partition of named items into `k` clusters, with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub items: Vec<String>,
    pub labels: Vec<usize>,
    pub k: usize,
    pub algorithm: ClusterAlgorithm,
    pub seed: u64,
    /// Within-cluster sum of squared distances; k-means only.
    pub inertia: Option<f64>,
}

impl ClusterAssignment {
    pub fn new(
        items: Vec<String>,
        labels: Vec<usize>,
        k: usize,
        algorithm: ClusterAlgorithm,
        seed: u64,
        inertia: Option<f64>,
    ) -> Result<Self, ClusterError> {
        if k == 0 {
            return Err(ClusterError::KTooSmall(1));
        }
        if items.len() != labels.len() {
            return Err(ClusterError::ItemMismatch);
        }
        let mut used = vec![false; k];
        for &label in &labels {
            if label >= k {
                return Err(ClusterError::BadLabel { label, k });
            }
            used[label] = true;
        }
        if used.iter().any(|u| !u) {
            return Err(ClusterError::TooFewPoints { n: items.len(), k });
        }
        Ok(Self {
            items,
            labels,
            k,
            algorithm,
            seed,
            inertia,
        })
    }

    /// Member indices of each cluster, in item order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (idx, &label) in self.labels.iter().enumerate() {
            out[label].push(idx);
        }
        out
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
}

fn validate_points(points: &[Vec<f64>]) -> Result<usize, ClusterError> {
    let dim = points.first().map(|p| p.len()).unwrap_or(0);
    for (idx, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(ClusterError::DimensionMismatch {
                idx,
                got: p.len(),
                expected: dim,
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(ClusterError::NonFinite);
        }
    }
    Ok(dim)
}

/// k-means++ seeding from the given generator.
fn kmeans_pp_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)].clone());
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total <= 0.0 {
            rng.random_range(0..n)
        } else {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc >= target {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        centroids.push(points[idx].clone());
        let last = centroids.last().unwrap();
        for (i, p) in points.iter().enumerate() {
            let d = dist2(p, last);
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centroids
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> Vec<usize> {
    points
        .iter()
        .map(|p| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let d = dist2(p, centroid);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Moves the point farthest from its centroid into each empty cluster,
/// smallest cluster id first; never drains a cluster below one member.
fn fix_empty_clusters(points: &[Vec<f64>], centroids: &[Vec<f64>], labels: &mut [usize], k: usize) {
    loop {
        let mut sizes = vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let mut donor = None;
        let mut donor_d = -1.0;
        for (i, p) in points.iter().enumerate() {
            if sizes[labels[i]] <= 1 {
                continue;
            }
            let d = dist2(p, &centroids[labels[i]]);
            if d > donor_d {
                donor_d = d;
                donor = Some(i);
            }
        }
        match donor {
            Some(i) => labels[i] = empty,
            None => return,
        }
    }
}

fn means(points: &[Vec<f64>], labels: &[usize], k: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(p) {
            *s += v;
        }
    }
    for (sum, &count) in sums.iter_mut().zip(&counts) {
        if count > 0 {
            for s in sum.iter_mut() {
                *s /= count as f64;
            }
        }
    }
    sums
}

fn inertia_of(points: &[Vec<f64>], labels: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| dist2(p, &centroids[l]))
        .sum()
}

fn lloyd(
    points: &[Vec<f64>],
    mut centroids: Vec<Vec<f64>>,
    k: usize,
    dim: usize,
) -> (Vec<usize>, f64) {
    let mut labels = assign(points, &centroids);
    fix_empty_clusters(points, &centroids, &mut labels, k);
    for _ in 0..MAX_LLOYD_ITERATIONS {
        centroids = means(points, &labels, k, dim);
        let mut next = assign(points, &centroids);
        fix_empty_clusters(points, &centroids, &mut next, k);
        if next == labels {
            break;
        }
        labels = next;
    }
    let centroids = means(points, &labels, k, dim);
    let inertia = inertia_of(points, &labels, &centroids);
    (labels, inertia)
}

/// K-means clustering: k-means++ seeding, Lloyd iterations to an assignment
/// fixpoint (or 300 iterations), best of `restarts` by lowest inertia with
/// ties broken toward the earlier restart.
pub fn kmeans(
    items: &[String],
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<ClusterAssignment, ClusterError> {
    if k == 0 {
        return Err(ClusterError::KTooSmall(1));
    }
    let n = points.len();
    if n < k || items.len() != n {
        return Err(ClusterError::TooFewPoints { n, k });
    }
    let dim = validate_points(points)?;
    let restarts = restarts.max(1);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for restart in 0..restarts {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed ^ (restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let init = kmeans_pp_init(points, k, &mut rng);
        let (labels, inertia) = lloyd(points, init, k, dim);
        let better = match &best {
            None => true,
            Some((best_inertia, _)) => inertia < *best_inertia,
        };
        if better {
            best = Some((inertia, labels));
        }
    }
    let (inertia, labels) = best.expect("at least one restart");
    ClusterAssignment::new(
        items.to_vec(),
        labels,
        k,
        ClusterAlgorithm::Kmeans,
        seed,
        Some(inertia),
    )
}

/// Mean silhouette coefficient over all points with the Euclidean metric.
/// Singleton clusters contribute 0, as does the degenerate a = b = 0 case.
pub fn silhouette(
    points: &[Vec<f64>],
    assignment: &ClusterAssignment,
) -> Result<f64, ClusterError> {
    if assignment.k < 2 {
        return Err(ClusterError::SilhouetteUndefined);
    }
    let n = points.len();
    if n != assignment.labels.len() {
        return Err(ClusterError::ItemMismatch);
    }
    validate_points(points)?;
    let labels = &assignment.labels;
    let k = assignment.k;
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    let dist = |i: usize, j: usize| dist2(&points[i], &points[j]).sqrt();
    let mut total = 0.0;
    for i in 0..n {
        let own = labels[i];
        if sizes[own] == 1 {
            continue; // contributes 0
        }
        let mut sums = vec![0.0; k];
        for j in 0..n {
            if i != j {
                sums[labels[j]] += dist(i, j);
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let mut b = f64::INFINITY;
        for c in 0..k {
            if c != own && sizes[c] > 0 {
                b = b.min(sums[c] / sizes[c] as f64);
            }
        }
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

/// Outcome of silhouette-driven K selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KChoice {
    pub k: usize,
    pub silhouette: f64,
    pub requested: (usize, usize),
    pub effective: (usize, usize),
    /// True when the requested range had to be narrowed to [2, min(10, n-1)].
    pub clamped: bool,
}

/// Chooses K by maximizing the silhouette score of seeded k-means over the
/// requested range. The range is narrowed to `[2, min(10, n-1)]` (silhouette
/// is undefined at K = 1) and the narrowing is flagged. Ties break toward
/// the smaller K.
pub fn select_k_silhouette(
    items: &[String],
    points: &[Vec<f64>],
    k_range: (usize, usize),
    seed: u64,
    restarts: usize,
) -> Result<KChoice, ClusterError> {
    let n = points.len();
    if n < 3 {
        return Err(ClusterError::BadKRange(k_range.0, k_range.1, n));
    }
    let lo = k_range.0.max(2);
    let hi = k_range.1.min(10).min(n - 1);
    if lo > hi {
        return Err(ClusterError::BadKRange(k_range.0, k_range.1, n));
    }
    let clamped = (lo, hi) != k_range;
    let mut best: Option<(usize, f64)> = None;
    for k in lo..=hi {
        let assignment = kmeans(items, points, k, seed, restarts)?;
        let score = silhouette(points, &assignment)?;
        let better = match best {
            None => true,
            Some((_, best_score)) => score > best_score,
        };
        if better {
            best = Some((k, score));
        }
    }
    let (k, score) = best.expect("non-empty range");
    Ok(KChoice {
        k,
        silhouette: score,
        requested: k_range,
        effective: (lo, hi),
        clamped,
    })
}

/// Agglomerative clustering of scalar values with Ward linkage, merging
/// until `k` clusters remain. Deterministic; merge-cost ties break toward
/// the smallest cluster index pair.
pub fn agglomerative_1d(
    items: &[String],
    values: &[f64],
    k: usize,
) -> Result<ClusterAssignment, ClusterError> {
    if k == 0 {
        return Err(ClusterError::KTooSmall(1));
    }
    let n = values.len();
    if n < k || items.len() != n {
        return Err(ClusterError::TooFewPoints { n, k });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(ClusterError::NonFinite);
    }
    struct Node {
        count: usize,
        sum: f64,
        members: Vec<usize>,
    }
    let mut nodes: Vec<Node> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| Node {
            count: 1,
            sum: v,
            members: vec![i],
        })
        .collect();
    while nodes.len() > k {
        let mut best = (0usize, 1usize);
        let mut best_cost = f64::INFINITY;
        for i in 0..nodes.len() {
            for j in (i + 1)..nodes.len() {
                let (a, b) = (&nodes[i], &nodes[j]);
                let gap = a.sum / a.count as f64 - b.sum / b.count as f64;
                let cost = (a.count * b.count) as f64 / (a.count + b.count) as f64 * gap * gap;
                if cost < best_cost {
                    best_cost = cost;
                    best = (i, j);
                }
            }
        }
        let absorbed = nodes.remove(best.1);
        let keep = &mut nodes[best.0];
        keep.count += absorbed.count;
        keep.sum += absorbed.sum;
        keep.members.extend(absorbed.members);
    }
    // Label clusters by their smallest member index for stable output.
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by_key(|&c| *nodes[c].members.iter().min().unwrap());
    let mut labels = vec![0usize; n];
    for (label, &c) in order.iter().enumerate() {
        for &m in &nodes[c].members {
            labels[m] = label;
        }
    }
    ClusterAssignment::new(
        items.to_vec(),
        labels,
        k,
        ClusterAlgorithm::Agglomerative,
        0,
        None,
    )
}

fn wss_1d(values: &[f64], assignment: &ClusterAssignment) -> f64 {
    let mut sums = vec![0.0; assignment.k];
    let mut counts = vec![0usize; assignment.k];
    for (&v, &l) in values.iter().zip(&assignment.labels) {
        sums[l] += v;
        counts[l] += 1;
    }
    values
        .iter()
        .zip(&assignment.labels)
        .map(|(&v, &l)| {
            let m = sums[l] / counts[l] as f64;
            (v - m) * (v - m)
        })
        .sum()
}

/// Outcome of elbow-driven K selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElbowChoice {
    pub k: usize,
    /// True when the W(k) curve had no elbow (flat or strictly linear); the
    /// smallest k in the range is returned in that case.
    pub flat: bool,
    pub wss: Vec<(usize, f64)>,
}

/// Chord-distance elbow selection on a precomputed W(k) curve. Returns the
/// k maximizing perpendicular distance to the chord joining the curve's
/// endpoints, with ties toward smaller k, plus the no-elbow flag.
pub fn elbow_from_wss(wss: &[(usize, f64)]) -> (usize, bool) {
    let lo = wss[0].0;
    let (x0, y0) = (wss[0].0 as f64, wss[0].1);
    let (x1, y1) = (wss[wss.len() - 1].0 as f64, wss[wss.len() - 1].1);
    let chord_len = ((x1 - x0) * (x1 - x0) + (y1 - y0) * (y1 - y0)).sqrt();
    let mut best_k = lo;
    let mut best_d = 0.0;
    for &(k, w) in wss {
        let d = ((x1 - x0) * (y0 - w) - (x0 - k as f64) * (y1 - y0)).abs() / chord_len;
        if d > best_d {
            best_d = d;
            best_k = k;
        }
    }
    let flat = best_d <= 1e-9;
    (if flat { lo } else { best_k }, flat)
}

/// Picks K at the point of the within-cluster sum-of-squares curve farthest
/// from the chord joining its endpoints (max-distance-to-chord elbow).
pub fn elbow_k(values: &[f64], k_range: (usize, usize)) -> Result<ElbowChoice, ClusterError> {
    let n = values.len();
    let (lo, hi) = k_range;
    if lo < 1 || hi > n.saturating_sub(1) || hi < lo || hi - lo + 1 < 3 {
        return Err(ClusterError::BadKRange(lo, hi, n));
    }
    let items: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    let mut wss = Vec::with_capacity(hi - lo + 1);
    for k in lo..=hi {
        let assignment = agglomerative_1d(&items, values, k)?;
        wss.push((k, wss_1d(values, &assignment)));
    }
    let (k, flat) = elbow_from_wss(&wss);
    Ok(ElbowChoice { k, flat, wss })
}

fn check_same_items(a: &ClusterAssignment, b: &ClusterAssignment) -> Result<(), ClusterError> {
    if a.items != b.items {
        return Err(ClusterError::ItemMismatch);
    }
    Ok(())
}

fn contingency(a: &ClusterAssignment, b: &ClusterAssignment) -> BTreeMap<(usize, usize), u64> {
    let mut table = BTreeMap::new();
    for (&la, &lb) in a.labels.iter().zip(&b.labels) {
        *table.entry((la, lb)).or_insert(0u64) += 1;
    }
    table
}

fn marginals(
    table: &BTreeMap<(usize, usize), u64>,
) -> (BTreeMap<usize, u64>, BTreeMap<usize, u64>) {
    let mut rows = BTreeMap::new();
    let mut cols = BTreeMap::new();
    for (&(i, j), &count) in table {
        *rows.entry(i).or_insert(0u64) += count;
        *cols.entry(j).or_insert(0u64) += count;
    }
    (rows, cols)
}

fn comb2(n: u64) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

/// First-occurrence relabeling, so label permutations compare equal.
fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// Whether two assignments describe the same partition (up to relabeling).
fn same_partition(a: &ClusterAssignment, b: &ClusterAssignment) -> bool {
    canonical_labels(&a.labels) == canonical_labels(&b.labels)
}

/// Adjusted Rand Index between two partitions of the same items, computed
/// from the contingency table with the hypergeometric expected index.
/// Identical partitions score exactly 1.0.
pub fn ari(a: &ClusterAssignment, b: &ClusterAssignment) -> Result<f64, ClusterError> {
    check_same_items(a, b)?;
    if a.items.len() < 2 || same_partition(a, b) {
        // A single item admits only one partition; identical partitions
        // agree perfectly by definition.
        return Ok(1.0);
    }
    let table = contingency(a, b);
    let (rows, cols) = marginals(&table);
    let n = a.items.len() as u64;
    let sum_cells: f64 = table.values().map(|&c| comb2(c)).sum();
    let sum_rows: f64 = rows.values().map(|&c| comb2(c)).sum();
    let sum_cols: f64 = cols.values().map(|&c| comb2(c)).sum();
    let expected = sum_rows * sum_cols / comb2(n);
    let max_index = (sum_rows + sum_cols) / 2.0;
    if (max_index - expected).abs() < 1e-12 {
        return Ok(1.0);
    }
    Ok((sum_cells - expected) / (max_index - expected))
}

fn entropy(counts: &BTreeMap<usize, u64>, n: u64) -> f64 {
    let nf = n as f64;
    counts
        .values()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / nf;
            -p * p.ln()
        })
        .sum()
}

fn mutual_info(
    table: &BTreeMap<(usize, usize), u64>,
    rows: &BTreeMap<usize, u64>,
    cols: &BTreeMap<usize, u64>,
    n: u64,
) -> f64 {
    let nf = n as f64;
    let mut mi = 0.0;
    for (&(i, j), &nij) in table {
        if nij == 0 {
            continue;
        }
        let pij = nij as f64 / nf;
        let pi = rows[&i] as f64 / nf;
        let pj = cols[&j] as f64 / nf;
        mi += pij * (pij / (pi * pj)).ln();
    }
    mi
}

/// Expected mutual information of two label marginals under the
/// hypergeometric permutation model.
fn expected_mutual_info(rows: &BTreeMap<usize, u64>, cols: &BTreeMap<usize, u64>, n: u64) -> f64 {
    let nf = n as f64;
    let lf = |x: u64| ln_gamma(x as f64 + 1.0);
    let mut emi = 0.0;
    for &ai in rows.values() {
        for &bj in cols.values() {
            let lo = if ai + bj > n { ai + bj - n } else { 1 };
            let hi = ai.min(bj);
            for nij in lo..=hi {
                let nij_f = nij as f64;
                let info = (nf * nij_f / (ai as f64 * bj as f64)).ln();
                let ln_prob = lf(ai) + lf(bj) + lf(n - ai) + lf(n - bj)
                    - lf(n)
                    - lf(nij)
                    - lf(ai - nij)
                    - lf(bj - nij)
                    - lf(n + nij - ai - bj);
                emi += (nij_f / nf) * info * ln_prob.exp();
            }
        }
    }
    emi
}

/// Adjusted Mutual Information with its degenerate-case flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmiScore {
    pub value: f64,
    /// Set when a zero-entropy partition forced the convention value.
    pub degenerate: bool,
}

/// Adjusted Mutual Information: `(MI - E[MI]) / (mean(H(a), H(b)) - E[MI])`
/// with the expectation under the hypergeometric permutation model and
/// arithmetic-mean normalization.
///
/// Conventions: two single-cluster partitions are identical, so 1.0;
/// a single-cluster partition against anything else has MI = 0 and yields
/// 0.0. Both cases are flagged.
pub fn ami(a: &ClusterAssignment, b: &ClusterAssignment) -> Result<AmiScore, ClusterError> {
    check_same_items(a, b)?;
    let table = contingency(a, b);
    let (rows, cols) = marginals(&table);
    let n = a.items.len() as u64;
    let ha = entropy(&rows, n);
    let hb = entropy(&cols, n);
    if ha == 0.0 && hb == 0.0 {
        return Ok(AmiScore {
            value: 1.0,
            degenerate: true,
        });
    }
    if ha == 0.0 || hb == 0.0 {
        return Ok(AmiScore {
            value: 0.0,
            degenerate: true,
        });
    }
    if same_partition(a, b) {
        // Exact by definition; the expectation formula would leave float
        // residue in the last ulp.
        return Ok(AmiScore {
            value: 1.0,
            degenerate: false,
        });
    }
    let mi = mutual_info(&table, &rows, &cols, n);
    let emi = expected_mutual_info(&rows, &cols, n);
    let denom = 0.5 * (ha + hb) - emi;
    if denom.abs() < 1e-12 {
        return Ok(AmiScore {
            value: 0.0,
            degenerate: true,
        });
    }
    Ok(AmiScore {
        value: (mi - emi) / denom,
        degenerate: false,
    })
}

/// ARI, AMI and their arithmetic mean (the combined alignment score).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentScores {
    pub ari: f64,
    pub ami: f64,
    pub cas: f64,
    pub ami_degenerate: bool,
}

impl AlignmentScores {
    pub fn new(ari: f64, ami: AmiScore) -> Self {
        Self {
            ari,
            ami: ami.value,
            cas: (ari + ami.value) / 2.0,
            ami_degenerate: ami.degenerate,
        }
    }
}

/// Compares two partitions with ARI, AMI and CAS in one call.
pub fn alignment(
    a: &ClusterAssignment,
    b: &ClusterAssignment,
) -> Result<AlignmentScores, ClusterError> {
    Ok(AlignmentScores::new(ari(a, b)?, ami(a, b)?))
}

/// The pair of clusters whose mean values differ the most.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferingPair {
    pub cluster_a: usize,
    pub cluster_b: usize,
    /// Set when another pair achieved the same gap and the smallest id pair
    /// was chosen by convention.
    pub tied: bool,
}

/// Finds the two clusters with the largest absolute difference in mean value.
/// Ties break toward the smaller id pair, flagged.
pub fn most_differing_pair(
    assignment: &ClusterAssignment,
    values: &[f64],
) -> Result<DifferingPair, ClusterError> {
    if assignment.k < 2 {
        return Err(ClusterError::KTooSmall(2));
    }
    if values.len() != assignment.labels.len() {
        return Err(ClusterError::ItemMismatch);
    }
    let mut sums = vec![0.0; assignment.k];
    let mut counts = vec![0usize; assignment.k];
    for (&v, &l) in values.iter().zip(&assignment.labels) {
        sums[l] += v;
        counts[l] += 1;
    }
    let means: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect();
    let mut best = (0, 1);
    let mut best_gap = -1.0;
    let mut tied = false;
    for i in 0..assignment.k {
        for j in (i + 1)..assignment.k {
            let gap = (means[i] - means[j]).abs();
            if gap > best_gap {
                best_gap = gap;
                best = (i, j);
                tied = false;
            } else if gap == best_gap {
                tied = true;
            }
        }
    }
    Ok(DifferingPair {
        cluster_a: best.0,
        cluster_b: best.1,
        tied,
    })
}
