//! Weight sharing: 1-D k-means over scaled-integer weights, and the
//! dictionary/bin-index encoding consumed by the weight-shared and PASM
//! engines.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::{wrap_to_word, QTensor, WordSpec};

pub const MIN_BINS: usize = 2;
pub const MAX_BINS: usize = 256;

/// Shared weight values, sorted ascending with duplicates merged.
///
/// Requested bin counts are 2..=256, but a dictionary may end up with fewer
/// entries when the input has fewer distinct values than bins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightDictionary {
    centroids: Vec<i64>,
}

impl WeightDictionary {
    pub fn new(mut centroids: Vec<i64>) -> Result<Self> {
        centroids.sort_unstable();
        centroids.dedup();
        if centroids.is_empty() || centroids.len() > MAX_BINS {
            return Err(Error::InvalidDictionary(centroids.len()));
        }
        Ok(Self { centroids })
    }

    pub fn centroids(&self) -> &[i64] {
        &self.centroids
    }

    /// Number of bins, `B`.
    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }

    /// Bits needed for a bin index, `ceil(log2 B)`.
    pub fn index_bits(&self) -> u32 {
        usize::BITS - (self.len() - 1).leading_zeros()
    }

    pub fn get(&self, bin: usize) -> Option<i64> {
        self.centroids.get(bin).copied()
    }

    /// Index of the nearest centroid; ties go to the lower index.
    pub fn nearest(&self, v: i64) -> usize {
        let hi = self.centroids.partition_point(|&c| c < v);
        if hi == 0 {
            return 0;
        }
        if hi == self.centroids.len() {
            return hi - 1;
        }
        let below = v as i128 - self.centroids[hi - 1] as i128;
        let above = self.centroids[hi] as i128 - v as i128;
        if below <= above {
            hi - 1
        } else {
            hi
        }
    }

    pub fn contains_value(&self, v: i64) -> bool {
        self.centroids.binary_search(&v).is_ok()
    }
}

/// How the first k-means restart places its initial centroids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitPolicy {
    /// Evenly spaced between the smallest and largest weight.
    #[default]
    EvenlySpaced,
    /// k-means++ seeding from the weights with the seeded generator.
    PlusPlus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KMeansOptions {
    pub max_iters: usize,
    pub seed: u64,
    pub init: InitPolicy,
    /// Total runs. Only the first uses `init`; the second grows the clustering
    /// one centroid at a time, later ones alternate uniform sampling and
    /// k-means++.
    pub restarts: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            max_iters: 100,
            seed: 0,
            init: InitPolicy::EvenlySpaced,
            restarts: 1,
        }
    }
}

/// Result of [`kmeans_quantize`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quantized {
    pub dictionary: WeightDictionary,
    /// Bin index of every input weight in `dictionary`.
    pub assignments: Vec<usize>,
    pub sse: i128,
    /// Lloyd and boundary-refinement iterations run by the winning restart.
    pub iterations: usize,
    /// SSE after every iteration of the winning restart.
    pub sse_history: Vec<i128>,
}

/// Integer division rounding half away from zero.
pub(crate) fn div_round(num: i128, den: i128) -> i128 {
    debug_assert!(den > 0);
    let q = num / den;
    let r = num % den;
    if 2 * r.abs() >= den {
        q + num.signum()
    } else {
        q
    }
}

fn sq(d: i128) -> i128 {
    d * d
}

fn nearest_unsorted(centroids: &[i64], v: i64) -> usize {
    let mut best = 0;
    let mut best_d = sq(v as i128 - centroids[0] as i128);
    for (j, &c) in centroids.iter().enumerate().skip(1) {
        let d = sq(v as i128 - c as i128);
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

fn sse_of(weights: &[i64], centroids: &[i64], assign: &[usize]) -> i128 {
    weights
        .iter()
        .zip(assign)
        .map(|(&w, &a)| sq(w as i128 - centroids[a] as i128))
        .sum()
}

fn evenly_spaced(weights: &[i64], bins: usize) -> Vec<i64> {
    let lo = *weights.iter().min().unwrap() as i128;
    let hi = *weights.iter().max().unwrap() as i128;
    let steps = (bins - 1) as i128;
    (0..bins)
        .map(|j| (lo + div_round((hi - lo) * j as i128, steps)) as i64)
        .collect()
}

/// Distinct weight values drawn uniformly.
fn sampled(distinct: &[i64], bins: usize, rng: &mut ChaCha8Rng) -> Vec<i64> {
    distinct.choose_multiple(rng, bins).copied().collect()
}

/// Upper bound on candidate values tried per step of [`incremental`].
const INCREMENTAL_CANDIDATES: usize = 64;
/// Inputs above these sizes skip the incremental restart; it refines
/// `bins * candidates` runs per step.
const INCREMENTAL_MAX_BINS: usize = 16;
const INCREMENTAL_MAX_WEIGHTS: usize = 4096;
/// Partial solutions kept per step of [`incremental`].
const INCREMENTAL_BEAM: usize = 3;

/// Incremental seeding: solve for one cluster, then grow one cluster at a
/// time, trying each candidate weight as the new centroid of each kept
/// partial solution and keeping the best few refined results. Candidates are
/// evenly spaced quantiles of the distinct values when there are too many to
/// try them all.
fn incremental(weights: &[i64], distinct: &[i64], bins: usize, max_iters: usize) -> Vec<i64> {
    let step = distinct.len().div_ceil(INCREMENTAL_CANDIDATES).max(1);
    let candidates: Vec<i64> = distinct.iter().copied().step_by(step).collect();
    let total: i128 = weights.iter().map(|&w| w as i128).sum();
    let mut beam = vec![vec![div_round(total, weights.len() as i128) as i64]];
    for _ in 1..bins {
        let mut grown: Vec<(i128, Vec<i64>)> = Vec::new();
        for base in &beam {
            for &x in &candidates {
                let mut init = base.clone();
                init.push(x);
                let run = refine(weights, init, max_iters);
                let mut key = run.centroids.clone();
                key.sort_unstable();
                if grown.iter().all(|(_, c)| *c != key) {
                    grown.push((*run.history.last().unwrap(), key));
                }
            }
        }
        grown.sort();
        grown.truncate(INCREMENTAL_BEAM);
        beam = grown.into_iter().map(|(_, c)| c).collect();
    }
    swap_search(weights, &candidates, beam.swap_remove(0), max_iters)
}

/// Replaces one centroid at a time with a candidate value and keeps the
/// refined result whenever it lowers the SSE, until no swap helps.
fn swap_search(weights: &[i64], candidates: &[i64], start: Vec<i64>, max_iters: usize) -> Vec<i64> {
    let mut best = refine(weights, start, max_iters);
    let mut best_sse = *best.history.last().unwrap();
    let mut improved = true;
    while improved && best_sse > 0 {
        improved = false;
        'search: for j in 0..best.centroids.len() {
            for &x in candidates {
                if best.centroids.contains(&x) {
                    continue;
                }
                let mut init = best.centroids.clone();
                init[j] = x;
                let run = refine(weights, init, max_iters);
                let sse = *run.history.last().unwrap();
                if sse < best_sse {
                    best = run;
                    best_sse = sse;
                    improved = true;
                    break 'search;
                }
            }
        }
    }
    best.centroids
}

/// k-means++ seeding: each new centroid is a weight drawn with probability
/// proportional to its squared distance from the nearest centroid so far.
fn plus_plus(weights: &[i64], bins: usize, rng: &mut ChaCha8Rng) -> Vec<i64> {
    let mut centroids = Vec::with_capacity(bins);
    centroids.push(weights[rng.gen_range(0..weights.len())]);
    let mut dist: Vec<i128> = weights
        .iter()
        .map(|&w| sq(w as i128 - centroids[0] as i128))
        .collect();
    while centroids.len() < bins {
        let total: i128 = dist.iter().sum();
        let next = if total == 0 {
            weights[rng.gen_range(0..weights.len())]
        } else {
            // Draw in u128 so large spreads do not bias the pick.
            let mut target = rng.gen_range(0..total as u128) as i128;
            let mut pick = weights.len() - 1;
            for (i, &d) in dist.iter().enumerate() {
                if target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            weights[pick]
        };
        centroids.push(next);
        for (d, &w) in dist.iter_mut().zip(weights) {
            *d = (*d).min(sq(w as i128 - next as i128));
        }
    }
    centroids
}

struct Run {
    centroids: Vec<i64>,
    iterations: usize,
    history: Vec<i128>,
}

/// Running `(count, sum, sum of squares)` of one cluster.
#[derive(Clone, Copy, Default)]
struct Moments {
    n: i128,
    sum: i128,
    sq_sum: i128,
}

impl Moments {
    fn with(self, x: i128, sign: i128) -> Self {
        Self {
            n: self.n + sign,
            sum: self.sum + sign * x,
            sq_sum: self.sq_sum + sign * x * x,
        }
    }

    /// SSE against the rounded mean.
    fn cost(self) -> i128 {
        if self.n == 0 {
            return 0;
        }
        let c = div_round(self.sum, self.n);
        self.sq_sum - 2 * c * self.sum + self.n * c * c
    }
}

fn moments(weights: &[i64], assign: &[usize], bins: usize) -> Vec<Moments> {
    let mut m = vec![Moments::default(); bins];
    for (&w, &a) in weights.iter().zip(assign) {
        m[a] = m[a].with(w as i128, 1);
    }
    m
}

/// Lloyd iterations until the assignment is stable or the budget runs out.
fn lloyd_steps(
    weights: &[i64],
    centroids: &mut [i64],
    assign: &mut Vec<usize>,
    history: &mut Vec<i128>,
    iterations: &mut usize,
    max_iters: usize,
) {
    let bins = centroids.len();
    while *iterations < max_iters {
        *iterations += 1;

        let stats = moments(weights, assign, bins);
        for (c, m) in centroids.iter_mut().zip(&stats) {
            if m.n > 0 {
                *c = div_round(m.sum, m.n) as i64;
            }
        }
        // Empty clusters restart at the point farthest from its own centroid.
        let mut taken = vec![false; weights.len()];
        for j in 0..bins {
            if stats[j].n > 0 {
                continue;
            }
            let far = weights
                .iter()
                .zip(assign.iter())
                .enumerate()
                .filter(|(i, _)| !taken[*i])
                .map(|(i, (&w, &a))| (i, sq(w as i128 - centroids[a] as i128)))
                .filter(|&(_, d)| d > 0)
                .fold(None::<(usize, i128)>, |best, cur| match best {
                    Some(b) if b.1 >= cur.1 => Some(b),
                    _ => Some(cur),
                });
            if let Some((i, _)) = far {
                taken[i] = true;
                centroids[j] = weights[i];
            }
        }

        let next: Vec<usize> = weights
            .iter()
            .map(|&w| nearest_unsorted(centroids, w))
            .collect();
        history.push(sse_of(weights, centroids, &next));
        if next == *assign {
            break;
        }
        *assign = next;
    }
}

/// Re-cuts the boundary between each pair of neighbouring clusters at the
/// cheapest position, one pair at a time. Returns whether any cut moved.
fn boundary_pass(weights: &[i64], assign: &mut [usize], bins: usize) -> bool {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by_key(|&i| weights[i]);
    // Clusters as runs over the sorted order, left to right.
    let mut labels: Vec<usize> = Vec::with_capacity(bins);
    let mut bounds: Vec<usize> = vec![0];
    for (pos, &i) in order.iter().enumerate() {
        if labels.last() != Some(&assign[i]) {
            if !labels.is_empty() {
                bounds.push(pos);
            }
            labels.push(assign[i]);
        }
    }
    bounds.push(order.len());
    if labels.len() != {
        let mut l = labels.clone();
        l.sort_unstable();
        l.dedup();
        l.len()
    } {
        // Not contiguous; leave it to the next Lloyd step.
        return false;
    }

    let value = |pos: usize| weights[order[pos]] as i128;
    let run_cost = |a: usize, b: usize| {
        (a..b)
            .fold(Moments::default(), |m, p| m.with(value(p), 1))
            .cost()
    };
    let mut moved = false;
    for k in 0..labels.len().saturating_sub(1) {
        let (a, mid, b) = (bounds[k], bounds[k + 1], bounds[k + 2]);
        let current = run_cost(a, mid) + run_cost(mid, b);
        let (best_cut, best) = (a + 1..b)
            .map(|m| (m, run_cost(a, m) + run_cost(m, b)))
            .min_by_key(|&(m, c)| (c, m))
            .unwrap();
        if best < current {
            bounds[k + 1] = best_cut;
            moved = true;
        }
    }
    if moved {
        for (k, &label) in labels.iter().enumerate() {
            for pos in bounds[k]..bounds[k + 1] {
                assign[order[pos]] = label;
            }
        }
    }
    moved
}

/// Lloyd iterations, then boundary re-cuts to escape Lloyd fixed points,
/// alternating until neither changes anything.
fn refine(weights: &[i64], mut centroids: Vec<i64>, max_iters: usize) -> Run {
    let bins = centroids.len();
    let mut assign: Vec<usize> = weights
        .iter()
        .map(|&w| nearest_unsorted(&centroids, w))
        .collect();
    let mut history = vec![sse_of(weights, &centroids, &assign)];
    let mut iterations = 0;

    loop {
        lloyd_steps(
            weights,
            &mut centroids,
            &mut assign,
            &mut history,
            &mut iterations,
            max_iters,
        );
        if iterations >= max_iters || !boundary_pass(weights, &mut assign, bins) {
            break;
        }
        iterations += 1;
        for (c, m) in centroids.iter_mut().zip(moments(weights, &assign, bins)) {
            if m.n > 0 {
                *c = div_round(m.sum, m.n) as i64;
            }
        }
        assign = weights
            .iter()
            .map(|&w| nearest_unsorted(&centroids, w))
            .collect();
        history.push(sse_of(weights, &centroids, &assign));
    }

    Run {
        centroids,
        iterations,
        history,
    }
}

/// Clusters `weights` into at most `bins` shared values.
///
/// Centroids are arithmetic means rounded half away from zero, so the
/// dictionary stays on the working integer scale.
pub fn kmeans_quantize(weights: &[i64], bins: usize, opts: &KMeansOptions) -> Result<Quantized> {
    if weights.is_empty() {
        return Err(Error::EmptyWeights);
    }
    if !(MIN_BINS..=MAX_BINS).contains(&bins) {
        return Err(Error::InvalidBinCount(bins));
    }
    if opts.max_iters == 0 {
        return Err(crate::error::invalid("max_iters", "must be at least 1"));
    }

    let mut distinct = weights.to_vec();
    distinct.sort_unstable();
    distinct.dedup();

    let (centroids, iterations, history) = if distinct.len() <= bins {
        (distinct, 0, vec![0])
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut best: Option<(i128, Run)> = None;
        for restart in 0..opts.restarts.max(1) {
            let init = match (restart, opts.init) {
                (0, InitPolicy::EvenlySpaced) => evenly_spaced(weights, bins),
                (0, InitPolicy::PlusPlus) => plus_plus(weights, bins, &mut rng),
                (1, _)
                    if bins <= INCREMENTAL_MAX_BINS && weights.len() <= INCREMENTAL_MAX_WEIGHTS =>
                {
                    incremental(weights, &distinct, bins, opts.max_iters)
                }
                (r, _) if r % 2 == 0 => sampled(&distinct, bins, &mut rng),
                _ => plus_plus(weights, bins, &mut rng),
            };
            let run = refine(weights, init, opts.max_iters);
            let sse = *run.history.last().unwrap();
            if best.as_ref().is_none_or(|(b, _)| sse < *b) {
                best = Some((sse, run));
            }
        }
        let (_, run) = best.unwrap();
        (run.centroids, run.iterations, run.history)
    };

    let dictionary = WeightDictionary::new(centroids)?;
    let assignments: Vec<usize> = weights.iter().map(|&w| dictionary.nearest(w)).collect();
    let sse = sse_of(weights, dictionary.centroids(), &assignments);
    Ok(Quantized {
        dictionary,
        assignments,
        sse,
        iterations,
        sse_history: history,
    })
}

/// Sum of squared differences between each weight and its assigned centroid.
pub fn quantization_sse(
    weights: &[i64],
    dict: &WeightDictionary,
    assignments: &[usize],
) -> Result<i128> {
    if weights.len() != assignments.len() {
        return Err(Error::LengthMismatch {
            expected: weights.len(),
            got: assignments.len(),
        });
    }
    if let Some(&bad) = assignments.iter().find(|&&a| a >= dict.len()) {
        return Err(Error::BinOutOfRange {
            index: bad,
            bins: dict.len(),
        });
    }
    Ok(sse_of(weights, dict.centroids(), assignments))
}

/// A kernel stored as per-position bin indices plus the shared dictionary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedKernel {
    shape: [usize; 4],
    indices: Vec<u8>,
    dictionary: WeightDictionary,
    word: WordSpec,
}

impl EncodedKernel {
    /// Shape is `[M, C, KY, KX]`; every index must address the dictionary.
    pub fn new(
        shape: [usize; 4],
        indices: Vec<u8>,
        dictionary: WeightDictionary,
        word: WordSpec,
    ) -> Result<Self> {
        let len: usize = shape.iter().product();
        if shape.contains(&0) {
            return Err(Error::InvalidShape(shape.to_vec()));
        }
        if indices.len() != len {
            return Err(Error::LengthMismatch {
                expected: len,
                got: indices.len(),
            });
        }
        if let Some(&bad) = indices.iter().find(|&&i| i as usize >= dictionary.len()) {
            return Err(Error::BinOutOfRange {
                index: bad as usize,
                bins: dictionary.len(),
            });
        }
        for &c in dictionary.centroids() {
            word.check(c)?;
        }
        Ok(Self {
            shape,
            indices,
            dictionary,
            word,
        })
    }

    pub fn shape(&self) -> [usize; 4] {
        self.shape
    }

    pub fn indices(&self) -> &[u8] {
        &self.indices
    }

    pub fn dictionary(&self) -> &WeightDictionary {
        &self.dictionary
    }

    pub fn word(&self) -> WordSpec {
        self.word
    }

    pub fn bins(&self) -> usize {
        self.dictionary.len()
    }

    /// Bin index at kernel position `(m, c, ky, kx)`.
    #[inline]
    pub fn index_at(&self, m: usize, c: usize, ky: usize, kx: usize) -> usize {
        let [_, cs, kys, kxs] = self.shape;
        self.indices[((m * cs + c) * kys + ky) * kxs + kx] as usize
    }
}

/// Replaces every kernel weight with the index of its nearest centroid.
///
/// Every centroid must be representable in the kernel word.
pub fn encode_kernel(kernel: &QTensor, dict: &WeightDictionary) -> Result<EncodedKernel> {
    let shape: [usize; 4] = kernel
        .shape()
        .try_into()
        .map_err(|_| Error::ShapeMismatch {
            what: "kernel",
            expected: vec![0; 4],
            got: kernel.shape().to_vec(),
        })?;
    let indices = kernel
        .data()
        .iter()
        .map(|&w| dict.nearest(w) as u8)
        .collect();
    EncodedKernel::new(shape, indices, dict.clone(), kernel.word())
}

/// Expands an encoded kernel back into centroid values.
pub fn decode_kernel(ek: &EncodedKernel) -> QTensor {
    let centroids = ek.dictionary.centroids();
    let data: Vec<i128> = ek
        .indices
        .iter()
        .map(|&i| centroids[i as usize] as i128)
        .collect();
    let data = data.iter().map(|&v| wrap_to_word(v, ek.word)).collect();
    QTensor::new(ek.shape.to_vec(), ek.word, data).expect("decoded values fit the kernel word")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dict(v: &[i64]) -> WeightDictionary {
        WeightDictionary::new(v.to_vec()).unwrap()
    }

    fn w(bits: u32) -> WordSpec {
        WordSpec::new(bits).unwrap()
    }

    #[test]
    fn dictionary_canonicalizes() {
        let d = dict(&[17, 4, 13, 20, 17]);
        assert_eq!(d.centroids(), &[4, 13, 17, 20]);
        assert_eq!(d.len(), 4);
        assert_eq!(d.index_bits(), 2);
        assert_eq!(dict(&[1]).index_bits(), 0);
        assert_eq!(dict(&[1, 2, 3]).index_bits(), 2);
        assert_eq!(dict(&(0..16).collect::<Vec<_>>()).index_bits(), 4);
        assert!(WeightDictionary::new(vec![]).is_err());
        assert!(WeightDictionary::new((0..257).collect()).is_err());
    }

    #[test]
    fn nearest_breaks_ties_low() {
        let d = dict(&[0, 10]);
        assert_eq!(d.nearest(5), 0);
        assert_eq!(d.nearest(6), 1);
        assert_eq!(d.nearest(-100), 0);
        assert_eq!(d.nearest(100), 1);
        assert_eq!(dict(&[i64::MIN, i64::MAX]).nearest(0), 1);
        assert_eq!(dict(&[i64::MIN, i64::MAX]).nearest(-1), 0);
    }

    #[test]
    fn degenerate_cluster() {
        let q = kmeans_quantize(&[5; 9], 4, &KMeansOptions::default()).unwrap();
        assert_eq!(q.dictionary.centroids(), &[5]);
        assert!(q.assignments.iter().all(|&a| a == 0));
        assert_eq!(q.sse, 0);
    }

    #[test]
    fn enough_bins_is_lossless() {
        let q = kmeans_quantize(&[17, 4, 13, 20], 4, &KMeansOptions::default()).unwrap();
        assert_eq!(q.dictionary.centroids(), &[4, 13, 17, 20]);
        assert_eq!(q.assignments, vec![2, 0, 1, 3]);
        assert_eq!(q.sse, 0);
    }

    #[test]
    fn two_clusters_split_at_the_gap() {
        // Optimal contiguous 2-partition is {0,1}|{9,10}; means 0.5 and 9.5.
        let q = kmeans_quantize(&[0, 10, 90, 100], 2, &KMeansOptions::default()).unwrap();
        assert_eq!(q.dictionary.centroids(), &[5, 95]);
        assert_eq!(q.assignments, vec![0, 0, 1, 1]);
        assert_eq!(q.sse, 100);

        let q = kmeans_quantize(&[0, 1, 9, 10], 2, &KMeansOptions::default()).unwrap();
        assert_eq!(q.dictionary.centroids(), &[1, 10]);
        assert_eq!(q.sse, 2);
    }

    #[test]
    fn rejects_bad_input() {
        let opts = KMeansOptions::default();
        assert_eq!(kmeans_quantize(&[], 4, &opts), Err(Error::EmptyWeights));
        assert_eq!(
            kmeans_quantize(&[1, 2], 1, &opts),
            Err(Error::InvalidBinCount(1))
        );
        assert_eq!(
            kmeans_quantize(&[1, 2], 257, &opts),
            Err(Error::InvalidBinCount(257))
        );
        let zero = KMeansOptions {
            max_iters: 0,
            ..opts
        };
        assert!(kmeans_quantize(&[1, 2], 2, &zero).is_err());
    }

    #[test]
    fn empty_cluster_is_reseeded() {
        // Evenly spaced init puts the middle centroid in a gap.
        let weights = [0, 1, 2, 3, 100, 101, 102, 103];
        let q = kmeans_quantize(&weights, 3, &KMeansOptions::default()).unwrap();
        assert_eq!(q.dictionary.len(), 3);
        assert!(
            q.sse
                < quantization_sse(&weights, &dict(&[2, 102]), &[0, 0, 0, 0, 1, 1, 1, 1]).unwrap()
        );
    }

    #[test]
    fn sse_examples() {
        assert_eq!(
            quantization_sse(&[0, 10, 90, 100], &dict(&[5, 95]), &[0, 0, 1, 1]).unwrap(),
            4 * 25
        );
        assert_eq!(quantization_sse(&[7], &dict(&[7]), &[0]).unwrap(), 0);
        assert!(quantization_sse(&[7], &dict(&[7]), &[1]).is_err());
        assert!(quantization_sse(&[7, 8], &dict(&[7]), &[0]).is_err());
        let q = kmeans_quantize(&[42], 2, &KMeansOptions::default()).unwrap();
        assert_eq!(q.sse, 0);
    }

    #[test]
    fn div_round_half_away() {
        assert_eq!(div_round(5, 2), 3);
        assert_eq!(div_round(-5, 2), -3);
        assert_eq!(div_round(4, 3), 1);
        assert_eq!(div_round(-4, 3), -1);
        assert_eq!(div_round(0, 7), 0);
    }

    fn worked_kernel() -> QTensor {
        QTensor::new(vec![1, 5, 1, 1], w(8), vec![17, 4, 13, 20, 17]).unwrap()
    }

    #[test]
    fn encode_worked_example() {
        let ek = encode_kernel(&worked_kernel(), &dict(&[4, 13, 17, 20])).unwrap();
        assert_eq!(ek.indices(), &[2, 0, 1, 3, 2]);
        assert_eq!(ek.index_at(0, 3, 0, 0), 3);
        assert_eq!(decode_kernel(&ek), worked_kernel());
    }

    #[test]
    fn encode_constant_kernel() {
        let k = QTensor::new(vec![2, 1, 1, 3], w(8), vec![9; 6]).unwrap();
        let ek = encode_kernel(&k, &dict(&[0, 8, 20])).unwrap();
        assert!(ek.indices().iter().all(|&i| i == 1));
        assert_eq!(decode_kernel(&ek).data(), &[8; 6]);
    }

    #[test]
    fn decode_all_zero_indices() {
        let ek = EncodedKernel::new([1, 2, 1, 1], vec![0, 0], dict(&[-3, 4]), w(8)).unwrap();
        assert_eq!(decode_kernel(&ek).data(), &[-3, -3]);
    }

    #[test]
    fn encoded_kernel_validation() {
        assert!(EncodedKernel::new([1, 1, 1, 2], vec![0, 2], dict(&[1, 2]), w(8)).is_err());
        assert!(EncodedKernel::new([1, 1, 1, 2], vec![0], dict(&[1, 2]), w(8)).is_err());
        assert!(EncodedKernel::new([1, 1, 1, 1], vec![0], dict(&[300]), w(8)).is_err());
        let flat = QTensor::new(vec![5], w(8), vec![17, 4, 13, 20, 17]).unwrap();
        assert!(encode_kernel(&flat, &dict(&[4])).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn nearest_centroid_property(
            weights in prop::collection::vec(-1000i64..1000, 1..40),
            cents in prop::collection::vec(-1000i64..1000, 1..12),
        ) {
            let d = WeightDictionary::new(cents).unwrap();
            for &x in &weights {
                let idx = d.nearest(x);
                let best = (x - d.centroids()[idx]).abs();
                for (j, &c) in d.centroids().iter().enumerate() {
                    let dist = (x - c).abs();
                    prop_assert!(best <= dist);
                    if dist == best {
                        prop_assert!(idx <= j);
                    }
                }
            }
        }

        #[test]
        fn sse_never_increases(
            weights in prop::collection::vec(-500i64..500, 1..32),
            bins in 2usize..7,
            seed in any::<u64>(),
        ) {
            let opts = KMeansOptions { seed, restarts: 2, ..KMeansOptions::default() };
            let q = kmeans_quantize(&weights, bins, &opts).unwrap();
            for pair in q.sse_history.windows(2) {
                prop_assert!(pair[1] <= pair[0], "{:?}", q.sse_history);
            }
            prop_assert!(q.iterations <= opts.max_iters);
            prop_assert!(q.sse <= *q.sse_history.last().unwrap());
            prop_assert_eq!(q.sse, quantization_sse(&weights, &q.dictionary, &q.assignments).unwrap());
            prop_assert!(q.dictionary.len() <= bins);
        }

        #[test]
        fn encoding_ignores_centroid_order(
            data in prop::collection::vec(-100i64..100, 1..24),
            mut cents in prop::collection::vec(-100i64..100, 1..8),
            seed in any::<u64>(),
        ) {
            let kernel = QTensor::new(vec![1, 1, 1, data.len()], w(8), data).unwrap();
            let a = encode_kernel(&kernel, &WeightDictionary::new(cents.clone()).unwrap()).unwrap();
            cents.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let b = encode_kernel(&kernel, &WeightDictionary::new(cents).unwrap()).unwrap();
            prop_assert_eq!(decode_kernel(&a), decode_kernel(&b));
            prop_assert_eq!(a, b);
        }

        #[test]
        fn lossless_when_values_are_centroids(
            cents in prop::collection::vec(-100i64..100, 1..8),
            picks in prop::collection::vec(0usize..64, 1..20),
        ) {
            let d = WeightDictionary::new(cents).unwrap();
            let data: Vec<i64> = picks.iter().map(|&p| d.centroids()[p % d.len()]).collect();
            let kernel = QTensor::new(vec![data.len(), 1, 1, 1], w(8), data).unwrap();
            prop_assert_eq!(decode_kernel(&encode_kernel(&kernel, &d).unwrap()), kernel);
        }
    }
}
