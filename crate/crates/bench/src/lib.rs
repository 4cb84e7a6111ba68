//! Input generators shared by the criterion benches.

use pasm_core::{encode_kernel, ConvConfig, EncodedKernel, QTensor, WeightDictionary, WordSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random layer of the given shape with a `bins`-entry dictionary.
pub fn random_layer(
    size: usize,
    c: usize,
    m: usize,
    k: usize,
    bins: usize,
    seed: u64,
) -> (QTensor, EncodedKernel, ConvConfig) {
    let word = WordSpec::new(16).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = ConvConfig::new((size, size), c, m, (k, k), 1, word, word);
    let image: Vec<i64> = (0..c * size * size)
        .map(|_| rng.gen_range(-1000..1000))
        .collect();
    let image = QTensor::new(vec![c, size, size], word, image).unwrap();
    let centroids: Vec<i64> = (0..bins as i64).map(|b| b * 37 - 200).collect();
    let dict = WeightDictionary::new(centroids).unwrap();
    let kernel: Vec<i64> = (0..m * c * k * k)
        .map(|_| dict.centroids()[rng.gen_range(0..dict.len())])
        .collect();
    let kernel = QTensor::new(vec![m, c, k, k], word, kernel).unwrap();
    let ek = encode_kernel(&kernel, &dict).unwrap();
    (image, ek, cfg)
}

/// `lanes` random streams of `n` pairs over `bins` bins.
pub fn random_streams(lanes: usize, n: usize, bins: usize, seed: u64) -> Vec<Vec<(i64, usize)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..lanes)
        .map(|_| {
            (0..n)
                .map(|_| (rng.gen_range(-1000..1000), rng.gen_range(0..bins)))
                .collect()
        })
        .collect()
}
