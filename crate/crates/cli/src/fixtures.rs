//! Bundled fixtures for `selftest` and `run --fixture`.

use std::path::Path;

use pasm_core::{encode_kernel, ConvConfig, EncodedKernel, QTensor, WeightDictionary, WordSpec};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CliError, CliResult};

pub const WORKED_IMAGE: &str = include_str!("../fixtures/worked_image.txt");
pub const WORKED_KERNEL: &str = include_str!("../fixtures/worked_kernel.txt");
pub const WORKED_OUT: &str = include_str!("../fixtures/worked_out.txt");
pub const MACOPS: &str = include_str!("../fixtures/macops.csv");
pub const CYCLES: &str = include_str!("../fixtures/cycles.csv");
pub const GATES: &str = include_str!("../fixtures/gates.csv");

/// File names of the fixture set, in the order `selftest` reads them.
pub const FILES: [&str; 6] = [
    "worked_image.txt",
    "worked_kernel.txt",
    "worked_out.txt",
    "macops.csv",
    "cycles.csv",
    "gates.csv",
];

#[derive(Debug, Clone)]
pub struct FixtureSet {
    pub worked_image: String,
    pub worked_kernel: String,
    pub worked_out: String,
    pub macops: String,
    pub cycles: String,
    pub gates: String,
}

impl FixtureSet {
    pub fn bundled() -> Self {
        Self {
            worked_image: WORKED_IMAGE.into(),
            worked_kernel: WORKED_KERNEL.into(),
            worked_out: WORKED_OUT.into(),
            macops: MACOPS.into(),
            cycles: CYCLES.into(),
            gates: GATES.into(),
        }
    }

    pub fn from_dir(dir: &Path) -> CliResult<Self> {
        let read = |name: &str| {
            std::fs::read_to_string(dir.join(name)).map_err(|e| {
                CliError::field("fixtures", format!("{}: {e}", dir.join(name).display()))
            })
        };
        Ok(Self {
            worked_image: read(FILES[0])?,
            worked_kernel: read(FILES[1])?,
            worked_out: read(FILES[2])?,
            macops: read(FILES[3])?,
            cycles: read(FILES[4])?,
            gates: read(FILES[5])?,
        })
    }
}

/// Splits a headed CSV into trimmed string cells after checking the header.
pub fn parse_csv(name: &str, text: &str, header: &str) -> CliResult<Vec<Vec<String>>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == header => {}
        other => {
            return Err(CliError::field(
                name,
                format!("expected header {header:?}, found {other:?}"),
            ))
        }
    }
    let cols = header.split(',').count();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
        if row.len() != cols {
            return Err(CliError::field(
                name,
                format!("row {}: {} columns, expected {cols}", i + 1, row.len()),
            ));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::field(name, "no rows"));
    }
    Ok(rows)
}

pub fn parse_u64(name: &str, s: &str) -> CliResult<u64> {
    s.parse()
        .map_err(|e| CliError::field(name, format!("{s:?}: {e}")))
}

/// A fixture layer: image, encoded kernel and matching config.
pub struct Layer {
    pub image: QTensor,
    pub kernel: EncodedKernel,
    pub cfg: ConvConfig,
}

/// The five-pair worked example as a 1x1 convolution over 5 channels.
pub fn worked() -> CliResult<Layer> {
    let image = crate::io::parse_text(WORKED_IMAGE)?;
    let kernel = crate::io::parse_text(WORKED_KERNEL)?;
    let cfg = ConvConfig::new((1, 1), 5, 1, (1, 1), 1, image.word(), kernel.word());
    let dict = WeightDictionary::new(kernel.data().to_vec())?;
    let kernel = encode_kernel(&kernel, &dict)?;
    Ok(Layer { image, kernel, cfg })
}

fn random_dictionary(
    rng: &mut ChaCha8Rng,
    bins: usize,
    word: WordSpec,
) -> CliResult<WeightDictionary> {
    let span = word.max_value() as i128 - word.min_value() as i128 + 1;
    if span < bins as i128 {
        return Err(CliError::field(
            "b",
            format!("{bins} bins do not fit a {}-bit word", word.width()),
        ));
    }
    let mut centroids = std::collections::BTreeSet::new();
    while centroids.len() < bins {
        centroids.insert(rng.gen_range(word.min_value()..=word.max_value()));
    }
    Ok(WeightDictionary::new(centroids.into_iter().collect())?)
}

fn random_kernel(rng: &mut ChaCha8Rng, cfg: &ConvConfig, bins: usize) -> CliResult<EncodedKernel> {
    let dict = random_dictionary(rng, bins, cfg.weight_word)?;
    let shape = cfg.kernel_shape();
    let len: usize = shape.iter().product();
    let values: Vec<i64> = (0..len)
        .map(|_| *dict.centroids().choose(rng).expect("non-empty dictionary"))
        .collect();
    let kernel = QTensor::new(shape.to_vec(), cfg.weight_word, values)?;
    Ok(encode_kernel(&kernel, &dict)?)
}

/// Image and kernel drawn uniformly over their full word ranges.
pub fn random(cfg: &ConvConfig, bins: usize, seed: u64) -> CliResult<Layer> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let word = cfg.image_word;
    let shape = cfg.image_shape();
    let data = (0..shape.iter().product::<usize>())
        .map(|_| rng.gen_range(word.min_value()..=word.max_value()))
        .collect();
    let image = QTensor::new(shape.to_vec(), word, data)?;
    let kernel = random_kernel(&mut rng, cfg, bins)?;
    Ok(Layer {
        image,
        kernel,
        cfg: cfg.clone(),
    })
}

/// All-zero image with a random kernel; the output is the bias map.
pub fn zero(cfg: &ConvConfig, bins: usize, seed: u64) -> CliResult<Layer> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let image = QTensor::zeros(cfg.image_shape().to_vec(), cfg.image_word)?;
    let kernel = random_kernel(&mut rng, cfg, bins)?;
    Ok(Layer {
        image,
        kernel,
        cfg: cfg.clone(),
    })
}

/// `lanes` seeded streams of `n` pairs, values spanning `word`.
pub fn random_streams(
    lanes: usize,
    n: usize,
    bins: usize,
    word: WordSpec,
    seed: u64,
) -> Vec<Vec<(i64, usize)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..lanes)
        .map(|_| {
            (0..n)
                .map(|_| {
                    (
                        rng.gen_range(word.min_value()..=word.max_value()),
                        rng.gen_range(0..bins),
                    )
                })
                .collect()
        })
        .collect()
}

/// `bins` seeded weights spanning `word`.
pub fn random_weights(bins: usize, word: WordSpec, seed: u64) -> Vec<i64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    (0..bins)
        .map(|_| rng.gen_range(word.min_value()..=word.max_value()))
        .collect()
}
