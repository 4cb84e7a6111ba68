//! Convolution layer in three schedules that agree bit for bit:
//!
//! * [`conv_reference`]: one multiply-accumulate per (image, weight) pair.
//! * [`conv_weight_shared`]: the same loop with each weight fetched from the
//!   dictionary through its bin index.
//! * [`conv_pasm`]: a parallel-accumulate phase that sums image values into
//!   one bin per shared weight, then a post-pass that multiplies each bin by
//!   its centroid once.
//!
//! Sums are carried in wrapping `i128` arithmetic and stored into the
//! accumulator word, so distributivity holds exactly modulo the word size.

use crate::error::{invalid, Error, Result};
use crate::quantize::{decode_kernel, EncodedKernel};
use crate::tensor::{wrap_to_word, AccSpec, QTensor, WordSpec};

/// Shape and layer parameters of one convolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvConfig {
    pub ih: usize,
    pub iw: usize,
    pub c: usize,
    pub m: usize,
    pub ky: usize,
    pub kx: usize,
    pub stride: usize,
    /// One bias per output kernel, at the product scale.
    pub bias: Vec<i64>,
    pub relu: bool,
    pub image_word: WordSpec,
    pub weight_word: WordSpec,
}

impl ConvConfig {
    /// Config with zero bias and ReLU off.
    pub fn new(
        (ih, iw): (usize, usize),
        c: usize,
        m: usize,
        (ky, kx): (usize, usize),
        stride: usize,
        image_word: WordSpec,
        weight_word: WordSpec,
    ) -> Self {
        Self {
            ih,
            iw,
            c,
            m,
            ky,
            kx,
            stride,
            bias: vec![0; m],
            relu: false,
            image_word,
            weight_word,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("ih", self.ih),
            ("iw", self.iw),
            ("c", self.c),
            ("m", self.m),
            ("ky", self.ky),
            ("kx", self.kx),
            ("s", self.stride),
        ];
        for (field, v) in positive {
            if v == 0 {
                return Err(invalid(field, "must be at least 1"));
            }
        }
        if self.ky.is_multiple_of(2) {
            return Err(invalid(
                "ky",
                format!("kernel height {} must be odd", self.ky),
            ));
        }
        if self.kx.is_multiple_of(2) {
            return Err(invalid(
                "kx",
                format!("kernel width {} must be odd", self.kx),
            ));
        }
        if self.ky > self.ih {
            return Err(invalid(
                "ky",
                format!("{} exceeds image height {}", self.ky, self.ih),
            ));
        }
        if self.kx > self.iw {
            return Err(invalid(
                "kx",
                format!("{} exceeds image width {}", self.kx, self.iw),
            ));
        }
        if self.bias.len() != self.m {
            return Err(invalid(
                "bias",
                format!("expected {} entries, got {}", self.m, self.bias.len()),
            ));
        }
        Ok(())
    }

    /// Products summed into each output element, `C * KY * KX`.
    pub fn macs_per_output(&self) -> usize {
        self.c * self.ky * self.kx
    }

    pub fn image_shape(&self) -> [usize; 3] {
        [self.c, self.ih, self.iw]
    }

    pub fn kernel_shape(&self) -> [usize; 4] {
        [self.m, self.c, self.ky, self.kx]
    }

    pub fn acc_spec(&self) -> AccSpec {
        AccSpec::for_products(
            self.image_word,
            self.weight_word,
            self.macs_per_output() as u64,
        )
    }
}

/// Output height and width for valid padding.
pub fn output_dims(cfg: &ConvConfig) -> (usize, usize) {
    (
        (cfg.ih - cfg.ky) / cfg.stride + 1,
        (cfg.iw - cfg.kx) / cfg.stride + 1,
    )
}

/// Output feature map `[M][OH][OW]` in the accumulator word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvResult {
    pub out: QTensor,
    pub oh: usize,
    pub ow: usize,
    pub acc: AccSpec,
}

impl ConvResult {
    pub fn get(&self, m: usize, oh: usize, ow: usize) -> i64 {
        self.out.data()[(m * self.oh + oh) * self.ow + ow]
    }
}

/// Per-bin accumulator registers of one PAS unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinAccumulators {
    bins: Vec<i128>,
}

impl BinAccumulators {
    pub fn new(bins: usize) -> Self {
        Self {
            bins: vec![0; bins],
        }
    }

    pub fn from_values(bins: Vec<i128>) -> Self {
        Self { bins }
    }

    pub fn reset(&mut self) {
        self.bins.fill(0);
    }

    pub fn add(&mut self, value: i64, bin: usize) -> Result<()> {
        if bin >= self.bins.len() {
            return Err(Error::BinOutOfRange {
                index: bin,
                bins: self.bins.len(),
            });
        }
        self.accumulate(value, bin);
        Ok(())
    }

    /// Unchecked form of [`BinAccumulators::add`]; panics if `bin` is out of range.
    #[inline]
    pub fn accumulate(&mut self, value: i64, bin: usize) {
        self.bins[bin] = self.bins[bin].wrapping_add(value as i128);
    }

    pub fn values(&self) -> &[i128] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn total(&self) -> i128 {
        self.bins.iter().fold(0i128, |a, &b| a.wrapping_add(b))
    }
}

/// Accumulate phase: adds each value into the bin named by its index.
pub fn pas_accumulate<I>(pairs: I, bins: usize) -> Result<BinAccumulators>
where
    I: IntoIterator<Item = (i64, usize)>,
{
    let mut acc = BinAccumulators::new(bins);
    for (value, bin) in pairs {
        acc.add(value, bin)?;
    }
    Ok(acc)
}

/// Multiply phase: `sum_b bins[b] * weights[b]`.
///
/// `weights` is the shared-weight register file in bin order.
pub fn postpass_multiply(bins: &BinAccumulators, weights: &[i64]) -> Result<i128> {
    if bins.len() != weights.len() {
        return Err(Error::LengthMismatch {
            expected: weights.len(),
            got: bins.len(),
        });
    }
    Ok(bins
        .values()
        .iter()
        .zip(weights)
        .fold(0i128, |acc, (&b, &w)| {
            acc.wrapping_add(b.wrapping_mul(w as i128))
        }))
}

/// Adds the per-kernel bias, then clamps at zero when ReLU is on.
pub fn apply_bias_relu(raw: i128, bias: i64, relu: bool) -> i128 {
    let out = raw.wrapping_add(bias as i128);
    if relu {
        out.max(0)
    } else {
        out
    }
}

fn check_shape(what: &'static str, expected: &[usize], got: &[usize]) -> Result<()> {
    if expected != got {
        return Err(Error::ShapeMismatch {
            what,
            expected: expected.to_vec(),
            got: got.to_vec(),
        });
    }
    Ok(())
}

fn check_image(image: &QTensor, cfg: &ConvConfig) -> Result<()> {
    cfg.validate()?;
    check_shape("image", &cfg.image_shape(), image.shape())
}

/// Runs `element` for every output position and stores the finished sums.
fn assemble<F>(cfg: &ConvConfig, mut element: F) -> Result<ConvResult>
where
    F: FnMut(usize, usize, usize) -> i128,
{
    let (oh, ow) = output_dims(cfg);
    let acc = cfg.acc_spec();
    let mut data = Vec::with_capacity(cfg.m * oh * ow);
    for m in 0..cfg.m {
        for y in 0..oh {
            for x in 0..ow {
                let raw = element(m, y * cfg.stride, x * cfg.stride);
                let out = apply_bias_relu(raw, cfg.bias[m], cfg.relu);
                data.push(wrap_to_word(out, acc.word()));
            }
        }
    }
    Ok(ConvResult {
        out: QTensor::new(vec![cfg.m, oh, ow], acc.word(), data)?,
        oh,
        ow,
        acc,
    })
}

#[inline]
fn pixel(image: &[i64], cfg: &ConvConfig, c: usize, y: usize, x: usize) -> i64 {
    image[(c * cfg.ih + y) * cfg.iw + x]
}

/// Direct multiply-accumulate convolution over an unencoded kernel.
pub fn conv_reference(image: &QTensor, kernel: &QTensor, cfg: &ConvConfig) -> Result<ConvResult> {
    check_image(image, cfg)?;
    check_shape("kernel", &cfg.kernel_shape(), kernel.shape())?;
    let img = image.data();
    let ker = kernel.data();
    assemble(cfg, |m, top, left| {
        let mut summands = 0i128;
        for c in 0..cfg.c {
            for ky in 0..cfg.ky {
                for kx in 0..cfg.kx {
                    let im_val = pixel(img, cfg, c, top + ky, left + kx) as i128;
                    let kern_val = ker[((m * cfg.c + c) * cfg.ky + ky) * cfg.kx + kx] as i128;
                    summands = summands.wrapping_add(im_val.wrapping_mul(kern_val));
                }
            }
        }
        summands
    })
}

fn check_encoded(ek: &EncodedKernel, cfg: &ConvConfig) -> Result<()> {
    check_shape("kernel", &cfg.kernel_shape(), &ek.shape())
}

/// Multiply-accumulate with each weight looked up by bin index.
pub fn conv_weight_shared(
    image: &QTensor,
    ek: &EncodedKernel,
    cfg: &ConvConfig,
) -> Result<ConvResult> {
    check_image(image, cfg)?;
    check_encoded(ek, cfg)?;
    let img = image.data();
    let weights = ek.dictionary().centroids();
    assemble(cfg, |m, top, left| {
        let mut summands = 0i128;
        for c in 0..cfg.c {
            for ky in 0..cfg.ky {
                for kx in 0..cfg.kx {
                    let im_val = pixel(img, cfg, c, top + ky, left + kx) as i128;
                    let kern_val = weights[ek.index_at(m, c, ky, kx)] as i128;
                    summands = summands.wrapping_add(im_val.wrapping_mul(kern_val));
                }
            }
        }
        summands
    })
}

/// Two-phase convolution: per output element, reset the bins, accumulate
/// all `C * KY * KX` image values by bin index, then multiply once per bin.
pub fn conv_pasm(image: &QTensor, ek: &EncodedKernel, cfg: &ConvConfig) -> Result<ConvResult> {
    check_image(image, cfg)?;
    check_encoded(ek, cfg)?;
    let img = image.data();
    let weights = ek.dictionary().centroids();
    let mut image_bin = BinAccumulators::new(ek.bins());
    assemble(cfg, |m, top, left| {
        image_bin.reset();
        for c in 0..cfg.c {
            for ky in 0..cfg.ky {
                for kx in 0..cfg.kx {
                    let im_val = pixel(img, cfg, c, top + ky, left + kx);
                    image_bin.accumulate(im_val, ek.index_at(m, c, ky, kx));
                }
            }
        }
        postpass_multiply(&image_bin, weights).expect("bin file sized from the dictionary")
    })
}

/// Which schedule to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    Reference,
    WeightShared,
    Pasm,
}

impl Backend {
    pub const ALL: [Backend; 3] = [Backend::Reference, Backend::WeightShared, Backend::Pasm];

    pub fn name(self) -> &'static str {
        match self {
            Backend::Reference => "reference",
            Backend::WeightShared => "weightshared",
            Backend::Pasm => "pasm",
        }
    }

    /// Runs this schedule; the reference schedule sees the decoded kernel.
    pub fn run(self, image: &QTensor, ek: &EncodedKernel, cfg: &ConvConfig) -> Result<ConvResult> {
        match self {
            Backend::Reference => conv_reference(image, &decode_kernel(ek), cfg),
            Backend::WeightShared => conv_weight_shared(image, ek, cfg),
            Backend::Pasm => conv_pasm(image, ek, cfg),
        }
    }
}

/// First element where two results differ, as `(m, oh, ow, lhs, rhs)`.
pub fn first_mismatch(a: &ConvResult, b: &ConvResult) -> Option<(usize, usize, usize, i64, i64)> {
    if a.out.shape() != b.out.shape() {
        return Some((0, 0, 0, a.out.len() as i64, b.out.len() as i64));
    }
    a.out
        .data()
        .iter()
        .zip(b.out.data())
        .position(|(x, y)| x != y)
        .map(|off| {
            let idx = a.out.unravel(off);
            (idx[0], idx[1], idx[2], a.out.data()[off], b.out.data()[off])
        })
}
