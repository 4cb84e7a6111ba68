//! Fixed-point tensors with two's-complement wrapping stores.
//!
//! Every value is an integer at an implicit external scale; there is no
//! rounding anywhere in the pipeline, so the three convolution schedules can
//! be compared bit for bit.

use crate::error::{invalid, Error, Result};

/// Width of a signed two's-complement word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WordSpec {
    width: u32,
}

impl WordSpec {
    pub const MIN_WIDTH: u32 = 2;
    pub const MAX_WIDTH: u32 = 64;

    pub fn new(width: u32) -> Result<Self> {
        if !(Self::MIN_WIDTH..=Self::MAX_WIDTH).contains(&width) {
            return Err(Error::InvalidWidth(width));
        }
        Ok(Self { width })
    }

    pub fn width(self) -> u32 {
        self.width
    }

    pub fn min_value(self) -> i64 {
        (-(1i128 << (self.width - 1))) as i64
    }

    pub fn max_value(self) -> i64 {
        ((1i128 << (self.width - 1)) - 1) as i64
    }

    pub fn contains(self, v: i128) -> bool {
        v >= self.min_value() as i128 && v <= self.max_value() as i128
    }

    pub fn check(self, v: i64) -> Result<i64> {
        if self.contains(v as i128) {
            Ok(v)
        } else {
            Err(Error::OutOfRange {
                value: v,
                width: self.width,
            })
        }
    }
}

/// Reduces `v` modulo `2^width` into the signed range of `word`.
pub fn wrap_to_word(v: i128, word: WordSpec) -> i64 {
    let modulus = 1i128 << word.width;
    let r = v.rem_euclid(modulus);
    if r >= modulus / 2 {
        (r - modulus) as i64
    } else {
        r as i64
    }
}

fn ceil_log2(n: u64) -> u32 {
    debug_assert!(n >= 1);
    64 - (n - 1).leading_zeros()
}

fn required_acc_bits(lhs: u32, rhs: u32, count: u64) -> u32 {
    lhs + rhs + ceil_log2(count.max(2))
}

/// Accumulator width for `count` products of two `width`-bit operands.
///
/// Fails when the sum would need more than 64 bits.
pub fn acc_width(width: u32, count: u64) -> Result<u32> {
    WordSpec::new(width)?;
    if count == 0 {
        return Err(invalid("count", "must be at least 1"));
    }
    let needed = required_acc_bits(width, width, count);
    if needed > WordSpec::MAX_WIDTH {
        return Err(Error::AccumulatorTooWide {
            width,
            count,
            needed,
        });
    }
    Ok(needed)
}

/// Accumulator sizing for a sum of products.
///
/// `required` is the overflow-free width; `word` is what results are stored
/// in, which is `required` capped at 64 bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AccSpec {
    required: u32,
    word: WordSpec,
}

impl AccSpec {
    pub fn for_products(lhs: WordSpec, rhs: WordSpec, count: u64) -> Self {
        let required = required_acc_bits(lhs.width, rhs.width, count.max(1));
        let word = WordSpec {
            width: required.min(WordSpec::MAX_WIDTH),
        };
        Self { required, word }
    }

    pub fn width(self) -> u32 {
        self.word.width
    }

    pub fn required_bits(self) -> u32 {
        self.required
    }

    /// True when stores into the accumulator word can never wrap.
    pub fn is_exact(self) -> bool {
        self.required <= WordSpec::MAX_WIDTH
    }

    pub fn word(self) -> WordSpec {
        self.word
    }
}

/// Row-major multi-dimensional integer tensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QTensor {
    shape: Vec<usize>,
    word: WordSpec,
    data: Vec<i64>,
}

fn checked_len(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() || shape.contains(&0) {
        return Err(Error::InvalidShape(shape.to_vec()));
    }
    shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::InvalidShape(shape.to_vec()))
}

impl QTensor {
    /// Builds a tensor, rejecting any element outside the word range.
    pub fn new(shape: Vec<usize>, word: WordSpec, data: Vec<i64>) -> Result<Self> {
        let len = checked_len(&shape)?;
        if data.len() != len {
            return Err(Error::LengthMismatch {
                expected: len,
                got: data.len(),
            });
        }
        for &v in &data {
            word.check(v)?;
        }
        Ok(Self { shape, word, data })
    }

    /// Builds a tensor, wrapping every element into the word.
    pub fn from_wrapped(shape: Vec<usize>, word: WordSpec, data: &[i128]) -> Result<Self> {
        let len = checked_len(&shape)?;
        if data.len() != len {
            return Err(Error::LengthMismatch {
                expected: len,
                got: data.len(),
            });
        }
        let data = data.iter().map(|&v| wrap_to_word(v, word)).collect();
        Ok(Self { shape, word, data })
    }

    pub fn zeros(shape: Vec<usize>, word: WordSpec) -> Result<Self> {
        let len = checked_len(&shape)?;
        Ok(Self {
            shape,
            word,
            data: vec![0; len],
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn word(&self) -> WordSpec {
        self.word
    }

    pub fn data(&self) -> &[i64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn into_data(self) -> Vec<i64> {
        self.data
    }

    /// Row-major offset of `index`.
    pub fn offset(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.shape.len() || index.iter().zip(&self.shape).any(|(&i, &d)| i >= d) {
            return Err(Error::IndexOutOfBounds {
                index: index.to_vec(),
                shape: self.shape.clone(),
            });
        }
        Ok(index
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &d)| acc * d + i))
    }

    /// Inverse of [`QTensor::offset`].
    pub fn unravel(&self, mut offset: usize) -> Vec<usize> {
        let mut index = vec![0; self.shape.len()];
        for (slot, &d) in index.iter_mut().zip(&self.shape).rev() {
            *slot = offset % d;
            offset /= d;
        }
        index
    }

    pub fn get(&self, index: &[usize]) -> Result<i64> {
        Ok(self.data[self.offset(index)?])
    }

    /// Stores `value` wrapped to the tensor word; returns the stored value.
    pub fn set(&mut self, index: &[usize], value: i128) -> Result<i64> {
        let off = self.offset(index)?;
        let stored = wrap_to_word(value, self.word);
        self.data[off] = stored;
        Ok(stored)
    }
}
