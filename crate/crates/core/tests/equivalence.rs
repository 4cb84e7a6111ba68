//! The three convolution schedules agree element for element.

use pasm_core::{
    conv_pasm, conv_reference, conv_weight_shared, decode_kernel, encode_kernel, kmeans_quantize,
    output_dims, ConvConfig, KMeansOptions, QTensor, WordSpec,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Case {
    image: QTensor,
    kernel: QTensor,
    cfg: ConvConfig,
    bins: usize,
}

fn random_case(rng: &mut ChaCha8Rng, max_c: usize) -> Case {
    let width = [8u32, 16, 32][rng.gen_range(0..3)];
    let word = WordSpec::new(width).unwrap();
    let k = [1usize, 3, 5, 7][rng.gen_range(0..4)];
    let stride = rng.gen_range(1..=2);
    let c = rng.gen_range(1..=max_c);
    let m = rng.gen_range(1..=4);
    let ih = rng.gen_range(k..=k + 4);
    let iw = rng.gen_range(k..=k + 4);
    let bins = [4usize, 8, 16][rng.gen_range(0..3)];
    let mut cfg = ConvConfig::new((ih, iw), c, m, (k, k), stride, word, word);
    cfg.relu = rng.gen_bool(0.5);
    cfg.bias = (0..m)
        .map(|_| rng.gen_range(word.min_value()..=word.max_value()))
        .collect();
    let mut draw = |n: usize| -> Vec<i64> {
        (0..n)
            .map(|_| rng.gen_range(word.min_value()..=word.max_value()))
            .collect()
    };
    let image = QTensor::new(vec![c, ih, iw], word, draw(c * ih * iw)).unwrap();
    let kernel = QTensor::new(vec![m, c, k, k], word, draw(m * c * k * k)).unwrap();
    Case {
        image,
        kernel,
        cfg,
        bins,
    }
}

fn check(case: &Case) {
    let q = kmeans_quantize(case.kernel.data(), case.bins, &KMeansOptions::default()).unwrap();
    let ek = encode_kernel(&case.kernel, &q.dictionary).unwrap();
    let reference = conv_reference(&case.image, &decode_kernel(&ek), &case.cfg).unwrap();
    let shared = conv_weight_shared(&case.image, &ek, &case.cfg).unwrap();
    let pasm = conv_pasm(&case.image, &ek, &case.cfg).unwrap();
    assert_eq!(reference, shared, "{:?}", case.cfg);
    assert_eq!(shared, pasm, "{:?}", case.cfg);
    assert_eq!(
        pasm.out.shape(),
        &[
            case.cfg.m,
            output_dims(&case.cfg).0,
            output_dims(&case.cfg).1
        ]
    );
}

#[test]
fn three_channel_five_by_five() {
    let word = WordSpec::new(8).unwrap();
    let cfg = ConvConfig::new((5, 5), 3, 2, (3, 3), 1, word, word);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let image: Vec<i64> = (0..75).map(|_| rng.gen_range(-128..128)).collect();
    let kernel: Vec<i64> = (0..54).map(|_| rng.gen_range(-128..128)).collect();
    check(&Case {
        image: QTensor::new(vec![3, 5, 5], word, image).unwrap(),
        kernel: QTensor::new(vec![2, 3, 3, 3], word, kernel).unwrap(),
        cfg,
        bins: 4,
    });
}

#[test]
fn hundred_random_configs() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..100 {
        check(&random_case(&mut rng, 12));
    }
}

#[test]
fn extreme_values_wrap_identically() {
    // Every product is (-2^31)^2; the sum needs more than 64 bits.
    let word = WordSpec::new(32).unwrap();
    let mut cfg = ConvConfig::new((3, 3), 32, 1, (3, 3), 1, word, word);
    cfg.bias = vec![word.max_value()];
    let image = QTensor::new(vec![32, 3, 3], word, vec![word.min_value(); 288]).unwrap();
    let kernel = QTensor::new(vec![1, 32, 3, 3], word, vec![word.min_value(); 288]).unwrap();
    let case = Case {
        image,
        kernel,
        cfg,
        bins: 4,
    };
    check(&case);
    let r = conv_reference(&case.image, &case.kernel, &case.cfg).unwrap();
    assert!(!r.acc.is_exact());
    let exact = 288i128 * (1i128 << 62) + word.max_value() as i128;
    assert_eq!(
        r.out.data()[0],
        pasm_core::wrap_to_word(exact, r.acc.word())
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn schedules_agree(seed in any::<u64>()) {
        check(&random_case(&mut ChaCha8Rng::seed_from_u64(seed), 8));
    }
}
