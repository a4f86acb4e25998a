use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use super::tensor::{Scalar, Tensor};

/// Weight initialization scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    /// N(0, 2 / (fan_in + fan_out)).
    #[default]
    GlorotNormal,
    /// U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
    GlorotUniform,
}

pub fn glorot_std(fan_in: usize, fan_out: usize) -> f64 {
    (2.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Fills a tensor of `shape` from the chosen scheme.
pub fn init_weights<T: Scalar, R: Rng + ?Sized>(
    scheme: InitScheme,
    shape: &[usize],
    fan_in: usize,
    fan_out: usize,
    rng: &mut R,
) -> Tensor<T> {
    let n: usize = shape.iter().product();
    let std = glorot_std(fan_in.max(1), fan_out.max(1));
    let data: Vec<T> = match scheme {
        InitScheme::GlorotNormal => {
            let dist = Normal::new(0.0, std).expect("finite std");
            (0..n).map(|_| T::from_f64(dist.sample(rng))).collect()
        }
        InitScheme::GlorotUniform => {
            let a = std * 3f64.sqrt();
            let dist = Uniform::new_inclusive(-a, a).expect("finite bound");
            (0..n).map(|_| T::from_f64(dist.sample(rng))).collect()
        }
    };
    Tensor::from_vec(shape, data).expect("length matches shape")
}

/// `[fan_out, fan_in]` Glorot-normal weight matrix from a seed.
pub fn glorot_normal_init(fan_in: usize, fan_out: usize, seed: u64) -> Tensor<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    init_weights(InitScheme::GlorotNormal, &[fan_out, fan_in], fan_in, fan_out, &mut rng)
}
