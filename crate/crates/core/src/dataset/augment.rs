use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{fnv1a, Augmentation, DatasetError, LabeledExample, Provenance};
use crate::motion::RepresentationImage;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentParams {
    /// Variants per original.
    pub n_aug: usize,
    /// Largest shift as a fraction of each dimension, at most 0.2.
    pub max_shift: f64,
    pub seed: u64,
}

impl Default for AugmentParams {
    fn default() -> Self {
        AugmentParams {
            n_aug: 18,
            max_shift: 0.1,
            seed: 0,
        }
    }
}

impl AugmentParams {
    pub fn validate(&self) -> Result<(), DatasetError> {
        if !(0.0..=0.2).contains(&self.max_shift) {
            return Err(DatasetError::Parameter(format!(
                "max_shift must be in [0, 0.2], got {}",
                self.max_shift
            )));
        }
        Ok(())
    }
}

pub fn mirror(image: &RepresentationImage) -> RepresentationImage {
    let (w, h) = (image.width(), image.height());
    let mut values = Vec::with_capacity(w * h);
    for row in image.values().chunks(w) {
        values.extend(row.iter().rev());
    }
    RepresentationImage::new(w, h, values, image.sample_count()).expect("same dimensions")
}

/// Integer shift by `(dx, dy)`; vacated pixels are black.
pub fn translate(image: &RepresentationImage, dx: i32, dy: i32) -> RepresentationImage {
    let (w, h) = (image.width() as i64, image.height() as i64);
    let src = image.values();
    let mut values = vec![0f32; src.len()];
    for y in 0..h {
        let sy = y - dy as i64;
        if sy < 0 || sy >= h {
            continue;
        }
        let (x0, x1) = ((dx as i64).max(0), (w + dx as i64).min(w));
        if x0 >= x1 {
            continue;
        }
        let dst = &mut values[(y * w + x0) as usize..(y * w + x1) as usize];
        let start = (sy * w + x0 - dx as i64) as usize;
        dst.copy_from_slice(&src[start..start + dst.len()]);
    }
    RepresentationImage::new(image.width(), image.height(), values, image.sample_count()).expect("same dimensions")
}

/// The original followed by `n_aug` variants: each is mirrored with
/// probability 0.5, then shifted by a uniform integer offset of at most
/// `max_shift` times the width/height. Variants depend only on the seed and
/// the source video id.
pub fn augment(example: &LabeledExample, params: &AugmentParams) -> Result<Vec<LabeledExample>, DatasetError> {
    params.validate()?;
    let mut out = Vec::with_capacity(params.n_aug + 1);
    out.push(example.clone());
    let key = format!("{}#{}", example.provenance.video_id, example.provenance.augmentation);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ fnv1a(key.as_bytes()));
    let max_x = (params.max_shift * example.image.width() as f64).floor() as i32;
    let max_y = (params.max_shift * example.image.height() as f64).floor() as i32;
    for index in 0..params.n_aug {
        let mirrored = rng.random_bool(0.5);
        let dx = rng.random_range(-max_x..=max_x);
        let dy = rng.random_range(-max_y..=max_y);
        let base = if mirrored {
            mirror(&example.image)
        } else {
            example.image.clone()
        };
        out.push(LabeledExample {
            image: translate(&base, dx, dy),
            label: example.label,
            provenance: Provenance {
                video_id: example.provenance.video_id.clone(),
                augmentation: Augmentation::Variant {
                    index,
                    mirrored,
                    dx,
                    dy,
                },
            },
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn image(w: usize, h: usize, values: Vec<f32>) -> RepresentationImage {
        RepresentationImage::new(w, h, values, 1).unwrap()
    }

    fn example(values: Vec<f32>) -> LabeledExample {
        LabeledExample::original(image(8, 6, values), 1, "walk/p1")
    }

    fn ramp() -> Vec<f32> {
        (0..48).map(|i| i as f32 * 5.0).collect()
    }

    #[test]
    fn no_variants() {
        let ex = example(ramp());
        let out = augment(&ex, &AugmentParams { n_aug: 0, ..Default::default() }).unwrap();
        assert_eq!(out, vec![ex]);
    }

    #[test]
    fn mirror_row() {
        let m = mirror(&image(3, 1, vec![1.0, 2.0, 3.0]));
        assert_eq!(m.values(), [3.0, 2.0, 1.0]);
    }

    #[test]
    fn translate_by_hand() {
        let img = image(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(translate(&img, 1, 0).values(), [0.0, 1.0, 2.0, 0.0, 4.0, 5.0]);
        assert_eq!(translate(&img, -1, 1).values(), [0.0, 0.0, 0.0, 2.0, 3.0, 0.0]);
        assert!(translate(&img, 5, 0).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn variants_follow_descriptor_and_seed() {
        let ex = example(ramp());
        let p = AugmentParams {
            n_aug: 12,
            max_shift: 0.2,
            seed: 3,
        };
        let out = augment(&ex, &p).unwrap();
        assert_eq!(out.len(), 13);
        assert_eq!(out, augment(&ex, &p).unwrap());
        for v in &out[1..] {
            let Augmentation::Variant { mirrored, dx, dy, .. } = v.provenance.augmentation else {
                panic!("variant expected");
            };
            assert!(dx.abs() <= 1 && dy.abs() <= 1);
            let base = if mirrored { mirror(&ex.image) } else { ex.image.clone() };
            assert_eq!(v.image, translate(&base, dx, dy));
            assert_eq!(v.label, ex.label);
        }
        assert!(augment(&ex, &AugmentParams { max_shift: 0.25, ..p }).is_err());
        let other = LabeledExample::original(ex.image.clone(), 1, "walk/p2");
        assert_ne!(augment(&other, &p).unwrap()[1..], out[1..]);
    }

    proptest! {
        #[test]
        fn mirror_is_an_involution(values in proptest::collection::vec(0f32..255.0, 35)) {
            let img = image(7, 5, values);
            prop_assert_eq!(mirror(&mirror(&img)), img);
        }

        #[test]
        fn shifts_never_add_mass(values in proptest::collection::vec(0f32..255.0, 48), seed in any::<u64>()) {
            let ex = example(values);
            let mass: f64 = ex.image.values().iter().map(|&v| v as f64).sum();
            for v in augment(&ex, &AugmentParams { n_aug: 6, max_shift: 0.2, seed }).unwrap() {
                let m: f64 = v.image.values().iter().map(|&x| x as f64).sum();
                prop_assert!(m <= mass + 1e-3);
                prop_assert_eq!((v.image.width(), v.image.height()), (8, 6));
            }
        }
    }
}
