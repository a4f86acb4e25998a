use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{scce_loss, softmax, softmax_cross_entropy};
use super::metrics::Metrics;
use super::model::{ModelConfig, Network};
use super::optim::sgd_step;
use super::tensor::{Scalar, Tensor};
use super::CnnError;
use crate::dataset::LabeledExample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Epochs without a validation-loss improvement before stopping; 0 disables.
    pub early_stop_patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            momentum: 0.9,
            batch_size: 32,
            epochs: 30,
            seed: 0,
            early_stop_patience: 5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), CnnError> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(CnnError::Config(format!(
                "learning_rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(CnnError::Config(format!("momentum must be in [0, 1), got {}", self.momentum)));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(CnnError::Config("batch_size and epochs must be at least 1".into()));
        }
        Ok(())
    }
}

/// One row of the training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    pub val_acc: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub network: Network<f32>,
    pub log: Vec<EpochLog>,
    /// Epoch whose weights were kept.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Stacks images into an `[N, 1, H, W]` batch scaled to [-1, 1].
pub fn images_to_tensor<T: Scalar>(
    examples: &[&LabeledExample],
    input: (usize, usize, usize),
) -> Result<Tensor<T>, CnnError> {
    let (c, h, w) = input;
    if c != 1 {
        return Err(CnnError::Config(format!("representation images have 1 channel, model expects {c}")));
    }
    let mut data = Vec::with_capacity(examples.len() * h * w);
    for ex in examples {
        if (ex.image.width(), ex.image.height()) != (w, h) {
            return Err(CnnError::Shape(format!(
                "{}: image is {}x{}, model expects {w}x{h}",
                ex.provenance.video_id,
                ex.image.width(),
                ex.image.height()
            )));
        }
        data.extend(ex.image.values().iter().map(|&v| T::from_f64(v as f64 / 127.5 - 1.0)));
    }
    Tensor::from_vec(&[examples.len(), c, h, w], data)
}

fn check_labels(examples: &[LabeledExample], classes: usize) -> Result<(), CnnError> {
    match examples.iter().find(|e| e.label >= classes) {
        Some(e) => Err(CnnError::Label { label: e.label, classes }),
        None => Ok(()),
    }
}

/// Probabilities for every example, batch by batch.
pub fn predict_proba(net: &Network<f32>, examples: &[LabeledExample], batch_size: usize) -> Result<Vec<Vec<f32>>, CnnError> {
    let input = net.config().input;
    let classes = net.config().classes;
    let mut out = Vec::with_capacity(examples.len());
    for chunk in examples.chunks(batch_size.max(1)) {
        let refs: Vec<&LabeledExample> = chunk.iter().collect();
        let probs = softmax(&net.forward(&images_to_tensor(&refs, input)?)?)?;
        out.extend(probs.data().chunks(classes).map(<[f32]>::to_vec));
    }
    Ok(out)
}

fn argmax(row: &[f32]) -> usize {
    row.iter()
        .enumerate()
        .fold((0, f32::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
        .0
}

pub fn predict(net: &Network<f32>, examples: &[LabeledExample]) -> Result<Vec<usize>, CnnError> {
    Ok(predict_proba(net, examples, 32)?.iter().map(|p| argmax(p)).collect())
}

/// Argmax predictions scored against the labels.
pub fn evaluate(net: &Network<f32>, examples: &[LabeledExample]) -> Result<Metrics, CnnError> {
    if examples.is_empty() {
        return Err(CnnError::EmptyInput("no examples to evaluate".into()));
    }
    check_labels(examples, net.config().classes)?;
    let truth: Vec<usize> = examples.iter().map(|e| e.label).collect();
    Metrics::from_predictions(&truth, &predict(net, examples)?, net.config().classes)
}

fn validation_scores(net: &Network<f32>, examples: &[LabeledExample], batch: usize) -> Result<(f64, f64), CnnError> {
    let probs = predict_proba(net, examples, batch)?;
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (p, e) in probs.iter().zip(examples) {
        loss += scce_loss(p, e.label)? as f64;
        correct += usize::from(argmax(p) == e.label);
    }
    let n = examples.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Mini-batch SGD with momentum on the train split.
///
/// The train split is reshuffled every epoch from the seed. When a validation
/// split is given, its loss drives early stopping and the weights from the
/// best epoch are returned; otherwise the last epoch's weights are.
pub fn train(
    model: &ModelConfig,
    train_set: &[LabeledExample],
    validation: &[LabeledExample],
    tc: &TrainConfig,
) -> Result<TrainOutcome, CnnError> {
    tc.validate()?;
    if train_set.is_empty() {
        return Err(CnnError::EmptyInput("train split is empty".into()));
    }
    check_labels(train_set, model.classes)?;
    check_labels(validation, model.classes)?;
    let mut net = Network::<f32>::new(model, tc.seed)?;
    let mut velocity: Vec<Tensor<f32>> = net.params_mut().iter().map(|p| Tensor::zeros(p.value.shape())).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let (lr, momentum) = (tc.learning_rate as f32, tc.momentum as f32);
    let mut log = Vec::with_capacity(tc.epochs);
    let mut best: Option<(f64, usize, Vec<Tensor<f32>>)> = None;
    let mut stopped_early = false;

    for epoch in 0..tc.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (batch_index, batch) in order.chunks(tc.batch_size).enumerate() {
            let refs: Vec<&LabeledExample> = batch.iter().map(|&i| &train_set[i]).collect();
            let labels: Vec<usize> = refs.iter().map(|e| e.label).collect();
            let x = images_to_tensor::<f32>(&refs, model.input)?;
            net.zero_grads();
            let logits = net.forward_train(&x)?;
            let (loss, grad) = softmax_cross_entropy(&logits, &labels)?;
            if !loss.is_finite() {
                return Err(CnnError::Divergence {
                    epoch,
                    batch: batch_index,
                    loss: loss as f64,
                });
            }
            loss_sum += loss as f64 * batch.len() as f64;
            net.backward(&grad)?;
            for (p, v) in net.params_mut().into_iter().zip(velocity.iter_mut()) {
                sgd_step(&mut p.value, &p.grad, v, lr, momentum)?;
            }
        }
        let train_loss = loss_sum / train_set.len() as f64;
        let (val_loss, val_acc) = if validation.is_empty() {
            (None, None)
        } else {
            let (l, a) = validation_scores(&net, validation, tc.batch_size)?;
            (Some(l), Some(a))
        };
        log::info!(
            "epoch {epoch}: train_loss {train_loss:.5} val_loss {} val_acc {}",
            val_loss.map_or("-".into(), |v| format!("{v:.5}")),
            val_acc.map_or("-".into(), |v| format!("{v:.4}"))
        );
        log.push(EpochLog {
            epoch,
            train_loss,
            val_loss,
            val_acc,
        });
        if let Some(vl) = val_loss {
            if !vl.is_finite() {
                return Err(CnnError::Divergence {
                    epoch,
                    batch: 0,
                    loss: vl,
                });
            }
            if best.as_ref().is_none_or(|b| vl < b.0) {
                let snapshot = net.parameters().into_iter().map(|(_, t)| t.clone()).collect();
                best = Some((vl, epoch, snapshot));
            } else if tc.early_stop_patience > 0 {
                let since = epoch - best.as_ref().map_or(0, |b| b.1);
                if since >= tc.early_stop_patience {
                    stopped_early = true;
                    break;
                }
            }
        }
    }

    let best_epoch = match best {
        Some((_, epoch, snapshot)) => {
            net.set_parameters(snapshot)?;
            epoch
        }
        None => log.len() - 1,
    };
    net.zero_grads();
    Ok(TrainOutcome {
        network: net,
        log,
        best_epoch,
        stopped_early,
    })
}

/// Writes `epoch,train_loss,val_loss,val_acc`; missing validation values are empty.
pub fn write_training_log(path: impl AsRef<Path>, log: &[EpochLog]) -> Result<(), CnnError> {
    let path = path.as_ref();
    let io = |source| CnnError::Write {
        path: path.to_path_buf(),
        source,
    };
    let mut text = String::from("epoch,train_loss,val_loss,val_acc\n");
    for e in log {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        text.push_str(&format!("{},{},{},{}\n", e.epoch, e.train_loss, opt(e.val_loss), opt(e.val_acc)));
    }
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(text.as_bytes()).map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnn::{ConvBlock, InitScheme};
    use crate::motion::RepresentationImage;
    use rand::Rng;

    const SIDE: usize = 16;

    fn small_model() -> ModelConfig {
        ModelConfig {
            input: (1, SIDE, SIDE),
            blocks: vec![ConvBlock::new(4, 3, 1, 1, 2, 2), ConvBlock::new(8, 3, 1, 1, 2, 2)],
            hidden: vec![16],
            classes: 2,
            init: InitScheme::GlorotNormal,
        }
    }

    /// Bright blob on the left (label 0) or right half (label 1), with jitter.
    fn blobs(n: usize, seed: u64) -> Vec<LabeledExample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let label = i % 2;
                let cx = if label == 0 { rng.random_range(2..6) } else { rng.random_range(10..14) };
                let cy = rng.random_range(3..13);
                let mut v = vec![0f32; SIDE * SIDE];
                for y in cy - 2..cy + 2 {
                    for x in cx - 2..cx + 2 {
                        v[y * SIDE + x] = rng.random_range(180.0..255.0);
                    }
                }
                let img = RepresentationImage::new(SIDE, SIDE, v, 1).unwrap();
                LabeledExample::original(img, label, format!("blob{seed}_{i}"))
            })
            .collect()
    }

    fn tc() -> TrainConfig {
        TrainConfig {
            batch_size: 16,
            epochs: 5,
            seed: 1,
            early_stop_patience: 0,
            ..Default::default()
        }
    }

    #[test]
    fn separable_blobs_are_learned() {
        let (tr, val) = (blobs(200, 1), blobs(60, 2));
        let out = train(&small_model(), &tr, &val, &tc()).unwrap();
        assert_eq!(out.log.len(), 5);
        let losses: Vec<f64> = out.log.iter().map(|e| e.train_loss).collect();
        assert!(losses.windows(2).take(3).all(|w| w[1] < w[0]), "{losses:?}");
        assert_eq!(evaluate(&out.network, &val).unwrap().accuracy, 1.0);
    }

    #[test]
    fn deterministic_loss_curve() {
        let tr = blobs(64, 3);
        let cfg = TrainConfig { epochs: 2, ..tc() };
        let a = train(&small_model(), &tr, &[], &cfg).unwrap();
        let b = train(&small_model(), &tr, &[], &cfg).unwrap();
        assert_eq!(a.log, b.log);
        assert_eq!(a.log[0].train_loss.to_bits(), b.log[0].train_loss.to_bits());
    }

    #[test]
    fn zero_learning_rate_leaves_parameters() {
        let tr = blobs(32, 4);
        let cfg = TrainConfig {
            learning_rate: 0.0,
            epochs: 2,
            ..tc()
        };
        let out = train(&small_model(), &tr, &[], &cfg).unwrap();
        let init = Network::<f32>::new(&small_model(), cfg.seed).unwrap();
        for ((_, a), (_, b)) in out.network.parameters().iter().zip(init.parameters()) {
            assert_eq!(*a, b);
        }
    }

    #[test]
    fn divergence_is_reported() {
        let mut data = blobs(64, 5);
        let mut values = data[10].image.values().to_vec();
        values[40] = f32::NAN;
        data[10].image = RepresentationImage::new(SIDE, SIDE, values, 1).unwrap();
        let err = train(&small_model(), &data, &[], &tc()).unwrap_err();
        assert!(matches!(err, CnnError::Divergence { .. }), "{err}");
    }

    #[test]
    fn early_stopping_restores_best() {
        let (tr, val) = (blobs(40, 6), blobs(20, 7));
        let cfg = TrainConfig {
            epochs: 40,
            early_stop_patience: 2,
            learning_rate: 0.05,
            ..tc()
        };
        let out = train(&small_model(), &tr, &val, &cfg).unwrap();
        let best = out.log[out.best_epoch].val_loss.unwrap();
        assert!(out.log.iter().all(|e| e.val_loss.unwrap() >= best));
        let (loss, _) = validation_scores(&out.network, &val, 16).unwrap();
        assert!((loss - best).abs() < 1e-9);
        if out.stopped_early {
            assert_eq!(out.log.len(), out.best_epoch + 3);
        }
    }

    #[test]
    fn bad_inputs() {
        assert!(train(&small_model(), &[], &[], &tc()).is_err());
        let mut ex = blobs(4, 8);
        ex[0].label = 5;
        assert!(matches!(train(&small_model(), &ex, &[], &tc()), Err(CnnError::Label { .. })));
        let net = Network::<f32>::new(&small_model(), 0).unwrap();
        assert!(evaluate(&net, &[]).is_err());
        let wrong = LabeledExample::original(RepresentationImage::new(8, 8, vec![0.0; 64], 1).unwrap(), 0, "x");
        assert!(evaluate(&net, &[wrong]).is_err());
        assert!(TrainConfig { momentum: 1.0, ..tc() }.validate().is_err());
    }

    #[test]
    fn log_csv() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("log.csv");
        let log = [
            EpochLog {
                epoch: 0,
                train_loss: 0.5,
                val_loss: Some(0.25),
                val_acc: Some(1.0),
            },
            EpochLog {
                epoch: 1,
                train_loss: 0.125,
                val_loss: None,
                val_acc: None,
            },
        ];
        write_training_log(&path, &log).unwrap();
        assert_eq!(
            fs::read_to_string(&path).unwrap(),
            "epoch,train_loss,val_loss,val_acc\n0,0.5,0.25,1\n1,0.125,,\n"
        );
    }
}
