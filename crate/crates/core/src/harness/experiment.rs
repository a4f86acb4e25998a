use super::config::ExperimentConfig;
use super::HarnessError;
use crate::cnn::{evaluate, train, Metrics, TrainOutcome};
use crate::dataset::{augment, build_examples, Corpus, DatasetIndex, Split, SplitSets};

/// Representation images for every split, with the train split augmented.
///
/// All videos go through the pipeline in training mode (end trimming on).
/// Only training examples are augmented, after splitting, so variants of one
/// video never appear in two splits.
pub fn prepare_corpus(index: &DatasetIndex, sets: &SplitSets, cfg: &ExperimentConfig) -> Result<Corpus, HarnessError> {
    let mut corpus = Corpus {
        classes: index.classes.clone(),
        ..Default::default()
    };
    for split in Split::ALL {
        let originals = build_examples(sets.get(split), &cfg.pipeline, true)?;
        let target = corpus.get_mut(split);
        if split == Split::Train {
            for ex in &originals {
                target.extend(augment(ex, &cfg.dataset.augment)?);
            }
        } else {
            target.extend(originals);
        }
    }
    log::info!(
        "corpus: {} train, {} validation, {} test examples over {} classes",
        corpus.train.len(),
        corpus.validation.len(),
        corpus.test.len(),
        corpus.classes.len()
    );
    Ok(corpus)
}

/// The split used for final scoring: test, else validation, else train.
pub fn scoring_split(corpus: &Corpus) -> Split {
    [Split::Test, Split::Validation]
        .into_iter()
        .find(|&s| !corpus.get(s).is_empty())
        .unwrap_or(Split::Train)
}

/// Trains the configured model on the corpus and scores it on
/// [`scoring_split`].
pub fn train_and_evaluate(corpus: &Corpus, cfg: &ExperimentConfig) -> Result<(TrainOutcome, Metrics), HarnessError> {
    if corpus.train.is_empty() {
        return Err(HarnessError::Config("corpus has no training examples".into()));
    }
    let model = cfg.model.build(cfg.pipeline.output_size, corpus.classes.len());
    let outcome = train(&model, &corpus.train, &corpus.validation, &cfg.train)?;
    let split = scoring_split(corpus);
    if split == Split::Train {
        log::warn!("no held-out examples; scoring on the train split");
    }
    let metrics = evaluate(&outcome.network, corpus.get(split))?;
    Ok((outcome, metrics))
}
