use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Augmentation, DatasetError, LabeledExample, Provenance, Split, SplitSets, VideoEntry};
use crate::motion::{represent, MotionError, PipelineConfig, RepresentationImage};
use crate::videoio::{read_pgm, write_pgm};

/// One line of the split manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub video_id: String,
    pub class: String,
    pub split: Split,
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> DatasetError + '_ {
    move |source| DatasetError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `video_id,class,split`, one row per video in id order.
pub fn write_manifest(path: impl AsRef<Path>, sets: &SplitSets) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for (entry, split) in sets.assignments() {
        w.serialize(ManifestRow {
            video_id: entry.id.clone(),
            class: entry.class_name.clone(),
            split,
        })
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestRow>, DatasetError> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().collect::<Result<Vec<ManifestRow>, _>>().map_err(csv_err(path))
}

/// Representation image of every video. Videos in which the pipeline finds no
/// moving foreground are skipped with a warning.
pub fn build_examples(
    entries: &[VideoEntry],
    cfg: &PipelineConfig,
    training_mode: bool,
) -> Result<Vec<LabeledExample>, DatasetError> {
    let mut out = Vec::with_capacity(entries.len());
    for e in entries {
        let stream = e.open()?;
        match represent(stream, cfg, training_mode) {
            Ok(image) => out.push(LabeledExample::original(image, e.label, e.id.clone())),
            Err(MotionError::EmptyActivity) => log::warn!("{}: no moving foreground, skipped", e.id),
            Err(source) => {
                return Err(DatasetError::Motion {
                    video: e.id.clone(),
                    source,
                })
            }
        }
    }
    Ok(out)
}

/// Labelled examples grouped by split.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub classes: Vec<String>,
    pub train: Vec<LabeledExample>,
    pub validation: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
}

impl Corpus {
    pub fn get(&self, split: Split) -> &[LabeledExample] {
        match split {
            Split::Train => &self.train,
            Split::Validation => &self.validation,
            Split::Test => &self.test,
        }
    }

    pub fn get_mut(&mut self, split: Split) -> &mut Vec<LabeledExample> {
        match split {
            Split::Train => &mut self.train,
            Split::Validation => &mut self.validation,
            Split::Test => &mut self.test,
        }
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CorpusRow {
    file: String,
    video_id: String,
    class: String,
    label: usize,
    split: Split,
    augmentation: String,
}

const CORPUS_CSV: &str = "corpus.csv";
const CLASSES_TXT: &str = "classes.txt";

/// Stores every example as an 8-bit PGM under `dir/<split>/` and indexes
/// them in `corpus.csv` (`file,video_id,class,label,split,augmentation`).
pub fn write_corpus(dir: impl AsRef<Path>, corpus: &Corpus) -> Result<(), DatasetError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let classes_path = dir.join(CLASSES_TXT);
    fs::write(&classes_path, corpus.classes.join("\n") + "\n").map_err(io_err(&classes_path))?;
    let csv_path = dir.join(CORPUS_CSV);
    let mut w = csv::Writer::from_path(&csv_path).map_err(csv_err(&csv_path))?;
    for split in Split::ALL {
        let sub = dir.join(split.name());
        fs::create_dir_all(&sub).map_err(io_err(&sub))?;
        for (i, ex) in corpus.get(split).iter().enumerate() {
            let class = corpus.classes.get(ex.label).ok_or_else(|| DatasetError::Manifest {
                path: csv_path.clone(),
                reason: format!("label {} has no class name", ex.label),
            })?;
            let file = format!("{}/{i:06}.pgm", split.name());
            write_pgm(&ex.image.to_frame(), dir.join(&file)).map_err(|source| DatasetError::Video {
                video: ex.provenance.video_id.clone(),
                source,
            })?;
            w.serialize(CorpusRow {
                file,
                video_id: ex.provenance.video_id.clone(),
                class: class.clone(),
                label: ex.label,
                split,
                augmentation: ex.provenance.augmentation.to_string(),
            })
            .map_err(csv_err(&csv_path))?;
        }
    }
    w.flush().map_err(io_err(&csv_path))
}

pub fn read_corpus(dir: impl AsRef<Path>) -> Result<Corpus, DatasetError> {
    let dir = dir.as_ref();
    let classes_path = dir.join(CLASSES_TXT);
    let classes: Vec<String> = fs::read_to_string(&classes_path)
        .map_err(io_err(&classes_path))?
        .lines()
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect();
    let csv_path = dir.join(CORPUS_CSV);
    let mut r = csv::Reader::from_path(&csv_path).map_err(csv_err(&csv_path))?;
    let mut corpus = Corpus {
        classes,
        ..Default::default()
    };
    for row in r.deserialize::<CorpusRow>() {
        let row = row.map_err(csv_err(&csv_path))?;
        let bad = |reason: String| DatasetError::Manifest {
            path: csv_path.clone(),
            reason,
        };
        if corpus.classes.get(row.label) != Some(&row.class) {
            return Err(bad(format!("label {} does not name class {:?}", row.label, row.class)));
        }
        let augmentation: Augmentation = row.augmentation.parse().map_err(bad)?;
        let file: PathBuf = dir.join(&row.file);
        let frame = read_pgm(&file).map_err(|source| DatasetError::Video {
            video: row.video_id.clone(),
            source,
        })?;
        corpus.get_mut(row.split).push(LabeledExample {
            image: RepresentationImage::from_frame(&frame),
            label: row.label,
            provenance: Provenance {
                video_id: row.video_id,
                augmentation,
            },
        });
    }
    Ok(corpus)
}
