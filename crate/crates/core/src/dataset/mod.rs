//! Dataset layout on disk, seeded stratified splits, labelled representation
//! images and their augmentation.
//!
//! A dataset root holds one directory per class. Each class directory holds
//! `.y4m` files, or subdirectories of `.pgm` frames, one per video:
//!
//! ```text
//! root/
//!   run/  p1.y4m  p2.y4m
//!   walk/ p1/  frame_0001.pgm ...
//! ```
//!
//! Splitting happens per source video before augmentation, so no augmented
//! variant of a video can land in a different split from its original.

mod augment;
mod corpus;
mod split;
mod synth;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

pub use augment::{augment, mirror, translate, AugmentParams};
pub use corpus::{
    build_examples, read_corpus, read_manifest, write_corpus, write_manifest, Corpus, ManifestRow,
};
pub use split::{split, Split, SplitSets, SplitSpec};
pub use synth::{door_clip_seed, write_door_dataset};

use crate::motion::{MotionError, RepresentationImage};
use crate::videoio::{open_y4m, read_pgm_sequence, FrameStream, VideoError};
use crate::ErrorKind;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{0}: no class directories with videos")]
    NoClasses(PathBuf),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {reason}")]
    Manifest { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("video {video}: {source}")]
    Video { video: String, source: VideoError },
    #[error("video {video}: {source}")]
    Motion { video: String, source: MotionError },
}

impl DatasetError {
    pub(crate) fn kind(&self) -> ErrorKind {
        match self {
            DatasetError::Parameter(_) => ErrorKind::Usage,
            DatasetError::Video { source, .. } => source.kind(),
            DatasetError::Motion { source, .. } => source.kind(),
            DatasetError::NoClasses(_)
            | DatasetError::Io { .. }
            | DatasetError::Manifest { .. }
            | DatasetError::Csv { .. } => ErrorKind::Data,
        }
    }
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// How a video is stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VideoFormat {
    Y4m,
    PgmFrames,
}

/// One source video found by [`scan_dataset`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VideoEntry {
    /// `class/name`, unique within the dataset.
    pub id: String,
    pub label: usize,
    pub class_name: String,
    pub path: PathBuf,
    pub format: VideoFormat,
}

impl VideoEntry {
    pub fn open(&self) -> Result<FrameStream, DatasetError> {
        let stream = match self.format {
            VideoFormat::Y4m => open_y4m(&self.path),
            VideoFormat::PgmFrames => read_pgm_sequence(&self.path, "*.pgm", None),
        };
        stream.map_err(|source| DatasetError::Video {
            video: self.id.clone(),
            source,
        })
    }
}

/// Class names (index = label) and the videos under a root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetIndex {
    pub root: PathBuf,
    pub classes: Vec<String>,
    pub entries: Vec<VideoEntry>,
}

fn read_dir_sorted(dir: &Path) -> Result<Vec<(String, PathBuf, bool)>, DatasetError> {
    let io = |source| DatasetError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let entry = entry.map_err(io)?;
        let Ok(name) = entry.file_name().into_string() else {
            continue;
        };
        if name.starts_with('.') {
            continue;
        }
        let path = entry.path();
        out.push((name, path.clone(), path.is_dir()));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

fn has_pgm(dir: &Path) -> bool {
    fs::read_dir(dir)
        .map(|it| {
            it.filter_map(|e| e.ok())
                .any(|e| e.path().extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")) && e.path().is_file())
        })
        .unwrap_or(false)
}

/// Enumerates `root/<class>/<video>` in sorted order. Class directories with
/// no videos are skipped with a warning and get no label.
pub fn scan_dataset(root: impl AsRef<Path>) -> Result<DatasetIndex, DatasetError> {
    let root = root.as_ref();
    let mut classes = Vec::new();
    let mut entries = Vec::new();
    for (class_name, class_dir, is_dir) in read_dir_sorted(root)? {
        if !is_dir {
            continue;
        }
        let mut videos = Vec::new();
        for (name, path, is_dir) in read_dir_sorted(&class_dir)? {
            let format = if is_dir && has_pgm(&path) {
                VideoFormat::PgmFrames
            } else if !is_dir && path.extension().is_some_and(|x| x.eq_ignore_ascii_case("y4m")) {
                VideoFormat::Y4m
            } else {
                continue;
            };
            let stem = match format {
                VideoFormat::Y4m => Path::new(&name)
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or(name),
                VideoFormat::PgmFrames => name,
            };
            videos.push((stem, path, format));
        }
        if videos.is_empty() {
            log::warn!("class directory {} holds no videos; skipped", class_dir.display());
            continue;
        }
        let label = classes.len();
        for (stem, path, format) in videos {
            entries.push(VideoEntry {
                id: format!("{class_name}/{stem}"),
                label,
                class_name: class_name.clone(),
                path,
                format,
            });
        }
        classes.push(class_name);
    }
    if classes.is_empty() {
        return Err(DatasetError::NoClasses(root.to_path_buf()));
    }
    Ok(DatasetIndex {
        root: root.to_path_buf(),
        classes,
        entries,
    })
}

/// How an example was derived from its source video.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Augmentation {
    Original,
    Variant { index: usize, mirrored: bool, dx: i32, dy: i32 },
}

impl fmt::Display for Augmentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Augmentation::Original => f.write_str("original"),
            Augmentation::Variant { index, mirrored, dx, dy } => {
                write!(f, "aug{index}:{}:{dx}:{dy}", if *mirrored { "m" } else { "n" })
            }
        }
    }
}

impl std::str::FromStr for Augmentation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "original" {
            return Ok(Augmentation::Original);
        }
        let bad = || format!("bad augmentation descriptor {s:?}");
        let parts: Vec<&str> = s.split(':').collect();
        let [head, m, dx, dy] = parts[..] else {
            return Err(bad());
        };
        let index = head.strip_prefix("aug").and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let mirrored = match m {
            "m" => true,
            "n" => false,
            _ => return Err(bad()),
        };
        Ok(Augmentation::Variant {
            index,
            mirrored,
            dx: dx.parse().map_err(|_| bad())?,
            dy: dy.parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Provenance {
    pub video_id: String,
    pub augmentation: Augmentation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub image: RepresentationImage,
    pub label: usize,
    pub provenance: Provenance,
}

impl LabeledExample {
    pub fn original(image: RepresentationImage, label: usize, video_id: impl Into<String>) -> Self {
        LabeledExample {
            image,
            label,
            provenance: Provenance {
                video_id: video_id.into(),
                augmentation: Augmentation::Original,
            },
        }
    }
}
