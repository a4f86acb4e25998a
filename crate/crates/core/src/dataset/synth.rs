use std::fs;
use std::path::Path;

use super::{fnv1a, scan_dataset, DatasetError, DatasetIndex};
use crate::videoio::synth::{door_scene, DoorBehaviour};
use crate::videoio::{write_y4m, Rational};

/// Scene seed for clip `index` of a behaviour.
pub fn door_clip_seed(seed: u64, behaviour: DoorBehaviour, index: usize) -> u64 {
    seed ^ fnv1a(format!("{}/{index}", behaviour.name()).as_bytes())
}

/// Writes `per_class` door-scenario clips of each behaviour as
/// `root/<behaviour>/clip_NNNN.y4m` and indexes the result.
pub fn write_door_dataset(root: impl AsRef<Path>, per_class: usize, seed: u64) -> Result<DatasetIndex, DatasetError> {
    let root = root.as_ref();
    if per_class == 0 {
        return Err(DatasetError::Parameter("per_class must be at least 1".into()));
    }
    for behaviour in DoorBehaviour::ALL {
        let dir = root.join(behaviour.name());
        fs::create_dir_all(&dir).map_err(|source| DatasetError::Io {
            path: dir.clone(),
            source,
        })?;
        for i in 0..per_class {
            let scene = door_scene(behaviour, door_clip_seed(seed, behaviour, i));
            let id = format!("{}/clip_{i:04}", behaviour.name());
            write_y4m(dir.join(format!("clip_{i:04}.y4m")), Rational::default(), &scene.frames())
                .map_err(|source| DatasetError::Video { video: id, source })?;
        }
    }
    scan_dataset(root)
}
