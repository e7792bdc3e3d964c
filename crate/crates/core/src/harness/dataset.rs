use std::fs;
use std::path::Path;

use super::HarnessError;
use crate::imagecore::{io::load, GrayImage};

#[derive(Clone, Debug)]
pub struct DatasetItem {
    pub id: String,
    pub image: GrayImage,
    /// Contents of `<id>.txt` next to the image, if present. Only the mock
    /// engine reads it.
    pub transcript: Option<String>,
}

#[derive(Clone, Debug, Default)]
pub struct Dataset {
    pub items: Vec<DatasetItem>,
    /// One message per file that could not be read.
    pub warnings: Vec<String>,
}

/// Loads every `.png`/`.pgm` in `dir`, ordered by file stem. Unreadable
/// images are skipped with a warning; an empty result is an error.
pub fn ingest_dataset(dir: &Path) -> Result<Dataset, HarnessError> {
    let entries = fs::read_dir(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut paths: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| e.eq_ignore_ascii_case("png") || e.eq_ignore_ascii_case("pgm"))
        })
        .collect();
    paths.sort_by(|a, b| a.file_stem().cmp(&b.file_stem()).then_with(|| a.cmp(b)));

    let mut dataset = Dataset::default();
    for path in paths {
        let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        match load(&path) {
            Ok(image) => {
                let transcript = fs::read_to_string(path.with_extension("txt")).ok();
                dataset.items.push(DatasetItem { id, image, transcript });
            }
            Err(e) => {
                log::warn!("skipping {}: {e}", path.display());
                dataset.warnings.push(format!("{}: {e}", path.display()));
            }
        }
    }
    if dataset.items.is_empty() {
        return Err(HarnessError::EmptyDataset(dir.to_path_buf()));
    }
    Ok(dataset)
}
