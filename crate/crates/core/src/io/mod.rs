//! File formats: the HDF5 container and the plain-text side formats.

mod container;
mod text;

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub use container::{
    load_annotations, load_container, load_edge_volume, load_segmentation, read_provenance, save_annotations,
    save_container, save_edge_volume, CremiContainer, EdgeDataset, ANNOTATION_IDS, ANNOTATION_LOCATIONS,
    ANNOTATION_TYPES, EDGE_LABELS, EDGE_SCORES, NEURON_IDS, PARTNERS, PARTNER_IDS, RAW,
};
pub use text::{
    format_annotations_text, format_partners_tsv, parse_annotations_text, parse_partners_tsv, provenance_header,
    PartnerRecord,
};

fn temp_sibling(path: &Path) -> Result<PathBuf> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Format { path: path.to_path_buf(), msg: "output path has no file name".into() })?;
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    Ok(dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id())))
}

/// Runs `write` against a temporary sibling of `path`, then renames it into place.
pub fn atomic_write<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&Path) -> Result<()>,
{
    let tmp = temp_sibling(path)?;
    match write(&tmp) {
        Ok(()) => {
            fs::rename(&tmp, path)?;
            Ok(())
        }
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

pub fn write_text_atomic(path: &Path, contents: &str) -> Result<()> {
    atomic_write(path, |tmp| Ok(fs::write(tmp, contents)?))
}

/// Reads a text file, tagging I/O failures with the path.
pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Format { path: path.to_path_buf(), msg: e.to_string() })
}
