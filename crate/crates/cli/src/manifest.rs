//! Dataset manifests: CSV with header `image_path,category,group`.
//!
//! Image paths in a manifest file are relative to the manifest's directory
//! (absolute paths are kept as-is). In memory, a loaded [`Dataset`] carries
//! absolute paths; writing converts them back to paths relative to the new
//! manifest's location.

use std::path::{Component, Path, PathBuf};

use weednet_core::dataset::Dataset;

use crate::error::{CliError, Result};

pub const HEADER: [&str; 3] = ["image_path", "category", "group"];

/// Makes `path` absolute against the working directory and removes `.`/`..`
/// components lexically.
pub fn normalize(path: &Path) -> Result<PathBuf> {
    let abs = std::path::absolute(path).map_err(CliError::io(path))?;
    let mut out = PathBuf::new();
    for c in abs.components() {
        match c {
            Component::CurDir => {}
            Component::ParentDir => {
                out.pop();
            }
            other => out.push(other),
        }
    }
    Ok(out)
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |e| CliError::Csv { path: path.to_path_buf(), message: e.to_string() }
}

pub fn read_manifest(path: &Path) -> Result<Dataset> {
    let base = normalize(path)?
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let headers = rdr.headers().map_err(csv_err(path))?.clone();
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(CliError::Csv {
            path: path.to_path_buf(),
            message: format!("expected header {}", HEADER.join(",")),
        });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(path))?;
        let image = normalize(&base.join(&rec[0]))?;
        rows.push((image.to_string_lossy().into_owned(), rec[1].to_string(), rec[2].to_string()));
    }
    Ok(Dataset::from_rows(rows)?)
}

/// Writes `ds` with image paths relative to `path`'s directory, using `/`
/// separators.
pub fn write_manifest(path: &Path, ds: &Dataset) -> Result<()> {
    let target = normalize(path)?;
    let dir = target.parent().map(Path::to_path_buf).unwrap_or_default();
    std::fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
    let mut wtr = csv::Writer::from_path(path).map_err(csv_err(path))?;
    wtr.write_record(HEADER).map_err(csv_err(path))?;
    for (image, cat, group) in ds.rows() {
        let abs = normalize(Path::new(image))?;
        let rel = pathdiff::diff_paths(&abs, &dir).unwrap_or(abs);
        let rel: Vec<_> = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect();
        wtr.write_record([rel.join("/").as_str(), cat, group]).map_err(csv_err(path))?;
    }
    wtr.flush().map_err(CliError::io(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_rebases_paths() {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("data/manifest.csv");
        std::fs::create_dir_all(src.parent().unwrap()).unwrap();
        std::fs::write(
            &src,
            "image_path,category,group\nimg/a.png,maize,crop\nimg/b.png,thistle,weed\n",
        )
        .unwrap();
        let ds = read_manifest(&src).unwrap();
        assert_eq!(ds.len(), 2);
        assert!(Path::new(&ds.samples[0].image_path).is_absolute());

        let out = dir.path().join("runs/split/train.csv");
        write_manifest(&out, &ds).unwrap();
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.contains("../../data/img/a.png,maize,crop"), "{text}");
        let back = read_manifest(&out).unwrap();
        assert_eq!(back.samples, ds.samples);
        assert_eq!(back.taxonomy, ds.taxonomy);
    }

    #[test]
    fn bad_header_and_group_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        std::fs::write(&p, "path,cat,group\na.png,x,crop\n").unwrap();
        assert!(matches!(read_manifest(&p), Err(CliError::Csv { .. })));
        std::fs::write(&p, "image_path,category,group\na.png,x,tree\n").unwrap();
        assert!(matches!(read_manifest(&p), Err(CliError::Core(_))));
    }
}
