//! Training-input discovery: filename-stem pairing and manifest files.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use phaseflow::{Error, Result};

const FEATURE_SUFFIX: &str = ".features.csv";
const LABEL_SUFFIX: &str = ".labels.csv";

/// Pairs feature files with label files sharing a filename stem
/// (`video01.features.csv` with `video01.labels.csv`). Directories expand,
/// non-recursively, to the files carrying the conventional suffix. Pairs
/// come back sorted by stem.
pub fn pair_by_stem(features: &[PathBuf], labels: &[PathBuf]) -> Result<Vec<(PathBuf, PathBuf)>> {
    let feature_map = collect(features, FEATURE_SUFFIX)?;
    let label_map = collect(labels, LABEL_SUFFIX)?;
    for stem in feature_map.keys() {
        if !label_map.contains_key(stem) {
            return Err(Error::InvalidParameter(format!(
                "no label file for stem {stem:?}"
            )));
        }
    }
    for stem in label_map.keys() {
        if !feature_map.contains_key(stem) {
            return Err(Error::InvalidParameter(format!(
                "no feature file for stem {stem:?}"
            )));
        }
    }
    if feature_map.is_empty() {
        return Err(Error::InvalidParameter("no input files found".into()));
    }
    let mut pairs = Vec::with_capacity(feature_map.len());
    for (stem, feature_path) in &feature_map {
        pairs.push((feature_path.clone(), label_map[stem].clone()));
    }
    Ok(pairs)
}

fn collect(paths: &[PathBuf], suffix: &str) -> Result<BTreeMap<String, PathBuf>> {
    let mut out: BTreeMap<String, PathBuf> = BTreeMap::new();
    let mut insert = |path: PathBuf| -> Result<()> {
        let stem = stem_of(&path, suffix)?;
        if let Some(previous) = out.insert(stem.clone(), path) {
            return Err(Error::InvalidParameter(format!(
                "stem {stem:?} appears twice (already seen as {})",
                previous.display()
            )));
        }
        Ok(())
    };
    for path in paths {
        if path.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(path)?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<_>>()?;
            entries.sort();
            let mut found = false;
            for entry in entries {
                let matches = entry.is_file()
                    && entry
                        .file_name()
                        .is_some_and(|n| n.to_string_lossy().ends_with(suffix));
                if matches {
                    insert(entry)?;
                    found = true;
                }
            }
            if !found {
                return Err(Error::InvalidParameter(format!(
                    "directory {} holds no *{suffix} files",
                    path.display()
                )));
            }
        } else {
            insert(path.clone())?;
        }
    }
    Ok(out)
}

/// Filename minus the conventional suffix; nonconforming names fall back to
/// dropping a `.csv`/`.jsonl` extension.
fn stem_of(path: &Path, suffix: &str) -> Result<String> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter(format!("{} has no filename", path.display())))?
        .to_string_lossy()
        .into_owned();
    let stem = name
        .strip_suffix(suffix)
        .or_else(|| name.strip_suffix(".csv"))
        .or_else(|| name.strip_suffix(".jsonl"))
        .unwrap_or(&name);
    if stem.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "cannot derive a stem from {name:?}"
        )));
    }
    Ok(stem.to_string())
}

/// Reads a manifest of `features_path,labels_path` lines. Blank lines and
/// `#` comments are skipped; relative paths resolve against the manifest's
/// own directory.
pub fn read_manifest(path: &Path) -> Result<Vec<(PathBuf, PathBuf)>> {
    let base = path.parent().unwrap_or_else(|| Path::new("")).to_path_buf();
    let reader = BufReader::new(fs::File::open(path)?);
    let mut pairs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let line_no = idx as u64 + 1;
        let Some((f, l)) = trimmed.split_once(',') else {
            return Err(Error::Parse {
                line: line_no,
                msg: "expected `features_path,labels_path`".into(),
            });
        };
        let (f, l) = (f.trim(), l.trim());
        if f.is_empty() || l.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                msg: "empty path".into(),
            });
        }
        pairs.push((resolve(&base, f), resolve(&base, l)));
    }
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("manifest lists no pairs".into()));
    }
    Ok(pairs)
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let path = Path::new(p);
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn touch(path: &Path) {
        fs::write(path, "").unwrap();
    }

    #[test]
    fn pairs_files_by_stem_in_sorted_order() {
        let dir = tempfile::tempdir().unwrap();
        for name in [
            "b.features.csv",
            "a.features.csv",
            "a.labels.csv",
            "b.labels.csv",
            "notes.txt",
        ] {
            touch(&dir.path().join(name));
        }
        let pairs =
            pair_by_stem(&[dir.path().to_path_buf()], &[dir.path().to_path_buf()]).unwrap();
        assert_eq!(pairs.len(), 2);
        assert!(pairs[0].0.ends_with("a.features.csv"));
        assert!(pairs[0].1.ends_with("a.labels.csv"));
        assert!(pairs[1].0.ends_with("b.features.csv"));
    }

    #[test]
    fn missing_partner_names_the_stem() {
        let dir = tempfile::tempdir().unwrap();
        touch(&dir.path().join("video01.features.csv"));
        touch(&dir.path().join("video02.features.csv"));
        touch(&dir.path().join("video01.labels.csv"));
        let err = pair_by_stem(&[dir.path().to_path_buf()], &[dir.path().to_path_buf()])
            .unwrap_err();
        assert!(err.to_string().contains("video02"), "{err}");
    }

    #[test]
    fn explicit_file_lists_pair_without_directories() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("x.features.csv");
        let l = dir.path().join("x.labels.csv");
        touch(&f);
        touch(&l);
        let pairs = pair_by_stem(
            std::slice::from_ref(&f),
            std::slice::from_ref(&l),
        )
        .unwrap();
        assert_eq!(pairs, vec![(f, l)]);
    }

    #[test]
    fn duplicate_stems_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("same.features.csv");
        touch(&a);
        let err = pair_by_stem(&[a.clone(), a.clone()], &[]).unwrap_err();
        assert!(err.to_string().contains("same"), "{err}");
    }

    #[test]
    fn empty_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let err =
            pair_by_stem(&[dir.path().to_path_buf()], &[dir.path().to_path_buf()]).unwrap_err();
        assert!(err.to_string().contains("holds no"), "{err}");
    }

    #[test]
    fn manifest_resolves_relative_paths_and_skips_comments() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("inputs.csv");
        fs::write(
            &manifest,
            "# layout\nrun1/f.csv, run1/l.csv\n\n/abs/f.csv,/abs/l.csv\n",
        )
        .unwrap();
        let pairs = read_manifest(&manifest).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].0, dir.path().join("run1/f.csv"));
        assert_eq!(pairs[0].1, dir.path().join("run1/l.csv"));
        assert_eq!(pairs[1].0, PathBuf::from("/abs/f.csv"));
    }

    #[test]
    fn malformed_manifest_line_reports_its_number() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("inputs.csv");
        fs::write(&manifest, "a.csv,b.csv\njust-one-path\n").unwrap();
        let err = read_manifest(&manifest).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn empty_manifest_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("inputs.csv");
        fs::write(&manifest, "# nothing\n").unwrap();
        assert!(read_manifest(&manifest).is_err());
    }
}
