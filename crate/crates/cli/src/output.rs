use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

/// One output file, held in memory until the run finishes.
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

pub fn csv_bytes<R: Serialize>(rows: &[R]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))
}

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(dir: &Path, artifact: &Artifact) -> Result<(), CliError> {
    let target = dir.join(&artifact.name);
    let tmp = dir.join(format!(".{}.tmp{}", artifact.name, std::process::id()));
    let mut f = fs::File::create(&tmp)?;
    f.write_all(&artifact.bytes)?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, &target)?;
    Ok(())
}

pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    for a in artifacts {
        write_atomic(dir, a)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        a: f64,
        b: u8,
    }

    #[test]
    fn rows_get_a_header() {
        let bytes = csv_bytes(&[Row { a: 0.5, b: 1 }, Row { a: f64::NAN, b: 0 }]).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "a,b\n0.5,1\nNaN,0\n");
    }

    #[test]
    fn atomic_write_leaves_no_temp_file() {
        let dir = tempfile::tempdir().unwrap();
        let art = Artifact {
            name: "x.csv".into(),
            bytes: b"1\n".to_vec(),
        };
        write_all(dir.path(), &[art]).unwrap();
        let names: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        assert_eq!(names, vec!["x.csv".to_string()]);
    }
}
