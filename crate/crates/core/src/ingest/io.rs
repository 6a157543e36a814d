use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

fn gz_sibling(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".gz");
    PathBuf::from(s)
}

/// Reads a UTF-8 file, falling back to `<path>.gz`. Paths ending in `.gz`
/// are always decompressed.
pub fn read_text(path: &Path) -> Result<String> {
    let (actual, gz) = if path.exists() {
        (
            path.to_path_buf(),
            path.extension().is_some_and(|e| e == "gz"),
        )
    } else {
        let alt = gz_sibling(path);
        if !alt.exists() {
            return Err(Error::MissingComponent(path.to_path_buf()));
        }
        (alt, true)
    };
    let bytes = fs::read(&actual).map_err(|e| Error::io(&actual, e))?;
    let text = if gz {
        let mut out = String::new();
        GzDecoder::new(bytes.as_slice())
            .read_to_string(&mut out)
            .map_err(|e| Error::io(&actual, e))?;
        out
    } else {
        String::from_utf8(bytes)
            .map_err(|e| Error::format(actual.display().to_string(), e.to_string()))?
    };
    Ok(text)
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
