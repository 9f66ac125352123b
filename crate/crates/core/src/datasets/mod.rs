//! Manifests, speaker folds and on-disk containers.

mod container;
mod folds;
mod manifest;

use std::path::{Path, PathBuf};

pub use container::{
    decode_ccgram, encode_ccgram, read_ccgram, write_ccgram, Checkpoint, Tensor, CCG_HEADER_LEN, CCG_MAGIC,
    CKP_MAGIC,
};
pub use folds::{make_folds, make_folds_with, FoldAssignment, FoldOptions, Role, MIN_SPEAKERS};
pub use manifest::{Manifest, ManifestEntry, FOLD_SCHEME_VERSION, MANIFEST_HEADER};

use crate::error::Result;

/// Sibling path used for write-then-rename.
pub(crate) fn temp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(format!(".tmp{}", std::process::id()));
    path.with_file_name(name)
}

/// Writes `bytes` to a temp file beside `path` and renames it into place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = temp_path(path);
    if let Err(e) = std::fs::write(&tmp, bytes).and_then(|_| std::fs::rename(&tmp, path)) {
        let _ = std::fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.bin");
        atomic_write(&p, b"one").unwrap();
        atomic_write(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
