//! Append-only file of length-prefixed, CRC-protected frames.
//!
//! Each frame is `u32 len | u32 crc32(payload) | payload`. A frame cut short
//! by a crash is dropped and the file truncated on the next open; a complete
//! frame whose checksum fails is reported as corruption.

use std::fs::{self, File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub(crate) struct FramedLog {
    path: PathBuf,
    file: File,
    sync: bool,
}

impl FramedLog {
    /// Opens (creating if needed) the log and returns it with every intact
    /// frame payload in write order.
    pub fn open(path: &Path, sync: bool) -> Result<(Self, Vec<Vec<u8>>)> {
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(path)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;

        let mut frames = Vec::new();
        let mut pos = 0usize;
        while pos < bytes.len() {
            if bytes.len() - pos < 8 {
                break;
            }
            let len = u32::from_le_bytes(bytes[pos..pos + 4].try_into().expect("4 bytes")) as usize;
            let crc = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().expect("4 bytes"));
            let end = pos + 8 + len;
            if end > bytes.len() {
                break;
            }
            let payload = &bytes[pos + 8..end];
            if crc32fast::hash(payload) != crc {
                return Err(Error::corruption(
                    path,
                    format!("frame at byte {pos} fails its checksum"),
                ));
            }
            frames.push(payload.to_vec());
            pos = end;
        }
        if pos < bytes.len() {
            log::warn!(
                "{}: dropping {} bytes of torn trailing frame",
                path.display(),
                bytes.len() - pos
            );
            file.set_len(pos as u64)?;
            file.sync_all()?;
        }
        Ok((
            Self {
                path: path.to_path_buf(),
                file,
                sync,
            },
            frames,
        ))
    }

    pub fn append(&mut self, payload: &[u8]) -> Result<()> {
        self.file.write_all(&frame(payload))?;
        if self.sync {
            self.file.sync_data()?;
        }
        Ok(())
    }

    /// Atomically replaces the whole log with `payloads`.
    pub fn rewrite(&mut self, payloads: &[Vec<u8>]) -> Result<()> {
        let tmp = self.path.with_extension("tmp");
        {
            let mut f = File::create(&tmp)?;
            for p in payloads {
                f.write_all(&frame(p))?;
            }
            f.sync_all()?;
        }
        fs::rename(&tmp, &self.path)?;
        sync_dir(&self.path);
        self.file = OpenOptions::new().append(true).open(&self.path)?;
        Ok(())
    }
}

fn frame(payload: &[u8]) -> Vec<u8> {
    let mut buf = Vec::with_capacity(payload.len() + 8);
    buf.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    buf.extend_from_slice(&crc32fast::hash(payload).to_le_bytes());
    buf.extend_from_slice(payload);
    buf
}

/// Best effort: persists a rename by syncing the parent directory.
pub(crate) fn sync_dir(path: &Path) {
    if let Some(parent) = path.parent() {
        if let Ok(dir) = File::open(parent) {
            let _ = dir.sync_all();
        }
    }
}

/// Writes `bytes` to `path` via a synced temporary file and a rename.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic_gated(path, bytes, || Ok(()))
}

/// Like [`write_atomic`]; `gate` runs between the temporary write and the
/// rename, and an error from it leaves `path` untouched.
pub(crate) fn write_atomic_gated(path: &Path, bytes: &[u8], gate: impl FnOnce() -> Result<()>) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    if let Err(e) = gate() {
        let _ = fs::remove_file(&tmp);
        return Err(e);
    }
    fs::rename(&tmp, path)?;
    sync_dir(path);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torn_tail_is_truncated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log");
        {
            let (mut log, frames) = FramedLog::open(&path, false).unwrap();
            assert!(frames.is_empty());
            log.append(b"one").unwrap();
            log.append(b"two").unwrap();
        }
        let full = fs::read(&path).unwrap();
        fs::write(&path, &full[..full.len() - 2]).unwrap();
        let (mut log, frames) = FramedLog::open(&path, false).unwrap();
        assert_eq!(frames, vec![b"one".to_vec()]);
        log.append(b"three").unwrap();
        drop(log);
        let (_, frames) = FramedLog::open(&path, false).unwrap();
        assert_eq!(frames, vec![b"one".to_vec(), b"three".to_vec()]);
    }

    #[test]
    fn corrupt_frame_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log");
        {
            let (mut log, _) = FramedLog::open(&path, false).unwrap();
            log.append(b"payload").unwrap();
        }
        let mut bytes = fs::read(&path).unwrap();
        bytes[9] ^= 1;
        fs::write(&path, bytes).unwrap();
        assert!(matches!(FramedLog::open(&path, false), Err(Error::Corruption { .. })));
    }

    #[test]
    fn rewrite_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log");
        let (mut log, _) = FramedLog::open(&path, true).unwrap();
        log.append(b"a").unwrap();
        log.rewrite(&[b"b".to_vec()]).unwrap();
        log.append(b"c").unwrap();
        drop(log);
        let (_, frames) = FramedLog::open(&path, false).unwrap();
        assert_eq!(frames, vec![b"b".to_vec(), b"c".to_vec()]);
    }
}
