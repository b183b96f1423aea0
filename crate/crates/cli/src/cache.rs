//! Content-addressed on-disk cache of computed theory values.
//!
//! One file per (signature version, structure, shape) key, sharded by the
//! first two hex digits of the key hash.  Files are write-once: a put for
//! an existing key is a no-op, and concurrent identical puts are resolved
//! by an atomic no-clobber rename.  Every file carries a trailing SHA-256
//! checksum; a file that fails the checksum or does not parse is
//! quarantined (renamed aside) and treated as a miss.
//!
//! File layout: the magic `MTOC1\n`, a length-prefixed JSON metadata
//! object (engine version, shape, signature version, structure, wall
//! time), a length-prefixed compact binary value, and the 32-byte SHA-256
//! of everything before it.

use anyhow::{bail, Context, Result};
use mtorder::shape::Shape;
use mtorder::value::{decode_value, encode_value, TypeId, SIGNATURE_VERSION};
use sha2::{Digest, Sha256};
use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

const MAGIC: &[u8] = b"MTOC1\n";

/// A value fetched from or destined for the cache.
pub struct Entry {
    pub structure: String,
    pub shape: Shape,
    pub value: TypeId,
}

/// Hex key of an entry: hash of the signature version, the structure
/// descriptor, and the canonical shape.
fn key(structure: &str, shape: &Shape) -> String {
    let mut h = Sha256::new();
    h.update(SIGNATURE_VERSION.as_bytes());
    h.update([0]);
    h.update(structure.as_bytes());
    h.update([0]);
    h.update(shape.to_string().as_bytes());
    let d = h.finalize();
    d.iter().map(|b| format!("{b:02x}")).collect()
}

fn path_of(dir: &Path, k: &str) -> PathBuf {
    dir.join(&k[..2]).join(format!("{k}.bin"))
}

fn encode_entry(e: &Entry, wall_ms: u64) -> Vec<u8> {
    let meta = mtorder::json::Json::Obj(vec![
        ("engine".into(), mtorder::json::Json::Str(env!("CARGO_PKG_VERSION").into())),
        ("shape".into(), mtorder::json::Json::Str(e.shape.to_string())),
        ("sig".into(), mtorder::json::Json::Str(SIGNATURE_VERSION.into())),
        ("structure".into(), mtorder::json::Json::Str(e.structure.clone())),
        ("wall_ms".into(), mtorder::json::Json::Int(wall_ms as i64)),
    ])
    .to_string();
    let value = encode_value(e.value, e.shape.depth());
    let mut out = Vec::with_capacity(MAGIC.len() + 8 + meta.len() + value.len() + 32);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    out.extend_from_slice(meta.as_bytes());
    out.extend_from_slice(&(value.len() as u32).to_le_bytes());
    out.extend_from_slice(&value);
    let sum = Sha256::digest(&out);
    out.extend_from_slice(&sum);
    out
}

fn decode_entry(bytes: &[u8]) -> Result<Entry> {
    if bytes.len() < MAGIC.len() + 8 + 32 || &bytes[..MAGIC.len()] != MAGIC {
        bail!("bad magic or truncated file");
    }
    let (body, sum) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != sum {
        bail!("checksum mismatch");
    }
    let mut at = MAGIC.len();
    let meta_len = u32::from_le_bytes(body[at..at + 4].try_into().unwrap()) as usize;
    at += 4;
    let meta: serde_json::Value =
        serde_json::from_slice(body.get(at..at + meta_len).context("truncated metadata")?)?;
    at += meta_len;
    let val_len = u32::from_le_bytes(
        body.get(at..at + 4).context("truncated value length")?.try_into().unwrap(),
    ) as usize;
    at += 4;
    let val = body.get(at..at + val_len).context("truncated value")?;
    if meta["sig"].as_str() != Some(SIGNATURE_VERSION) {
        bail!("signature version mismatch");
    }
    let structure = meta["structure"].as_str().context("missing structure")?.to_string();
    let shape = Shape::parse(meta["shape"].as_str().context("missing shape")?)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let (value, depth) = decode_value(val).context("undecodable value")?;
    if depth != shape.depth() {
        bail!("value depth does not match shape");
    }
    Ok(Entry { structure, shape, value })
}

fn quarantine(path: &Path) {
    let _ = fs::rename(path, path.with_extension("corrupt"));
}

/// Fetches an entry; corrupt or mismatched files are quarantined misses.
pub fn get(dir: &Path, structure: &str, shape: &Shape) -> Option<Entry> {
    let path = path_of(dir, &key(structure, shape));
    let bytes = fs::read(&path).ok()?;
    match decode_entry(&bytes) {
        Ok(e) if e.structure == structure && e.shape == *shape => Some(e),
        _ => {
            quarantine(&path);
            None
        }
    }
}

/// Stores an entry once; later puts for the same key are no-ops.
pub fn put(dir: &Path, e: &Entry, wall_ms: u64) -> Result<()> {
    let path = path_of(dir, &key(&e.structure, &e.shape));
    if path.exists() {
        return Ok(());
    }
    let shard = path.parent().unwrap();
    fs::create_dir_all(shard)?;
    let tmp = tempfile::NamedTempFile::new_in(shard)?;
    fs::write(tmp.path(), encode_entry(e, wall_ms))?;
    match tmp.persist_noclobber(&path) {
        Ok(_) => Ok(()),
        // A racing identical put already wrote the key.
        Err(err) if err.error.kind() == ErrorKind::AlreadyExists => Ok(()),
        Err(err) => Err(err.error.into()),
    }
}

/// All readable entries in the cache directory.
pub fn entries(dir: &Path) -> Vec<Entry> {
    let mut out = Vec::new();
    let Ok(shards) = fs::read_dir(dir) else { return out };
    let mut files: Vec<PathBuf> = Vec::new();
    for shard in shards.flatten() {
        if let Ok(inner) = fs::read_dir(shard.path()) {
            files.extend(inner.flatten().map(|f| f.path()));
        }
    }
    files.sort();
    for path in files {
        if path.extension().map(|x| x == "bin") != Some(true) {
            continue;
        }
        match fs::read(&path).map_err(anyhow::Error::from).and_then(|b| decode_entry(&b)) {
            Ok(e) => out.push(e),
            Err(_) => quarantine(&path),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use mtorder::decide::{theory_of, Structure};

    fn sample() -> Entry {
        let shape = Shape::parse("2;(1)").unwrap();
        let value = theory_of(Structure::Finite(3), &shape).unwrap();
        Entry { structure: "finite:3".into(), shape, value }
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let e = sample();
        put(dir.path(), &e, 5).unwrap();
        let got = get(dir.path(), "finite:3", &e.shape).unwrap();
        assert_eq!(got.value, e.value);
        assert_eq!(got.shape, e.shape);
    }

    #[test]
    fn put_is_write_once() {
        let dir = tempfile::tempdir().unwrap();
        let e = sample();
        put(dir.path(), &e, 5).unwrap();
        let path = path_of(dir.path(), &key(&e.structure, &e.shape));
        let before = fs::read(&path).unwrap();
        put(dir.path(), &e, 99).unwrap();
        assert_eq!(fs::read(&path).unwrap(), before);
    }

    #[test]
    fn corruption_is_a_quarantined_miss() {
        let dir = tempfile::tempdir().unwrap();
        let e = sample();
        put(dir.path(), &e, 5).unwrap();
        let path = path_of(dir.path(), &key(&e.structure, &e.shape));
        let mut bytes = fs::read(&path).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 1;
        fs::write(&path, bytes).unwrap();
        assert!(get(dir.path(), "finite:3", &e.shape).is_none());
        assert!(!path.exists());
        assert!(path.with_extension("corrupt").exists());
    }

    #[test]
    fn listing_returns_stored_entries() {
        let dir = tempfile::tempdir().unwrap();
        let e = sample();
        put(dir.path(), &e, 5).unwrap();
        let all = entries(dir.path());
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].structure, "finite:3");
    }
}
