//! Kernel table persistence.
//!
//! Binary layout, all little-endian:
//!
//! | field            | type                         |
//! |------------------|------------------------------|
//! | magic            | `b"KTAB"`                    |
//! | version          | `u32` (= 1)                  |
//! | beta count `nb`  | `u64`                        |
//! | radius count `n` | `u64`                        |
//! | r grid           | `n` x `f64`                  |
//! | beta grid        | `nb` x `f64`                 |
//! | values           | `nb * n * n` x `f64`, `[beta][r][s]` row-major |
//! | meta length      | `u64`                        |
//! | meta             | UTF-8 JSON                   |
//! | checksum         | SHA-256 of all bytes above   |

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{KernelTable, TableMeta};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"KTAB";
const VERSION: u32 = 1;

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub(crate) fn content_hash(r_grid: &[f64], beta_grid: &[f64], values: &[f64]) -> String {
    let mut h = Sha256::new();
    h.update((r_grid.len() as u64).to_le_bytes());
    h.update((beta_grid.len() as u64).to_le_bytes());
    for v in r_grid.iter().chain(beta_grid).chain(values) {
        h.update(v.to_le_bytes());
    }
    hex(&h.finalize())
}

/// Writes `bytes` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn save_table(table: &KernelTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (nb, n, _) = table.shape();
    let meta = serde_json::to_vec(&table.meta)?;
    let mut buf = Vec::with_capacity(32 + 8 * (n + nb + table.values().len()) + meta.len() + 32);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(nb as u64).to_le_bytes());
    buf.extend_from_slice(&(n as u64).to_le_bytes());
    for v in table.r_grid().iter().chain(table.beta_grid()).chain(table.values()) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&(meta.len() as u64).to_le_bytes());
    buf.extend_from_slice(&meta);
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    write_atomic(path, &buf)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::TableCheck(format!("file truncated while reading {what}")))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64s(&mut self, count: usize, what: &str) -> Result<Vec<f64>> {
        let len = count
            .checked_mul(8)
            .ok_or_else(|| Error::TableCheck(format!("{what} length overflows")))?;
        Ok(self
            .take(len, what)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

/// Reads a table written by [`save_table`], verifying checksum, format and invariants.
pub fn load_table(path: impl AsRef<Path>) -> Result<KernelTable> {
    let table = load_table_unchecked(path)?;
    table.check_invariants()?;
    Ok(table)
}

/// Like [`load_table`] but leaves the mathematical invariants to the caller, so that a
/// damaged table can still be inspected and its defects reported.
pub fn load_table_unchecked(path: impl AsRef<Path>) -> Result<KernelTable> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 4 + 4 + 16 + 8 + 32 {
        return Err(Error::TableCheck("file truncated: shorter than the fixed header".into()));
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::TableCheck("checksum mismatch (corrupt or truncated file)".into()));
    }
    let mut rd = Reader { bytes: body, pos: 0 };
    if rd.take(4, "magic")? != MAGIC {
        return Err(Error::TableCheck("bad magic, not a kernel table".into()));
    }
    let version = u32::from_le_bytes(rd.take(4, "version")?.try_into().unwrap());
    if version != VERSION {
        return Err(Error::TableCheck(format!("unsupported table version {version}")));
    }
    let nb = rd.u64("beta count")? as usize;
    let n = rd.u64("radius count")? as usize;
    let r_grid = rd.f64s(n, "r grid")?;
    let beta_grid = rd.f64s(nb, "beta grid")?;
    let count = nb
        .checked_mul(n)
        .and_then(|x| x.checked_mul(n))
        .ok_or_else(|| Error::TableCheck("grid shape overflows".into()))?;
    let values = rd.f64s(count, "values")?;
    let meta_len = rd.u64("meta length")? as usize;
    let meta: TableMeta = serde_json::from_slice(rd.take(meta_len, "meta")?)
        .map_err(|e| Error::TableCheck(format!("meta block unreadable: {e}")))?;
    if rd.pos != body.len() {
        return Err(Error::TableCheck("trailing bytes after meta block".into()));
    }
    let stored_hash = meta.hash.clone();
    let table = KernelTable::from_raw_parts(r_grid, beta_grid, values, meta)?;
    if table.meta.hash != stored_hash {
        return Err(Error::TableCheck("meta hash does not match table contents".into()));
    }
    Ok(table)
}

/// CSV export, header `beta,r,s,k`, upper triangle `r <= s` only.
pub fn write_csv(table: &KernelTable, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("beta,r,s,k\n");
    let (nb, n, _) = table.shape();
    for b in 0..nb {
        for i in 0..n {
            for j in i..n {
                out.push_str(&format!(
                    "{},{},{},{:e}\n",
                    table.beta_grid()[b],
                    table.r_grid()[i],
                    table.r_grid()[j],
                    table.get(b, i, j)
                ));
            }
        }
    }
    write_atomic(path.as_ref(), out.as_bytes())
}
