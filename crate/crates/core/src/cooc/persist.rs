//! On-disk layout for tables and null statistics.
//!
//! `cooc/<kind>/<year>.bin`: little-endian `u64` entry count followed by
//! `(u32 i, u32 j, u64 count)` triples sorted by `(i, j)`.
//! `null/<kind>/<year>.bin`: entry count followed by `(u32 i, u32 j, f64 mean, f64 sd)`.
//! `cooc/<kind>/vocab.txt`: one entity per line, line number = id.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::{EntityKind, EntityVocabulary, NullModelStats, PairCountTable};
use crate::error::{Error, Result};

fn read_u32(buf: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(buf[at..at + 4].try_into().unwrap())
}

fn read_u64(buf: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(buf[at..at + 8].try_into().unwrap())
}

fn read_entries(path: &Path, width: usize) -> Result<(Vec<u8>, usize)> {
    let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
    if buf.len() < 8 {
        return Err(Error::invalid(format!(
            "{}: truncated header",
            path.display()
        )));
    }
    let n = read_u64(&buf, 0) as usize;
    if buf.len() != 8 + n * width {
        return Err(Error::invalid(format!(
            "{}: expected {n} entries",
            path.display()
        )));
    }
    Ok((buf, n))
}

pub fn write_table(path: &Path, table: &PairCountTable) -> Result<()> {
    let mut buf = Vec::with_capacity(8 + table.n_cells() * 16);
    buf.extend_from_slice(&(table.n_cells() as u64).to_le_bytes());
    for ((i, j), n) in table.iter() {
        buf.extend_from_slice(&i.to_le_bytes());
        buf.extend_from_slice(&j.to_le_bytes());
        buf.extend_from_slice(&n.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_table(path: &Path, year: i32) -> Result<PairCountTable> {
    let (buf, n) = read_entries(path, 16)?;
    let mut t = PairCountTable::new(year);
    for k in 0..n {
        let at = 8 + k * 16;
        t.add(
            read_u32(&buf, at),
            read_u32(&buf, at + 4),
            read_u64(&buf, at + 8),
        );
    }
    Ok(t)
}

pub fn write_null(path: &Path, stats: &NullModelStats) -> Result<()> {
    let mut buf = Vec::with_capacity(8 + stats.stats.len() * 24);
    buf.extend_from_slice(&(stats.stats.len() as u64).to_le_bytes());
    for ((i, j), (mu, sd)) in &stats.stats {
        buf.extend_from_slice(&i.to_le_bytes());
        buf.extend_from_slice(&j.to_le_bytes());
        buf.extend_from_slice(&mu.to_le_bytes());
        buf.extend_from_slice(&sd.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_null(path: &Path, year: i32, resamples: usize, seed: u64) -> Result<NullModelStats> {
    let (buf, n) = read_entries(path, 24)?;
    let mut stats = BTreeMap::new();
    for k in 0..n {
        let at = 8 + k * 24;
        let mu = f64::from_bits(read_u64(&buf, at + 8));
        let sd = f64::from_bits(read_u64(&buf, at + 16));
        stats.insert((read_u32(&buf, at), read_u32(&buf, at + 4)), (mu, sd));
    }
    Ok(NullModelStats {
        year,
        resamples,
        seed,
        stats,
    })
}

pub fn write_vocab(path: &Path, vocab: &EntityVocabulary) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for name in vocab.names() {
        writeln!(f, "{name}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

pub fn read_vocab(path: &Path, kind: EntityKind) -> Result<EntityVocabulary> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(EntityVocabulary::from_names(
        Some(kind),
        text.lines().map(str::to_string),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn table_file_round_trips(cells in prop::collection::vec((0u32..50, 0u32..50, 1u64..1000), 0..40)) {
            let mut t = PairCountTable::new(1999);
            for (i, j, n) in cells {
                t.add(i, j, n);
            }
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("t.bin");
            write_table(&p, &t).unwrap();
            prop_assert_eq!(read_table(&p, 1999).unwrap(), t);
        }
    }

    #[test]
    fn null_file_round_trips() {
        let mut stats = BTreeMap::new();
        stats.insert((0, 1), (1.25, 0.5));
        stats.insert((2, 2), (0.1, 0.0));
        let s = NullModelStats {
            year: 2001,
            resamples: 20,
            seed: 3,
            stats,
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("n.bin");
        write_null(&p, &s).unwrap();
        assert_eq!(read_null(&p, 2001, 20, 3).unwrap(), s);
    }
}
