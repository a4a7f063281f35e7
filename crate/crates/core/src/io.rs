//! Binary field and noise files, CSV tables.
//!
//! Both binary formats are little-endian: a 4-byte magic, a `u32` version,
//! a fixed header, then raw `f64` payload.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid_noise::NoisePath;

pub const NOISE_MAGIC: &[u8; 4] = b"BNP1";
pub const FIELD_MAGIC: &[u8; 4] = b"BFD1";
pub const FORMAT_VERSION: u32 = 1;

/// A sampled field at time `t` on a torus of the given length.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub t: f64,
    pub length: f64,
    pub values: Vec<f64>,
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| Error::Format(format!("truncated header or payload: {e}")))?;
        Ok(buf)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
    fn header(&mut self, magic: &[u8; 4]) -> Result<()> {
        let found: [u8; 4] = self.bytes()?;
        if &found != magic {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&found),
                String::from_utf8_lossy(magic)
            )));
        }
        let version = self.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        Ok(())
    }
    fn payload(&mut self, count: usize) -> Result<Vec<f64>> {
        let mut raw = vec![0u8; count.checked_mul(8).ok_or_else(|| Error::Format("payload too large".into()))?];
        self.inner
            .read_exact(&mut raw)
            .map_err(|e| Error::Format(format!("truncated payload: {e}")))?;
        let mut extra = [0u8; 1];
        if self.inner.read(&mut extra)? != 0 {
            return Err(Error::Format("trailing bytes after payload".into()));
        }
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

fn put_payload(w: &mut impl Write, values: &[f64]) -> Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_noise_path(path: &NoisePath, w: &mut impl Write) -> Result<()> {
    if path.increments.len() != path.steps * path.n {
        return Err(Error::Format("noise path payload does not match steps·n".into()));
    }
    w.write_all(NOISE_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&path.seed.to_le_bytes())?;
    w.write_all(&path.dt.to_le_bytes())?;
    w.write_all(&(path.steps as u64).to_le_bytes())?;
    w.write_all(&(path.n as u64).to_le_bytes())?;
    put_payload(w, &path.increments)
}

pub fn read_noise_path(r: impl Read) -> Result<NoisePath> {
    let mut r = Reader { inner: r };
    r.header(NOISE_MAGIC)?;
    let seed = r.u64()?;
    let dt = r.f64()?;
    let steps = r.u64()? as usize;
    let n = r.u64()? as usize;
    let increments = r.payload(steps.checked_mul(n).ok_or_else(|| Error::Format("steps·n overflows".into()))?)?;
    Ok(NoisePath { seed, dt, steps, n, increments })
}

pub fn write_field(field: &FieldFile, w: &mut impl Write) -> Result<()> {
    w.write_all(FIELD_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&field.t.to_le_bytes())?;
    w.write_all(&field.length.to_le_bytes())?;
    w.write_all(&(field.values.len() as u64).to_le_bytes())?;
    put_payload(w, &field.values)
}

pub fn read_field(r: impl Read) -> Result<FieldFile> {
    let mut r = Reader { inner: r };
    r.header(FIELD_MAGIC)?;
    let t = r.f64()?;
    let length = r.f64()?;
    let n = r.u64()? as usize;
    let values = r.payload(n)?;
    Ok(FieldFile { t, length, values })
}

pub fn save_noise_path(path: &NoisePath, file: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(file)?);
    write_noise_path(path, &mut w)?;
    Ok(w.flush()?)
}

pub fn load_noise_path(file: &Path) -> Result<NoisePath> {
    read_noise_path(BufReader::new(File::open(file)?))
}

pub fn save_field(field: &FieldFile, file: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(file)?);
    write_field(field, &mut w)?;
    Ok(w.flush()?)
}

pub fn load_field(file: &Path) -> Result<FieldFile> {
    read_field(BufReader::new(File::open(file)?))
}

/// Writes a header row and numeric rows. Values use Rust's shortest
/// round-trip formatting, switching to exponent form at the extremes.
pub fn write_csv<R: AsRef<[f64]>>(file: &Path, header: &[&str], rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_path(file).map_err(csv_error)?;
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        let row = row.as_ref();
        if row.len() != header.len() {
            return Err(Error::Format(format!("csv row has {} columns, header has {}", row.len(), header.len())));
        }
        w.write_record(row.iter().map(|v| format!("{v:?}"))).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// `x,value` table of a field on its grid.
pub fn write_field_csv(field: &FieldFile, file: &Path) -> Result<()> {
    let dx = field.length / field.values.len() as f64;
    let rows: Vec<[f64; 2]> = field.values.iter().enumerate().map(|(k, &v)| [k as f64 * dx, v]).collect();
    write_csv(file, &["x", "value"], &rows)
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("csv: {other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits(v: &[f64]) -> Vec<u64> {
        v.iter().map(|x| x.to_bits()).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn noise_path_round_trips_bit_exactly(
            seed in any::<u64>(),
            dt in 1e-6f64..1.0,
            steps in 1usize..6,
            n in 1usize..12,
            raw in prop::collection::vec(any::<u64>(), 72),
        ) {
            let increments: Vec<f64> = raw.iter().take(steps * n).map(|b| f64::from_bits(*b)).collect();
            let p = NoisePath { seed, dt, steps, n, increments };
            let mut buf = vec![];
            write_noise_path(&p, &mut buf).unwrap();
            prop_assert_eq!(buf.len(), 40 + 8 * steps * n);
            let q = read_noise_path(&buf[..]).unwrap();
            prop_assert_eq!((q.seed, q.dt.to_bits(), q.steps, q.n), (seed, dt.to_bits(), steps, n));
            prop_assert_eq!(bits(&q.increments), bits(&p.increments));
        }

        #[test]
        fn field_round_trips_bit_exactly(
            t in any::<f64>(),
            raw in prop::collection::vec(any::<u64>(), 0..40),
        ) {
            let f = FieldFile { t, length: 16.0, values: raw.iter().map(|b| f64::from_bits(*b)).collect() };
            let mut buf = vec![];
            write_field(&f, &mut buf).unwrap();
            let g = read_field(&buf[..]).unwrap();
            prop_assert_eq!(g.t.to_bits(), t.to_bits());
            prop_assert_eq!(bits(&g.values), bits(&f.values));
        }
    }

    #[test]
    fn corrupted_files_are_rejected() {
        let f = FieldFile { t: 1.0, length: 16.0, values: vec![1.0, 2.0] };
        let mut buf = vec![];
        write_field(&f, &mut buf).unwrap();
        assert!(read_noise_path(&buf[..]).is_err());
        assert!(read_field(&buf[..buf.len() - 1]).is_err());
        let mut long = buf.clone();
        long.push(0);
        assert!(read_field(&long[..]).is_err());
        buf[4] = 9;
        assert!(read_field(&buf[..]).unwrap_err().to_string().contains("version"));
    }

    #[test]
    fn files_and_csv_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let f = FieldFile { t: 0.5, length: 4.0, values: vec![0.25, -1.0, 3.0, 1e-300] };
        let path = dir.path().join("u.bfd");
        save_field(&f, &path).unwrap();
        assert_eq!(load_field(&path).unwrap(), f);
        let csv_path = dir.path().join("u.csv");
        write_field_csv(&f, &csv_path).unwrap();
        let text = std::fs::read_to_string(&csv_path).unwrap();
        assert_eq!(text.lines().next(), Some("x,value"));
        assert_eq!(text.lines().nth(4), Some("3.0,1e-300"));
        assert!(write_csv(&csv_path, &["a"], &[[1.0, 2.0]]).is_err());
    }
}
