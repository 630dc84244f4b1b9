//! "URM1" binary dumps: magic, little-endian u64 rows and cols, then a
//! row-major f64 payload (dense) or u64 nnz, offsets, indices and values (sparse).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::dense::DenseMatrix;
use super::sparse::SparseMatrix;

const MAGIC: &[u8; 4] = b"URM1";

fn put_u64(w: &mut impl Write, v: usize) -> Result<()> {
    w.write_all(&(v as u64).to_le_bytes())?;
    Ok(())
}

fn put_f64s(w: &mut impl Write, v: &[f64]) -> Result<()> {
    for x in v {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn get_u64(r: &mut impl Read) -> Result<usize> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    usize::try_from(u64::from_le_bytes(b)).map_err(|_| Error::Format("u64 overflows usize".into()))
}

fn get_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn header(r: &mut impl Read) -> Result<(usize, usize)> {
    let mut m = [0u8; 4];
    r.read_exact(&mut m)?;
    if &m != MAGIC {
        return Err(Error::Format("missing URM1 magic".into()));
    }
    Ok((get_u64(r)?, get_u64(r)?))
}

fn ensure_eof(r: &mut impl Read) -> Result<()> {
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    Ok(())
}

pub fn write_dense_to(w: &mut impl Write, m: &DenseMatrix) -> Result<()> {
    w.write_all(MAGIC)?;
    put_u64(w, m.rows())?;
    put_u64(w, m.cols())?;
    put_f64s(w, m.as_slice())
}

pub fn read_dense_from(r: &mut impl Read) -> Result<DenseMatrix> {
    let (rows, cols) = header(r)?;
    let data = get_f64s(
        r,
        rows.checked_mul(cols)
            .ok_or_else(|| Error::Format("size overflow".into()))?,
    )?;
    ensure_eof(r)?;
    DenseMatrix::from_vec(rows, cols, data)
}

pub fn write_sparse_to(w: &mut impl Write, m: &SparseMatrix) -> Result<()> {
    w.write_all(MAGIC)?;
    put_u64(w, m.rows())?;
    put_u64(w, m.cols())?;
    put_u64(w, m.nnz())?;
    for &o in m.offsets() {
        put_u64(w, o)?;
    }
    for &i in m.indices() {
        put_u64(w, i)?;
    }
    put_f64s(w, m.values())
}

pub fn read_sparse_from(r: &mut impl Read) -> Result<SparseMatrix> {
    let (rows, cols) = header(r)?;
    let nnz = get_u64(r)?;
    let offsets = (0..=rows).map(|_| get_u64(r)).collect::<Result<Vec<_>>>()?;
    let indices = (0..nnz).map(|_| get_u64(r)).collect::<Result<Vec<_>>>()?;
    let values = get_f64s(r, nnz)?;
    ensure_eof(r)?;
    SparseMatrix::from_csr(rows, cols, offsets, indices, values)
        .map_err(|e| Error::Format(e.to_string()))
}

pub fn write_dense(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dense_to(&mut w, m)?;
    w.flush()?;
    Ok(())
}

pub fn read_dense(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    read_dense_from(&mut BufReader::new(File::open(path)?))
}

/// Vectors are stored as n×1 dense matrices.
pub fn write_vector(path: impl AsRef<Path>, v: &[f64]) -> Result<()> {
    write_dense(path, &DenseMatrix::from_vec(v.len(), 1, v.to_vec())?)
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let m = read_dense(path)?;
    if m.cols() != 1 {
        return Err(Error::Format(format!(
            "expected a column vector, found {} columns",
            m.cols()
        )));
    }
    Ok(m.into_vec())
}

pub fn write_sparse(path: impl AsRef<Path>, m: &SparseMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_sparse_to(&mut w, m)?;
    w.flush()?;
    Ok(())
}

pub fn read_sparse(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    read_sparse_from(&mut BufReader::new(File::open(path)?))
}
