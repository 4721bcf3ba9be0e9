//! Binary container (`MGW1`, little endian) and CSV summaries.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::assemble::DiscreteOperator;
use super::csr::CsrMatrix;
use super::eigen::EigenResult;
use super::grid::GridSpec;
use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Cplx, Real};

pub const MAGIC: &[u8; 4] = b"MGW1";
const KIND_OPERATOR: u32 = 1;
const KIND_EIGEN: u32 = 2;

fn write_str<W: Write>(w: &mut W, s: &str) -> Result<()> {
    w.write_u64::<LittleEndian>(s.len() as u64)?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn read_str<R: Read>(r: &mut R) -> Result<String> {
    let len = read_len(r, 1 << 20)?;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
}

fn read_len<R: Read>(r: &mut R, limit: usize) -> Result<usize> {
    let n = r.read_u64::<LittleEndian>()? as usize;
    if n > limit {
        return Err(Error::Format(format!("length {n} exceeds limit {limit}")));
    }
    Ok(n)
}

fn write_reals<W: Write, T: Real>(w: &mut W, xs: &[T]) -> Result<()> {
    w.write_u64::<LittleEndian>(xs.len() as u64)?;
    for x in xs {
        w.write_f64::<LittleEndian>(to_f64(*x))?;
    }
    Ok(())
}

fn read_reals<R: Read, T: Real>(r: &mut R) -> Result<Vec<T>> {
    let n = read_len(r, 1 << 34)?;
    (0..n).map(|_| Ok(lit(r.read_f64::<LittleEndian>()?))).collect()
}

fn write_complex<W: Write, T: Real>(w: &mut W, xs: &[Cplx<T>]) -> Result<()> {
    w.write_u64::<LittleEndian>(xs.len() as u64)?;
    for z in xs {
        w.write_f64::<LittleEndian>(to_f64(z.re))?;
        w.write_f64::<LittleEndian>(to_f64(z.im))?;
    }
    Ok(())
}

fn read_complex<R: Read, T: Real>(r: &mut R) -> Result<Vec<Cplx<T>>> {
    let n = read_len(r, 1 << 34)?;
    (0..n)
        .map(|_| {
            let re = r.read_f64::<LittleEndian>()?;
            let im = r.read_f64::<LittleEndian>()?;
            Ok(Cplx::new(lit(re), lit(im)))
        })
        .collect()
}

fn write_indices<W: Write>(w: &mut W, xs: &[usize]) -> Result<()> {
    w.write_u64::<LittleEndian>(xs.len() as u64)?;
    for x in xs {
        w.write_u64::<LittleEndian>(*x as u64)?;
    }
    Ok(())
}

fn read_indices<R: Read>(r: &mut R) -> Result<Vec<usize>> {
    let n = read_len(r, 1 << 34)?;
    (0..n).map(|_| Ok(r.read_u64::<LittleEndian>()? as usize)).collect()
}

fn header<R: Read>(r: &mut R, kind: u32) -> Result<()> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("missing MGW1 magic bytes".into()));
    }
    let found = r.read_u32::<LittleEndian>()?;
    if found != kind {
        return Err(Error::Format(format!("container holds record kind {found}, expected {kind}")));
    }
    Ok(())
}

fn write_grid<W: Write, T: Real>(w: &mut W, g: &GridSpec<T>) -> Result<()> {
    for v in [g.s_min, g.s_max, g.t_min, g.t_max] {
        w.write_f64::<LittleEndian>(to_f64(v))?;
    }
    w.write_u64::<LittleEndian>(g.ns as u64)?;
    w.write_u64::<LittleEndian>(g.nt as u64)?;
    Ok(())
}

fn read_grid<R: Read, T: Real>(r: &mut R) -> Result<GridSpec<T>> {
    let mut v = [0.0f64; 4];
    for x in v.iter_mut() {
        *x = r.read_f64::<LittleEndian>()?;
    }
    let ns = r.read_u64::<LittleEndian>()? as usize;
    let nt = r.read_u64::<LittleEndian>()? as usize;
    GridSpec::new((lit(v[0]), lit(v[1])), (lit(v[2]), lit(v[3])), ns, nt)
}

pub fn write_operator<W: Write, T: Real>(w: &mut W, op: &DiscreteOperator<T>) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(KIND_OPERATOR)?;
    w.write_f64::<LittleEndian>(to_f64(op.h))?;
    write_grid(w, &op.grid)?;
    write_str(w, &op.field_label)?;
    write_str(w, &op.metric_label)?;
    write_indices(w, op.matrix.row_ptr())?;
    write_indices(w, op.matrix.col())?;
    write_complex(w, op.matrix.values())?;
    write_reals(w, &op.mass)?;
    write_reals(w, &op.field)?;
    match &op.potential {
        Some(v) => {
            w.write_u8(1)?;
            write_reals(w, v)?;
        }
        None => w.write_u8(0)?,
    }
    Ok(())
}

pub fn read_operator<R: Read, T: Real>(r: &mut R) -> Result<DiscreteOperator<T>> {
    header(r, KIND_OPERATOR)?;
    let h = lit(r.read_f64::<LittleEndian>()?);
    let grid: GridSpec<T> = read_grid(r)?;
    let field_label = read_str(r)?;
    let metric_label = read_str(r)?;
    let row_ptr = read_indices(r)?;
    let col = read_indices(r)?;
    let val = read_complex(r)?;
    let n = row_ptr.len().saturating_sub(1);
    if n != grid.len() {
        return Err(Error::Format(format!("matrix dimension {n} does not match grid size {}", grid.len())));
    }
    let matrix = CsrMatrix::from_parts(n, row_ptr, col, val)?;
    let mass = read_reals(r)?;
    let field = read_reals(r)?;
    let potential = match r.read_u8()? {
        0 => None,
        1 => Some(read_reals(r)?),
        x => return Err(Error::Format(format!("bad potential flag {x}"))),
    };
    Ok(DiscreteOperator {
        h,
        grid,
        matrix,
        mass,
        field,
        potential,
        field_label,
        metric_label,
    })
}

pub fn write_eigen<W: Write, T: Real>(w: &mut W, e: &EigenResult<T>) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(KIND_EIGEN)?;
    w.write_f64::<LittleEndian>(to_f64(e.h))?;
    w.write_u64::<LittleEndian>(e.seed)?;
    w.write_u8(e.converged as u8)?;
    w.write_u64::<LittleEndian>(e.iterations as u64)?;
    w.write_u64::<LittleEndian>(e.inner_iterations as u64)?;
    w.write_u64::<LittleEndian>(e.restarts as u64)?;
    w.write_f64::<LittleEndian>(e.seconds)?;
    write_reals(w, &e.eigenvalues)?;
    write_reals(w, &e.residuals)?;
    w.write_u64::<LittleEndian>(e.vectors.len() as u64)?;
    for v in &e.vectors {
        write_complex(w, v)?;
    }
    Ok(())
}

pub fn read_eigen<R: Read, T: Real>(r: &mut R) -> Result<EigenResult<T>> {
    header(r, KIND_EIGEN)?;
    let h = lit(r.read_f64::<LittleEndian>()?);
    let seed = r.read_u64::<LittleEndian>()?;
    let converged = r.read_u8()? != 0;
    let iterations = r.read_u64::<LittleEndian>()? as usize;
    let inner_iterations = r.read_u64::<LittleEndian>()? as usize;
    let restarts = r.read_u64::<LittleEndian>()? as usize;
    let seconds = r.read_f64::<LittleEndian>()?;
    let eigenvalues = read_reals(r)?;
    let residuals = read_reals(r)?;
    let count = read_len(r, 1 << 20)?;
    let vectors = (0..count).map(|_| read_complex(r)).collect::<Result<Vec<_>>>()?;
    Ok(EigenResult {
        h,
        eigenvalues,
        vectors,
        residuals,
        converged,
        iterations,
        inner_iterations,
        restarts,
        seed,
        seconds,
    })
}

pub fn save_operator<T: Real>(path: impl AsRef<Path>, op: &DiscreteOperator<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_operator(&mut w, op)?;
    w.flush()?;
    Ok(())
}

pub fn load_operator<T: Real>(path: impl AsRef<Path>) -> Result<DiscreteOperator<T>> {
    read_operator(&mut BufReader::new(File::open(path)?))
}

pub fn save_eigen<T: Real>(path: impl AsRef<Path>, e: &EigenResult<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_eigen(&mut w, e)?;
    w.flush()?;
    Ok(())
}

pub fn load_eigen<T: Real>(path: impl AsRef<Path>) -> Result<EigenResult<T>> {
    read_eigen(&mut BufReader::new(File::open(path)?))
}

/// One row per eigenpair: `h,index,eigenvalue,residual`.
pub fn write_eigen_csv<W: Write, T: Real>(w: W, results: &[EigenResult<T>]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["h", "index", "eigenvalue", "residual"])?;
    for e in results {
        for (i, (v, r)) in e.eigenvalues.iter().zip(&e.residuals).enumerate() {
            out.write_record(&[
                to_f64(e.h).to_string(),
                i.to_string(),
                to_f64(*v).to_string(),
                to_f64(*r).to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}
