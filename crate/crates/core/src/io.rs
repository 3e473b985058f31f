//! Binary field snapshots and CSV slice export.
//!
//! Layout (little endian): magic `CNLB`, version `u32`, `n: u32`, `L: f64`,
//! `ncomp: u32`, then `ncomp * n^3` values as `f64`, component-major and
//! row-major within a component.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;

const MAGIC: &[u8; 4] = b"CNLB";
const VERSION: u32 = 1;

/// Writes raw components on `grid` to `w`.
pub fn write_components<W: Write>(mut w: W, grid: &Grid, comps: &[&[f64]]) -> Result<()> {
    let mut buf = Vec::with_capacity(24 + comps.len() * grid.size() * 8);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    buf.extend_from_slice(&grid.length().to_le_bytes());
    buf.extend_from_slice(&(comps.len() as u32).to_le_bytes());
    for c in comps {
        if c.len() != grid.size() {
            return Err(Error::GridMismatch("component length".into()));
        }
        for v in c.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Reads a snapshot, returning the grid and its components.
pub fn read_components<R: Read>(mut r: R) -> Result<(Grid, Vec<Vec<f64>>)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < 24 || &bytes[0..4] != MAGIC {
        return Err(Error::Format("missing CNLB header".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = u32_at(8) as usize;
    let length = f64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
    let ncomp = u32_at(20) as usize;
    let grid = Grid::new(n, length).map_err(|e| Error::Format(e.to_string()))?;
    let expected = 24 + ncomp * grid.size() * 8;
    if bytes.len() != expected {
        return Err(Error::Format(format!("payload is {} bytes, header implies {expected}", bytes.len())));
    }
    let mut comps = Vec::with_capacity(ncomp);
    let mut off = 24;
    for _ in 0..ncomp {
        let mut c = Vec::with_capacity(grid.size());
        for _ in 0..grid.size() {
            c.push(f64::from_le_bytes(bytes[off..off + 8].try_into().expect("8 bytes")));
            off += 8;
        }
        comps.push(c);
    }
    Ok((grid, comps))
}

pub fn save_vector(path: &Path, v: &VectorField) -> Result<()> {
    let c = v.components();
    write_components(std::fs::File::create(path)?, v.grid(), &[&c[0], &c[1], &c[2]])
}

pub fn save_scalar(path: &Path, f: &ScalarField) -> Result<()> {
    write_components(std::fs::File::create(path)?, f.grid(), &[f.values()])
}

pub fn load_vector(path: &Path) -> Result<VectorField> {
    let (grid, comps) = read_components(std::fs::File::open(path)?)?;
    let [a, b, c]: [Vec<f64>; 3] =
        comps.try_into().map_err(|_| Error::Format("expected three components".into()))?;
    VectorField::new(&grid, [a, b, c])
}

pub fn load_scalar(path: &Path) -> Result<ScalarField> {
    let (grid, comps) = read_components(std::fs::File::open(path)?)?;
    let [a]: [Vec<f64>; 1] = comps.try_into().map_err(|_| Error::Format("expected one component".into()))?;
    ScalarField::new(&grid, a)
}

/// CSV of the plane `x_axis = coord(index)`: columns `u,v,value`.
pub fn slice_csv(f: &ScalarField, axis: usize, index: usize) -> Result<String> {
    let g = f.grid();
    if axis > 2 || index >= g.n() {
        return Err(Error::InvalidParameter(format!("slice axis {axis} index {index}")));
    }
    let names = ["x", "y", "z"];
    let others: Vec<usize> = (0..3).filter(|&a| a != axis).collect();
    let mut out = format!("{},{},value\n", names[others[0]], names[others[1]]);
    for a in 0..g.n() {
        for b in 0..g.n() {
            let mut ijk = [0; 3];
            ijk[axis] = index;
            ijk[others[0]] = a;
            ijk[others[1]] = b;
            let v = f.values()[g.index(ijk[0], ijk[1], ijk[2])];
            out.push_str(&format!("{},{},{:e}\n", g.coord(a), g.coord(b), v));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let g = Grid::new(8, 9.5).unwrap();
        let v = VectorField::from_fn(&g, |x| [x[0].sin(), x[1] * 1e-300, -x[2] / 3.0]).unwrap();
        let mut buf = Vec::new();
        let c = v.components();
        write_components(&mut buf, &g, &[&c[0], &c[1], &c[2]]).unwrap();
        let (g2, back) = read_components(&buf[..]).unwrap();
        assert_eq!(g2, g);
        for k in 0..3 {
            assert!(back[k].iter().zip(&c[k]).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let g = Grid::new(8, 9.5).unwrap();
        let mut buf = Vec::new();
        write_components(&mut buf, &g, &[&vec![1.0; g.size()]]).unwrap();
        buf.pop();
        assert!(matches!(read_components(&buf[..]), Err(Error::Format(_))));
        assert!(matches!(read_components(&b"XXXX"[..]), Err(Error::Format(_))));
    }
}
