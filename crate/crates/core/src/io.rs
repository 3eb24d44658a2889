//! Binary field snapshots and the CSV formats written by the command line.

use std::io::{BufRead, Read, Write};

use crate::amalgam::SweepResult;
use crate::error::{PcglError, Result};
use crate::exhaustion::ExhaustionReport;
use crate::field::Field;
use crate::grid::Grid;
use crate::integrator::EnergyTrace;
use crate::monitors::CheckReport;
use crate::region::{cgl_region_test, normalized_discriminant};
use crate::scalar::Real;

const MAGIC: &[u8; 4] = b"PCGL";
const VERSION: u32 = 1;

/// Lossless decimal rendering used in every CSV file.
pub fn fmt_float<T: Real>(x: T) -> String {
    format!("{:.16e}", x.as_f64())
}

/// Little-endian snapshot: magic, version, dimension, node counts, spacings,
/// then the row-major `(u1, u2)` pairs.
pub fn write_snapshot<T: Real, W: Write>(mut w: W, field: &Field<T>) -> Result<()> {
    let grid = field.grid();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(grid.dim() as u32).to_le_bytes())?;
    for axis in 0..grid.dim() {
        let n = u32::try_from(grid.nodes(axis)).map_err(|_| PcglError::Format("node count exceeds u32".into()))?;
        w.write_all(&n.to_le_bytes())?;
    }
    for axis in 0..grid.dim() {
        w.write_all(&grid.h(axis).as_f64().to_le_bytes())?;
    }
    for v in field.values() {
        w.write_all(&v[0].as_f64().to_le_bytes())?;
        w.write_all(&v[1].as_f64().to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Reads a snapshot; the grid origin is placed at zero.
pub fn read_snapshot<T: Real, R: Read>(mut r: R) -> Result<Field<T>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(PcglError::Format("not a PCGL snapshot (bad magic)".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(PcglError::Format(format!("unsupported snapshot version {version}")));
    }
    let dim = read_u32(&mut r)? as usize;
    if !(dim == 1 || dim == 2) {
        return Err(PcglError::Format(format!("unsupported snapshot dimension {dim}")));
    }
    let nodes = (0..dim).map(|_| read_u32(&mut r).map(|n| n as usize)).collect::<Result<Vec<_>>>()?;
    let h = (0..dim).map(|_| read_f64(&mut r).map(T::lit)).collect::<Result<Vec<_>>>()?;
    let grid = Grid::from_spacing(&h, &nodes, &vec![T::zero(); dim])?;
    let values = (0..grid.len())
        .map(|_| Ok([T::lit(read_f64(&mut r)?), T::lit(read_f64(&mut r)?)]))
        .collect::<Result<Vec<_>>>()?;
    Field::from_values(&grid, values)
}

/// Field as CSV rows `ix[,iy],u1,u2`.
pub fn write_field_csv<T: Real, W: Write>(mut w: W, field: &Field<T>) -> Result<()> {
    let two_d = field.grid().dim() == 2;
    writeln!(w, "{}", if two_d { "ix,iy,u1,u2" } else { "ix,u1,u2" })?;
    for (i, v) in field.values().iter().enumerate() {
        let (ix, iy) = field.grid().coords(i);
        if two_d {
            writeln!(w, "{ix},{iy},{},{}", fmt_float(v[0]), fmt_float(v[1]))?;
        } else {
            writeln!(w, "{ix},{},{}", fmt_float(v[0]), fmt_float(v[1]))?;
        }
    }
    Ok(())
}

/// Reads `ix[,iy],u1,u2` rows onto `grid`; nodes not listed stay zero.
pub fn read_field_csv<T: Real, R: BufRead>(r: R, grid: &Grid<T>) -> Result<Field<T>> {
    let mut values = vec![[T::zero(); 2]; grid.len()];
    let cols = grid.dim() + 2;
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if lineno == 0 || line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = |m: String| PcglError::Format(format!("field CSV line {}: {m}", lineno + 1));
        if parts.len() != cols {
            return Err(bad(format!("expected {cols} columns, found {}", parts.len())));
        }
        let idx = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("bad index '{s}': {e}")));
        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("bad value '{s}': {e}")));
        let ix = idx(parts[0])?;
        let iy = if grid.dim() == 2 { idx(parts[1])? } else { 0 };
        if ix >= grid.nodes(0) || iy >= grid.nodes(1) {
            return Err(bad(format!("node ({ix}, {iy}) outside the grid")));
        }
        let k = grid.dim();
        values[grid.index(ix, iy)] = [T::lit(num(parts[k])?), T::lit(num(parts[k + 1])?)];
    }
    Field::from_values(grid, values)
}

pub fn write_trace_csv<T: Real, W: Write>(mut w: W, trace: &EnergyTrace<T>) -> Result<()> {
    writeln!(w, "{}", EnergyTrace::<T>::csv_header())?;
    for r in &trace.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.step,
            fmt_float(r.t),
            fmt_float(r.l2sq),
            fmt_float(r.phi),
            fmt_float(r.psi),
            fmt_float(r.pairing),
            fmt_float(r.key_ratio),
            fmt_float(r.residual)
        )?;
    }
    Ok(())
}

pub fn write_reports_csv<T: Real, W: Write>(mut w: W, reports: &[CheckReport<T>]) -> Result<()> {
    writeln!(w, "{}", CheckReport::<T>::csv_header())?;
    for r in reports {
        writeln!(w, "{},{},{},{},{}", r.name, fmt_float(r.lhs), fmt_float(r.rhs), fmt_float(r.margin), r.passed)?;
    }
    Ok(())
}

pub fn write_sweeps_csv<W: Write>(mut w: W, sweeps: &[SweepResult]) -> Result<()> {
    writeln!(w, "{}", SweepResult::csv_header())?;
    for s in sweeps {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            s.check,
            fmt_float(s.p),
            fmt_float(s.q),
            s.samples,
            s.failures,
            fmt_float(s.min_margin)
        )?;
    }
    Ok(())
}

pub fn write_exhaustion_csv<T: Real, W: Write>(mut w: W, report: &ExhaustionReport<T>) -> Result<()> {
    writeln!(w, "{}", ExhaustionReport::<T>::csv_header())?;
    for r in &report.rows {
        writeln!(w, "{},{},{},{}", r.k, fmt_float(r.box_width), fmt_float(r.sup_diff), fmt_float(r.decay_ratio))?;
    }
    Ok(())
}

/// Region raster on `[−extent, extent]²` with `steps` points per axis.
/// The discriminant column is `1 + r(|x| + |y|) − |x||y|`.
pub fn write_region_raster<W: Write>(mut w: W, r: f64, extent: f64, steps: usize) -> Result<()> {
    writeln!(w, "x,y,inside,discriminant")?;
    let steps = steps.max(2);
    let at = |i: usize| -extent + 2.0 * extent * i as f64 / (steps - 1) as f64;
    for i in 0..steps {
        for j in 0..steps {
            let (x, y) = (at(i), at(j));
            let inside = cgl_region_test(x, y, r).inside;
            writeln!(
                w,
                "{},{},{},{}",
                fmt_float(x),
                fmt_float(y),
                inside,
                fmt_float(normalized_discriminant(x, y, r))
            )?;
        }
    }
    Ok(())
}
