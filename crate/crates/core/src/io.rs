//! Output formats: diagnostics CSV, ensemble CSV, binary snapshots and
//! JSON reports.

use std::io::{Read, Write};
use std::sync::Arc;

use serde::Serialize;

use crate::diagnostics::{AggregateRow, DiagnosticsRecord, AGGREGATE_COLUMNS};
use crate::domain::{make_grid, Grid, HVecField, ScalarField};
use crate::error::{HydroError, Result};
use crate::stepper::SimState;

pub const CSV_HEADER: &str =
    "traj,t,N0_v,N1_v,N0_theta,N1_theta,X,Y,robin_energy,l4_tilde,constraint_residual,blowup_flag";

pub const SNAPSHOT_MAGIC: &[u8; 6] = b"HPEQ1\0";

/// Floats use the shortest representation that round-trips, so equal
/// records give equal bytes.
pub fn write_diagnostics_csv<W: Write>(w: &mut W, records: &[DiagnosticsRecord]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        write_diagnostics_row(w, r)?;
    }
    Ok(())
}

pub fn write_diagnostics_row<W: Write>(w: &mut W, r: &DiagnosticsRecord) -> Result<()> {
    writeln!(
        w,
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        r.traj,
        r.t,
        r.n0_v,
        r.n1_v,
        r.n0_theta,
        r.n1_theta,
        r.x,
        r.y,
        r.robin_energy,
        r.l4_tilde,
        r.constraint_residual,
        u8::from(r.blowup_flag)
    )?;
    Ok(())
}

/// Header is `t,n_traj,n_flagged` followed by `<col>_mean,<col>_se` pairs.
pub fn write_aggregate_csv<W: Write>(w: &mut W, rows: &[AggregateRow]) -> Result<()> {
    let mut header = String::from("t,n_traj,n_flagged");
    for c in AGGREGATE_COLUMNS {
        header.push_str(&format!(",{c}_mean,{c}_se"));
    }
    writeln!(w, "{header}")?;
    for row in rows {
        let mut line = format!("{},{},{}", row.t, row.n_traj, row.n_flagged);
        for (_, m, se) in &row.columns {
            line.push_str(&format!(",{m},{se}"));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Fields read back from a snapshot.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub v: HVecField,
    pub theta: ScalarField,
}

impl Snapshot {
    pub fn grid(&self) -> &Arc<Grid> {
        self.theta.grid()
    }
}

pub fn write_snapshot<W: Write>(w: &mut W, state: &SimState) -> Result<()> {
    let g = state.grid();
    w.write_all(SNAPSHOT_MAGIC)?;
    for n in [g.nx(), g.ny(), g.nz()] {
        let n = u32::try_from(n).map_err(|_| HydroError::Format(format!("dimension {n} exceeds u32")))?;
        w.write_all(&n.to_le_bytes())?;
    }
    w.write_all(&g.h().to_le_bytes())?;
    w.write_all(&state.t.to_le_bytes())?;
    // The in-memory layout already has x₃ fastest, then x₂, then x₁.
    for f in [state.v.c1(), state.v.c2(), &state.theta] {
        let mut buf = Vec::with_capacity(8 * f.values().len());
        for x in f.values() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

fn read_exact<R: Read, const N: usize>(r: &mut R, what: &str) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| HydroError::Format(format!("truncated snapshot while reading {what}: {e}")))?;
    Ok(b)
}

pub fn read_snapshot<R: Read>(r: &mut R) -> Result<Snapshot> {
    let magic: [u8; 6] = read_exact(r, "magic")?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(HydroError::Format("bad snapshot magic".into()));
    }
    let mut dims = [0usize; 3];
    for d in &mut dims {
        *d = u32::from_le_bytes(read_exact(r, "dimensions")?) as usize;
    }
    let h = f64::from_le_bytes(read_exact(r, "h")?);
    let t = f64::from_le_bytes(read_exact(r, "t")?);
    let grid = make_grid(dims[0], dims[1], dims[2], h).map_err(|e| HydroError::Format(e.to_string()))?;
    let np = grid.n_points();
    let mut field = |name: &str| -> Result<ScalarField> {
        let mut bytes = vec![0u8; 8 * np];
        r.read_exact(&mut bytes).map_err(|e| HydroError::Format(format!("truncated snapshot in {name}: {e}")))?;
        let vals = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
        ScalarField::from_values(&grid, vals)
    };
    let v1 = field("v1")?;
    let v2 = field("v2")?;
    let theta = field("theta")?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(HydroError::Format("trailing bytes after snapshot".into()));
    }
    Ok(Snapshot { t, v: HVecField::new(v1, v2)?, theta })
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(w: &mut W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, value).map_err(|e| HydroError::Format(e.to_string()))?;
    writeln!(w)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::eval_on_grid;

    #[test]
    fn snapshot_header_layout() {
        let g = make_grid(4, 8, 3, 0.5).unwrap();
        let th = eval_on_grid(&g, |x1, x2, x3| x1 + 10.0 * x2 + 100.0 * x3).unwrap();
        let mut s = SimState::new(HVecField::zeros(&g), th.clone(), 0).unwrap();
        s.t = 0.25;
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &s).unwrap();
        assert_eq!(&buf[..6], b"HPEQ1\0");
        assert_eq!(&buf[6..10], &4u32.to_le_bytes());
        assert_eq!(&buf[10..14], &8u32.to_le_bytes());
        assert_eq!(&buf[14..18], &3u32.to_le_bytes());
        assert_eq!(&buf[18..26], &0.5f64.to_le_bytes());
        assert_eq!(&buf[26..34], &0.25f64.to_le_bytes());
        assert_eq!(buf.len(), 34 + 3 * 8 * 96);
        // Second theta value is (i, j, k) = (0, 0, 1).
        let off = 34 + 2 * 8 * 96 + 8;
        let x = f64::from_le_bytes(buf[off..off + 8].try_into().unwrap());
        assert_eq!(x, th.get(0, 0, 1));
    }

    #[test]
    fn corrupt_snapshots_are_rejected() {
        let g = make_grid(4, 4, 3, 1.0).unwrap();
        let s = SimState::new(HVecField::zeros(&g), ScalarField::zeros(&g), 0).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &s).unwrap();
        assert!(read_snapshot(&mut &buf[..buf.len() - 1]).is_err());
        let mut extra = buf.clone();
        extra.push(0);
        assert!(read_snapshot(&mut &extra[..]).is_err());
        buf[0] = b'X';
        assert!(read_snapshot(&mut &buf[..]).is_err());
    }

    #[test]
    fn csv_header_and_flag_column() {
        let g = make_grid(4, 4, 3, 1.0).unwrap();
        let s = SimState::new(HVecField::zeros(&g), ScalarField::zeros(&g), 0).unwrap();
        let mut r = crate::diagnostics::update_norms(&s, None, 0.0, 0.0);
        r.blowup_flag = true;
        let mut out = Vec::new();
        write_diagnostics_csv(&mut out, &[r]).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 12);
        assert_eq!(row[11], "1");
    }
}
