//! Snapshot and time-series writers. Floats are printed with 17 significant
//! digits so files re-read to the bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::Vector3;

use crate::discretization::PointCloud;
use crate::error::{Error, Result};
use crate::solver::{Diagnostics, SimState};

use super::tracking::CrackTipTrace;

pub const SNAPSHOT_HEADER: &str = "id,x,y,z,ux,uy,uz,vx,vy,vz,D";
pub const TIMESERIES_HEADER: &str = "t,E_kin,E_strain,E_crack,tip_x,tip_y,tip_speed,tip_speed_over_half_cR";

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_snapshot_csv(path: &Path, cloud: &PointCloud, state: &SimState) -> Result<()> {
    let mut w = create(path)?;
    let res = (|| -> std::io::Result<()> {
        writeln!(w, "{SNAPSHOT_HEADER}")?;
        for i in 0..cloud.len() {
            let (x, u, v) = (&cloud.positions[i], &state.u[i], &state.v[i]);
            write!(w, "{i}")?;
            for c in [x.x, x.y, x.z, u.x, u.y, u.z, v.x, v.y, v.z, state.damage[i]] {
                write!(w, ",{c:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    })();
    res.map_err(|e| Error::io(path, e))?;
    finish(w, path)
}

/// Rows of a snapshot CSV: positions, displacements, velocities, damage.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SnapshotData {
    pub x: Vec<Vector3<f64>>,
    pub u: Vec<Vector3<f64>>,
    pub v: Vec<Vector3<f64>>,
    pub damage: Vec<f64>,
}

pub fn read_snapshot_csv(path: &Path) -> Result<SnapshotData> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = SnapshotData::default();
    let bad = |line: usize, msg: &str| Error::Domain(format!("{}:{line}: {msg}", path.display()));
    for (n, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if n == 0 {
            if line != SNAPSHOT_HEADER {
                return Err(bad(1, "unexpected header"));
            }
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .skip(1)
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(n + 1, "unparsable number"))?;
        if vals.len() != 10 {
            return Err(bad(n + 1, "expected 11 columns"));
        }
        out.x.push(Vector3::new(vals[0], vals[1], vals[2]));
        out.u.push(Vector3::new(vals[3], vals[4], vals[5]));
        out.v.push(Vector3::new(vals[6], vals[7], vals[8]));
        out.damage.push(vals[9]);
    }
    Ok(out)
}

/// Legacy ASCII VTK polydata with one vertex per point and the point arrays
/// `u`, `v` and `D`.
pub fn write_snapshot_vtk(path: &Path, cloud: &PointCloud, state: &SimState) -> Result<()> {
    let n = cloud.len();
    let mut w = create(path)?;
    let res = (|| -> std::io::Result<()> {
        writeln!(w, "# vtk DataFile Version 3.0")?;
        writeln!(w, "pfpd t={:.16e} step={}", state.t, state.step)?;
        writeln!(w, "ASCII")?;
        writeln!(w, "DATASET POLYDATA")?;
        writeln!(w, "POINTS {n} double")?;
        for p in &cloud.positions {
            writeln!(w, "{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z)?;
        }
        writeln!(w, "VERTICES {n} {}", 2 * n)?;
        for i in 0..n {
            writeln!(w, "1 {i}")?;
        }
        writeln!(w, "POINT_DATA {n}")?;
        for (name, field) in [("u", &state.u), ("v", &state.v)] {
            writeln!(w, "VECTORS {name} double")?;
            for x in field {
                writeln!(w, "{:.16e} {:.16e} {:.16e}", x.x, x.y, x.z)?;
            }
        }
        writeln!(w, "SCALARS D double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for d in &state.damage {
            writeln!(w, "{d:.16e}")?;
        }
        Ok(())
    })();
    res.map_err(|e| Error::io(path, e))?;
    finish(w, path)
}

/// Rewrites the whole time series; smoothed speeds of earlier rows change
/// as later samples arrive. "No tip" rows carry NaN coordinates and zero speed.
pub fn write_timeseries(path: &Path, diagnostics: &[Diagnostics], trace: &CrackTipTrace, c_r: f64) -> Result<()> {
    if diagnostics.len() != trace.len() {
        return Err(Error::Domain(format!(
            "{} diagnostic rows but {} trace entries",
            diagnostics.len(),
            trace.len()
        )));
    }
    let speeds = trace.smoothed_speeds();
    let mut w = create(path)?;
    let res = (|| -> std::io::Result<()> {
        writeln!(w, "{TIMESERIES_HEADER}")?;
        for ((d, e), v) in diagnostics.iter().zip(&trace.entries).zip(&speeds) {
            let (tx, ty) = e.tip.map_or((f64::NAN, f64::NAN), |p| (p.x, p.y));
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                e.t,
                d.kinetic,
                d.strain,
                d.crack,
                tx,
                ty,
                v,
                v / (0.5 * c_r)
            )?;
        }
        Ok(())
    })();
    res.map_err(|e| Error::io(path, e))?;
    finish(w, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::generate_grid;

    #[test]
    fn zero_state_csv() {
        let dir = tempfile::tempdir().unwrap();
        let cloud = generate_grid([2.0, 2.0, 2.0], 1.0).unwrap();
        let state = SimState::new(cloud.len());
        let p = dir.path().join("s.csv");
        write_snapshot_csv(&p, &cloud, &state).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 9);
        let back = read_snapshot_csv(&p).unwrap();
        assert_eq!(back.x, cloud.positions);
        assert!(back.u.iter().chain(&back.v).all(|x| *x == Vector3::zeros()));
        assert!(back.damage.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn csv_values_reread_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let cloud = generate_grid([3.0, 2.0, 1.0], 1.0).unwrap();
        let mut state = SimState::new(cloud.len());
        for (i, u) in state.u.iter_mut().enumerate() {
            *u = Vector3::new(1.0 / 3.0, -(i as f64).sqrt() * 1e-7, std::f64::consts::PI * 1e12);
        }
        state.damage = (0..cloud.len()).map(|i| i as f64 / 7.0).collect();
        let p = dir.path().join("s.csv");
        write_snapshot_csv(&p, &cloud, &state).unwrap();
        let back = read_snapshot_csv(&p).unwrap();
        assert_eq!(back.u, state.u);
        assert_eq!(back.damage, state.damage);
    }

    #[test]
    fn vtk_layout() {
        let dir = tempfile::tempdir().unwrap();
        let cloud = generate_grid([2.0, 2.0, 2.0], 1.0).unwrap();
        let state = SimState::new(cloud.len());
        let p = dir.path().join("s.vtk");
        write_snapshot_vtk(&p, &cloud, &state).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        for key in ["DATASET POLYDATA", "POINTS 8 double", "VERTICES 8 16", "POINT_DATA 8", "VECTORS u double", "VECTORS v double", "SCALARS D double 1"] {
            assert!(text.contains(key), "{key}");
        }
        assert_eq!(text.lines().count(), 5 + 8 + 1 + 8 + 1 + 2 * 9 + 2 + 8);
    }

    #[test]
    fn timeseries_rows() {
        let dir = tempfile::tempdir().unwrap();
        let mut trace = CrackTipTrace::default();
        trace.push(0.0, None).unwrap();
        trace.push(1.0, Some(Vector3::new(1.0, 2.0, 0.0))).unwrap();
        let diags = vec![Diagnostics::default(); 2];
        let p = dir.path().join("ts.csv");
        write_timeseries(&p, &diags, &trace, 2000.0).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], TIMESERIES_HEADER);
        assert_eq!(lines.len(), 3);
        assert!(lines[1].contains("NaN"));
        assert!(lines[2].starts_with("1.0000000000000000e0,"));
        assert!(write_timeseries(&p, &diags[..1], &trace, 1.0).is_err());
    }
}
