use crate::error::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"OSWRFLD1";

/// Nodal values for every time level, level-major, nodes stored as `i * ny + j`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeField {
    /// Nodes along x and y (cells + 1).
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub dt: f64,
    pub values: Vec<f64>,
}

impl SpaceTimeField {
    pub fn zeros(nx: usize, ny: usize, levels: usize, h: f64, dt: f64) -> Self {
        SpaceTimeField { nx, ny, h, dt, values: vec![0.0; nx * ny * levels] }
    }

    pub fn levels(&self) -> usize {
        self.values.len() / (self.nx * self.ny)
    }

    pub fn level(&self, m: usize) -> &[f64] {
        let n = self.nx * self.ny;
        &self.values[m * n..(m + 1) * n]
    }

    pub fn level_mut(&mut self, m: usize) -> &mut [f64] {
        let n = self.nx * self.ny;
        &mut self.values[m * n..(m + 1) * n]
    }

    pub fn at(&self, m: usize, i: usize, j: usize) -> f64 {
        self.values[(m * self.nx + i) * self.ny + j]
    }

    /// Discrete space-time L2 norm.
    pub fn l2(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.h * self.h * self.dt).sqrt()
    }

    /// `|self - other| / |other|` in the discrete space-time L2 norm.
    pub fn relative_l2_diff(&self, other: &SpaceTimeField) -> Result<f64> {
        if self.values.len() != other.values.len() || self.nx != other.nx {
            return Err(Error::InvalidGrid("fields live on different grids".into()));
        }
        let num: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b) * (a - b)).sum();
        let den: f64 = other.values.iter().map(|b| b * b).sum();
        Ok(if den == 0.0 { num.sqrt() } else { (num / den).sqrt() })
    }

    /// Flat little-endian dump: magic, three u64 sizes (levels, nx, ny), h, dt, values.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        w.write_all(MAGIC)?;
        for n in [self.levels(), self.nx, self.ny] {
            w.write_all(&(n as u64).to_le_bytes())?;
        }
        w.write_all(&self.h.to_le_bytes())?;
        w.write_all(&self.dt.to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() < 48 || &bytes[..8] != MAGIC {
            return Err(Error::Config(format!("{} is not a field dump", path.display())));
        }
        let word = |k: usize| -> [u8; 8] { bytes[8 + 8 * k..16 + 8 * k].try_into().unwrap() };
        let (levels, nx, ny) =
            (u64::from_le_bytes(word(0)) as usize, u64::from_le_bytes(word(1)) as usize, u64::from_le_bytes(word(2)) as usize);
        let (h, dt) = (f64::from_le_bytes(word(3)), f64::from_le_bytes(word(4)));
        let n = levels * nx * ny;
        if bytes.len() != 48 + 8 * n {
            return Err(Error::Config("field dump has the wrong length".into()));
        }
        let values = bytes[48..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(SpaceTimeField { nx, ny, h, dt, values })
    }
}

/// Convergence history of an iteration.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IterationLog {
    /// Relative residual per iteration; the first entry is 1.
    pub residuals: Vec<f64>,
    pub iterations_to_tol: Option<usize>,
    /// Wall-clock seconds spent in each iteration.
    pub seconds: Vec<f64>,
}

impl IterationLog {
    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(f64::NAN)
    }

    /// Writes `iteration,residual,seconds` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["iteration", "residual", "seconds"])?;
        for (n, (r, s)) in self.residuals.iter().zip(&self.seconds).enumerate() {
            out.write_record([(n + 1).to_string(), format!("{r:.6e}"), format!("{s:.6}")])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip() {
        let mut f = SpaceTimeField::zeros(3, 4, 2, 0.5, 0.125);
        f.values.iter_mut().enumerate().for_each(|(k, v)| *v = k as f64 * 0.25 - 1.0);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u.bin");
        f.write_binary(&p).unwrap();
        assert_eq!(SpaceTimeField::read_binary(&p).unwrap(), f);
        assert_eq!(std::fs::metadata(&p).unwrap().len(), 48 + 8 * 24);
    }

    #[test]
    fn log_csv_columns() {
        let log = IterationLog { residuals: vec![1.0, 0.1], iterations_to_tol: None, seconds: vec![0.5, 0.25] };
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().next().unwrap(), "iteration,residual,seconds");
        assert_eq!(s.lines().count(), 3);
    }
}
