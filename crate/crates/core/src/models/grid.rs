//! Density grids over site windows, with CSV and PGM emission.

use crate::error::Result;
use crate::kernels::Site;
use num_complex::Complex64;
use std::io::Write;

/// One evaluated site of a density grid.
#[derive(Debug, Clone, Copy)]
pub struct GridPoint {
    pub m: usize,
    pub u: i64,
    pub density: f64,
    pub imag_residual: f64,
}

/// A rectangular window of one-point densities with provenance metadata.
#[derive(Debug, Clone)]
pub struct DensityGrid {
    pub model: String,
    pub params: serde_json::Value,
    pub m_range: (usize, usize),
    pub u_range: (i64, i64),
    pub points: Vec<GridPoint>,
    /// Largest imaginary part encountered (densities must be real).
    pub max_imag: f64,
    /// Sites whose density fell outside `[-eps, 1 + eps]`.
    pub flagged: usize,
}

/// Evaluate one-point densities over the window `m0..=m1`, `u0..=u1` through
/// a scalar kernel evaluator. Grid points are evaluated in parallel and
/// sorted by `(m, u)` before collection, so the output order is fixed.
pub fn density_grid<K>(
    kernel: &K,
    model: &str,
    params: serde_json::Value,
    m_range: (usize, usize),
    u_range: (i64, i64),
) -> Result<DensityGrid>
where
    K: Fn(Site, Site) -> Result<Complex64> + Sync,
{
    let (m0, m1) = m_range;
    let (u0, u1) = u_range;
    if m1 < m0 || u1 < u0 {
        return Err(crate::error::Error::QueryRange(
            "empty query window".into(),
        ));
    }
    let ms: Vec<usize> = (m0..=m1).collect();
    let us: Vec<i64> = (u0..=u1).collect();
    let cells: Vec<(usize, i64)> = ms
        .iter()
        .flat_map(|&m| us.iter().map(move |&u| (m, u)))
        .collect();
    let results = crate::par::map_indexed(cells.len(), |i| {
        let (m, u) = cells[i];
        let s = Site::new(m, u);
        kernel(s, s).map(|v| GridPoint {
            m,
            u,
            density: v.re,
            imag_residual: v.im.abs(),
        })
    });
    let mut points = Vec::with_capacity(results.len());
    let mut max_imag = 0.0f64;
    let mut flagged = 0usize;
    for r in results {
        let gp = r?;
        max_imag = max_imag.max(gp.imag_residual);
        if gp.density < -1e-8 || gp.density > 1.0 + 1e-8 {
            flagged += 1;
        }
        points.push(gp);
    }
    Ok(DensityGrid {
        model: model.into(),
        params,
        m_range,
        u_range,
        points,
        max_imag,
        flagged,
    })
}

impl DensityGrid {
    /// CSV rows `m,u,density,imag_residual`, sorted by `(m, u)`; plain float
    /// formatting round-trips bit-exactly.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,u,density,imag_residual\n");
        for gp in &self.points {
            out.push_str(&format!("{},{},{},{}\n", gp.m, gp.u, gp.density, gp.imag_residual));
        }
        out
    }

    /// Binary PGM heatmap: one pixel per site, rows indexed by `u` (top row =
    /// largest `u`), columns by `m`, 8-bit grayscale with white = density 1.
    pub fn to_pgm(&self) -> Vec<u8> {
        let (m0, m1) = self.m_range;
        let (u0, u1) = self.u_range;
        let width = m1 - m0 + 1;
        let height = (u1 - u0 + 1) as usize;
        let mut pixels = vec![0u8; width * height];
        for gp in &self.points {
            let col = gp.m - m0;
            let row = (u1 - gp.u) as usize;
            let v = (gp.density.clamp(0.0, 1.0) * 255.0).round() as u8;
            pixels[row * width + col] = v;
        }
        let mut out = Vec::new();
        let _ = write!(out, "P5\n{width} {height}\n255\n");
        out.extend_from_slice(&pixels);
        out
    }

    pub fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "model": self.model,
            "params": self.params,
            "m_range": [self.m_range.0, self.m_range.1],
            "u_range": [self.u_range.0, self.u_range.1],
            "max_imag": self.max_imag,
            "flagged": self.flagged,
        })
    }
}

/// Parse a CSV produced by [`DensityGrid::to_csv`] back into rows.
pub fn parse_csv(text: &str) -> Result<Vec<GridPoint>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(crate::error::Error::Serde(format!(
                "bad CSV row {i}: {line:?}"
            )));
        }
        out.push(GridPoint {
            m: cols[0].parse().map_err(|e| crate::error::Error::Serde(format!("{e}")))?,
            u: cols[1].parse().map_err(|e| crate::error::Error::Serde(format!("{e}")))?,
            density: cols[2].parse().map_err(|e| crate::error::Error::Serde(format!("{e}")))?,
            imag_residual: cols[3].parse().map_err(|e| crate::error::Error::Serde(format!("{e}")))?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trips_bit_exactly() {
        let kernel = |s: Site, _sp: Site| {
            Ok(Complex64::new(
                0.1 + 0.037 * (s.m as f64) + 1e-7 * (s.u as f64),
                1e-12,
            ))
        };
        let g = density_grid(&kernel, "demo", serde_json::json!({}), (1, 3), (-2, 2)).unwrap();
        let csv = g.to_csv();
        let rows = parse_csv(&csv).unwrap();
        assert_eq!(rows.len(), g.points.len());
        for (a, b) in rows.iter().zip(&g.points) {
            assert_eq!(a.density.to_bits(), b.density.to_bits());
        }
    }

    #[test]
    fn empty_window_is_rejected() {
        let kernel = |_s: Site, _sp: Site| Ok(Complex64::new(0.0, 0.0));
        assert!(density_grid(&kernel, "demo", serde_json::json!({}), (3, 1), (0, 0)).is_err());
    }

    #[test]
    fn pgm_has_header_and_payload() {
        let kernel = |_s: Site, _sp: Site| Ok(Complex64::new(0.5, 0.0));
        let g = density_grid(&kernel, "demo", serde_json::json!({}), (0, 4), (0, 3)).unwrap();
        let pgm = g.to_pgm();
        assert!(pgm.starts_with(b"P5\n5 4\n255\n"));
        assert_eq!(pgm.len(), b"P5\n5 4\n255\n".len() + 20);
    }
}
