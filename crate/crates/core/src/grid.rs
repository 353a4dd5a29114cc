//! Quadrature grids on the two apertures, intensity models, energy
//! normalization and the dense `log K` cost matrix.
//!
//! Source directions are parameterized by `(m_z, phi)`, for which the
//! spherical area element is exactly `dmz * dphi`; target points use plain
//! Cartesian cells. Both grids place one node at each cell center so every
//! weight stays strictly positive for positive intensities.

use serde::{Deserialize, Serialize};

use crate::math::dot2;
use crate::optics::{Direction, OpticalConfig, SourceAperture, TargetAperture, TargetPoint};
use crate::{par, Error, Result};

/// Nodes with quadrature weights representing `I dsigma` or `L dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure<N> {
    pub nodes: Vec<N>,
    pub weights: Vec<f64>,
}

pub type SourceMeasure = DiscreteMeasure<Direction>;
pub type TargetMeasure = DiscreteMeasure<TargetPoint>;

impl<N> DiscreteMeasure<N> {
    pub fn new(nodes: Vec<N>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(Error::Shape("nodes/weights length mismatch".into()));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::Domain("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::ZeroMass);
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn scaled(&self, factor: f64) -> Self
    where
        N: Clone,
    {
        Self {
            nodes: self.nodes.clone(),
            weights: self.weights.iter().map(|w| w * factor).collect(),
        }
    }
}

/// Bitmap intensity: a sampled grid of nonnegative values over an
/// axis-aligned rectangle in the aperture's parameter plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitmapGrid {
    pub nx: usize,
    pub ny: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// Row-major, `ny` rows of `nx` values.
    pub values: Vec<f64>,
}

impl BitmapGrid {
    /// Nearest-cell lookup; zero outside the bitmap bounds.
    pub fn sample(&self, u: f64, v: f64) -> f64 {
        if u < self.x_min || u > self.x_max || v < self.y_min || v > self.y_max {
            return 0.0;
        }
        let fx = (u - self.x_min) / (self.x_max - self.x_min).max(f64::MIN_POSITIVE);
        let fy = (v - self.y_min) / (self.y_max - self.y_min).max(f64::MIN_POSITIVE);
        let ix = ((fx * self.nx as f64) as usize).min(self.nx - 1);
        let iy = ((fy * self.ny as f64) as usize).min(self.ny - 1);
        self.values[iy * self.nx + ix]
    }

    /// Parses the bitmap CSV format: a literal header line
    /// `nx,ny,x_min,x_max,y_min,y_max`, one line with those six values, then
    /// `ny` rows of `nx` nonnegative values.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Domain("empty bitmap CSV".into()))?;
        if header.trim() != "nx,ny,x_min,x_max,y_min,y_max" {
            return Err(Error::Domain(format!(
                "bad bitmap CSV header: {header:?}"
            )));
        }
        let dims = lines
            .next()
            .ok_or_else(|| Error::Domain("bitmap CSV missing dimension row".into()))?;
        let fields: Vec<&str> = dims.split(',').map(str::trim).collect();
        if fields.len() != 6 {
            return Err(Error::Domain("bitmap dimension row needs 6 fields".into()));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::Domain(format!("bad number {s:?}: {e}")))
        };
        let nx = parse(fields[0])? as usize;
        let ny = parse(fields[1])? as usize;
        if nx == 0 || ny == 0 {
            return Err(Error::Domain("bitmap dimensions must be positive".into()));
        }
        let (x_min, x_max) = (parse(fields[2])?, parse(fields[3])?);
        let (y_min, y_max) = (parse(fields[4])?, parse(fields[5])?);
        let mut values = Vec::with_capacity(nx * ny);
        for line in lines {
            for field in line.split(',') {
                let v = parse(field.trim())?;
                if v < 0.0 {
                    return Err(Error::Domain("bitmap values must be nonnegative".into()));
                }
                values.push(v);
            }
        }
        if values.len() != nx * ny {
            return Err(Error::Domain(format!(
                "bitmap has {} values, expected {}",
                values.len(),
                nx * ny
            )));
        }
        Ok(Self {
            nx,
            ny,
            x_min,
            x_max,
            y_min,
            y_max,
            values,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("nx,ny,x_min,x_max,y_min,y_max\n");
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            self.nx, self.ny, self.x_min, self.x_max, self.y_min, self.y_max
        ));
        for row in self.values.chunks(self.nx) {
            let line: Vec<String> = row.iter().map(|v| crate::io::fmt_g17(*v)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Intensity model evaluated in the aperture's 2D parameter coordinates:
/// `(x, y)` on the target plane, `(m_z, phi)` on the source band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IntensityModel {
    Uniform,
    Gaussian { center: [f64; 2], sigma: f64 },
    Ring { radius: f64, width: f64 },
    Bitmap { grid: BitmapGrid },
}

impl IntensityModel {
    pub fn eval(&self, u: [f64; 2]) -> f64 {
        match self {
            IntensityModel::Uniform => 1.0,
            IntensityModel::Gaussian { center, sigma } => {
                let d = [u[0] - center[0], u[1] - center[1]];
                (-dot2(d, d) / (2.0 * sigma * sigma)).exp()
            }
            IntensityModel::Ring { radius, width } => {
                let r = dot2(u, u).sqrt();
                if (r - radius).abs() <= 0.5 * width {
                    1.0
                } else {
                    0.0
                }
            }
            IntensityModel::Bitmap { grid } => grid.sample(u[0], u[1]),
        }
    }
}

/// Cell-center quadrature grid on the source band; `weight = I(m) dmz dphi`.
pub fn build_source_grid(
    ap: &SourceAperture,
    n_mz: usize,
    n_phi: usize,
    model: &IntensityModel,
) -> Result<SourceMeasure> {
    if n_mz < 1 || n_phi < 1 {
        return Err(Error::Domain("grid resolution must be >= 1".into()));
    }
    ap.validate()?;
    let dmz = (ap.mz_max - ap.mz_min) / n_mz as f64;
    let dphi = (ap.phi_max - ap.phi_min) / n_phi as f64;
    let cell = dmz * dphi;
    let mut nodes = Vec::with_capacity(n_mz * n_phi);
    let mut weights = Vec::with_capacity(n_mz * n_phi);
    for i in 0..n_mz {
        let mz = ap.mz_min + (i as f64 + 0.5) * dmz;
        for j in 0..n_phi {
            let phi = ap.phi_min + (j as f64 + 0.5) * dphi;
            nodes.push(Direction::from_band(mz, phi));
            weights.push(model.eval([mz, phi]) * cell);
        }
    }
    DiscreteMeasure::new(nodes, weights)
}

/// Cell-center quadrature grid on the target rectangle;
/// `weight = L(x) dx dy`.
pub fn build_target_grid(
    ap: &TargetAperture,
    nx: usize,
    ny: usize,
    model: &IntensityModel,
) -> Result<TargetMeasure> {
    if nx < 1 || ny < 1 {
        return Err(Error::Domain("grid resolution must be >= 1".into()));
    }
    ap.validate()?;
    let dx = (ap.x_max - ap.x_min) / nx as f64;
    let dy = (ap.y_max - ap.y_min) / ny as f64;
    let cell = dx * dy;
    let mut nodes = Vec::with_capacity(nx * ny);
    let mut weights = Vec::with_capacity(nx * ny);
    for i in 0..nx {
        let px = ap.x_min + (i as f64 + 0.5) * dx;
        for j in 0..ny {
            let py = ap.y_min + (j as f64 + 0.5) * dy;
            nodes.push(TargetPoint::new([px, py]));
            weights.push(model.eval([px, py]) * cell);
        }
    }
    DiscreteMeasure::new(nodes, weights)
}

/// What to rescale when total source and target energies differ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationPolicy {
    ScaleTarget,
    ScaleSource,
    Error,
}

/// Equalizes total masses per policy; returns the measures and the scale
/// factor that was applied (1.0 for `Error` policy on success).
pub fn normalize_masses(
    src: &SourceMeasure,
    tgt: &TargetMeasure,
    policy: NormalizationPolicy,
    rel_tol: f64,
) -> Result<(SourceMeasure, TargetMeasure, f64)> {
    let ms = src.total_mass();
    let mt = tgt.total_mass();
    if !(ms > 0.0) || !(mt > 0.0) {
        return Err(Error::ZeroMass);
    }
    match policy {
        NormalizationPolicy::ScaleTarget => {
            let f = ms / mt;
            Ok((src.clone(), tgt.scaled(f), f))
        }
        NormalizationPolicy::ScaleSource => {
            let f = mt / ms;
            Ok((src.scaled(f), tgt.clone(), f))
        }
        NormalizationPolicy::Error => {
            let rel = (ms - mt).abs() / ms.max(mt);
            if rel > rel_tol {
                Err(Error::MassMismatch { src: ms, tgt: mt })
            } else {
                Ok((src.clone(), tgt.clone(), 1.0))
            }
        }
    }
}

/// Dense matrix of `c[i][j] = log K(m_i, x_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    pub n_source: usize,
    pub n_target: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn from_rows(n_source: usize, n_target: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_source * n_target {
            return Err(Error::Shape("cost matrix size mismatch".into()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("cost matrix entries must be finite".into()));
        }
        Ok(Self {
            n_source,
            n_target,
            data,
        })
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_target + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_target..(i + 1) * self.n_target]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Assembles `log K` over all node pairs. Rows run in parallel with the
/// `parallel` feature; the output is bit-identical to sequential assembly.
pub fn assemble_cost_matrix(
    src: &SourceMeasure,
    tgt: &TargetMeasure,
    cfg: &OpticalConfig,
) -> Result<CostMatrix> {
    let rows = par::try_map_indexed(src.len(), |i| cost_row(src, tgt, cfg, i))?;
    Ok(CostMatrix {
        n_source: src.len(),
        n_target: tgt.len(),
        data: rows.concat(),
    })
}

/// Sequential reference assembly (kept public for the benchmark suite).
pub fn assemble_cost_matrix_seq(
    src: &SourceMeasure,
    tgt: &TargetMeasure,
    cfg: &OpticalConfig,
) -> Result<CostMatrix> {
    let rows: Vec<Vec<f64>> = (0..src.len())
        .map(|i| cost_row(src, tgt, cfg, i))
        .collect::<Result<_>>()?;
    Ok(CostMatrix {
        n_source: src.len(),
        n_target: tgt.len(),
        data: rows.concat(),
    })
}

fn cost_row(
    src: &SourceMeasure,
    tgt: &TargetMeasure,
    cfg: &OpticalConfig,
    i: usize,
) -> Result<Vec<f64>> {
    let m = &src.nodes[i];
    tgt.nodes
        .iter()
        .enumerate()
        .map(|(j, x)| match crate::optics::cost_kernel(m, x, cfg) {
            Ok(k) => Ok(k.ln()),
            Err(Error::NonPositiveKernel { value, .. }) => {
                Err(Error::NonPositiveKernel { i, j, value })
            }
            Err(e) => Err(e),
        })
        .collect()
}
