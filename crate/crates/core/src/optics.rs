//! Optical configuration, the cost kernel `K(m, x)` and the invertible
//! transforms between reflector geometry and dual potentials.
//!
//! Conventions: the output beam travels along the negative z-axis, the
//! output plane is `z = -d`, and a point in space is `(x, z)` with
//! `x` a 2-vector. A source direction is `m = (m_x, m_z)` on the unit
//! sphere. The reduced optical path length `ell` is the total path length
//! minus `d`, and `delta = 1/(2 ell)`.

use serde::{Deserialize, Serialize};

use crate::math::{dot2, linspace, norm2, Vec3};
use crate::{Error, Result};

const UNIT_TOL: f64 = 1e-12;

/// Infeasibility guard for the probe margin; the continuum margin can be
/// exactly zero at a critical ell, where floats land within ~1e-16 of it.
const MARGIN_EPS: f64 = 1e-12;

/// A direction on the unit sphere, split into tangential and axial parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub mx: [f64; 2],
    pub mz: f64,
}

impl Direction {
    pub fn new(mx: [f64; 2], mz: f64) -> Result<Self> {
        let n = dot2(mx, mx) + mz * mz;
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::Domain(format!(
                "direction not unit: |m|^2 = {n:.17}"
            )));
        }
        Ok(Self { mx, mz })
    }

    /// Direction from band coordinates `(m_z, phi)`; unit by construction.
    pub fn from_band(mz: f64, phi: f64) -> Self {
        let c = (1.0 - mz * mz).max(0.0).sqrt();
        Self {
            mx: [c * phi.cos(), c * phi.sin()],
            mz,
        }
    }

    pub fn vec3(&self) -> Vec3 {
        [self.mx[0], self.mx[1], self.mz]
    }

    /// Intrinsic (geodesic) distance on the sphere.
    pub fn geodesic_dist(&self, other: &Direction) -> f64 {
        crate::math::angle3(self.vec3(), other.vec3())
    }
}

/// A point in the output plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetPoint {
    pub x: [f64; 2],
}

impl TargetPoint {
    pub fn new(x: [f64; 2]) -> Self {
        Self { x }
    }

    pub fn modulus(&self) -> f64 {
        norm2(self.x)
    }
}

/// Optical configuration: `ell`, `delta = 1/(2 ell)`, the output plane
/// offset `d`, and the additive gauge constant fixed at the distinguished
/// source node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticalConfig {
    pub ell: f64,
    pub delta: f64,
    pub d: f64,
    pub gauge: f64,
}

impl OpticalConfig {
    pub fn new(ell: f64, d: f64, gauge: f64) -> Result<Self> {
        Self::from_parts(ell, 1.0 / (2.0 * ell), d, gauge)
    }

    /// Builds from explicitly stored `delta`, asserting `delta * ell = 1/2`.
    pub fn from_parts(ell: f64, delta: f64, d: f64, gauge: f64) -> Result<Self> {
        if !(ell > 0.0) || !(d > 0.0) || !(delta > 0.0) {
            return Err(Error::Domain(format!(
                "ell, delta, d must be positive (ell={ell}, delta={delta}, d={d})"
            )));
        }
        if (delta * ell - 0.5).abs() > 1e-15 {
            return Err(Error::Domain(format!(
                "delta * ell = {:.17} != 1/2",
                delta * ell
            )));
        }
        Ok(Self {
            ell,
            delta,
            d,
            gauge,
        })
    }
}

/// Band of the unit sphere times an azimuth range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceAperture {
    pub mz_min: f64,
    pub mz_max: f64,
    pub phi_min: f64,
    pub phi_max: f64,
}

impl SourceAperture {
    pub fn new(mz_min: f64, mz_max: f64, phi_min: f64, phi_max: f64) -> Result<Self> {
        if !(-1.0 < mz_min && mz_min < mz_max && mz_max < 1.0) {
            return Err(Error::Domain(format!(
                "mz band must satisfy -1 < {mz_min} < {mz_max} < 1 (poles excluded)"
            )));
        }
        let span = phi_max - phi_min;
        if !(span > 0.0 && span <= 2.0 * std::f64::consts::PI + 1e-12) {
            return Err(Error::Domain(format!(
                "azimuth span must be in (0, 2*pi], got {span}"
            )));
        }
        Ok(Self {
            mz_min,
            mz_max,
            phi_min,
            phi_max,
        })
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.mz_min, self.mz_max, self.phi_min, self.phi_max).map(|_| ())
    }

    /// Upper bound on the geodesic diameter of the band patch.
    pub fn diameter(&self) -> f64 {
        let theta_min = self.mz_max.acos();
        let theta_max = self.mz_min.acos();
        let dphi = (self.phi_max - self.phi_min).min(std::f64::consts::PI);
        // Polar extent plus the widest azimuthal arc; a safe overestimate
        // capped at the sphere diameter pi.
        ((theta_max - theta_min) + dphi).min(std::f64::consts::PI)
    }
}

/// Axis-aligned rectangle in the output plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetAperture {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl TargetAperture {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        if !(x_min <= x_max && y_min <= y_max) {
            return Err(Error::Domain("target rectangle is empty".into()));
        }
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.x_min, self.x_max, self.y_min, self.y_max).map(|_| ())
    }

    /// Modulus of the farthest corner from the origin.
    pub fn corner_modulus(&self) -> f64 {
        let ax = self.x_min.abs().max(self.x_max.abs());
        let ay = self.y_min.abs().max(self.y_max.abs());
        (ax * ax + ay * ay).sqrt()
    }

    pub fn diameter(&self) -> f64 {
        let dx = self.x_max - self.x_min;
        let dy = self.y_max - self.y_min;
        (dx * dx + dy * dy).sqrt()
    }

    pub fn contains(&self, p: &TargetPoint) -> bool {
        p.x[0] >= self.x_min && p.x[0] <= self.x_max && p.x[1] >= self.y_min && p.x[1] <= self.y_max
    }
}

/// The kernel argument before the `delta` scaling:
/// `A(m, x) = (ell - <m_x, x>) / ((ell^2 - |x|^2) (1 + m_z))`.
#[inline]
fn kernel_core(m: &Direction, x: &TargetPoint, cfg: &OpticalConfig) -> f64 {
    let num = cfg.ell - dot2(m.mx, x.x);
    let den = (cfg.ell * cfg.ell - dot2(x.x, x.x)) * (1.0 + m.mz);
    num / den
}

/// Cost kernel `K(m, x) = delta * A(m, x) - delta^2`, positive whenever the
/// feasibility condition on `ell` holds.
pub fn cost_kernel(m: &Direction, x: &TargetPoint, cfg: &OpticalConfig) -> Result<f64> {
    let k = cfg.delta * kernel_core(m, x, cfg) - cfg.delta * cfg.delta;
    if k > 0.0 {
        Ok(k)
    } else {
        Err(Error::NonPositiveKernel {
            i: 0,
            j: 0,
            value: k,
        })
    }
}

/// Analytic gradients of `log K`: the planar gradient in `x` and the
/// spherical (tangential) gradient in `m`, returned as a 3-vector in the
/// tangent plane at `m`.
pub fn log_cost_gradients(
    m: &Direction,
    x: &TargetPoint,
    cfg: &OpticalConfig,
) -> Result<([f64; 2], Vec3)> {
    let k = cost_kernel(m, x, cfg)?;
    let num = cfg.ell - dot2(m.mx, x.x);
    let b = cfg.ell * cfg.ell - dot2(x.x, x.x);
    let c = 1.0 + m.mz;

    // dA/dx = -m_x/(B C) + 2 N x/(B^2 C)
    let da_dx = [
        -m.mx[0] / (b * c) + 2.0 * num * x.x[0] / (b * b * c),
        -m.mx[1] / (b * c) + 2.0 * num * x.x[1] / (b * b * c),
    ];
    let s = cfg.delta / k;
    let grad_x = [s * da_dx[0], s * da_dx[1]];

    // Euclidean gradient in m = (mx1, mx2, mz), then projected onto the
    // tangent plane at m to get the spherical gradient.
    let g_euc: Vec3 = [
        s * (-x.x[0] / (b * c)),
        s * (-x.x[1] / (b * c)),
        s * (-num / (b * c * c)),
    ];
    let mv = m.vec3();
    let radial = crate::math::dot3(g_euc, mv);
    let grad_m = crate::math::sub3(g_euc, crate::math::scale3(mv, radial));
    Ok((grad_x, grad_m))
}

/// Transform `z -> z_tilde = delta - z/(ell^2 - |x|^2)`.
pub fn z_tilde(z: f64, x: &TargetPoint, cfg: &OpticalConfig) -> f64 {
    cfg.delta - z / (cfg.ell * cfg.ell - dot2(x.x, x.x))
}

/// Inverse of [`z_tilde`]: `z = (delta - zt) (ell^2 - |x|^2)`.
pub fn z_from_tilde(zt: f64, x: &TargetPoint, cfg: &OpticalConfig) -> f64 {
    (cfg.delta - zt) * (cfg.ell * cfg.ell - dot2(x.x, x.x))
}

/// Transform `rho -> rho_hat = -delta + 1/(2 rho (m_z + 1))`.
pub fn rho_hat(rho: f64, m: &Direction, cfg: &OpticalConfig) -> f64 {
    -cfg.delta + 1.0 / (2.0 * rho * (m.mz + 1.0))
}

/// Inverse of [`rho_hat`]: `rho = (2 (m_z + 1) (rh + delta))^-1`.
pub fn rho_from_hat(rh: f64, m: &Direction, cfg: &OpticalConfig) -> Result<f64> {
    if rh <= -cfg.delta {
        return Err(Error::Domain(format!(
            "rho_hat must exceed -delta = {}, got {rh}",
            -cfg.delta
        )));
    }
    Ok(1.0 / (2.0 * (m.mz + 1.0) * (rh + cfg.delta)))
}

/// Probes the feasibility condition on `ell` over a product grid (cell
/// corners included) augmented with the analytic worst-case radius for each
/// probed direction, and returns the minimum of
/// `(ell - <m_x, x>)/((ell^2 - |x|^2)(1 + m_z)) - 1/(2 ell)`.
///
/// A positive return value certifies the probe set; a non-positive margin
/// raises [`Error::InfeasibleEll`].
pub fn validate_config(
    cfg: &OpticalConfig,
    src_ap: &SourceAperture,
    tgt_ap: &TargetAperture,
    n_probe: usize,
) -> Result<f64> {
    if n_probe < 2 {
        return Err(Error::Domain("n_probe must be >= 2 per axis".into()));
    }
    src_ap.validate()?;
    tgt_ap.validate()?;
    if tgt_ap.corner_modulus() >= cfg.ell {
        return Err(Error::Domain(format!(
            "ell = {} must exceed the farthest target corner modulus {}",
            cfg.ell,
            tgt_ap.corner_modulus()
        )));
    }

    let mzs = linspace(src_ap.mz_min, src_ap.mz_max, n_probe);
    let phis = linspace(src_ap.phi_min, src_ap.phi_max, n_probe);
    let xs = linspace(tgt_ap.x_min, tgt_ap.x_max, n_probe);
    let ys = linspace(tgt_ap.y_min, tgt_ap.y_max, n_probe);

    let margin_at = |m: &Direction, x: &TargetPoint| kernel_core(m, x, cfg) - cfg.delta;

    let mut margin = f64::INFINITY;
    for &mz in &mzs {
        for &phi in &phis {
            let m = Direction::from_band(mz, phi);
            for &px in &xs {
                for &py in &ys {
                    margin = margin.min(margin_at(&m, &TargetPoint::new([px, py])));
                }
            }
            // The margin at fixed m, restricted to the ray x = s * mhat with
            // mhat aligned to m_x, has an interior minimizer at
            // s* = ell (1 - |m_z|) / |m_x|. Probe it (clamped to the
            // rectangle) so near-critical configurations are not missed by
            // the grid.
            let c = norm2(m.mx);
            if c > 0.0 {
                let s_star = cfg.ell * (1.0 - mz.abs()) / c;
                let dir = [m.mx[0] / c, m.mx[1] / c];
                let mut p = [s_star * dir[0], s_star * dir[1]];
                p[0] = p[0].clamp(tgt_ap.x_min, tgt_ap.x_max);
                p[1] = p[1].clamp(tgt_ap.y_min, tgt_ap.y_max);
                margin = margin.min(margin_at(&m, &TargetPoint::new(p)));
            }
        }
    }

    if margin <= MARGIN_EPS {
        Err(Error::InfeasibleEll { margin })
    } else {
        Ok(margin)
    }
}

/// Smallest `ell` (within `tol`) whose probe margin is positive, found by
/// bisection; the result is re-validated before returning.
pub fn minimal_ell(src_ap: &SourceAperture, tgt_ap: &TargetAperture, tol: f64) -> Result<f64> {
    const N_PROBE: usize = 33;
    src_ap.validate()?;
    tgt_ap.validate()?;
    if !(tol > 0.0) {
        return Err(Error::Domain("tol must be positive".into()));
    }

    let corner = tgt_ap.corner_modulus();
    let cap = 1e6 * tgt_ap.diameter().max(1.0);
    let feasible = |ell: f64| -> bool {
        if ell <= corner {
            return false;
        }
        let cfg = match OpticalConfig::new(ell, 1.0, 0.0) {
            Ok(c) => c,
            Err(_) => return false,
        };
        validate_config(&cfg, src_ap, tgt_ap, N_PROBE).is_ok()
    };

    // Grow an upper bracket first.
    let mut hi = (2.0 * corner).max(1.0);
    while !feasible(hi) {
        hi *= 2.0;
        if hi > cap {
            return Err(Error::NoFeasibleEll { cap });
        }
    }
    let mut lo = corner.max(hi / 2.0_f64.powi(40));
    if feasible(lo) {
        // Already feasible at the bracket floor; report it.
        return Ok(lo);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // Monotonicity of the margin in ell is assumed by the search; verify the
    // answer rather than trusting it.
    let cfg = OpticalConfig::new(hi, 1.0, 0.0)?;
    validate_config(&cfg, src_ap, tgt_ap, N_PROBE)?;
    Ok(hi)
}
