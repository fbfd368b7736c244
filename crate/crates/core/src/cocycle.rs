//! Jacobian cocycle analysis: singular values, exterior-power norms, the
//! potentials phi_n and phi^u, and Lyapunov spectra.
//!
//! All potentials are computed in log space; cocycle products are renormalized
//! every few steps so that nothing overflows long before f64 range runs out.

use crate::error::{Error, Result};
use crate::linalg::{self, gram_schmidt, Matrix, Point};
use crate::orbits::SaddleData;
use crate::systems::MapSystem;
use serde::{Deserialize, Serialize};

const RENORM_INTERVAL: usize = 20;

/// Ordered Jacobian product df^n_x, kept as a scaled matrix plus a log factor.
#[derive(Clone, Debug)]
pub struct CocycleProduct {
    pub base_point: Point,
    pub steps: usize,
    scaled: Matrix,
    log_scale: f64,
}

impl CocycleProduct {
    pub fn identity(x: Point, dim: usize) -> Self {
        CocycleProduct { base_point: x, steps: 0, scaled: Matrix::identity(dim), log_scale: 0.0 }
    }

    pub fn push(&mut self, jac: &Matrix) {
        self.scaled = jac.mul(&self.scaled);
        self.steps += 1;
        if self.steps.is_multiple_of(RENORM_INTERVAL) {
            let m = self.scaled.max_abs();
            if m > 0.0 && m.is_finite() {
                self.scaled = self.scaled.scale(1.0 / m);
                self.log_scale += m.ln();
            }
        }
    }

    /// log singular values of the accumulated product, descending.
    pub fn log_singular_values(&self) -> Vec<f64> {
        linalg::singular_values(&self.scaled)
            .iter()
            .map(|s| s.ln() + self.log_scale)
            .collect()
    }

    /// The raw matrix; overflows f64 for very long strongly expanding products,
    /// prefer the log-space accessors.
    pub fn matrix(&self) -> Matrix {
        self.scaled.scale(self.log_scale.exp())
    }

    pub fn log_det_abs(&self) -> f64 {
        self.scaled.det().abs().ln() + self.log_scale * self.scaled.dim as f64
    }
}

/// df^n_x along the forward orbit of the system map.
pub fn cocycle_product(system: &MapSystem, x: &Point, n: usize) -> Result<CocycleProduct> {
    let mut p = system.domain.normalize(x);
    let mut acc = CocycleProduct::identity(p, system.dim);
    for i in 0..n {
        let jac = system.jacobian(&p).map_err(|_| Error::Escape { index: i })?;
        acc.push(&jac);
        if i + 1 < n {
            p = system.forward(&p).map_err(|_| Error::Escape { index: i })?;
        }
    }
    Ok(acc)
}

/// df^n starting from offset `start` of a periodic Jacobian sequence.
pub fn cocycle_product_periodic(jacobians: &[Matrix], start: usize, n: usize) -> CocycleProduct {
    let d = jacobians.len();
    let dim = jacobians[0].dim;
    let mut acc = CocycleProduct::identity(Point::zero(dim), dim);
    for k in 0..n {
        acc.push(&jacobians[(start + k) % d]);
    }
    acc
}

/// Max l-volume expansion factor: max over l of the product of the top l
/// singular values.
pub fn exterior_norm(m: &Matrix) -> Result<f64> {
    if !m.is_finite() {
        return Err(Error::AssertionFailed {
            name: "exterior_norm_finite".into(),
            detail: "non-finite matrix entry".into(),
        });
    }
    let sv = linalg::singular_values(m);
    Ok(exterior_log_norm_from_log_sv(&sv.iter().map(|s| s.ln()).collect::<Vec<_>>()).exp())
}

/// Max prefix sum of descending log singular values.
pub fn exterior_log_norm_from_log_sv(log_sv: &[f64]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let mut acc = 0.0;
    for v in log_sv {
        acc += v;
        best = best.max(acc);
    }
    best
}

/// phi_n(x) = -log ||(df^n_x)^wedge||.
pub fn phi_n(system: &MapSystem, x: &Point, n: usize) -> Result<f64> {
    assert!(n >= 1);
    let acc = cocycle_product(system, x, n)?;
    Ok(-exterior_log_norm_from_log_sv(&acc.log_singular_values()))
}

/// phi_n evaluated from a periodic Jacobian sequence (offset in 0..period).
pub fn phi_n_periodic(jacobians: &[Matrix], start: usize, n: usize) -> f64 {
    let acc = cocycle_product_periodic(jacobians, start, n);
    -exterior_log_norm_from_log_sv(&acc.log_singular_values())
}

/// Birkhoff sum of phi^u over one period of a saddle orbit:
/// -log of the product of the unstable multiplier moduli. By convention zero
/// (flagged via [`SaddleData::has_expansion`]) when there is no expanding
/// direction.
pub fn phi_u_sum(saddle: &SaddleData) -> f64 {
    if saddle.unstable_multipliers.is_empty() {
        return 0.0;
    }
    -saddle
        .unstable_multipliers
        .iter()
        .map(|z| z.norm().ln())
        .sum::<f64>()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumMethod {
    Qr,
    Singular,
}

#[derive(Clone, Debug)]
pub struct LyapunovSpectrum {
    /// Sorted ascending, nats per iterate.
    pub exponents: Vec<f64>,
    pub n_used: usize,
    pub method: SpectrumMethod,
}

/// Lyapunov exponents along the forward orbit of `x`.
///
/// The `Singular` method reads all exponents off one accumulated product and
/// has no alignment transient, but its lower exponents degrade once the
/// product's condition number approaches 1/eps; prefer `Qr` for long horizons.
pub fn lyapunov_spectrum(
    system: &MapSystem,
    x: &Point,
    n: usize,
    method: SpectrumMethod,
) -> Result<LyapunovSpectrum> {
    assert!(n >= 10, "lyapunov_spectrum needs n >= 10");
    match method {
        SpectrumMethod::Qr => {
            let dim = system.dim;
            let mut frame: Vec<Point> = (0..dim)
                .map(|i| {
                    let mut v = Point::zero(dim);
                    v.set(i, 1.0);
                    v
                })
                .collect();
            let mut sums = vec![0.0f64; dim];
            let mut p = system.domain.normalize(x);
            for i in 0..n {
                let jac = system.jacobian(&p).map_err(|_| Error::Escape { index: i })?;
                let images: Vec<Point> = frame.iter().map(|v| jac.matvec(v)).collect();
                let (q, r) = gram_schmidt(&images);
                for (s, ri) in sums.iter_mut().zip(&r) {
                    *s += ri.ln();
                }
                frame = q;
                p = system.forward(&p).map_err(|_| Error::Escape { index: i })?;
            }
            let mut exps: Vec<f64> = sums.iter().map(|s| s / n as f64).collect();
            exps.sort_by(|a, b| a.partial_cmp(b).unwrap());
            Ok(LyapunovSpectrum { exponents: exps, n_used: n, method })
        }
        SpectrumMethod::Singular => {
            let acc = cocycle_product(system, x, n)?;
            let mut exps: Vec<f64> = acc
                .log_singular_values()
                .iter()
                .map(|ls| ls / n as f64)
                .collect();
            exps.sort_by(|a, b| a.partial_cmp(b).unwrap());
            Ok(LyapunovSpectrum { exponents: exps, n_used: n, method })
        }
    }
}
