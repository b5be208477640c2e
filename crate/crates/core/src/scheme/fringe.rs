//! Fringe fitting and phase sensitivity.

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::Serialize;

use crate::error::{Error, Result};

/// Coincidence probability against mirror phase.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FringeScan {
    pub points: Vec<(f64, f64)>,
}

/// Least-squares fit of `A (1 - cos(f phi + delta)) + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    /// Fringe frequency, per radian of mirror phase.
    pub frequency: f64,
    /// `(max - min) / (max + min)` of the fitted model, clamped to `[0, 1]`.
    pub visibility: f64,
    /// `c`, the model's minimum.
    pub offset: f64,
    /// `A`, half the peak-to-peak height.
    pub amplitude: f64,
    pub phase: f64,
    pub rms_residual: f64,
}

const MIN_SAMPLES: usize = 16;
const MAX_GRID_FREQUENCY: u32 = 512;

/// Linear fit of `c0 + alpha cos(f phi) + beta sin(f phi)` at fixed `f`.
fn linear_fit(points: &[(f64, f64)], f: f64) -> Option<(Vector3<f64>, f64)> {
    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    for &(phi, p) in points {
        let row = Vector3::new(1.0, (f * phi).cos(), (f * phi).sin());
        ata += row * row.transpose();
        atb += row * p;
    }
    let x = ata.cholesky()?.solve(&atb);
    Some((x, rss(points, x[0], x[1], x[2], f)))
}

fn rss(points: &[(f64, f64)], c0: f64, alpha: f64, beta: f64, f: f64) -> f64 {
    points
        .iter()
        .map(|&(phi, p)| {
            let r = p - (c0 + alpha * (f * phi).cos() + beta * (f * phi).sin());
            r * r
        })
        .sum()
}

/// Levenberg-Marquardt on `(c0, alpha, beta, f)`.
fn refine(points: &[(f64, f64)], start: Vector4<f64>) -> (Vector4<f64>, f64) {
    let cost = |x: &Vector4<f64>| rss(points, x[0], x[1], x[2], x[3]);
    let mut x = start;
    let mut current = cost(&x);
    let mut lambda = 1e-6;
    for _ in 0..200 {
        if current == 0.0 {
            break;
        }
        let mut jtj = Matrix4::zeros();
        let mut jtr = Vector4::zeros();
        for &(phi, p) in points {
            let (s, c) = (x[3] * phi).sin_cos();
            let model = x[0] + x[1] * c + x[2] * s;
            let row = Vector4::new(1.0, c, s, phi * (-x[1] * s + x[2] * c));
            jtj += row * row.transpose();
            jtr += row * (p - model);
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut damped = jtj;
            for i in 0..4 {
                damped[(i, i)] *= 1.0 + lambda;
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let trial = x + chol.solve(&jtr);
            let c = cost(&trial);
            if c < current {
                let gain = (current - c) / current.max(f64::MIN_POSITIVE);
                x = trial;
                current = c;
                lambda = (lambda / 10.0).max(1e-12);
                improved = gain > 1e-14;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (x, current)
}

pub fn fit_fringe(scan: &FringeScan) -> Result<FitResult> {
    let points = &scan.points;
    if points.len() < MIN_SAMPLES {
        return Err(Error::DegenerateFringe(format!("{} samples, need at least {MIN_SAMPLES}", points.len())));
    }
    let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, p)| (lo.min(p), hi.max(p)));
    if hi - lo <= 1e-15 || (hi - lo).is_nan() {
        return Err(Error::DegenerateFringe("scan is constant".into()));
    }
    let span = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max)
        - points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    // Integer frequencies up to the sampling limit of the grid.
    let nyquist = (std::f64::consts::PI * (points.len() - 1) as f64 / span).floor() as u32;
    let top = nyquist.clamp(1, MAX_GRID_FREQUENCY);
    let (mut best_f, mut best) = (0u32, None::<(Vector3<f64>, f64)>);
    for f in 1..=top {
        if let Some((x, r)) = linear_fit(points, f64::from(f)) {
            if best.as_ref().is_none_or(|(_, b)| r < *b) {
                best_f = f;
                best = Some((x, r));
            }
        }
    }
    let (lin, lin_rss) = best.ok_or_else(|| Error::DegenerateFringe("no frequency could be fitted".into()))?;
    let start = Vector4::new(lin[0], lin[1], lin[2], f64::from(best_f));
    let (x, cost) = if lin_rss == 0.0 { (start, 0.0) } else { refine(points, start) };

    // c0 + alpha cos + beta sin == A (1 - cos(f phi + delta)) + c
    let amplitude = x[1].hypot(x[2]);
    if amplitude <= 0.0 {
        return Err(Error::DegenerateFringe("fitted amplitude is zero".into()));
    }
    let phase = x[2].atan2(-x[1]);
    let offset = x[0] - amplitude;
    let visibility = (amplitude / (amplitude + offset)).clamp(0.0, 1.0);
    Ok(FitResult {
        frequency: x[3],
        visibility,
        offset,
        amplitude,
        phase,
        rms_residual: (cost / points.len() as f64).sqrt(),
    })
}

/// Smallest `sqrt(P(1-P)) / |dP/dphi|` over one period of the normalized
/// fringe `P = (1 - V cos(f phi))/2`.
pub fn phase_sensitivity(fit: &FitResult) -> Result<f64> {
    let v = fit.visibility;
    if v.is_nan() || v <= 0.0 {
        return Err(Error::ZeroVisibility);
    }
    const STEPS: usize = 2048;
    let f = fit.frequency;
    let best = (1..STEPS)
        .map(|k| {
            let x = std::f64::consts::PI * k as f64 / STEPS as f64;
            let p = (1.0 - v * x.cos()) / 2.0;
            let slope = (f * v * x.sin() / 2.0).abs();
            (p * (1.0 - p)).sqrt() / slope
        })
        .fold(f64::INFINITY, f64::min);
    Ok(best)
}

/// `1/sqrt(N)` reference for `N` photons.
pub fn shot_noise_sensitivity(photons: f64) -> f64 {
    1.0 / photons.sqrt()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn synthetic(f: f64, amp: f64, offset: f64, delta: f64, n: usize) -> FringeScan {
        FringeScan {
            points: (0..n)
                .map(|k| {
                    let phi = 2.0 * PI * k as f64 / n as f64;
                    (phi, amp * (1.0 - (f * phi + delta).cos()) + offset)
                })
                .collect(),
        }
    }

    #[test]
    fn exact_model_recovered() {
        let fit = fit_fringe(&synthetic(8.0, 0.5, 0.0, 0.0, 128)).unwrap();
        assert!((fit.frequency - 8.0).abs() < 1e-6);
        assert!((fit.visibility - 1.0).abs() < 1e-6);
        assert!(fit.rms_residual < 1e-12);
    }

    #[test]
    fn offset_recovered() {
        let fit = fit_fringe(&synthetic(8.0, 0.5, 0.1, 0.3, 128)).unwrap();
        assert!((fit.offset - 0.1).abs() < 1e-6);
        assert!((fit.amplitude - 0.5).abs() < 1e-6);
        assert!((fit.visibility - 0.5 / 0.6).abs() < 1e-6);
        assert!((fit.phase - 0.3).abs() < 1e-6);
    }

    #[test]
    fn non_integer_frequency_refined() {
        let fit = fit_fringe(&synthetic(5.3, 1.0, 0.2, 0.0, 200)).unwrap();
        assert!((fit.frequency - 5.3).abs() < 1e-6, "{fit:?}");
    }

    #[test]
    fn degenerate_scans() {
        let flat = FringeScan { points: (0..32).map(|k| (k as f64, 0.25)).collect() };
        assert!(fit_fringe(&flat).is_err());
        assert!(fit_fringe(&synthetic(2.0, 1.0, 0.0, 0.0, 8)).is_err());
    }

    fn unit(f: f64, v: f64) -> FitResult {
        FitResult { frequency: f, visibility: v, offset: 0.0, amplitude: 1.0, phase: 0.0, rms_residual: 0.0 }
    }

    #[test]
    fn heisenberg_sensitivity() {
        assert!((phase_sensitivity(&unit(8.0, 1.0)).unwrap() - 0.125).abs() < 1e-12);
        assert!((phase_sensitivity(&unit(12.0, 1.0)).unwrap() - 1.0 / 12.0).abs() < 1e-12);
        let reduced = phase_sensitivity(&unit(8.0, 0.5)).unwrap();
        assert!(reduced > 0.125);
        assert!((reduced - 0.25).abs() < 1e-12);
        assert_eq!(phase_sensitivity(&unit(8.0, 0.0)).unwrap_err(), Error::ZeroVisibility);
    }

    #[test]
    fn shot_noise_reference() {
        assert!((shot_noise_sensitivity(8.0) - 8f64.sqrt().recip()).abs() < 1e-15);
    }
}
