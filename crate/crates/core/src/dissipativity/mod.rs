//! Dissipativity of operators in a Krein space: classification, the energy
//! space Grams `F1`/`F-1`, best constants of the form bounds, and resolvent
//! scans along the imaginary axis.

mod generate;

pub use generate::{generate, GenerateKind, GenerateParams};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krein::KreinSpace;
use crate::linalg::{self, CMat};
use crate::quadrature::{golden_max, local_maxima};

/// A square matrix `L` acting on a Krein space.
#[derive(Debug, Clone)]
pub struct OperatorSpec {
    pub l: CMat,
    pub space: KreinSpace,
    pub label: String,
}

impl OperatorSpec {
    pub fn new(l: CMat, space: KreinSpace, label: impl Into<String>) -> Result<OperatorSpec> {
        space.check_square(&l)?;
        Ok(OperatorSpec { l, space, label: label.into() })
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// `JL`, the matrix of the form `[Lu, v] = (JLu, v)`.
    pub fn jl(&self) -> CMat {
        self.space.j() * &self.l
    }

    pub fn norm(&self) -> f64 {
        linalg::norm2(&self.l)
    }

    /// Default tolerance for spectral decisions: `1e-10 * max(1, |L|)`.
    pub fn default_tol(&self) -> f64 {
        1e-10 * self.norm().max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipativityReport {
    /// `Re (Lu, u) <= 0` in the Hilbert inner product.
    pub is_dissipative: bool,
    pub is_j_dissipative: bool,
    /// Strict and uniform coincide for matrices; both flags are set together.
    pub is_strict: bool,
    pub is_uniform: bool,
    pub lambda_max_herm: f64,
    pub delta_uniform: f64,
    pub c_2_4: Option<f64>,
    pub c_2_5: Option<f64>,
    pub m_2_16: Option<f64>,
    pub omega0: Option<f64>,
    pub c_2_19: Option<f64>,
    pub sector_angle: Option<f64>,
}

/// Flags and `delta` from the spectrum of `Herm(JL)`; constants left empty.
pub fn classify(op: &OperatorSpec) -> DissipativityReport {
    classify_with_tol(op, op.default_tol())
}

pub fn classify_with_tol(op: &OperatorSpec, tol: f64) -> DissipativityReport {
    let lmax = herm_lambda_max(&op.jl());
    let hilbert = herm_lambda_max(&op.l);
    let uniform = lmax < -tol;
    DissipativityReport {
        is_dissipative: hilbert <= tol,
        is_j_dissipative: lmax <= tol,
        is_strict: uniform,
        is_uniform: uniform,
        lambda_max_herm: lmax,
        delta_uniform: (-lmax).max(0.0),
        c_2_4: None,
        c_2_5: None,
        m_2_16: None,
        omega0: None,
        c_2_19: None,
        sector_angle: None,
    }
}

fn herm_lambda_max(a: &CMat) -> f64 {
    linalg::herm_eigenvalues(a).last().copied().unwrap_or(0.0)
}

/// Grams of the energy space `F1` and its negative space `F-1`.
#[derive(Debug, Clone)]
pub struct FGrams {
    pub m1: CMat,
    pub mm1: CMat,
    m1_inv_sqrt: CMat,
}

impl FGrams {
    pub fn f1_norm_sq(&self, u: &linalg::CVec) -> f64 {
        linalg::quad_form(&self.m1, u).re
    }

    pub fn fm1_norm_sq(&self, u: &linalg::CVec) -> f64 {
        linalg::quad_form(&self.mm1, u).re
    }

    /// `M1^{-1/2} X M1^{-1/2}`.
    pub fn whiten(&self, x: &CMat) -> CMat {
        &self.m1_inv_sqrt * x * &self.m1_inv_sqrt
    }
}

/// `M1 = I - Herm(JL)`, `M-1 = M1^{-1}`.
pub fn f_grams(op: &OperatorSpec) -> Result<FGrams> {
    let lmax = herm_lambda_max(&op.jl());
    if lmax > op.default_tol() {
        return Err(Error::NotJDissipative { lambda_max: lmax });
    }
    let m1 = linalg::eye(op.dim()) - linalg::herm_part(&op.jl());
    let eig = linalg::require_pd(&m1, "M1")?;
    let mm1 = eig.apply(|x| 1.0 / x);
    let m1_inv_sqrt = eig.apply(|x| 1.0 / x.sqrt());
    Ok(FGrams { m1, mm1, m1_inv_sqrt })
}

/// Best `c` with `|[Lu, v]| <= c |u|_F1 |v|_F1`.
pub fn condition_2_4(op: &OperatorSpec, g: &FGrams) -> f64 {
    linalg::norm2(&g.whiten(&op.jl()))
}

/// Best `c` with `|Im [Lu, u]| <= c |u|_F1^2`.
pub fn condition_2_5(op: &OperatorSpec, g: &FGrams) -> f64 {
    linalg::norm2(&g.whiten(&linalg::skew_part(&op.jl())))
}

/// Best `m` with `|u|^2 <= m (-Re [Lu, u] + |u|_F-1^2)`.
pub fn condition_2_16(op: &OperatorSpec, g: &FGrams) -> f64 {
    let n = op.dim();
    let form = &g.m1 - linalg::eye(n) + &g.mm1;
    let lmin = linalg::herm_eigenvalues(&form).first().copied().unwrap_or(1.0);
    1.0 / lmin
}

/// Smallest singular value of `L - zI`; inverse iteration for large matrices.
pub fn resolvent_sigma_min(l: &CMat, z: Complex64) -> f64 {
    let a = linalg::shifted(l, z);
    if a.nrows() < 200 {
        return linalg::sigma_min(&a);
    }
    let lu = a.clone().lu();
    let ah = a.adjoint().lu();
    let n = a.nrows();
    let mut x = linalg::CVec::from_element(n, linalg::c(1.0 / (n as f64).sqrt(), 0.0));
    let mut est = 0.0;
    for _ in 0..100 {
        let Some(y) = lu.solve(&x) else { return 0.0 };
        let Some(w) = ah.solve(&y) else { return 0.0 };
        let nw = w.norm();
        if nw == 0.0 || !nw.is_finite() {
            return 0.0;
        }
        let new = y.norm();
        x = w / linalg::c(nw, 0.0);
        if (new - est).abs() <= 1e-12 * new {
            est = new;
            break;
        }
        est = new;
    }
    1.0 / est
}

#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    pub base_points: usize,
    pub refine_peaks: usize,
    pub refine_rel_tol: f64,
    /// `sigma_min <= axis_tol` declares imaginary spectrum; default `1e-10 * |L|`.
    pub axis_tol: Option<f64>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { base_points: 512, refine_peaks: 5, refine_rel_tol: 1e-6, axis_tol: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolventScan {
    pub omega0: f64,
    /// Largest sampled `(1 + |w|) / sigma_min(L - iw)`, infinite if `iR` meets the spectrum.
    pub c_2_19: f64,
    /// Certified bound on `s(w)` for `|w| > omega_max`.
    pub tail_bound: f64,
    pub omega_max: f64,
    pub imaginary_spectrum: Vec<f64>,
    pub samples: Vec<(f64, f64)>,
}

impl ResolventScan {
    pub fn imaginary_spectrum_detected(&self) -> bool {
        !self.imaginary_spectrum.is_empty()
    }
}

fn symmetric_grid(omega_max: f64, base_points: usize, extra: &[f64]) -> Vec<f64> {
    let half = (base_points / 2).max(4);
    let nlin = half / 2;
    let nlog = half - nlin;
    let mut pts = vec![0.0];
    for k in 1..=nlin {
        pts.push(omega_max * k as f64 / nlin as f64);
    }
    let lo = (omega_max * 1e-4).ln();
    let hi = omega_max.ln();
    for k in 0..nlog {
        pts.push((lo + (hi - lo) * k as f64 / (nlog - 1).max(1) as f64).exp());
    }
    let mut all: Vec<f64> = pts.iter().flat_map(|&w| [w, -w]).collect();
    all.extend(extra.iter().copied().filter(|w| w.abs() <= omega_max));
    all.sort_by(|a, b| a.total_cmp(b));
    all.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * omega_max);
    all
}

/// Scans `s(w) = (1 + |w|) / sigma_min(L - iw)` over the imaginary axis.
pub fn resolvent_scan(op: &OperatorSpec, opts: ScanOptions) -> Result<ResolventScan> {
    let l = &op.l;
    let norm = op.norm();
    let axis_tol = opts.axis_tol.unwrap_or(1e-10 * norm.max(f64::MIN_POSITIVE));
    let omega_max = 2.0 * norm + 1.0;
    let eigs = linalg::eigenvalues(l)?;
    let extra: Vec<f64> = eigs.iter().map(|z| z.im).collect();
    let grid = symmetric_grid(omega_max, opts.base_points, &extra);
    let sig: Vec<f64> = grid.par_iter().map(|&w| resolvent_sigma_min(l, linalg::c(0.0, w))).collect();

    let s_of = |w: f64| (1.0 + w.abs()) / resolvent_sigma_min(l, linalg::c(0.0, w));
    let mut detected: Vec<f64> = grid.iter().zip(&sig).filter(|(_, &s)| s <= axis_tol).map(|(&w, _)| w).collect();
    let values: Vec<f64> =
        grid.iter().zip(&sig).map(|(&w, &s)| if s <= axis_tol { f64::INFINITY } else { (1.0 + w.abs()) / s }).collect();
    let mut samples: Vec<(f64, f64)> = grid.iter().copied().zip(values.iter().copied()).collect();

    let mut sup = values.iter().copied().filter(|v| v.is_finite()).fold(0.0f64, f64::max);
    let finite: Vec<f64> = values.iter().map(|&v| if v.is_finite() { v } else { f64::NEG_INFINITY }).collect();
    for idx in local_maxima(&finite).into_iter().take(opts.refine_peaks) {
        if !finite[idx].is_finite() {
            continue;
        }
        let a = grid[idx.saturating_sub(1)];
        let b = grid[(idx + 1).min(grid.len() - 1)];
        if b <= a {
            continue;
        }
        let (w, v) = golden_max(s_of, a, b, opts.refine_rel_tol);
        let sm = (1.0 + w.abs()) / v;
        if sm <= axis_tol || !v.is_finite() {
            detected.push(w);
        } else {
            sup = sup.max(v);
            samples.push((w, v));
        }
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    detected.sort_by(|a, b| a.total_cmp(b));
    detected.dedup();

    let tail_bound = (1.0 + omega_max) / (omega_max - norm);
    let (c_2_19, omega0) = if detected.is_empty() {
        (sup, 0.0)
    } else {
        let worst = detected.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        let next = grid.iter().map(|w| w.abs()).filter(|&w| w > worst).fold(omega_max, f64::min);
        (f64::INFINITY, next)
    };
    Ok(ResolventScan { omega0, c_2_19, tail_bound, omega_max, imaginary_spectrum: detected, samples })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectorialBound {
    /// `max(sampled_sup, tail_bound)`, a certified constant.
    pub c: f64,
    pub sampled_sup: f64,
    pub tail_bound: f64,
    pub argmax: (f64, f64),
}

/// Bound `|lambda| |(-L - lambda)^{-1}| <= c` on the rays `arg lambda = +-half_angle`.
pub fn check_sectorial(op: &OperatorSpec, half_angle: f64, ray_samples: usize) -> Result<SectorialBound> {
    if !(half_angle > 0.0 && half_angle < std::f64::consts::PI) {
        return Err(Error::InvalidParams(format!("half angle {half_angle} outside (0, pi)")));
    }
    let a = -&op.l;
    let norm = op.norm();
    let tol = op.default_tol();
    for mu in linalg::eigenvalues(&a)? {
        if mu.norm() <= tol {
            continue;
        }
        let inside = mu.arg().abs() >= half_angle;
        let dist = [half_angle, -half_angle]
            .iter()
            .map(|&phi| {
                let rot = mu * Complex64::from_polar(1.0, -phi);
                if rot.re >= 0.0 {
                    rot.im.abs()
                } else {
                    mu.norm()
                }
            })
            .fold(f64::INFINITY, f64::min);
        if inside || dist <= tol {
            return Err(Error::SpectrumInSector { re: mu.re, im: mu.im });
        }
    }
    let scale = norm.max(f64::MIN_POSITIVE);
    let rho_max = 2.0 * scale;
    let rho_min = 1e-8 * scale;
    let m = ray_samples.max(16);
    let value = |rho: f64, phi: f64| -> Result<f64> {
        let lam = Complex64::from_polar(rho, phi);
        let s = resolvent_sigma_min(&a, lam);
        if s <= tol {
            return Err(Error::SpectrumInSector { re: lam.re, im: lam.im });
        }
        Ok(rho / s)
    };
    let mut best = (0.0f64, (0.0, 0.0));
    for &phi in &[half_angle, -half_angle] {
        let rhos: Vec<f64> =
            (0..m).map(|k| (rho_min.ln() + (rho_max.ln() - rho_min.ln()) * k as f64 / (m - 1) as f64).exp()).collect();
        let vals = rhos.par_iter().map(|&r| value(r, phi)).collect::<Result<Vec<f64>>>()?;
        for idx in local_maxima(&vals).into_iter().take(3) {
            let lo = rhos[idx.saturating_sub(1)].ln();
            let hi = rhos[(idx + 1).min(m - 1)].ln();
            let (x, v) = golden_max(|t| value(t.exp(), phi).unwrap_or(f64::INFINITY), lo, hi, 1e-9);
            let (r, v) = if v >= vals[idx] { (x.exp(), v) } else { (rhos[idx], vals[idx]) };
            if v > best.0 {
                let lam = Complex64::from_polar(r, phi);
                best = (v, (lam.re, lam.im));
            }
        }
    }
    if !best.0.is_finite() {
        return Err(Error::SpectrumInSector { re: best.1 .0, im: best.1 .1 });
    }
    let tail_bound = rho_max / (rho_max - norm);
    Ok(SectorialBound { c: best.0.max(tail_bound), sampled_sup: best.0, tail_bound, argmax: best.1 })
}

/// Classification plus every constant that applies.
pub fn full_report(op: &OperatorSpec, scan: &ResolventScan) -> DissipativityReport {
    let mut rep = classify(op);
    if let Ok(g) = f_grams(op) {
        rep.c_2_4 = Some(condition_2_4(op, &g));
        rep.c_2_5 = Some(condition_2_5(op, &g));
        rep.m_2_16 = Some(condition_2_16(op, &g));
    }
    rep.omega0 = Some(scan.omega0);
    rep.c_2_19 = Some(scan.c_2_19);
    if rep.is_dissipative {
        rep.sector_angle = Some(std::f64::consts::FRAC_PI_2);
    }
    rep
}
