//! Spectral dichotomy of `L` along the imaginary axis and the invariant
//! subspaces `M+` (spectrum in the open left half-plane) and `M-`.
//!
//! Two independent routes produce the projections: an ordered Schur form with
//! a decoupling Sylvester equation, and quadrature of
//! `P+ = -(1/2 pi i) \oint L (L + z)^{-1} / z dz` over the boundary of the sector
//! `S+ = {|arg z| < pi/2 - delta, r < |z| < R}` (and its mirror image for `P-`).

mod blocks;
mod contour;
mod deflate;

pub use blocks::{block_split, theorem_3_7_check, theorem_3_8_constants, Blocks, IsomorphismCheck, SubordinationConstants};
pub use contour::{contour_projections, ContourReport, SectorContour};
pub use deflate::{riesz_deflate, Deflation};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::certificate::Certificate;
use crate::dissipativity::{classify_with_tol, resolvent_sigma_min, OperatorSpec};
use crate::error::{Error, Result};
use crate::krein::{classify_subspace, is_maximal_semidefinite, SignClass, SignKind, Subspace};
use crate::linalg::{self, CMat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Contour,
    Schur,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `max |P^2 - P|` over both projections.
    pub idempotency: f64,
    /// `max(|P+ + P- - I|, |P+ P-|)`.
    pub completeness: f64,
    /// `max |L P - P L|`.
    pub commutation: f64,
    /// `max |L V - V V^* L V|` over orthonormal bases of `M+-`.
    pub invariance: f64,
    /// `max |P L^{-1} - L^{-1} P|` when `L` is invertible.
    pub inverse_commutation: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct DichotomyResult {
    pub p_plus: CMat,
    pub p_minus: CMat,
    pub m_plus: Subspace,
    pub m_minus: Subspace,
    pub spectrum_plus: Vec<Complex64>,
    pub spectrum_minus: Vec<Complex64>,
    pub sign_class_plus: SignClass,
    pub sign_class_minus: SignClass,
    pub method: Method,
    pub residuals: Residuals,
    pub contour: Option<ContourReport>,
}

impl DichotomyResult {
    /// `L` restricted to `M+` (or `M-`) in the orthonormal basis of the subspace.
    pub fn restriction(&self, op: &OperatorSpec, plus: bool) -> CMat {
        let m = if plus { &self.m_plus } else { &self.m_minus };
        linalg::compress(&op.l, m.basis())
    }
}

fn sort_spectrum(mut v: Vec<Complex64>) -> Vec<Complex64> {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    v
}

fn invariance_defect(l: &CMat, v: &CMat) -> f64 {
    if v.ncols() == 0 {
        return 0.0;
    }
    let lv = l * v;
    linalg::norm2(&(&lv - v * (v.adjoint() * &lv)))
}

fn residuals(l: &CMat, p_plus: &CMat, p_minus: &CMat, vp: &CMat, vm: &CMat) -> Residuals {
    let n = l.nrows();
    let idem = linalg::norm2(&(p_plus * p_plus - p_plus)).max(linalg::norm2(&(p_minus * p_minus - p_minus)));
    let compl = linalg::norm2(&(p_plus + p_minus - linalg::eye(n))).max(linalg::norm2(&(p_plus * p_minus)));
    let comm = linalg::norm2(&(l * p_plus - p_plus * l)).max(linalg::norm2(&(l * p_minus - p_minus * l)));
    let inv = linalg::inverse(l).ok().filter(|_| linalg::sigma_min(l) > 1e-12 * linalg::norm2(l).max(1.0));
    let inverse_commutation =
        inv.map(|li| linalg::norm2(&(&li * p_plus - p_plus * &li)).max(linalg::norm2(&(&li * p_minus - p_minus * &li))));
    Residuals {
        idempotency: idem,
        completeness: compl,
        commutation: comm,
        invariance: invariance_defect(l, vp).max(invariance_defect(l, vm)),
        inverse_commutation,
    }
}

/// Builds the result record from a pair of projections.
pub(crate) fn assemble(op: &OperatorSpec, p_plus: CMat, p_minus: CMat, method: Method) -> Result<DichotomyResult> {
    let vp = linalg::projector_range(&p_plus);
    let vm = linalg::projector_range(&p_minus);
    let m_plus = Subspace::new(vp.clone())?;
    let m_minus = Subspace::new(vm.clone())?;
    let spectrum_plus = sort_spectrum(linalg::eigenvalues(&linalg::compress(&op.l, &vp))?);
    let spectrum_minus = sort_spectrum(linalg::eigenvalues(&linalg::compress(&op.l, &vm))?);
    let sign_class_plus = classify_subspace(&m_plus, &op.space, None)?;
    let sign_class_minus = classify_subspace(&m_minus, &op.space, None)?;
    let residuals = residuals(&op.l, &p_plus, &p_minus, &vp, &vm);
    Ok(DichotomyResult {
        p_plus,
        p_minus,
        m_plus,
        m_minus,
        spectrum_plus,
        spectrum_minus,
        sign_class_plus,
        sign_class_minus,
        method,
        residuals,
        contour: None,
    })
}

/// Fails with `ImaginarySpectrum` when an eigenvalue has `|Re| <= tol`.
pub fn check_axis_gap(eigs: &[Complex64], tol: f64) -> Result<()> {
    match eigs.iter().find(|z| z.re.abs() <= tol) {
        Some(z) => Err(Error::ImaginarySpectrum { re: z.re, im: z.im }),
        None => Ok(()),
    }
}

/// Ordered Schur form with `Re < 0` leading; `P+` from the decoupling
/// Sylvester equation `T11 Y - Y T22 = -T12`.
pub fn schur_dichotomy(op: &OperatorSpec, tol: f64) -> Result<DichotomyResult> {
    let n = op.dim();
    let mut s = linalg::Schur::new(&op.l)?;
    check_axis_gap(&s.eigenvalues(), tol)?;
    let k = s.reorder(|z| z.re < 0.0);
    let t11 = s.t.view((0, 0), (k, k)).into_owned();
    let t12 = s.t.view((0, k), (k, n - k)).into_owned();
    let t22 = s.t.view((k, k), (n - k, n - k)).into_owned();
    let (p_plus, p_minus) = match linalg::solve_triangular_sylvester(&t11, &t22, &(-t12)) {
        Ok(y) => {
            // in Schur coordinates P+ = [[I, -Y], [0, 0]]
            let mut blk = CMat::zeros(n, n);
            blk.view_mut((0, 0), (k, k)).fill_with_identity();
            blk.view_mut((0, k), (k, n - k)).copy_from(&(-y));
            let pp = &s.q * blk * s.q.adjoint();
            let pm = linalg::eye(n) - &pp;
            (pp, pm)
        }
        Err(Error::SylvesterIllConditioned { .. }) => schur_basis_projections(op, &s.q, k)?,
        Err(e) => return Err(e),
    };
    let r = assemble(op, p_plus, p_minus, Method::Schur)?;
    self_check(op, &r, k)?;
    Ok(r)
}

/// Fallback when the Sylvester equation is ill-conditioned: bases of both
/// invariant subspaces from two orderings and the explicit inverse of `[V+ V-]`.
fn schur_basis_projections(op: &OperatorSpec, q_plus: &CMat, k: usize) -> Result<(CMat, CMat)> {
    let n = op.dim();
    let mut s2 = linalg::Schur::new(&op.l)?;
    let k2 = s2.reorder(|z| z.re > 0.0);
    if k2 != n - k {
        return Err(Error::SylvesterIllConditioned { separation: 0.0 });
    }
    let mut x = CMat::zeros(n, n);
    x.view_mut((0, 0), (n, k)).copy_from(&q_plus.view((0, 0), (n, k)));
    x.view_mut((0, k), (n, n - k)).copy_from(&s2.q.view((0, 0), (n, n - k)));
    let smin = linalg::sigma_min(&x);
    if smin <= 1e-12 {
        return Err(Error::SylvesterIllConditioned { separation: smin });
    }
    let xi = linalg::inverse(&x)?;
    let mut d = CMat::zeros(n, n);
    d.view_mut((0, 0), (k, k)).fill_with_identity();
    let pp = &x * d * &xi;
    let pm = linalg::eye(n) - &pp;
    Ok((pp, pm))
}

fn self_check(op: &OperatorSpec, r: &DichotomyResult, k: usize) -> Result<()> {
    if r.m_plus.dim() != k || r.m_minus.dim() != op.dim() - k {
        return Err(Error::InvariantViolation(format!(
            "projection ranks {} + {} do not match the spectral split {k} + {}",
            r.m_plus.dim(),
            r.m_minus.dim(),
            op.dim() - k
        )));
    }
    let res = &r.residuals;
    let scale = op.norm().max(1.0) * linalg::norm2(&r.p_plus).max(1.0);
    let worst = res.idempotency.max(res.completeness).max(res.commutation / scale);
    if !worst.is_finite() || worst > 1e-6 * scale {
        return Err(Error::InvariantViolation(format!("dichotomy residual {worst:.3e}")));
    }
    Ok(())
}

/// Outcome of checking the invariant-subspace conclusions on a dichotomy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvariantSubspaceCertificate {
    pub passed: bool,
    pub delta_plus: f64,
    pub delta_minus: f64,
    pub clauses: Vec<Certificate>,
}

const STAGE: &str = "invariant_subspaces";

/// Checks invariance, semidefiniteness, maximality, spectral inclusion,
/// definiteness in the strict case, and that sampled points `iw` of the
/// resolvent set stay in the resolvent sets of both restrictions.
pub fn verify_theorem_3_2(op: &OperatorSpec, d: &DichotomyResult, tol: f64) -> InvariantSubspaceCertificate {
    let mut clauses = Vec::new();
    let norm = op.norm().max(1.0);
    let inv = invariance_defect(&op.l, d.m_plus.basis()).max(invariance_defect(&op.l, d.m_minus.basis()));
    clauses.push(Certificate::at_most(STAGE, "invariance", "L-invariant subspaces M+ and M-", inv, tol * norm));

    clauses.push(
        Certificate::flag(STAGE, "plus_nonnegative", "M+ is a nonnegative subspace", d.sign_class_plus.is_nonnegative())
            .with_detail(format!("{:?}", d.sign_class_plus.kind)),
    );
    clauses.push(
        Certificate::flag(STAGE, "minus_nonpositive", "M- is a nonpositive subspace", d.sign_class_minus.is_nonpositive())
            .with_detail(format!("{:?}", d.sign_class_minus.kind)),
    );

    let maximal = |m: &Subspace| is_maximal_semidefinite(m, &op.space, None).map(|x| x.maximal).unwrap_or(false);
    clauses.push(Certificate::flag(STAGE, "plus_maximal", "M+ is maximal nonnegative", maximal(&d.m_plus)));
    clauses.push(Certificate::flag(STAGE, "minus_maximal", "M- is maximal nonpositive", maximal(&d.m_minus)));
    let complete = d.m_plus.dim() + d.m_minus.dim() == op.dim() && d.residuals.completeness <= tol * norm;
    clauses.push(Certificate::flag(STAGE, "direct_sum", "H = M+ + M-", complete));

    let max_plus = d.spectrum_plus.iter().fold(f64::NEG_INFINITY, |m, z| m.max(z.re));
    let min_minus = d.spectrum_minus.iter().fold(f64::INFINITY, |m, z| m.min(z.re));
    // strict inequalities
    clauses.push(strict(
        Certificate::at_most(STAGE, "spectrum_plus_left", "sigma(L|M+) in the open left half-plane", max_plus, 0.0),
        max_plus < 0.0,
    ));
    clauses.push(strict(
        Certificate::at_least(STAGE, "spectrum_minus_right", "sigma(L|M-) in the open right half-plane", min_minus, 0.0),
        min_minus > 0.0,
    ));

    let delta = |s: &SignClass| if s.degenerate { 0.0 } else { s.definiteness_constant };
    let (dp, dm) = (delta(&d.sign_class_plus), delta(&d.sign_class_minus));
    if classify_with_tol(op, op.default_tol()).is_strict {
        let definite_p = d.m_plus.dim() == 0
            || (matches!(d.sign_class_plus.kind, SignKind::UniformlyPositive | SignKind::Positive) && dp > 0.0);
        let definite_m = d.m_minus.dim() == 0
            || (matches!(d.sign_class_minus.kind, SignKind::UniformlyNegative | SignKind::Negative) && dm > 0.0);
        clauses.push(strict(
            Certificate::at_least(
                STAGE,
                "plus_uniformly_positive",
                "uniform J-dissipativity gives uniformly positive M+",
                dp,
                0.0,
            )
            .with_detail(format!("{:?}", d.sign_class_plus.kind)),
            definite_p,
        ));
        clauses.push(strict(
            Certificate::at_least(
                STAGE,
                "minus_uniformly_negative",
                "uniform J-dissipativity gives uniformly negative M-",
                dm,
                0.0,
            )
            .with_detail(format!("{:?}", d.sign_class_minus.kind)),
            definite_m,
        ));
    }

    clauses.push(axis_shadow(op, d));
    let passed = clauses.iter().all(|c| c.passed);
    InvariantSubspaceCertificate { passed, delta_plus: dp, delta_minus: dm, clauses }
}

/// Sampled `iw` in the resolvent set of `L` must lie in the resolvent sets of
/// both restrictions; the value reported is the smallest restricted `sigma_min`.
fn axis_shadow(op: &OperatorSpec, d: &DichotomyResult) -> Certificate {
    let omega_max = 2.0 * op.norm() + 1.0;
    let a_plus = d.restriction(op, true);
    let a_minus = d.restriction(op, false);
    let mut worst = f64::INFINITY;
    let tol = op.default_tol();
    for k in 0..=64 {
        let w = omega_max * (2.0 * k as f64 / 64.0 - 1.0);
        let z = linalg::c(0.0, w);
        if resolvent_sigma_min(&op.l, z) <= tol {
            continue;
        }
        for a in [&a_plus, &a_minus] {
            if a.nrows() > 0 {
                worst = worst.min(resolvent_sigma_min(a, z));
            }
        }
    }
    strict(
        Certificate::at_least(STAGE, "axis_resolvent_restrictions", "iw in rho(L) implies iw in rho(L|M+-)", worst, tol),
        worst > tol,
    )
}

fn strict(mut c: Certificate, passed: bool) -> Certificate {
    c.passed = passed;
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HalfPlane {
    /// `Re z >= 0`, for restrictions with spectrum in the open left half-plane.
    Right,
    /// `Re z <= 0`.
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlaneScan {
    pub sup: f64,
    pub argmax: (f64, f64),
    /// Bound for `|z| >= radius`.
    pub tail_bound: f64,
    pub radius: f64,
    /// Same supremum with the resolvent measured in the norm of `gram`.
    pub sup_weighted: Option<f64>,
}

/// Supremum over the closed half-plane of `(1 + |z|) |(A - z)^{-1}|`.
///
/// The grid is the boundary axis plus rays into the half-plane, log-spaced in
/// modulus up to `2|A| + 1`; beyond that radius the bound
/// `(1 + |z|) / (|z| - |A|)` is used. `gram` is an optional positive Gram in
/// which the resolvent norm is also evaluated.
pub fn half_plane_resolvent_scan(a: &CMat, side: HalfPlane, gram: Option<&CMat>, radial_points: usize) -> Result<HalfPlaneScan> {
    let n = a.nrows();
    if n == 0 {
        return Ok(HalfPlaneScan { sup: 0.0, argmax: (0.0, 0.0), tail_bound: 0.0, radius: 0.0, sup_weighted: gram.map(|_| 0.0) });
    }
    for z in linalg::eigenvalues(a)? {
        let bad = match side {
            HalfPlane::Right => z.re >= 0.0,
            HalfPlane::Left => z.re <= 0.0,
        };
        if bad {
            return Err(Error::SpectrumInHalfPlane { re: z.re, im: z.im });
        }
    }
    let weights = match gram {
        Some(g) => {
            linalg::require_pd(g, "half-plane scan Gram")?;
            Some((linalg::sqrtm_pd(g), linalg::inv_sqrtm_pd(g)))
        }
        None => None,
    };
    let na = linalg::norm2(a);
    let radius = 2.0 * na + 1.0;
    let sgn = match side {
        HalfPlane::Right => 1.0,
        HalfPlane::Left => -1.0,
    };
    let value = |z: Complex64| (1.0 + z.norm()) / resolvent_sigma_min(a, z);
    let m = radial_points.max(8);
    let mut pts = vec![linalg::c(0.0, 0.0)];
    let nang = 9;
    for j in 0..nang {
        // angles from -pi/2 to pi/2 about the half-plane's direction
        let th = -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * j as f64 / (nang - 1) as f64;
        let dir = Complex64::from_polar(1.0, th) * sgn;
        for k in 0..m {
            let r = (radius.ln() + (1e-4f64).ln() * (1.0 - k as f64 / (m - 1) as f64)).exp();
            pts.push(dir * r);
        }
    }
    let vals: Vec<f64> = pts.iter().map(|&z| value(z)).collect();
    let best = (0..pts.len()).fold(0, |b, i| if vals[i] > vals[b] { i } else { b });
    let mut sup = vals[best];
    let mut argmax = pts[best];
    // refine along the boundary axis, where the maximum of the non-analytic
    // weight typically sits
    let axis_vals: Vec<(f64, f64)> =
        pts.iter().zip(&vals).filter(|(z, _)| z.re == 0.0 || z.re.abs() < 1e-14 * radius).map(|(z, &v)| (z.im, v)).collect();
    let mut axis_sorted = axis_vals.clone();
    axis_sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
    let seq: Vec<f64> = axis_sorted.iter().map(|x| x.1).collect();
    for idx in crate::quadrature::local_maxima(&seq).into_iter().take(4) {
        let lo = axis_sorted[idx.saturating_sub(1)].0;
        let hi = axis_sorted[(idx + 1).min(seq.len() - 1)].0;
        if hi > lo {
            let (w, v) = crate::quadrature::golden_max(|w| value(linalg::c(0.0, w)), lo, hi, 1e-9);
            if v > sup {
                sup = v;
                argmax = linalg::c(0.0, w);
            }
        }
    }
    let sup_weighted = weights.map(|(h, hi)| {
        pts.iter()
            .map(|&z| {
                let r =
                    linalg::inverse(&linalg::shifted(a, z)).map(|inv| linalg::norm2(&(&h * inv * &hi))).unwrap_or(f64::INFINITY);
                (1.0 + z.norm()) * r
            })
            .fold(0.0, f64::max)
    });
    let tail_bound = (1.0 + radius) / (radius - na);
    Ok(HalfPlaneScan { sup, argmax: (argmax.re, argmax.im), tail_bound, radius, sup_weighted })
}
