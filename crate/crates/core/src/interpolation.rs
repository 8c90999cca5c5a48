//! Real interpolation of finite-dimensional Hilbert couples.
//!
//! A couple is a pair of Gram matrices `(G0, G1)` on one coordinate space.
//! With `B = G0^{-1/2} G1 G0^{-1/2} = U diag(beta) U^*` and
//! `b = U^* G0^{1/2} a`, the quadratic K-functional is
//! `K2(t, a)^2 = sum_j t^2 beta_j |b_j|^2 / (1 + t^2 beta_j)`, and the
//! `(1/2, 2)` norm is `(pi/2) a^* (G0 # G1) a` where `#` is the operator
//! geometric mean.

use serde::{Deserialize, Serialize};

use crate::dissipativity::OperatorSpec;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::quadrature::{golden_max, integrate, QuadOptions};

#[derive(Debug, Clone)]
pub struct HilbertCouple {
    pub g0: CMat,
    pub g1: CMat,
}

impl HilbertCouple {
    pub fn new(g0: CMat, g1: CMat) -> Result<HilbertCouple> {
        if g0.nrows() != g1.nrows() || g0.ncols() != g1.ncols() || g0.nrows() != g0.ncols() {
            return Err(Error::DimensionMismatch { expected: g0.nrows(), got: g1.nrows() });
        }
        linalg::require_pd(&g0, "G0")?;
        linalg::require_pd(&g1, "G1")?;
        Ok(HilbertCouple { g0: linalg::herm_part(&g0), g1: linalg::herm_part(&g1) })
    }

    pub fn dim(&self) -> usize {
        self.g0.nrows()
    }

    fn check_vec(&self, a: &CVec) -> Result<()> {
        if a.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: a.len() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationResult {
    pub mean_gram: Vec<Vec<(f64, f64)>>,
    pub equivalence_lower: f64,
    pub equivalence_upper: f64,
    pub target_label: String,
}

impl InterpolationResult {
    pub fn is_exact(&self, tol: f64) -> bool {
        (self.equivalence_lower - 1.0).abs() <= tol && (self.equivalence_upper - 1.0).abs() <= tol
    }
}

/// Spectral data of `(couple, a)` for repeated `K2` evaluation.
pub struct KQuadratic {
    betas: Vec<f64>,
    weights: Vec<f64>,
}

impl KQuadratic {
    pub fn new(c: &HilbertCouple, a: &CVec) -> Result<KQuadratic> {
        c.check_vec(a)?;
        let g0_half = linalg::sqrtm_pd(&c.g0);
        let g0_inv_half = linalg::inv_sqrtm_pd(&c.g0);
        let b = &g0_inv_half * &c.g1 * &g0_inv_half;
        let eig = linalg::herm_eig(&b);
        let coeffs = eig.vectors.adjoint() * (&g0_half * a);
        Ok(KQuadratic { betas: eig.values, weights: coeffs.iter().map(|z| z.norm_sqr()).collect() })
    }

    pub fn k_squared(&self, t: f64) -> f64 {
        let t2 = t * t;
        self.betas
            .iter()
            .zip(&self.weights)
            .map(|(&beta, &w)| {
                let x = t2 * beta;
                if x.is_infinite() {
                    w
                } else {
                    w * x / (1.0 + x)
                }
            })
            .sum()
    }

    pub fn beta_range(&self) -> (f64, f64) {
        let lo = self.betas.first().copied().unwrap_or(1.0);
        let hi = self.betas.last().copied().unwrap_or(1.0);
        (lo, hi)
    }

    /// `|a|_0^2`.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Closed form of `sum beta^theta |b|^2`.
    pub fn theta_weighted(&self, theta: f64) -> f64 {
        self.betas.iter().zip(&self.weights).map(|(&b, &w)| b.max(0.0).powf(theta) * w).sum()
    }
}

/// `K2(t, a) = inf (|a0|_0^2 + t^2 |a1|_1^2)^{1/2}` over `a = a0 + a1`.
pub fn k_quadratic(c: &HilbertCouple, a: &CVec, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveT(t));
    }
    Ok(KQuadratic::new(c, a)?.k_squared(t).sqrt())
}

fn norm_in(g: &CMat, x: &CVec) -> f64 {
    linalg::quad_form(g, x).re.max(0.0).sqrt()
}

/// Exact `K(t, a) = inf (|a0|_0 + t |a1|_1)`.
///
/// Stationary points with both pieces nonzero satisfy
/// `a1 = (G0 + s G1)^{-1} G0 a` with `s = t |a0|_0 / |a1|_1`, so the convex
/// problem reduces to a scalar search over `s` plus the two kinks `a1 = 0`
/// and `a1 = a`. The result is accepted only when the gradient at the
/// minimiser (or the subgradient condition at a kink) holds within `opt_tol`.
pub fn k_exact(c: &HilbertCouple, a: &CVec, t: f64, opt_tol: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveT(t));
    }
    c.check_vec(a)?;
    let norm0 = norm_in(&c.g0, a);
    if norm0 == 0.0 {
        return Ok(0.0);
    }
    let norm1 = norm_in(&c.g1, a);
    let at_zero = norm0;
    let at_a = t * norm1;

    let g0a = &c.g0 * a;
    let split = |s: f64| -> Option<CVec> { (&c.g0 + c.g1.scale(s)).lu().solve(&g0a) };
    let objective = |x: f64| -> f64 {
        match split(x.exp()) {
            Some(a1) => norm_in(&c.g0, &(a - &a1)) + t * norm_in(&c.g1, &a1),
            None => f64::INFINITY,
        }
    };

    let center = t.ln();
    let m = 241;
    let xs: Vec<f64> = (0..m).map(|k| center - 36.0 + 72.0 * k as f64 / (m - 1) as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| objective(x)).collect();
    let imin = (0..m).fold(0, |b, i| if vals[i] < vals[b] { i } else { b });
    let lo = xs[imin.saturating_sub(1)];
    let hi = xs[(imin + 1).min(m - 1)];
    let (xgold, negv) = golden_max(|x| -objective(x), lo, hi, 1e-14);
    let mut candidates = vec![(xgold, -negv)];

    // root of the stationarity residual s |a1|_1 - t |a0|_0, which locates the
    // minimiser more sharply than the flat objective does
    let resid = |x: f64| -> f64 {
        let s = x.exp();
        match split(s) {
            Some(a1) => s * norm_in(&c.g1, &a1) - t * norm_in(&c.g0, &(a - &a1)),
            None => f64::NAN,
        }
    };
    let (mut l, mut r) = (lo, hi);
    let (mut fl, fr) = (resid(l), resid(r));
    if fl.is_finite() && fr.is_finite() && fl * fr < 0.0 {
        for _ in 0..200 {
            let mid = 0.5 * (l + r);
            if mid <= l || mid >= r {
                break;
            }
            let fm = resid(mid);
            if fm == 0.0 {
                l = mid;
                r = mid;
                break;
            }
            if (fm < 0.0) == (fl < 0.0) {
                l = mid;
                fl = fm;
            } else {
                r = mid;
            }
        }
        let x = 0.5 * (l + r);
        candidates.push((x, objective(x)));
    }
    let best = candidates.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);

    let value = best.min(at_zero).min(at_a);
    let g0_inv_half = linalg::inv_sqrtm_pd(&c.g0);
    let b_norm = linalg::norm2(&(&g0_inv_half * &c.g1 * &g0_inv_half)).sqrt();
    let tol = opt_tol * (1.0 + t * b_norm);
    let gradient = |x: f64| -> Option<f64> {
        let a1 = split(x.exp())?;
        let a0 = a - &a1;
        let (n0, n1) = (norm_in(&c.g0, &a0), norm_in(&c.g1, &a1));
        if n0 == 0.0 || n1 == 0.0 {
            return None;
        }
        let grad = (&c.g0 * &a0).scale(-1.0 / n0) + (&c.g1 * &a1).scale(t / n1);
        Some((&g0_inv_half * grad).norm())
    };

    if value == best && candidates.iter().any(|&(x, _)| gradient(x).is_some_and(|g| g <= tol)) {
        return Ok(value);
    }
    // kink conditions: 0 in the subdifferential
    let kink_zero = (linalg::inv_sqrtm_pd(&c.g1) * &g0a).norm() / norm0 <= t * (1.0 + opt_tol);
    let kink_a = norm1 > 0.0 && (linalg::inv_sqrtm_pd(&c.g0) * (&c.g1 * a)).norm() * t / norm1 <= 1.0 + opt_tol;
    if (value == at_zero && kink_zero) || (value == at_a && kink_a) {
        return Ok(value);
    }
    if kink_zero {
        return Ok(at_zero.min(value));
    }
    if kink_a {
        return Ok(at_a.min(value));
    }
    Err(Error::ConvergenceFailure(format!("K({t}) stationarity not reached")))
}

/// `G0 #_theta G1 = G0^{1/2} (G0^{-1/2} G1 G0^{-1/2})^theta G0^{1/2}`.
pub fn weighted_mean(g0: &CMat, g1: &CMat, theta: f64) -> Result<CMat> {
    linalg::require_pd(g0, "G0")?;
    linalg::require_pd(g1, "G1")?;
    let h = linalg::sqrtm_pd(g0);
    let hi = linalg::inv_sqrtm_pd(g0);
    let inner = linalg::powm_pd(&(&hi * g1 * &hi), theta);
    Ok(linalg::herm_part(&(&h * inner * &h)))
}

/// Operator geometric mean `G0 # G1`.
pub fn geometric_mean(g0: &CMat, g1: &CMat) -> Result<CMat> {
    weighted_mean(g0, g1, 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfNorm {
    pub closed_form: f64,
    pub quadrature: f64,
    pub quadrature_error: f64,
}

/// `(A0, A1)_{1/2,2}` norm of `a`: closed form through the geometric mean and
/// direct quadrature of `int t^{-2} K2(t, a)^2 dt` after `t = e^s`.
pub fn interp_half_norm(c: &HilbertCouple, a: &CVec, rel_tol: f64) -> Result<HalfNorm> {
    c.check_vec(a)?;
    let mean = geometric_mean(&c.g0, &c.g1)?;
    let closed_sq = std::f64::consts::FRAC_PI_2 * linalg::quad_form(&mean, a).re;
    if closed_sq == 0.0 {
        return Ok(HalfNorm { closed_form: 0.0, quadrature: 0.0, quadrature_error: 0.0 });
    }
    let kq = KQuadratic::new(c, a)?;
    let (_, bmax) = kq.beta_range();
    let w = kq.total_weight();
    // integrand <= bmax w e^s on the left and <= w e^{-s} on the right
    let eps = 1e-3 * rel_tol * closed_sq;
    let left = (bmax * w / eps).ln().max(1.0);
    let right = (w / eps).ln().max(1.0);
    let s_lo = -left;
    let s_hi = right;
    let opts = QuadOptions { rel_tol: 1e-3 * rel_tol, abs_tol: 0.0, initial_panels: 32, max_evaluations: 400_000 };
    let r = integrate(|s: f64| (-s).exp() * kq.k_squared(s.exp()), s_lo, s_hi, opts);
    if !r.converged {
        return Err(Error::QuadratureFailure(format!("error estimate {:.3e}", r.error_estimate)));
    }
    Ok(HalfNorm { closed_form: closed_sq.sqrt(), quadrature: r.value.sqrt(), quadrature_error: r.error_estimate })
}

/// Gram of `H_k` with norm `|(L - lambda)^k u|`; negative `k` uses the inverse.
pub fn sobolev_tower_gram(op: &OperatorSpec, lambda: num_complex::Complex64, k: i32) -> Result<CMat> {
    let n = op.dim();
    let a = linalg::shifted(&op.l, lambda);
    let smin = linalg::sigma_min(&a);
    if smin <= op.default_tol() {
        return Err(Error::LambdaInSpectrum { re: lambda.re, im: lambda.im, sigma_min: smin });
    }
    let base = if k >= 0 { a } else { linalg::inverse(&a)? };
    let mut p = linalg::eye(n);
    for _ in 0..k.unsigned_abs() {
        p = &base * p;
    }
    Ok(linalg::herm_part(&(p.adjoint() * p)))
}

/// Best `lower, upper` with `lower |u|_target <= |u|_(G0,G1) <= upper |u|_target`,
/// the interpolation norm normalised so that `(M, M^{-1})` against `I` is exact.
pub fn check_identity(c: &HilbertCouple, target: &CMat, label: &str) -> Result<InterpolationResult> {
    let mean = geometric_mean(&c.g0, &c.g1)?;
    let (lower, upper) = relative_bounds(target, &mean)?;
    Ok(InterpolationResult {
        mean_gram: mean.row_iter().map(|r| r.iter().map(|z| (z.re, z.im)).collect()).collect(),
        equivalence_lower: lower,
        equivalence_upper: upper,
        target_label: label.to_string(),
    })
}

/// Extreme values of `|u|_other / |u|_base`.
pub fn relative_bounds(base: &CMat, other: &CMat) -> Result<(f64, f64)> {
    linalg::require_pd(base, "target Gram")?;
    let bi = linalg::inv_sqrtm_pd(base);
    let e = linalg::herm_eigenvalues(&(&bi * other * &bi));
    let lo = e.first().copied().unwrap_or(1.0).max(0.0).sqrt();
    let hi = e.last().copied().unwrap_or(1.0).max(0.0).sqrt();
    Ok((lo, hi))
}

/// Equivalence constants between the `H_k` norms built at two resolvent points.
pub fn norm_independence(
    op: &OperatorSpec,
    lambda1: num_complex::Complex64,
    lambda2: num_complex::Complex64,
    k: i32,
) -> Result<(f64, f64)> {
    let g1 = sobolev_tower_gram(op, lambda1, k)?;
    let g2 = sobolev_tower_gram(op, lambda2, k)?;
    relative_bounds(&g1, &g2)
}

/// Compares `(H1, H)_theta` with `(H1, H-1)_{theta/2}` (normalised Grams).
pub fn reiteration_check(op: &OperatorSpec, lambda: num_complex::Complex64, theta: f64) -> Result<InterpolationResult> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParams(format!("theta must lie in (0, 1), got {theta}")));
    }
    let h1 = sobolev_tower_gram(op, lambda, 1)?;
    let hm1 = sobolev_tower_gram(op, lambda, -1)?;
    let left = weighted_mean(&h1, &linalg::eye(op.dim()), theta)?;
    let right = weighted_mean(&h1, &hm1, theta / 2.0)?;
    let (lower, upper) = relative_bounds(&left, &right)?;
    Ok(InterpolationResult {
        mean_gram: right.row_iter().map(|r| r.iter().map(|z| (z.re, z.im)).collect()).collect(),
        equivalence_lower: lower,
        equivalence_upper: upper,
        target_label: format!("(H1,H)_{theta}"),
    })
}

/// The three finite-dimensional identities checked against the Hilbert norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Identity {
    /// `(H1, H-1)_{1/2,2} = H` for the Hilbert-dissipative operator `JL` at `lambda = 1`.
    #[serde(rename = "2.6")]
    Sectorial,
    /// `(H1, H-1)_{1/2,2} = H` for `L` at a point of its resolvent set.
    #[serde(rename = "2.9")]
    Tower,
    /// `(F1, F-1)_{1/2,2} = H` with the energy Grams `M1`, `M1^{-1}`.
    #[serde(rename = "2.10")]
    Energy,
}

impl Identity {
    pub const ALL: [Identity; 3] = [Identity::Sectorial, Identity::Tower, Identity::Energy];

    pub fn tag(self) -> &'static str {
        match self {
            Identity::Sectorial => "2.6",
            Identity::Tower => "2.9",
            Identity::Energy => "2.10",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Identity> {
        Identity::ALL.into_iter().find(|i| i.tag() == tag)
    }
}

/// First of `0, 1, -1, i, -i, 2, ...` at which `L - lambda` is safely invertible.
fn resolvent_point(op: &OperatorSpec) -> Result<num_complex::Complex64> {
    let floor = 1e-8 * op.norm().max(1.0);
    let mut candidates = vec![linalg::c(0.0, 0.0)];
    for k in 1..=8 {
        let r = k as f64;
        candidates.extend([linalg::c(r, 0.0), linalg::c(-r, 0.0), linalg::c(0.0, r), linalg::c(0.0, -r)]);
    }
    candidates
        .into_iter()
        .find(|&z| linalg::sigma_min(&linalg::shifted(&op.l, z)) > floor)
        .ok_or_else(|| Error::InvalidParams("no resolvent point found among the trial shifts".into()))
}

/// Builds the couple for `which` from `op` and compares its `(1/2, 2)` mean with `I`.
pub fn identity_check(op: &OperatorSpec, which: Identity) -> Result<InterpolationResult> {
    let eye = linalg::eye(op.dim());
    let (couple, label) = match which {
        Identity::Sectorial => {
            let jl = OperatorSpec::new(op.jl(), op.space.clone(), "JL")?;
            let one = linalg::c(1.0, 0.0);
            (
                HilbertCouple::new(sobolev_tower_gram(&jl, one, 1)?, sobolev_tower_gram(&jl, one, -1)?)?,
                "(H1,H-1) of JL at 1".to_string(),
            )
        }
        Identity::Tower => {
            let z = resolvent_point(op)?;
            (
                HilbertCouple::new(sobolev_tower_gram(op, z, 1)?, sobolev_tower_gram(op, z, -1)?)?,
                format!("(H1,H-1) of L at {}{:+}i", z.re, z.im),
            )
        }
        Identity::Energy => {
            let g = crate::dissipativity::f_grams(op)?;
            (HilbertCouple::new(g.m1, g.mm1)?, "(F1,F-1)".to_string())
        }
    };
    check_identity(&couple, &eye, &label)
}
