use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dichotomy::DichotomyResult;
use crate::dissipativity::{f_grams, OperatorSpec};
use crate::error::{Error, Result};
use crate::krein::Subspace;
use crate::linalg::{self, c, CMat, CVec};
use crate::quadrature::{golden_max, integrate, QuadOptions};

/// `ln(f64::MAX)` with some headroom.
const OVERFLOW_EXPONENT: f64 = 700.0;

fn norm1(a: &CMat) -> f64 {
    (0..a.ncols()).map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

// Pade coefficients b_0..b_13 for the degree-13 approximant
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] =
    [17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0, 2162160.0, 110880.0, 3960.0, 90.0, 1.0];
// 1-norm thresholds giving unit-roundoff backward error
#[allow(clippy::excessive_precision)]
const THETA: [(usize, f64); 4] =
    [(3, 1.495585217958292e-2), (5, 2.539398330063230e-1), (7, 9.504178996162932e-1), (9, 2.097847961257068)];
const THETA13: f64 = 5.371920351148152;

fn pade(a: &CMat, b: &[f64]) -> Result<CMat> {
    let n = a.nrows();
    let eye = linalg::eye(n);
    let a2 = a * a;
    let (u, v) = if b.len() == 14 {
        let a4 = &a2 * &a2;
        let a6 = &a4 * &a2;
        let r = |m: &CMat, k: f64| m * c(k, 0.0);
        let u_in =
            &a6 * (r(&a6, b[13]) + r(&a4, b[11]) + r(&a2, b[9])) + r(&a6, b[7]) + r(&a4, b[5]) + r(&a2, b[3]) + r(&eye, b[1]);
        let v = &a6 * (r(&a6, b[12]) + r(&a4, b[10]) + r(&a2, b[8])) + r(&a6, b[6]) + r(&a4, b[4]) + r(&a2, b[2]) + r(&eye, b[0]);
        (a * u_in, v)
    } else {
        // even powers A^0, A^2, A^4, ...
        let mut pow = eye.clone();
        let mut u_in = CMat::zeros(n, n);
        let mut v = CMat::zeros(n, n);
        for k in 0..b.len() / 2 {
            u_in += &pow * c(b[2 * k + 1], 0.0);
            v += &pow * c(b[2 * k], 0.0);
            pow = &pow * &a2;
        }
        (a * u_in, v)
    };
    let num = &v + &u;
    let den = v - u;
    den.lu().solve(&num).ok_or(Error::Singular)
}

/// `e^{tA}` by scaling and squaring with the Pade degrees and thresholds of
/// Higham (2005). `t = 0` returns the identity.
pub fn expm_action(a: &CMat, t: f64) -> Result<CMat> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParams(format!("time must be finite and nonnegative, got {t}")));
    }
    let n = a.nrows();
    if t == 0.0 || n == 0 {
        return Ok(linalg::eye(n));
    }
    let growth = linalg::spectral_abscissa(&linalg::eigenvalues(a)?) * t;
    if growth > OVERFLOW_EXPONENT {
        return Err(Error::Overflow(growth));
    }
    let ta = a * c(t, 0.0);
    let nrm = norm1(&ta);
    for (m, theta) in THETA {
        if nrm <= theta {
            let b: &[f64] = match m {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            return pade(&ta, b);
        }
    }
    let s = (nrm / THETA13).log2().ceil().max(0.0) as i32;
    let mut r = pade(&(ta * c(0.5f64.powi(s), 0.0)), &B13)?;
    for _ in 0..s {
        r = &r * &r;
    }
    if r.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Overflow(growth));
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub points: usize,
    /// Grid starts at `t_min_factor / max(|A|, 1)`.
    pub t_min_factor: f64,
    /// Grid ends at `max(t_max_factor / |alpha|, 1)`; at least 10.
    pub t_max_factor: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams { points: 160, t_min_factor: 1e-3, t_max_factor: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemigroupTrace {
    pub time_grid: Vec<f64>,
    pub norm_e_ta: Vec<f64>,
    pub norm_ta_e_ta: Vec<f64>,
    /// Certified `(sup |e^{tA}|, sup t|A e^{tA}|)` over `t >= 0`.
    pub sup_bounds: (f64, f64),
    pub spectral_abscissa: f64,
    /// `C` in `|e^{tA}| <= C e^{alpha t / 2}`, from a Lyapunov equation.
    pub lyapunov_constant: f64,
    /// Bounds for `t` beyond the grid.
    pub tail_bounds: (f64, f64),
}

/// Samples `|e^{tA}|` and `t|A e^{tA}|` on a log grid and bounds both beyond it.
///
/// With `B = A - alpha/2` and `B^* X + X B = -I`, `|e^{tB}|^2 <= cond(X)`, so
/// `|e^{tA}| <= C e^{alpha t/2}` with `C = sqrt(cond X)`. For `t >= t_max`
/// (past the maximiser `2/|alpha|` of `t e^{alpha t/2}`) this gives
/// `|e^{tA}| <= C |e^{t_max A}|` and `t|A e^{tA}| <= t_max C |A e^{t_max A}|`.
/// Below the grid `|e^{tA}| <= e^{t max(mu, 0)}` with `mu` the logarithmic norm.
pub fn analytic_bounds(a: &CMat, grid: GridParams) -> Result<SemigroupTrace> {
    let n = a.nrows();
    if n == 0 || grid.points < 2 {
        return Err(Error::InvalidParams("analytic_bounds needs a nonempty matrix and at least two grid points".into()));
    }
    let alpha = linalg::spectral_abscissa(&linalg::eigenvalues(a)?);
    if !(alpha < 0.0) {
        return Err(Error::NotStable(alpha));
    }
    let norm_a = linalg::norm2(a);
    let mu = linalg::herm_eigenvalues(&linalg::herm_part(a)).last().copied().unwrap_or(0.0);
    let t_min = grid.t_min_factor / norm_a.max(1.0);
    let t_max = (grid.t_max_factor.max(10.0) / alpha.abs()).max(1.0);
    let (l0, l1) = (t_min.ln(), t_max.ln());
    let m = grid.points;
    let time_grid: Vec<f64> = (0..m).map(|k| (l0 + (l1 - l0) * k as f64 / (m - 1) as f64).exp()).collect();

    let sample = |t: f64| -> Result<(f64, f64)> {
        let e = expm_action(a, t)?;
        let ae = a * &e;
        Ok((linalg::norm2(&e), t * linalg::norm2(&ae)))
    };
    let mut norm_e_ta = Vec::with_capacity(m);
    let mut norm_ta_e_ta = Vec::with_capacity(m);
    for &t in &time_grid {
        let (x, y) = sample(t)?;
        norm_e_ta.push(x);
        norm_ta_e_ta.push(y);
    }

    // refine each maximum in log t between its grid neighbours
    let refine = |vals: &[f64], pick: fn((f64, f64)) -> f64| -> f64 {
        let k = vals.iter().enumerate().fold(0, |b, (i, v)| if *v > vals[b] { i } else { b });
        let lo = time_grid[k.saturating_sub(1)].ln();
        let hi = time_grid[(k + 1).min(m - 1)].ln();
        let (_, v) = golden_max(|s| sample(s.exp()).map(pick).unwrap_or(f64::NEG_INFINITY), lo, hi, 1e-10);
        v.max(vals[k])
    };
    let sup_e = refine(&norm_e_ta, |p| p.0);
    let sup_ae = refine(&norm_ta_e_ta, |p| p.1);

    let shifted = linalg::shifted(a, c(0.5 * alpha, 0.0));
    let x = linalg::solve_lyapunov(&shifted, &linalg::eye(n))?;
    let xe = linalg::herm_eigenvalues(&x);
    let lyapunov_constant = (xe[xe.len() - 1] / xe[0]).sqrt();
    if !lyapunov_constant.is_finite() || xe[0] <= 0.0 {
        return Err(Error::NotStable(alpha));
    }
    let tail = (lyapunov_constant * norm_e_ta[m - 1], lyapunov_constant * norm_ta_e_ta[m - 1]);
    let head = ((t_min * mu.max(0.0)).exp(), t_min * norm_a * (t_min * mu.max(0.0)).exp());

    let sup_bounds = (sup_e.max(tail.0).max(head.0).max(1.0), sup_ae.max(tail.1).max(head.1));
    if !(sup_bounds.0.is_finite() && sup_bounds.1.is_finite()) {
        return Err(Error::Overflow(alpha * t_max));
    }
    Ok(SemigroupTrace {
        time_grid,
        norm_e_ta,
        norm_ta_e_ta,
        sup_bounds,
        spectral_abscissa: alpha,
        lyapunov_constant,
        tail_bounds: tail,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub u0_indefinite_square: f64,
    /// `-2 int_0^T Re[Lv, v] dt` along `v' = Lv`; for a subspace that is stable
    /// only backwards the trajectory solves `v' = -Lv` and the sign is flipped
    /// so that the identity below keeps its form.
    pub energy_integral: f64,
    pub boundary_term: f64,
    /// `|[u0, u0] - energy_integral - boundary_term|`.
    pub residual: f64,
    pub horizon: f64,
    pub reversed: bool,
    /// `int_0^T v^* M1 v dt`, the energy-space norm of the trajectory.
    pub f1_integral: f64,
    pub quadrature_error: f64,
    pub evaluations: usize,
}

impl EnergyReport {
    /// The discarded boundary term has the sign that turns the identity into
    /// the inequality: `[v(T), v(T)] >= 0` forwards, `<= 0` backwards.
    pub fn boundary_sign_ok(&self, tol: f64) -> bool {
        if self.reversed {
            self.boundary_term <= tol
        } else {
            self.boundary_term >= -tol
        }
    }
}

/// Restriction of `L` to an invariant subspace, the direction in which it
/// decays and the horizon `max(10/|alpha|, 1)`.
struct Flow {
    a: CMat,
    reversed: bool,
    horizon: f64,
}

fn flow(op: &OperatorSpec, m: &Subspace) -> Result<Flow> {
    let a = linalg::compress(&op.l, m.basis());
    let eigs = linalg::eigenvalues(&a)?;
    let hi = linalg::spectral_abscissa(&eigs);
    let lo = eigs.iter().fold(f64::INFINITY, |x, z| x.min(z.re));
    let (a, reversed, alpha) = if hi < 0.0 {
        (a, false, hi)
    } else if lo > 0.0 {
        (-a, true, -lo)
    } else {
        return Err(Error::NotStableRestriction);
    };
    Ok(Flow { a, reversed, horizon: (10.0 / alpha.abs()).max(1.0) })
}

fn energy_options(abs_tol: f64) -> QuadOptions {
    QuadOptions { abs_tol, rel_tol: 0.0, initial_panels: 8, max_evaluations: 200_000 }
}

/// Finite-horizon energy identity `[u0,u0] = -2 int_0^T Re[Lv,v] dt + [v(T),v(T)]`
/// along `v(t) = e^{tL} u0` inside the invariant subspace `m`.
///
/// `horizon = None` picks `max(10/|alpha|, 1)`. The integral is computed by
/// adaptive Gauss-Kronrod with absolute tolerance `quad_tol |u0|^2`.
pub fn energy_identity(op: &OperatorSpec, m: &Subspace, u0: &CVec, horizon: Option<f64>, quad_tol: f64) -> Result<EnergyReport> {
    let n = op.dim();
    if u0.len() != n || m.ambient_dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: u0.len() });
    }
    let scale = u0.norm_squared();
    let res = m.residual(u0);
    if res > 1e-8 * u0.norm().max(1.0) {
        return Err(Error::NotInSubspace(res));
    }
    let f = flow(op, m)?;
    let t_end = horizon.unwrap_or(f.horizon);
    if !(t_end > 0.0) {
        return Err(Error::InvalidParams(format!("horizon must be positive, got {t_end}")));
    }
    let v = m.basis();
    let coeff = v.adjoint() * u0;
    let sign = if f.reversed { -1.0 } else { 1.0 };
    // Re[Lv, v] = v^* Herm(JL) v, in the coordinates of the subspace
    let k = linalg::herm_part(&linalg::compress(&op.jl(), v)) * c(-2.0 * sign, 0.0);
    let g = m.indefinite_gram(&op.space);
    let m1 = linalg::compress(&f_grams(op)?.m1, v);

    let r = integrate(
        |t: f64| {
            let w = match expm_action(&f.a, t) {
                Ok(e) => e * &coeff,
                Err(_) => CVec::from_element(coeff.len(), c(f64::NAN, 0.0)),
            };
            CMat::from_row_slice(1, 2, &[linalg::quad_form(&k, &w), linalg::quad_form(&m1, &w)])
        },
        0.0,
        t_end,
        energy_options(quad_tol * scale.max(f64::MIN_POSITIVE)),
    );
    if !r.value.iter().all(|z| z.re.is_finite()) {
        return Err(Error::QuadratureFailure("energy integrand is not finite".into()));
    }
    if !r.converged {
        return Err(Error::QuadratureBudgetExceeded { estimate: r.error_estimate, evaluations: r.evaluations });
    }
    let vt = expm_action(&f.a, t_end)? * &coeff;
    let u0_sq = linalg::quad_form(op.space.j(), u0).re;
    let energy = r.value[(0, 0)].re;
    let boundary = linalg::quad_form(&g, &vt).re;
    Ok(EnergyReport {
        u0_indefinite_square: u0_sq,
        energy_integral: energy,
        boundary_term: boundary,
        residual: (u0_sq - energy - boundary).abs(),
        horizon: t_end,
        reversed: f.reversed,
        f1_integral: r.value[(0, 1)].re,
        quadrature_error: r.error_estimate,
        evaluations: r.evaluations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<(f64, f64)>>,
}

impl Trajectory {
    pub fn state(&self, k: usize) -> CVec {
        CVec::from_iterator(self.states[k].len(), self.states[k].iter().map(|&(re, im)| c(re, im)))
    }
}

/// Samples `u(t) = e^{tA} u0` at `steps` equally spaced times in `[0, T]`.
/// The backward problem `u' + Lu = 0` is `cauchy_evolve(-L, ..)`.
pub fn cauchy_evolve(a: &CMat, u0: &CVec, t_end: f64, steps: usize) -> Result<Trajectory> {
    if steps < 2 {
        return Err(Error::InvalidParams("cauchy_evolve needs at least two steps".into()));
    }
    if u0.len() != a.nrows() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: u0.len() });
    }
    let mut times = Vec::with_capacity(steps);
    let mut states = Vec::with_capacity(steps);
    for k in 0..steps {
        let t = if k == steps - 1 { t_end } else { t_end * k as f64 / (steps - 1) as f64 };
        let u = expm_action(a, t)? * u0;
        times.push(t);
        states.push(u.iter().map(|z| (z.re, z.im)).collect());
    }
    Ok(Trajectory { times, states })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyDefiniteness {
    /// `lambda_min` of the energy Gram on `M+`.
    pub delta_plus: f64,
    /// `-lambda_max` of the energy Gram on `M-`.
    pub delta_minus: f64,
    /// The same constants from `V^* J V` directly.
    pub gram_delta_plus: f64,
    pub gram_delta_minus: f64,
    /// Smallest `[u0,u0]/|u0|^2` (largest on `M-`, negated) over the sampled
    /// unit vectors, each through [`energy_identity`].
    pub sampled_plus: f64,
    pub sampled_minus: f64,
    pub max_residual: f64,
}

/// Energy Gram of a subspace: `int_0^T Phi^* K Phi dt + Phi(T)^* G Phi(T)`
/// with `Phi(t) = e^{tA}` the restricted flow. Equals `V^* J V` exactly.
fn energy_gram(op: &OperatorSpec, m: &Subspace, quad_tol: f64) -> Result<CMat> {
    let f = flow(op, m)?;
    let v = m.basis();
    let sign = if f.reversed { -1.0 } else { 1.0 };
    let k = linalg::herm_part(&linalg::compress(&op.jl(), v)) * c(-2.0 * sign, 0.0);
    let g = m.indefinite_gram(&op.space);
    let dim = v.ncols();
    let r = integrate(
        |t: f64| match expm_action(&f.a, t) {
            Ok(e) => e.adjoint() * &k * e,
            Err(_) => CMat::from_element(dim, dim, c(f64::NAN, 0.0)),
        },
        0.0,
        f.horizon,
        energy_options(quad_tol),
    );
    if !r.converged || !r.value.iter().all(|z| z.re.is_finite()) {
        return Err(Error::QuadratureBudgetExceeded { estimate: r.error_estimate, evaluations: r.evaluations });
    }
    let e = expm_action(&f.a, f.horizon)?;
    Ok(linalg::herm_part(&(r.value + e.adjoint() * g * e)))
}

/// Definiteness constants of `M+` and `M-` recovered through the energy
/// integrals rather than the Gram of the basis.
pub fn definiteness_from_energy(op: &OperatorSpec, d: &DichotomyResult, sample_count: usize) -> Result<EnergyDefiniteness> {
    let quad_tol = 1e-10;
    let mut out = EnergyDefiniteness {
        delta_plus: f64::INFINITY,
        delta_minus: f64::INFINITY,
        gram_delta_plus: f64::INFINITY,
        gram_delta_minus: f64::INFINITY,
        sampled_plus: f64::INFINITY,
        sampled_minus: f64::INFINITY,
        max_residual: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(sample_count as u64);
    for (m, plus) in [(&d.m_plus, true), (&d.m_minus, false)] {
        if m.dim() == 0 {
            continue;
        }
        let sgn = if plus { 1.0 } else { -1.0 };
        let ge = linalg::herm_eigenvalues(&energy_gram(op, m, quad_tol)?);
        let gg = linalg::herm_eigenvalues(&m.indefinite_gram(&op.space));
        let (energy, gram) = if plus { (ge[0], gg[0]) } else { (-ge[ge.len() - 1], -gg[gg.len() - 1]) };
        let mut sampled = f64::INFINITY;
        for _ in 0..sample_count {
            let x =
                CVec::from_fn(m.dim(), |_, _| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)));
            let u0 = m.basis() * x.normalize();
            let rep = energy_identity(op, m, &u0, None, quad_tol)?;
            out.max_residual = out.max_residual.max(rep.residual);
            sampled = sampled.min(sgn * (rep.energy_integral + rep.boundary_term));
        }
        if plus {
            (out.delta_plus, out.gram_delta_plus, out.sampled_plus) = (energy, gram, sampled);
        } else {
            (out.delta_minus, out.gram_delta_minus, out.sampled_minus) = (energy, gram, sampled);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dichotomy::schur_dichotomy;
    use crate::dissipativity::{generate, GenerateKind, GenerateParams};
    use crate::krein::KreinSpace;
    use crate::linalg::from_real_rows;
    use rand::Rng;

    fn op(l: CMat, p: usize, q: usize) -> OperatorSpec {
        OperatorSpec::new(l, KreinSpace::from_signature(p, q).unwrap(), "t").unwrap()
    }

    fn random_stable(n: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = CMat::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let alpha = linalg::spectral_abscissa(&linalg::eigenvalues(&g).unwrap());
        linalg::shifted(&g, c(alpha + 0.3, 0.0))
    }

    // classical RK4 on u' = Au with a fine fixed step
    fn rk4(a: &CMat, u0: &CVec, t: f64, steps: usize) -> CVec {
        let h = c(t / steps as f64, 0.0);
        let mut u = u0.clone();
        for _ in 0..steps {
            let k1 = a * &u;
            let k2 = a * (&u + &k1 * (h * 0.5));
            let k3 = a * (&u + &k2 * (h * 0.5));
            let k4 = a * (&u + &k3 * h);
            u += (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * (h / 6.0);
        }
        u
    }

    #[test]
    fn expm_closed_forms() {
        let e = expm_action(&(-linalg::eye(3)), 1.0).unwrap();
        assert!(linalg::max_abs(&(e - linalg::eye(3) * c((-1.0f64).exp(), 0.0))) < 1e-15);
        let nil = from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let e = expm_action(&nil, 1.0).unwrap();
        assert!(linalg::max_abs(&(e - from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]))) < 1e-15);
        let a = random_stable(5, 1);
        assert_eq!(expm_action(&a, 0.0).unwrap(), linalg::eye(5));
        // large norm goes through squaring
        let rot = from_real_rows(&[&[0.0, 40.0], &[-40.0, 0.0]]);
        let e = expm_action(&rot, 1.0).unwrap();
        let want = from_real_rows(&[&[40f64.cos(), 40f64.sin()], &[-(40f64.sin()), 40f64.cos()]]);
        assert!(linalg::max_abs(&(e - want)) < 1e-12);
    }

    #[test]
    fn expm_matches_integrator() {
        for seed in 0..4 {
            let a = random_stable(6, seed);
            let e = expm_action(&a, 1.5).unwrap();
            for j in 0..6 {
                let col = rk4(&a, &CVec::from_fn(6, |i, _| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) }), 1.5, 4000);
                assert!((e.column(j) - col).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn expm_refuses_overflow() {
        let a = linalg::diag_real(&[1.0]);
        assert!(matches!(expm_action(&a, 1e4), Err(Error::Overflow(_))));
        assert!(expm_action(&a, -1.0).is_err());
    }

    #[test]
    fn semigroup_law() {
        for seed in 0..5 {
            let a = random_stable(7, 10 + seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..5 {
                let (s, t) = (rng.random_range(0.0..3.0), rng.random_range(0.0..3.0));
                let lhs = expm_action(&a, s + t).unwrap();
                let es = expm_action(&a, s).unwrap();
                let et = expm_action(&a, t).unwrap();
                let k = linalg::cond2(&es).max(linalg::cond2(&et));
                assert!(linalg::max_abs(&(lhs - es * et)) <= 1e-10 * k);
            }
        }
    }

    #[test]
    fn scalar_bounds() {
        let tr = analytic_bounds(&linalg::diag_real(&[-1.0]), GridParams::default()).unwrap();
        assert!((tr.sup_bounds.0 - 1.0).abs() < 1e-12);
        assert!((tr.sup_bounds.1 - (-1.0f64).exp()).abs() < 1e-10);
        assert!(tr.time_grid.windows(2).all(|w| w[0] < w[1]));
        assert!(*tr.time_grid.last().unwrap() >= 10.0);
    }

    #[test]
    fn normal_stable_has_unit_bound() {
        let a = CMat::from_diagonal(&CVec::from_vec(vec![c(-0.5, 3.0), c(-0.5, -3.0), c(-2.0, 0.0)]));
        let tr = analytic_bounds(&a, GridParams::default()).unwrap();
        assert!((tr.sup_bounds.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transient_growth_against_dense_grid() {
        let a = from_real_rows(&[&[-1.0, 10.0], &[0.0, -1.0]]);
        let tr = analytic_bounds(&a, GridParams::default()).unwrap();
        // |e^{tA}| = e^{-t} |[[1, 10t], [0, 1]]|
        let dense = (1..=200_000)
            .map(|k| {
                let t = k as f64 * 1e-4;
                t.exp().recip() * linalg::norm2(&from_real_rows(&[&[1.0, 10.0 * t], &[0.0, 1.0]]))
            })
            .fold(0.0, f64::max);
        assert!(tr.sup_bounds.0 > 1.0);
        assert!((tr.sup_bounds.0 - dense).abs() < 1e-6 * dense);
        assert!(tr.sup_bounds.1.is_finite());
    }

    #[test]
    fn unstable_is_refused() {
        assert!(matches!(analytic_bounds(&linalg::diag_real(&[-1.0, 0.0]), GridParams::default()), Err(Error::NotStable(_))));
    }

    #[test]
    fn diag_energy_closed_form() {
        let o = op(linalg::diag_real(&[-1.0, 1.0]), 1, 1);
        let m = Subspace::new(CMat::from_column_slice(2, 1, &[c(1.0, 0.0), c(0.0, 0.0)])).unwrap();
        let u0 = CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let r = energy_identity(&o, &m, &u0, Some(10.0), 1e-12).unwrap();
        assert_eq!(r.u0_indefinite_square, 1.0);
        // -2 int_0^10 (-e^{-2t}) dt = 1 - e^{-20}
        assert!((r.energy_integral - (1.0 - (-20.0f64).exp())).abs() < 1e-10);
        assert!(r.residual <= 1e-10);
        assert!(!r.reversed);
        assert!(r.boundary_sign_ok(0.0));
    }

    #[test]
    fn coupled_example_gives_point_eight() {
        let o = op(from_real_rows(&[&[-1.0, 0.6], &[-0.6, 1.0]]), 1, 1);
        let d = schur_dichotomy(&o, 1e-10).unwrap();
        let u0 = d.m_plus.basis().column(0).into_owned();
        let r = energy_identity(&o, &d.m_plus, &u0, Some(60.0), 1e-9).unwrap();
        assert!((r.energy_integral + r.boundary_term - 0.8).abs() < 1e-8);
        assert!((r.energy_integral - 0.8).abs() < 1e-8);
        let e = definiteness_from_energy(&o, &d, 3).unwrap();
        assert!((e.delta_plus - 0.8).abs() < 1e-8);
        assert!((e.gram_delta_plus - 0.8).abs() < 1e-8);
        assert!((e.delta_minus - 0.8).abs() < 1e-8);
    }

    #[test]
    fn minus_side_runs_backwards() {
        let o = op(linalg::diag_real(&[-1.0, 1.0]), 1, 1);
        let d = schur_dichotomy(&o, 1e-10).unwrap();
        let u0 = d.m_minus.basis().column(0) * c(2.0, 0.0);
        let r = energy_identity(&o, &d.m_minus, &u0, None, 1e-12).unwrap();
        assert!(r.reversed);
        assert!((r.u0_indefinite_square + 4.0).abs() < 1e-14);
        assert!(r.residual <= 1e-11);
        assert!(r.boundary_sign_ok(0.0));
        // the discarded boundary term is nonpositive, so the integral bounds [u0, u0] from above
        assert!(r.energy_integral >= r.u0_indefinite_square);
        // v(t) = e^{-t} u0 on the minus side
        let tr = cauchy_evolve(&(-linalg::diag_real(&[1.0])), &CVec::from_vec(vec![c(1.0, 0.0)]), 2.0, 5).unwrap();
        for (k, t) in tr.times.iter().enumerate() {
            assert!((tr.state(k)[0].re - (-t).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn trajectory_endpoint_and_validation() {
        let a = random_stable(4, 3);
        let u0 = CVec::from_fn(4, |i, _| c(i as f64, 1.0));
        let tr = cauchy_evolve(&a, &u0, 2.5, 11).unwrap();
        assert_eq!(tr.times[10], 2.5);
        let want = expm_action(&a, 2.5).unwrap() * &u0;
        assert!((tr.state(10) - &want).norm() <= 1e-12 * want.norm().max(1.0));
        assert!(cauchy_evolve(&a, &u0, 1.0, 1).is_err());
    }

    #[test]
    fn energy_derivative_is_second_order() {
        // d/dt [v, v] = 2 Re[Lv, v]
        let gp = GenerateParams::new(GenerateKind::RandomJDissipative, (3, 2), 7);
        let o = generate(&gp).unwrap();
        let d = schur_dichotomy(&o, o.default_tol()).unwrap();
        let a = d.restriction(&o, true);
        let v = d.m_plus.basis();
        let x0 = CVec::from_fn(a.nrows(), |i, _| c(1.0 + i as f64, -0.5));
        let bracket = |t: f64| {
            let w = v * (expm_action(&a, t).unwrap() * &x0);
            linalg::quad_form(o.space.j(), &w).re
        };
        let t0 = 0.7;
        let w0 = v * (expm_action(&a, t0).unwrap() * &x0);
        let exact = 2.0 * linalg::quad_form(&linalg::herm_part(&o.jl()), &w0).re;
        let errs: Vec<f64> =
            [1e-1, 1e-2, 1e-3].iter().map(|&h| ((bracket(t0 + h) - bracket(t0 - h)) / (2.0 * h) - exact).abs()).collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log10();
            assert!((order - 2.0).abs() < 0.2, "order {order}");
        }
    }

    #[test]
    fn uniform_generator_routes_agree() {
        for seed in 0..4 {
            let gp = GenerateParams::new(GenerateKind::Uniform { delta: 0.2 }, (3, 3), seed);
            let o = generate(&gp).unwrap();
            let d = schur_dichotomy(&o, o.default_tol()).unwrap();
            let e = definiteness_from_energy(&o, &d, 2).unwrap();
            assert!((e.delta_plus - e.gram_delta_plus).abs() < 1e-6);
            assert!((e.delta_minus - e.gram_delta_minus).abs() < 1e-6);
            assert!(e.sampled_plus >= e.delta_plus - 1e-8);
            assert!(e.max_residual < 1e-8);
        }
    }

    #[test]
    fn uniform_energy_dominates_f1_norm() {
        let gp = GenerateParams::new(GenerateKind::Uniform { delta: 0.2 }, (2, 2), 1);
        let o = generate(&gp).unwrap();
        let delta0 = crate::dissipativity::classify(&o).delta_uniform;
        let d = schur_dichotomy(&o, o.default_tol()).unwrap();
        let u0 = d.m_plus.basis().column(0).into_owned();
        let r = energy_identity(&o, &d.m_plus, &u0, None, 1e-10).unwrap();
        assert!(delta0 > 0.0);
        // -Herm(JL) >= delta0 gives -Herm(JL) >= delta0 / (1 + delta0) (I - Herm(JL))
        assert!(r.energy_integral >= 2.0 * delta0 / (1.0 + delta0) * r.f1_integral - 1e-9);
    }
}
