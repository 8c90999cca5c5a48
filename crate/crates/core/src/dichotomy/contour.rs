use std::cell::Cell;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{assemble, check_axis_gap, DichotomyResult, Method};
use crate::dissipativity::OperatorSpec;
use crate::error::{Error, Result};
use crate::krein::KreinSpace;
use crate::linalg::{self, CMat};
use crate::quadrature::{integrate, QuadOptions};

/// Closed boundary of `{|arg z - c| < pi/2 - delta, inner < |z| < truncation}`
/// for `c = 0` (`S+`) and `c = pi` (`S-`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorContour {
    pub half_angle_delta: f64,
    pub inner_radius: f64,
    pub truncation_radius: f64,
    /// Initial node count on each of the four segments; panels are bisected
    /// adaptively from there.
    pub nodes_per_segment: usize,
    /// Absolute error target for each projection.
    pub tol: f64,
    /// Total resolvent evaluations allowed for both sectors.
    pub max_nodes: usize,
}

impl SectorContour {
    /// Defaults derived from the spectrum of `L`: `delta` is half the smallest
    /// angle between `sigma(-L)` and the imaginary axis, the inner radius half
    /// the smallest eigenvalue modulus, and the truncation radius `64 |L|`.
    pub fn for_operator(op: &OperatorSpec) -> Result<SectorContour> {
        let eigs = linalg::eigenvalues(&op.l)?;
        check_axis_gap(&eigs, op.default_tol())?;
        let angle = eigs.iter().map(|z| z.re.abs().atan2(z.im.abs())).fold(FRAC_PI_2, f64::min);
        let rmin = eigs.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        let norm = op.norm();
        Ok(SectorContour {
            half_angle_delta: 0.5 * angle,
            inner_radius: if rmin.is_finite() { 0.5 * rmin } else { 1.0 },
            truncation_radius: 64.0 * norm.max(1.0),
            nodes_per_segment: 30,
            tol: 1e-10 * norm.max(1.0),
            max_nodes: 60_000,
        })
    }

    pub fn with_nodes(mut self, nodes_per_segment: usize) -> SectorContour {
        self.nodes_per_segment = nodes_per_segment.max(1);
        self
    }

    fn validate(&self) -> Result<()> {
        let d = self.half_angle_delta;
        if !(d > 0.0 && d < FRAC_PI_2) {
            return Err(Error::InvalidParams(format!("sector half-angle delta {d} outside (0, pi/2)")));
        }
        if !(self.inner_radius > 0.0 && self.inner_radius < self.truncation_radius) {
            return Err(Error::InvalidParams("contour needs 0 < inner radius < truncation radius".into()));
        }
        if self.nodes_per_segment == 0 || !(self.tol > 0.0) {
            return Err(Error::InvalidParams("contour needs positive nodes and tolerance".into()));
        }
        Ok(())
    }

    /// Is `z` strictly inside the sector centred on direction `center`?
    fn encloses(&self, center: f64, z: Complex64) -> bool {
        let r = z.norm();
        let phi = FRAC_PI_2 - self.half_angle_delta;
        let arg = (z * Complex64::from_polar(1.0, -center)).arg();
        r > self.inner_radius && r < self.truncation_radius && arg.abs() < phi
    }

    /// Distance from `z` to the contour boundary.
    fn distance(&self, center: f64, z: Complex64) -> f64 {
        let phi = FRAC_PI_2 - self.half_angle_delta;
        let w = z * Complex64::from_polar(1.0, -center);
        let seg = |a: Complex64, b: Complex64| {
            let d = b - a;
            let t = ((w - a) * d.conj()).re / d.norm_sqr();
            (w - (a + d * t.clamp(0.0, 1.0))).norm()
        };
        let ray = |th: f64| seg(Complex64::from_polar(self.inner_radius, th), Complex64::from_polar(self.truncation_radius, th));
        let arc = |rad: f64| {
            let a = w.arg().clamp(-phi, phi);
            (w - Complex64::from_polar(rad, a)).norm()
        };
        ray(phi).min(ray(-phi)).min(arc(self.inner_radius)).min(arc(self.truncation_radius))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourReport {
    pub contour: SectorContour,
    /// Sum of the Gauss-Kronrod error estimates over all segments.
    pub quadrature_error: f64,
    /// `|L| / (R - |L|)` times the outer-arc fraction: the size of the outer
    /// arc contribution.
    pub truncation_bound: f64,
    /// Largest sampled `|L (L + z)^{-1}|` on the inner arcs times their angular fraction.
    pub inner_arc_bound: f64,
    pub evaluations: usize,
    /// Smallest certified `sigma_min(L + z)` over the nodes.
    pub min_resolvent_distance: f64,
}

struct SectorIntegral {
    value: CMat,
    error: f64,
    evaluations: usize,
    inner_sup: f64,
}

/// `-(1/2 pi i)` times the integral of `H (H + z)^{-1} / z` over the
/// positively oriented boundary of the sector centred on `center`, for `H`
/// upper Hessenberg.
fn sector_projection(
    hess: &CMat,
    c: &SectorContour,
    center: f64,
    budget: usize,
    hit_tol: f64,
    min_dist: &Cell<f64>,
) -> Result<SectorIntegral> {
    let n = hess.nrows();
    let phi = FRAC_PI_2 - c.half_angle_delta;
    let eye = linalg::eye(n);
    // h(z) = H (H + z)^{-1} = I - z (H + z)^{-1}
    let h = |z: Complex64| -> CMat {
        match linalg::hessenberg_shifted_inverse(hess, z) {
            Some(inv) => {
                let fro = inv.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                let dist = 1.0 / fro;
                if dist < min_dist.get() {
                    min_dist.set(dist);
                }
                &eye - inv * z
            }
            None => {
                min_dist.set(0.0);
                CMat::zeros(n, n)
            }
        }
    };
    let panels = c.nodes_per_segment.div_ceil(15).max(1);
    let seg_tol = c.tol / 4.0;
    let opts =
        |remaining: usize| QuadOptions { abs_tol: seg_tol, rel_tol: 0.0, initial_panels: panels, max_evaluations: remaining };
    let (lr, lrr) = (c.inner_radius.ln(), c.truncation_radius.ln());
    let lo_th = center - phi;
    let hi_th = center + phi;

    let mut total = CMat::zeros(n, n);
    let mut error = 0.0;
    let mut evaluations = 0;
    let inner_sup = Cell::new(0.0f64);

    // rays: z = e^u e^{i th}, dz = z du, integrand h du
    // arcs: z = r e^{i th}, dz = i z dth, integrand i h dth
    let segments: [(u8, f64); 4] = [(0, 1.0), (1, 1.0), (2, -1.0), (3, -1.0)];
    for (kind, sign) in segments {
        let remaining = budget.saturating_sub(evaluations);
        if remaining < 15 * panels {
            return Err(Error::QuadratureBudgetExceeded { estimate: f64::INFINITY, evaluations });
        }
        let r = match kind {
            // outward ray at center - phi
            0 => integrate(|u: f64| h(Complex64::from_polar(u.exp(), lo_th)), lr, lrr, opts(remaining)),
            // outer arc, counter-clockwise
            1 => {
                integrate(|th: f64| h(Complex64::from_polar(c.truncation_radius, th)) * linalg::I, lo_th, hi_th, opts(remaining))
            }
            // inward ray at center + phi
            2 => integrate(|u: f64| h(Complex64::from_polar(u.exp(), hi_th)), lr, lrr, opts(remaining)),
            // inner arc, clockwise
            _ => integrate(
                |th: f64| {
                    let v = h(Complex64::from_polar(c.inner_radius, th));
                    inner_sup.set(inner_sup.get().max(linalg::norm2(&v)));
                    v * linalg::I
                },
                lo_th,
                hi_th,
                opts(remaining),
            ),
        };
        evaluations += r.evaluations;
        if min_dist.get() <= hit_tol {
            return Err(Error::ContourHitsSpectrum { distance: min_dist.get() });
        }
        if !r.converged {
            return Err(Error::QuadratureBudgetExceeded { estimate: r.error_estimate, evaluations });
        }
        total += r.value * Complex64::new(sign, 0.0);
        error += r.error_estimate;
    }
    // P = -(1/2 pi i) * integral
    let value = total * (Complex64::new(0.0, 1.0) / (2.0 * PI));
    Ok(SectorIntegral { value, error: error / (2.0 * PI), evaluations, inner_sup: inner_sup.get() })
}

fn orientation_self_test() -> Result<()> {
    static CHECK: OnceLock<bool> = OnceLock::new();
    let ok = *CHECK.get_or_init(|| {
        let space = KreinSpace::from_signature(1, 1).expect("canonical signature");
        let op = OperatorSpec::new(linalg::diag_real(&[-1.0, 1.0]), space, "orientation").expect("2x2 operator");
        let c = SectorContour::for_operator(&op).expect("diagonal contour");
        match projections_unchecked(&op, &c) {
            Ok((pp, _, _)) => linalg::max_abs(&(pp - linalg::diag_real(&[1.0, 0.0]))) < 1e-8,
            Err(_) => false,
        }
    });
    if ok {
        Ok(())
    } else {
        Err(Error::InvariantViolation("contour orientation self-test against diag(-1, 1) failed".into()))
    }
}

fn projections_unchecked(op: &OperatorSpec, c: &SectorContour) -> Result<(CMat, CMat, ContourReport)> {
    c.validate()?;
    let eigs = linalg::eigenvalues(&op.l)?;
    check_axis_gap(&eigs, op.default_tol())?;
    let hit_tol = op.default_tol();
    // residue accounting: eigenvalue mu feeds P+ through the pole z = -mu
    for mu in &eigs {
        let z = -mu;
        let inside = if mu.re < 0.0 { c.encloses(0.0, z) } else { c.encloses(PI, z) };
        if !inside {
            return Err(Error::InvalidParams(format!("contour does not enclose the pole at {:.6e}{:+.6e}i", z.re, z.im)));
        }
        let center = if mu.re < 0.0 { 0.0 } else { PI };
        let dist = c.distance(center, z);
        if dist <= hit_tol {
            return Err(Error::ContourHitsSpectrum { distance: dist });
        }
    }
    let min_dist = Cell::new(f64::INFINITY);
    // a unitary similarity keeps every resolvent norm and makes each node O(n^3 / 6)
    let (u, hess) = linalg::hessenberg(&op.l);
    let plus = sector_projection(&hess, c, 0.0, c.max_nodes, hit_tol, &min_dist)?;
    let minus = sector_projection(&hess, c, PI, c.max_nodes.saturating_sub(plus.evaluations), hit_tol, &min_dist)?;
    let norm = op.norm();
    let phi = FRAC_PI_2 - c.half_angle_delta;
    let frac = phi / PI;
    let report = ContourReport {
        contour: *c,
        quadrature_error: plus.error + minus.error,
        truncation_bound: frac * norm / (c.truncation_radius - norm).max(f64::MIN_POSITIVE),
        inner_arc_bound: frac * plus.inner_sup.max(minus.inner_sup),
        evaluations: plus.evaluations + minus.evaluations,
        min_resolvent_distance: min_dist.get(),
    };
    let back = |m: CMat| &u * m * u.adjoint();
    Ok((back(plus.value), back(minus.value), report))
}

/// `P+` and `P-` by quadrature over the boundaries of `S+` and `S-`.
pub fn contour_projections(op: &OperatorSpec, c: &SectorContour) -> Result<DichotomyResult> {
    orientation_self_test()?;
    let (pp, pm, report) = projections_unchecked(op, c)?;
    let mut r = assemble(op, pp, pm, Method::Contour)?;
    r.contour = Some(report);
    Ok(r)
}
