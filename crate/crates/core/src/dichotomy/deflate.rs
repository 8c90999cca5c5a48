use num_complex::Complex64;

use crate::dissipativity::OperatorSpec;
use crate::error::{Error, Result};
use crate::krein::KreinSpace;
use crate::linalg::{self, CMat, CVec};

/// Result of removing the eigenvalues on (or within `tol` of) the imaginary axis.
#[derive(Debug, Clone)]
pub struct Deflation {
    /// `L` on the complementary invariant subspace, in a basis where the
    /// induced fundamental symmetry is `diag(I, -I)`.
    pub op: OperatorSpec,
    /// Riesz projection onto the removed spectral subspace.
    pub axis_projector: CMat,
    pub rank: usize,
    pub removed: Vec<Complex64>,
    /// Columns span the complement; `embedding^* J embedding = diag(I, -I)`.
    pub embedding: CMat,
    /// Number of circle nodes used per cluster.
    pub nodes: Vec<usize>,
}

/// Riesz projection `(1/2 pi i) \oint (z - L)^{-1} dz` over a circle by the
/// periodic trapezoid rule, doubling nodes until consecutive results agree.
fn circle_projector(l: &CMat, center: Complex64, radius: f64) -> Result<(CMat, usize)> {
    let n = l.nrows();
    let eval = |m: usize| -> Result<CMat> {
        let mut acc = CMat::zeros(n, n);
        for k in 0..m {
            let e = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / m as f64);
            let z = center + e * radius;
            let r = linalg::inverse(&(linalg::eye(n) * z - l))?;
            // dz / (2 pi i) = radius e dth / (2 pi)
            acc += r * (e * radius / m as f64);
        }
        Ok(acc)
    };
    let mut m = 16;
    let mut prev = eval(m)?;
    loop {
        m *= 2;
        let next = eval(m)?;
        let change = linalg::norm2(&(&next - &prev));
        if change <= 1e-12 * linalg::norm2(&next).max(1.0) {
            return Ok((next, m));
        }
        if m >= 8192 {
            return Err(Error::QuadratureBudgetExceeded { estimate: change, evaluations: m });
        }
        prev = next;
    }
}

/// Removes the spectrum within `tol` of the imaginary axis.
///
/// Eigenvalues that agree to a few ulps of `max(1, |L|)` form one cluster
/// (this keeps an exactly represented Jordan block together); distinct
/// clusters closer than `10 tol` to each other or to the rest of the spectrum
/// cannot be separated and give `ClusterTooClose`.
pub fn riesz_deflate(op: &OperatorSpec, tol: f64) -> Result<Deflation> {
    let n = op.dim();
    let scale = op.norm().max(1.0);
    let eigs = linalg::eigenvalues(&op.l)?;
    let merge = 4.0 * f64::EPSILON * scale;

    let mut clusters: Vec<Vec<Complex64>> = Vec::new();
    for &z in eigs.iter().filter(|z| z.re.abs() <= tol) {
        match clusters.iter_mut().find(|cl| (cl[0] - z).norm() <= merge) {
            Some(cl) => cl.push(z),
            None => clusters.push(vec![z]),
        }
    }
    let mut projector = CMat::zeros(n, n);
    let mut removed = Vec::new();
    let mut nodes = Vec::new();
    for cl in &clusters {
        let center = cl.iter().sum::<Complex64>() / cl.len() as f64;
        let gap = eigs.iter().filter(|z| (**z - cl[0]).norm() > merge).map(|z| (z - center).norm()).fold(f64::INFINITY, f64::min);
        if gap < 10.0 * tol {
            return Err(Error::ClusterTooClose { gap });
        }
        let radius = if gap.is_finite() { 0.5 * gap } else { scale };
        let (p, m) = circle_projector(&op.l, center, radius)?;
        projector += p;
        removed.extend(cl.iter().copied());
        nodes.push(m);
    }
    let rank = projector.trace().re.round().max(0.0) as usize;
    if rank != removed.len() {
        return Err(Error::InvariantViolation(format!(
            "Riesz projection has trace {:.6} for {} removed eigenvalues",
            projector.trace().re,
            removed.len()
        )));
    }

    let complement = linalg::eye(n) - &projector;
    let w = if rank == 0 { linalg::eye(n) } else { linalg::projector_range(&complement) };
    if w.ncols() != n - rank {
        return Err(Error::InvariantViolation("complement dimension mismatch".into()));
    }
    let g = linalg::herm_part(&(w.adjoint() * op.space.j() * &w));
    let eig = linalg::herm_eig(&g);
    let m = w.ncols();
    // descending order puts the positive part first
    let order: Vec<usize> = (0..m).rev().collect();
    let gmin = eig.values.iter().fold(f64::INFINITY, |a, &v| a.min(v.abs()));
    if m > 0 && gmin <= tol.max(1e-12) {
        return Err(Error::DegenerateComplement);
    }
    let u = CMat::from_fn(m, m, |i, k| eig.vectors[(i, order[k])]);
    let gv: Vec<f64> = order.iter().map(|&k| eig.values[k]).collect();
    let scale_down = CMat::from_diagonal(&CVec::from_iterator(m, gv.iter().map(|v| linalg::c(v.abs().powf(-0.5), 0.0))));
    let scale_up = CMat::from_diagonal(&CVec::from_iterator(m, gv.iter().map(|v| linalg::c(v.abs().sqrt(), 0.0))));
    let embedding = &w * &u * &scale_down;
    let l_small = &scale_up * u.adjoint() * linalg::compress(&op.l, &w) * &u * &scale_down;
    let p = gv.iter().filter(|&&v| v > 0.0).count();
    let space = KreinSpace::from_signature(p, m - p)?;
    let deflated = OperatorSpec::new(l_small, space, format!("{} (deflated)", op.label))?;
    Ok(Deflation { op: deflated, axis_projector: projector, rank, removed, embedding, nodes })
}
