//! Dense complex linear-algebra helpers shared by the analysis modules.
//!
//! Everything works on `DMatrix<Complex64>`; Hermitian inputs are symmetrised
//! before eigendecomposition so that round-off never produces complex
//! eigenvalues.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Real matrix (row-major rows) lifted to complex.
pub fn from_real_rows(rows: &[&[f64]]) -> CMat {
    let n = rows.len();
    let m = if n == 0 { 0 } else { rows[0].len() };
    CMat::from_fn(n, m, |i, j| c(rows[i][j], 0.0))
}

pub fn diag_real(d: &[f64]) -> CMat {
    let n = d.len();
    CMat::from_fn(n, n, |i, j| if i == j { c(d[i], 0.0) } else { ZERO })
}

pub fn herm_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

pub fn skew_part(a: &CMat) -> CMat {
    (a - a.adjoint()).scale(0.5)
}

/// Max-abs deviation from Hermitian symmetry.
pub fn hermitian_defect(a: &CMat) -> f64 {
    max_abs(&(a - a.adjoint()))
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Spectral norm.
pub fn norm2(a: &CMat) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Smallest singular value of a square matrix.
pub fn sigma_min(a: &CMat) -> f64 {
    singular_values(a).last().copied().unwrap_or(f64::INFINITY)
}

pub fn cond2(a: &CMat) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

pub fn herm_eig(a: &CMat) -> HermEig {
    let n = a.nrows();
    if n == 0 {
        return HermEig { values: Vec::new(), vectors: CMat::zeros(0, 0) };
    }
    let h = herm_part(a);
    let eig = nalgebra::SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    HermEig { values, vectors }
}

pub fn herm_eigenvalues(a: &CMat) -> Vec<f64> {
    herm_eig(a).values
}

impl HermEig {
    /// Rebuilds `V f(Λ) V^*`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for k in 0..n {
            let w = f(self.values[k]);
            scaled.column_mut(k).scale_mut(w);
        }
        let out = scaled * self.vectors.adjoint();
        herm_part(&out)
    }
}

/// Checks positive definiteness and returns the eigendecomposition.
pub fn require_pd(a: &CMat, what: &str) -> Result<HermEig> {
    let e = herm_eig(a);
    let lmax = e.values.last().copied().unwrap_or(0.0).abs().max(f64::MIN_POSITIVE);
    match e.values.first() {
        Some(&lmin) if lmin <= 1e-14 * lmax || !lmin.is_finite() => {
            Err(Error::NotPositiveDefinite { what: what.to_string(), lambda_min: lmin })
        }
        _ => Ok(e),
    }
}

/// Eigenvalue clipping floor for matrix roots, relative to the largest eigenvalue.
pub const CLIP_REL: f64 = 1e-14;

fn clip(lmax: f64) -> impl Fn(f64) -> f64 {
    let floor = CLIP_REL * lmax.abs().max(f64::MIN_POSITIVE);
    move |x| x.max(floor)
}

pub fn sqrtm_pd(a: &CMat) -> CMat {
    let e = herm_eig(a);
    let cl = clip(e.values.last().copied().unwrap_or(1.0));
    e.apply(|x| cl(x).sqrt())
}

pub fn inv_sqrtm_pd(a: &CMat) -> CMat {
    let e = herm_eig(a);
    let cl = clip(e.values.last().copied().unwrap_or(1.0));
    e.apply(|x| 1.0 / cl(x).sqrt())
}

pub fn powm_pd(a: &CMat, p: f64) -> CMat {
    let e = herm_eig(a);
    let cl = clip(e.values.last().copied().unwrap_or(1.0));
    e.apply(|x| cl(x).powf(p))
}

pub fn inverse(a: &CMat) -> Result<CMat> {
    a.clone().lu().try_inverse().filter(|m| m.iter().all(|z| z.re.is_finite() && z.im.is_finite())).ok_or(Error::Singular)
}

/// Inverse of a Hermitian positive-definite matrix, re-symmetrised.
pub fn inverse_pd(a: &CMat) -> Result<CMat> {
    Ok(herm_part(&inverse(a)?))
}

pub fn shifted(a: &CMat, z: Complex64) -> CMat {
    let mut m = a.clone();
    for i in 0..m.nrows() {
        m[(i, i)] -= z;
    }
    m
}

/// Hilbert inner product `(x, y) = y^* x`, linear in `x`.
pub fn inner(x: &CVec, y: &CVec) -> Complex64 {
    y.dotc(x)
}

/// Quadratic form `x^* A x`.
pub fn quad_form(a: &CMat, x: &CVec) -> Complex64 {
    x.dotc(&(a * x))
}

/// Orthonormal basis of the column span, rank decided by `rel_tol * sigma_max`.
///
/// The rank comes from the singular values; the basis from a column-pivoted
/// QR factorisation (the complex SVD vectors are unreliable for rank-deficient
/// input).
pub fn orth(a: &CMat, rel_tol: f64) -> CMat {
    let n = a.nrows();
    if a.ncols() == 0 || n == 0 {
        return CMat::zeros(n, 0);
    }
    let s = singular_values(a);
    let smax = s.first().copied().unwrap_or(0.0);
    let r = s.iter().filter(|&&x| x > rel_tol * smax && x > 0.0).count();
    leading_range(a, r, false)
}

/// Orthonormal basis of the range of a projector (singular values near 1 or above).
pub fn projector_range(p: &CMat) -> CMat {
    let n = p.nrows();
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let r = singular_values(p).iter().filter(|&&x| x > 0.5).count();
    leading_range(p, r, true)
}

fn leading_range(a: &CMat, r: usize, refine: bool) -> CMat {
    let n = a.nrows();
    if r == 0 {
        return CMat::zeros(n, 0);
    }
    let q = a.clone().col_piv_qr().q();
    let mut v = q.columns(0, r).into_owned();
    // one subspace iteration step sharpens the basis across a wide gap
    let av = a * (a.adjoint() * &v);
    if refine && av.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        v = av.qr().q().columns(0, r).into_owned();
    }
    v
}

/// Complex Schur form `A = Q T Q^*` with `T` upper triangular.
pub struct Schur {
    pub q: CMat,
    pub t: CMat,
}

impl Schur {
    pub fn new(a: &CMat) -> Result<Schur> {
        let n = a.nrows();
        if n == 0 {
            return Ok(Schur { q: CMat::zeros(0, 0), t: CMat::zeros(0, 0) });
        }
        let s = nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, 100 * n.max(10))
            .ok_or(Error::DecompositionFailed("complex Schur iteration did not converge"))?;
        let (mut q, mut t) = s.unpack();
        triangularize(&mut q, &mut t);
        Ok(Schur { q, t })
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        (0..self.t.nrows()).map(|i| self.t[(i, i)]).collect()
    }

    /// Moves every eigenvalue satisfying `select` to the leading block,
    /// preserving relative order otherwise. Returns the leading block size.
    pub fn reorder(&mut self, select: impl Fn(Complex64) -> bool) -> usize {
        let n = self.t.nrows();
        let mut placed = 0;
        for k in 0..n {
            if select(self.t[(k, k)]) {
                let mut j = k;
                while j > placed {
                    swap_adjacent(&mut self.q, &mut self.t, j - 1);
                    j -= 1;
                }
                placed += 1;
            }
        }
        placed
    }
}

/// Eigenvalues of a general square matrix.
pub fn eigenvalues(a: &CMat) -> Result<Vec<Complex64>> {
    Ok(Schur::new(a)?.eigenvalues())
}

/// Unitary rotation with first column `(a, b) / |(a, b)|`.
fn rotation(a: Complex64, b: Complex64) -> Option<[[Complex64; 2]; 2]> {
    let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if r == 0.0 || !r.is_finite() {
        return None;
    }
    let (v1, v2) = (a / r, b / r);
    Some([[v1, -v2.conj()], [v2, v1.conj()]])
}

/// Applies `T <- G^* T G`, `Q <- Q G` for a rotation acting on indices `k, k+1`.
fn apply_rotation(q: &mut CMat, t: &mut CMat, k: usize, g: [[Complex64; 2]; 2]) {
    let n = t.nrows();
    for j in 0..n {
        let (x, y) = (t[(k, j)], t[(k + 1, j)]);
        t[(k, j)] = g[0][0].conj() * x + g[1][0].conj() * y;
        t[(k + 1, j)] = g[0][1].conj() * x + g[1][1].conj() * y;
    }
    for i in 0..n {
        let (x, y) = (t[(i, k)], t[(i, k + 1)]);
        t[(i, k)] = x * g[0][0] + y * g[1][0];
        t[(i, k + 1)] = x * g[0][1] + y * g[1][1];
    }
    for i in 0..q.nrows() {
        let (x, y) = (q[(i, k)], q[(i, k + 1)]);
        q[(i, k)] = x * g[0][0] + y * g[1][0];
        q[(i, k + 1)] = x * g[0][1] + y * g[1][1];
    }
}

/// Swaps the diagonal entries `k` and `k+1` of an upper triangular `T`.
fn swap_adjacent(q: &mut CMat, t: &mut CMat, k: usize) {
    let a = t[(k, k)];
    let b = t[(k + 1, k + 1)];
    let off = t[(k, k + 1)];
    // eigenvector of the 2x2 block for eigenvalue b
    if let Some(g) = rotation(off, b - a) {
        apply_rotation(q, t, k, g);
        t[(k + 1, k)] = ZERO;
        t[(k, k)] = b;
        t[(k + 1, k + 1)] = a;
    }
}

/// Removes any residual 2x2 bumps left on the subdiagonal.
fn triangularize(q: &mut CMat, t: &mut CMat) {
    let n = t.nrows();
    let scale = max_abs(t).max(f64::MIN_POSITIVE);
    for k in 0..n.saturating_sub(1) {
        let sub = t[(k + 1, k)];
        if sub.norm() <= f64::EPSILON * scale {
            t[(k + 1, k)] = ZERO;
            continue;
        }
        let (a, b, cc, d) = (t[(k, k)], t[(k, k + 1)], sub, t[(k + 1, k + 1)]);
        let tr = a + d;
        let det = a * d - b * cc;
        let disc = (tr * tr - det * 4.0).sqrt();
        let l1 = (tr + disc) * 0.5;
        // eigenvector (b, l1 - a) or (l1 - d, c)
        let (x, y) = if (l1 - a).norm() + b.norm() > (l1 - d).norm() + cc.norm() { (b, l1 - a) } else { (l1 - d, cc) };
        if let Some(g) = rotation(x, y) {
            apply_rotation(q, t, k, g);
        }
        t[(k + 1, k)] = ZERO;
    }
    for i in 0..n {
        for j in 0..i {
            t[(i, j)] = ZERO;
        }
    }
}

/// Solves `A Y - Y B = C` for upper triangular `A` (m x m) and `B` (k x k).
pub fn solve_triangular_sylvester(a: &CMat, b: &CMat, c: &CMat) -> Result<CMat> {
    let (m, k) = (a.nrows(), b.nrows());
    let mut y = CMat::zeros(m, k);
    let scale = max_abs(a).max(max_abs(b)).max(1.0);
    for j in 0..k {
        for i in (0..m).rev() {
            let mut rhs = c[(i, j)];
            for p in i + 1..m {
                rhs -= a[(i, p)] * y[(p, j)];
            }
            for p in 0..j {
                rhs += y[(i, p)] * b[(p, j)];
            }
            let d = a[(i, i)] - b[(j, j)];
            if d.norm() <= 1e-14 * scale {
                return Err(Error::SylvesterIllConditioned { separation: d.norm() });
            }
            y[(i, j)] = rhs / d;
        }
    }
    Ok(y)
}

/// Solves the Lyapunov equation `A^* X + X A = -Q` for stable `A`.
pub fn solve_lyapunov(a: &CMat, qrhs: &CMat) -> Result<CMat> {
    let n = a.nrows();
    let s = Schur::new(a)?;
    let t = &s.t;
    let c = -(s.q.adjoint() * qrhs * &s.q);
    // T^* Y + Y T = C, T upper triangular
    let mut y = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut rhs = c[(i, j)];
            for p in 0..i {
                rhs -= t[(p, i)].conj() * y[(p, j)];
            }
            for p in 0..j {
                rhs -= y[(i, p)] * t[(p, j)];
            }
            let d = t[(i, i)].conj() + t[(j, j)];
            if d.norm() == 0.0 {
                return Err(Error::Singular);
            }
            y[(i, j)] = rhs / d;
        }
    }
    Ok(herm_part(&(&s.q * y * s.q.adjoint())))
}

/// Unitary Hessenberg reduction `A = U H U^*`.
pub fn hessenberg(a: &CMat) -> (CMat, CMat) {
    if a.nrows() <= 2 {
        return (eye(a.nrows()), a.clone());
    }
    let h = a.clone().hessenberg();
    let (u, mut hm) = h.unpack();
    let n = hm.nrows();
    for j in 0..n {
        for i in j + 2..n {
            hm[(i, j)] = ZERO;
        }
    }
    (u, hm)
}

/// `(H + z I)^{-1}` for upper Hessenberg `H` by Gaussian elimination with
/// adjacent-row pivoting. `None` if a pivot vanishes.
pub fn hessenberg_shifted_inverse(h: &CMat, z: Complex64) -> Option<CMat> {
    let n = h.nrows();
    let mut a = h.clone();
    for i in 0..n {
        a[(i, i)] += z;
    }
    let mut mult = vec![ZERO; n.saturating_sub(1)];
    let mut swapped = vec![false; n.saturating_sub(1)];
    for k in 0..n.saturating_sub(1) {
        if a[(k + 1, k)].norm() > a[(k, k)].norm() {
            for j in k..n {
                let t = a[(k, j)];
                a[(k, j)] = a[(k + 1, j)];
                a[(k + 1, j)] = t;
            }
            swapped[k] = true;
        }
        let piv = a[(k, k)];
        if piv == ZERO {
            return None;
        }
        let m = a[(k + 1, k)] / piv;
        mult[k] = m;
        a[(k + 1, k)] = ZERO;
        for j in k + 1..n {
            let v = a[(k, j)];
            a[(k + 1, j)] -= m * v;
        }
    }
    if n > 0 && a[(n - 1, n - 1)] == ZERO {
        return None;
    }
    // X = U^{-1}, column by column
    let mut x = CMat::zeros(n, n);
    for j in 0..n {
        x[(j, j)] = ONE / a[(j, j)];
        for i in (0..j).rev() {
            let mut s = ZERO;
            for p in i + 1..=j {
                s += a[(i, p)] * x[(p, j)];
            }
            x[(i, j)] = -s / a[(i, i)];
        }
    }
    // A^{-1} = X M_{n-2} P_{n-2} ... M_0 P_0
    for k in (0..n.saturating_sub(1)).rev() {
        let m = mult[k];
        if m != ZERO {
            for i in 0..n {
                let v = x[(i, k + 1)];
                x[(i, k)] -= m * v;
            }
        }
        if swapped[k] {
            x.swap_columns(k, k + 1);
        }
    }
    Some(x)
}

/// Spectral abscissa `max Re λ`.
pub fn spectral_abscissa(eigs: &[Complex64]) -> f64 {
    eigs.iter().fold(f64::NEG_INFINITY, |m, z| m.max(z.re))
}

/// Compression `V^* A V`.
pub fn compress(a: &CMat, v: &CMat) -> CMat {
    v.adjoint() * a * v
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMat::from_fn(n, n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    #[test]
    fn hessenberg_inverse_matches_lu() {
        for (n, seed) in [(1, 0), (2, 1), (7, 2), (25, 3)] {
            let a = random(n, seed);
            let (u, h) = hessenberg(&a);
            assert!(max_abs(&(&u * &h * u.adjoint() - &a)) < 1e-13);
            let z = c(0.3, -1.1);
            let inv = hessenberg_shifted_inverse(&h, z).unwrap();
            let direct = inverse(&shifted(&h, -z)).unwrap();
            assert!(max_abs(&(inv - &direct)) < 1e-11 * max_abs(&direct));
        }
        let h = from_real_rows(&[&[1.0, 2.0], &[0.0, 0.0]]);
        assert!(hessenberg_shifted_inverse(&h, ZERO).is_none());
    }

    #[test]
    fn orth_handles_rank_deficient_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (n, r) in [(10, 1), (30, 1), (12, 5)] {
            let a = CMat::from_fn(n, r, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let b = CMat::from_fn(r, n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let m = a * b;
            let v = orth(&m, 1e-10);
            assert_eq!(v.ncols(), r);
            assert!(norm2(&(&m - &v * (v.adjoint() * &m))) < 1e-13 * norm2(&m));
        }
    }

    #[test]
    fn schur_is_triangular_and_reconstructs() {
        for (n, seed) in [(1, 0), (3, 1), (12, 2), (40, 3)] {
            let a = random(n, seed);
            let s = Schur::new(&a).unwrap();
            for i in 0..n {
                for j in 0..i {
                    assert_eq!(s.t[(i, j)], ZERO);
                }
            }
            let r = max_abs(&(&s.q * &s.t * s.q.adjoint() - &a));
            assert!(r < 1e-12, "n={n} residual {r}");
        }
    }

    #[test]
    fn reorder_groups_left_half_plane_first() {
        let a = random(20, 7);
        let mut s = Schur::new(&a).unwrap();
        let k = s.reorder(|z| z.re < 0.0);
        let ev = s.eigenvalues();
        assert!(ev[..k].iter().all(|z| z.re < 0.0));
        assert!(ev[k..].iter().all(|z| z.re >= 0.0));
        let r = max_abs(&(&s.q * &s.t * s.q.adjoint() - &a));
        assert!(r < 1e-12, "{r}");
        let u = max_abs(&(s.q.adjoint() * &s.q - eye(20)));
        assert!(u < 1e-13);
    }

    #[test]
    fn sylvester_and_lyapunov_residuals() {
        let a = random(6, 11);
        let s = Schur::new(&shifted(&a, c(-3.0, 0.0))).unwrap();
        let t11 = s.t.view((0, 0), (3, 3)).into_owned();
        let t22 = shifted(&s.t.view((3, 3), (3, 3)).into_owned(), c(6.0, 0.0));
        let rhs = random(3, 12).view((0, 0), (3, 3)).into_owned();
        let y = solve_triangular_sylvester(&t11, &t22, &rhs).unwrap();
        assert!(max_abs(&(&t11 * &y - &y * &t22 - &rhs)) < 1e-12);

        let stable = shifted(&random(5, 13), c(2.0, 0.0));
        let q = eye(5);
        let x = solve_lyapunov(&stable, &q).unwrap();
        let res = stable.adjoint() * &x + &x * &stable + &q;
        assert!(max_abs(&res) < 1e-11);
    }

    #[test]
    fn matrix_roots() {
        let b = random(4, 5);
        let g = &b * b.adjoint() + eye(4);
        let r = sqrtm_pd(&g);
        assert!(max_abs(&(&r * &r - &g)) < 1e-12);
        let ri = inv_sqrtm_pd(&g);
        assert!(max_abs(&(&ri * &g * &ri - eye(4))) < 1e-12);
    }
}
