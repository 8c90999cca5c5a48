//! Finite-dimensional Krein spaces: the fundamental symmetry, the indefinite
//! inner product `[x, y] = (Jx, y)`, sign classification of subspaces and the
//! J-adjoint.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};

/// Hermitian involution `J = P+ - P-` on `C^n`.
#[derive(Debug, Clone)]
pub struct KreinSpace {
    j: CMat,
    p: usize,
    q: usize,
    /// Unitary frame whose first `p` columns span `H+` and last `q` span `H-`.
    frame: CMat,
}

/// Input forms accepted by [`KreinSpace::new`].
#[derive(Debug, Clone)]
pub enum JInput {
    Signature(usize, usize),
    Matrix(CMat),
}

impl KreinSpace {
    pub fn new(input: JInput) -> Result<KreinSpace> {
        match input {
            JInput::Signature(p, q) => KreinSpace::from_signature(p, q),
            JInput::Matrix(j) => KreinSpace::from_matrix(j),
        }
    }

    /// Canonical form `diag(I_p, -I_q)`.
    pub fn from_signature(p: usize, q: usize) -> Result<KreinSpace> {
        let n = p + q;
        if n == 0 {
            return Err(Error::EmptySpace);
        }
        let d: Vec<f64> = (0..n).map(|i| if i < p { 1.0 } else { -1.0 }).collect();
        Ok(KreinSpace { j: linalg::diag_real(&d), p, q, frame: linalg::eye(n) })
    }

    pub fn from_matrix(j: CMat) -> Result<KreinSpace> {
        let n = j.nrows();
        if n == 0 {
            return Err(Error::EmptySpace);
        }
        if j.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: j.ncols() });
        }
        let tol = 1e-10 * n as f64;
        let defect = linalg::hermitian_defect(&j);
        if defect > tol {
            return Err(Error::NotHermitian { defect });
        }
        let eig = linalg::herm_eig(&j);
        let inv_defect = linalg::max_abs(&(&j * &j - linalg::eye(n)));
        if inv_defect > tol {
            let worst =
                eig.values.iter().copied().fold(1.0f64, |w, l| if (l.abs() - 1.0).abs() > (w.abs() - 1.0).abs() { l } else { w });
            return Err(Error::NotInvolutive { defect: inv_defect, eigenvalue: worst });
        }
        let p = eig.values.iter().filter(|&&l| l > 0.0).count();
        let q = n - p;
        let frame = if is_canonical_diagonal(&j, p) {
            linalg::eye(n)
        } else if let Some(perm) = diagonal_sign_permutation(&j) {
            perm
        } else {
            // eigenvalues ascending: -1 block first, so reverse the columns
            CMat::from_fn(n, n, |r, k| eig.vectors[(r, n - 1 - k)])
        };
        Ok(KreinSpace { j: linalg::herm_part(&j), p, q, frame })
    }

    pub fn dim(&self) -> usize {
        self.p + self.q
    }

    pub fn j(&self) -> &CMat {
        &self.j
    }

    pub fn signature(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    pub fn pontryagin_index(&self) -> usize {
        self.p.min(self.q)
    }

    pub fn frame(&self) -> &CMat {
        &self.frame
    }

    /// `P+ = (I + J) / 2`.
    pub fn p_plus(&self) -> CMat {
        (linalg::eye(self.dim()) + &self.j).scale(0.5)
    }

    /// `P- = (I - J) / 2`.
    pub fn p_minus(&self) -> CMat {
        (linalg::eye(self.dim()) - &self.j).scale(0.5)
    }

    /// Orthonormal basis of `H+`.
    pub fn h_plus(&self) -> Subspace {
        Subspace { basis: self.frame.columns(0, self.p).into_owned() }
    }

    /// Orthonormal basis of `H-`.
    pub fn h_minus(&self) -> Subspace {
        Subspace { basis: self.frame.columns(self.p, self.q).into_owned() }
    }

    fn check_vec(&self, v: &CVec) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: v.len() });
        }
        Ok(())
    }

    pub fn check_square(&self, m: &CMat) -> Result<()> {
        if m.nrows() != self.dim() || m.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: m.nrows().max(m.ncols()) });
        }
        Ok(())
    }
}

fn is_canonical_diagonal(j: &CMat, p: usize) -> bool {
    let n = j.nrows();
    (0..n).all(|r| {
        (0..n).all(|k| {
            let want = if r != k {
                0.0
            } else if r < p {
                1.0
            } else {
                -1.0
            };
            j[(r, k)] == Complex64::new(want, 0.0)
        })
    })
}

/// Permutation frame for a diagonal `J` with entries exactly `+-1`.
fn diagonal_sign_permutation(j: &CMat) -> Option<CMat> {
    let n = j.nrows();
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for r in 0..n {
        for k in 0..n {
            if r != k && j[(r, k)] != linalg::ZERO {
                return None;
            }
        }
        let d = j[(r, r)];
        if d == linalg::ONE {
            plus.push(r);
        } else if d == -linalg::ONE {
            minus.push(r);
        } else {
            return None;
        }
    }
    let order: Vec<usize> = plus.into_iter().chain(minus).collect();
    Some(CMat::from_fn(n, n, |r, k| if order[k] == r { linalg::ONE } else { linalg::ZERO }))
}

/// `[u, v] = (Ju, v)`, conjugate-linear in `v`.
pub fn indefinite_inner(u: &CVec, v: &CVec, k: &KreinSpace) -> Result<Complex64> {
    k.check_vec(u)?;
    k.check_vec(v)?;
    Ok(linalg::inner(&(k.j() * u), v))
}

/// Subspace given by a Hilbert-orthonormal basis.
#[derive(Debug, Clone)]
pub struct Subspace {
    basis: CMat,
}

impl Subspace {
    pub fn new(basis: CMat) -> Result<Subspace> {
        let k = basis.ncols();
        let n = basis.nrows();
        if k > n {
            return Err(Error::DimensionMismatch { expected: n, got: k });
        }
        let defect = linalg::max_abs(&(basis.adjoint() * &basis - linalg::eye(k)));
        if defect > 1e-10 * n.max(1) as f64 {
            return Err(Error::NonOrthonormalBasis { defect });
        }
        Ok(Subspace { basis })
    }

    /// Orthonormalises the column span of an arbitrary matrix.
    pub fn span(vectors: &CMat) -> Subspace {
        Subspace { basis: linalg::orth(vectors, 1e-12) }
    }

    pub fn zero(n: usize) -> Subspace {
        Subspace { basis: CMat::zeros(n, 0) }
    }

    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Orthogonal projector `V V^*`.
    pub fn projector(&self) -> CMat {
        &self.basis * self.basis.adjoint()
    }

    /// Indefinite Gram `V^* J V`.
    pub fn indefinite_gram(&self, k: &KreinSpace) -> CMat {
        linalg::herm_part(&linalg::compress(k.j(), &self.basis))
    }

    /// Distance of `x` from the subspace.
    pub fn residual(&self, x: &CVec) -> f64 {
        (x - &self.basis * (self.basis.adjoint() * x)).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignKind {
    Nonnegative,
    Positive,
    UniformlyPositive,
    Nonpositive,
    Negative,
    UniformlyNegative,
    Neutral,
    Indefinite,
}

/// Result of [`classify_subspace`]. In finite dimension a positive subspace is
/// always uniformly positive, so `Positive`/`Negative` are never produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignClass {
    pub kind: SignKind,
    /// `lambda_min` of the Gram for uniformly positive, `-lambda_max` for uniformly negative.
    pub definiteness_constant: f64,
    pub degenerate: bool,
}

impl SignClass {
    pub fn is_nonnegative(&self) -> bool {
        matches!(self.kind, SignKind::Nonnegative | SignKind::Positive | SignKind::UniformlyPositive | SignKind::Neutral)
    }

    pub fn is_nonpositive(&self) -> bool {
        matches!(self.kind, SignKind::Nonpositive | SignKind::Negative | SignKind::UniformlyNegative | SignKind::Neutral)
    }
}

/// Default classification tolerance `1e-8 * max(|G|, 1)`. The Gram of an
/// orthonormal basis is bounded by `|J| = 1`, which sets the floor for
/// near-neutral subspaces.
pub fn default_class_tol(gram: &CMat) -> f64 {
    1e-8 * linalg::norm2(gram).max(1.0)
}

/// Sign class of a subspace from the spectrum of `V^* J V`.
/// `tol = None` uses [`default_class_tol`].
pub fn classify_subspace(m: &Subspace, k: &KreinSpace, tol: Option<f64>) -> Result<SignClass> {
    if m.ambient_dim() != k.dim() {
        return Err(Error::DimensionMismatch { expected: k.dim(), got: m.ambient_dim() });
    }
    let gram = m.indefinite_gram(k);
    let tol = tol.unwrap_or_else(|| default_class_tol(&gram));
    Ok(classify_gram(&linalg::herm_eigenvalues(&gram), tol))
}

/// Classification from precomputed Gram eigenvalues (ascending).
pub fn classify_gram(eigs: &[f64], tol: f64) -> SignClass {
    let Some((&lmin, &lmax)) = eigs.first().zip(eigs.last()) else {
        return SignClass { kind: SignKind::Neutral, definiteness_constant: 0.0, degenerate: false };
    };
    let has_zero = eigs.iter().any(|l| l.abs() <= tol);
    if lmin >= -tol && lmax <= tol {
        SignClass { kind: SignKind::Neutral, definiteness_constant: 0.0, degenerate: true }
    } else if lmin > tol {
        SignClass { kind: SignKind::UniformlyPositive, definiteness_constant: lmin, degenerate: false }
    } else if lmax < -tol {
        SignClass { kind: SignKind::UniformlyNegative, definiteness_constant: -lmax, degenerate: false }
    } else if lmin >= -tol {
        SignClass { kind: SignKind::Nonnegative, definiteness_constant: 0.0, degenerate: has_zero }
    } else if lmax <= tol {
        SignClass { kind: SignKind::Nonpositive, definiteness_constant: 0.0, degenerate: has_zero }
    } else {
        SignClass { kind: SignKind::Indefinite, definiteness_constant: 0.0, degenerate: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Maximality {
    pub maximal: bool,
    pub reason: String,
}

/// A semidefinite subspace is maximal iff its dimension equals `p` (nonnegative)
/// or `q` (nonpositive).
pub fn is_maximal_semidefinite(m: &Subspace, k: &KreinSpace, tol: Option<f64>) -> Result<Maximality> {
    let class = classify_subspace(m, k, tol)?;
    let (p, q) = k.signature();
    let dim = m.dim();
    if class.is_nonnegative() && dim == p {
        return Ok(Maximality { maximal: true, reason: format!("nonnegative with dim {dim} = p") });
    }
    if class.is_nonpositive() && dim == q {
        return Ok(Maximality { maximal: true, reason: format!("nonpositive with dim {dim} = q") });
    }
    if class.is_nonnegative() {
        return Ok(Maximality { maximal: false, reason: format!("nonnegative with dim {dim} < p = {p}") });
    }
    if class.is_nonpositive() {
        return Ok(Maximality { maximal: false, reason: format!("nonpositive with dim {dim} < q = {q}") });
    }
    Err(Error::NotSemidefinite)
}

/// `L^c = J L^* J`, so that `[Lu, v] = [u, L^c v]`.
pub fn j_adjoint(l: &CMat, k: &KreinSpace) -> Result<CMat> {
    k.check_square(l)?;
    Ok(k.j() * l.adjoint() * k.j())
}
