use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dissipativity::OperatorSpec;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// `L` in `H+ x H-` coordinates given by the frame of the Krein space.
#[derive(Debug, Clone)]
pub struct Blocks {
    pub a11: CMat,
    pub a12: CMat,
    pub a21: CMat,
    pub a22: CMat,
}

impl Blocks {
    pub fn assemble(&self) -> CMat {
        let (p, q) = (self.a11.nrows(), self.a22.nrows());
        let mut m = CMat::zeros(p + q, p + q);
        m.view_mut((0, 0), (p, p)).copy_from(&self.a11);
        m.view_mut((0, p), (p, q)).copy_from(&self.a12);
        m.view_mut((p, 0), (q, p)).copy_from(&self.a21);
        m.view_mut((p, p), (q, q)).copy_from(&self.a22);
        m
    }

    fn diagonal_part(&self) -> CMat {
        let zero = Blocks {
            a11: self.a11.clone(),
            a12: CMat::zeros(self.a12.nrows(), self.a12.ncols()),
            a21: CMat::zeros(self.a21.nrows(), self.a21.ncols()),
            a22: self.a22.clone(),
        };
        zero.assemble()
    }
}

pub fn block_split(op: &OperatorSpec) -> Blocks {
    let f = op.space.frame();
    let lt = f.adjoint() * &op.l * f;
    let (p, q) = op.space.signature();
    Blocks {
        a11: lt.view((0, 0), (p, p)).into_owned(),
        a12: lt.view((0, p), (p, q)).into_owned(),
        a21: lt.view((p, 0), (q, p)).into_owned(),
        a22: lt.view((p, p), (q, q)).into_owned(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsomorphismCheck {
    pub ir_ok_l: bool,
    pub ir_ok_l0: bool,
    /// Domains coincide in finite dimension.
    pub domain_match: bool,
    /// `|T| |T^{-1}|` for `T = (L - lambda)^{-1} (L0 - mu)`.
    pub iso_condition_number: f64,
    pub a11_m_dissipative: bool,
    pub minus_a22_m_dissipative: bool,
}

fn axis_free(m: &CMat, tol: f64) -> Result<bool> {
    Ok(m.nrows() == 0 || linalg::eigenvalues(m)?.iter().all(|z| z.re.abs() > tol))
}

fn herm_max(m: &CMat) -> f64 {
    linalg::herm_eigenvalues(&linalg::herm_part(m)).last().copied().unwrap_or(f64::NEG_INFINITY)
}

/// Compares `L` with its block diagonal `L0 = diag(A11, A22)` through
/// `T = (L - lambda)^{-1} (L0 - mu)`.
pub fn theorem_3_7_check(op: &OperatorSpec, lambda: Complex64, mu: Complex64) -> Result<IsomorphismCheck> {
    let tol = op.default_tol();
    let b = block_split(op);
    let f = op.space.frame();
    let l0 = f * b.diagonal_part() * f.adjoint();
    let a = linalg::shifted(&op.l, lambda);
    let sa = linalg::sigma_min(&a);
    if sa <= tol {
        return Err(Error::LambdaInSpectrum { re: lambda.re, im: lambda.im, sigma_min: sa });
    }
    let a0 = linalg::shifted(&l0, mu);
    let s0 = linalg::sigma_min(&a0);
    if s0 <= tol {
        return Err(Error::MuInSpectrum { re: mu.re, im: mu.im, sigma_min: s0 });
    }
    let t = linalg::inverse(&a)? * a0;
    Ok(IsomorphismCheck {
        ir_ok_l: axis_free(&op.l, tol)?,
        ir_ok_l0: axis_free(&l0, tol)?,
        domain_match: true,
        iso_condition_number: linalg::cond2(&t),
        a11_m_dissipative: b.a11.nrows() == 0 || herm_max(&b.a11) <= tol,
        minus_a22_m_dissipative: b.a22.nrows() == 0 || herm_max(&(-&b.a22)) <= tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubordinationConstants {
    /// `|M+^{-1/2} A12 M-^{-1/2}|`.
    pub c_a12: f64,
    /// `|M-^{-1/2} A21 M+^{-1/2}|`.
    pub c_a21: f64,
    /// Best `c0` in `|u+|^2_{F1+} + |u-|^2_{F1-} <= c0 (-Re [Lu, u] + |u|^2)`.
    pub c0: f64,
    /// Best constants of the diagonal block forms against their own energy norms.
    pub c_a11_form: f64,
    pub c_a22_form: f64,
}

/// Subordination constants of the off-diagonal blocks to the diagonal ones,
/// with block Grams `M+ = I - Herm A11` and `M- = I + Herm A22`.
///
/// The right side of the `c0` inequality uses the energy form of `L` in the
/// Krein space, `I - Herm(JL)`, which in block coordinates differs from
/// `diag(M+, M-)` only by the off-diagonal coupling `(A12 - A21^*) / 2`.
pub fn theorem_3_8_constants(op: &OperatorSpec) -> Result<SubordinationConstants> {
    let tol = op.default_tol();
    let b = block_split(op);
    let (p, q) = op.space.signature();
    if p > 0 && herm_max(&b.a11) > tol {
        return Err(Error::BlocksNotDissipative(format!("A11 has Re spectrum of the form up to {:.3e}", herm_max(&b.a11))));
    }
    if q > 0 && herm_max(&(-&b.a22)) > tol {
        return Err(Error::BlocksNotDissipative(format!("-A22 has Re spectrum of the form up to {:.3e}", herm_max(&(-&b.a22)))));
    }
    let mp = linalg::eye(p) - linalg::herm_part(&b.a11);
    let mm = linalg::eye(q) + linalg::herm_part(&b.a22);
    let (mp_ih, mm_ih) = (linalg::inv_sqrtm_pd(&mp), linalg::inv_sqrtm_pd(&mm));
    let sub = |m: &CMat| if m.nrows() == 0 || m.ncols() == 0 { 0.0 } else { linalg::norm2(m) };
    let c_a12 = sub(&(&mp_ih * &b.a12 * &mm_ih));
    let c_a21 = sub(&(&mm_ih * &b.a21 * &mp_ih));
    let c_a11_form = sub(&(&mp_ih * &b.a11 * &mp_ih));
    let c_a22_form = sub(&(&mm_ih * &b.a22 * &mm_ih));

    let f = op.space.frame();
    let energy = linalg::eye(p + q) - linalg::herm_part(&(f.adjoint() * op.jl() * f));
    let ev = linalg::herm_eigenvalues(&energy);
    if ev.first().is_some_and(|&v| v <= 0.0) {
        return Err(Error::NotJDissipative { lambda_max: 1.0 - ev[0] });
    }
    let mut d = CMat::zeros(p + q, p + q);
    d.view_mut((0, 0), (p, p)).copy_from(&mp);
    d.view_mut((p, p), (q, q)).copy_from(&mm);
    let e_ih = linalg::inv_sqrtm_pd(&energy);
    let c0 = linalg::herm_eigenvalues(&(&e_ih * d * &e_ih)).last().copied().unwrap_or(1.0);
    Ok(SubordinationConstants { c_a12, c_a21, c0, c_a11_form, c_a22_form })
}
