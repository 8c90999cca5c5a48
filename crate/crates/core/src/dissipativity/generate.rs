//! Seeded test-operator families. Every dissipative family is built as
//! `L = J(-P + S)` with `P >= 0` Hermitian and `S` skew-Hermitian, so
//! `Herm(JL) = -P`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::OperatorSpec;
use crate::error::{Error, Result};
use crate::krein::KreinSpace;
use crate::linalg::{self, c, CMat};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GenerateKind {
    RandomJDissipative,
    /// `P >= delta I`.
    Uniform {
        delta: f64,
    },
    /// Block operator with planted subordination constants for the off-diagonal blocks.
    Block {
        c12: f64,
        c21: f64,
    },
    /// Second-difference blocks coupled by a scaled first difference; the
    /// signature is derived from `n`.
    DiscretizedFamily {
        n: usize,
        coupling: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerateParams {
    pub kind: GenerateKind,
    pub signature: (usize, usize),
    pub seed: u64,
    pub psd_scale: f64,
    pub skew_scale: f64,
}

impl GenerateParams {
    pub fn new(kind: GenerateKind, signature: (usize, usize), seed: u64) -> GenerateParams {
        GenerateParams { kind, signature, seed, psd_scale: 1.0, skew_scale: 1.0 }
    }
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

fn random_skew(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> CMat {
    let a = gaussian(rng, n, n);
    linalg::skew_part(&a).scale(scale / (n as f64).sqrt())
}

fn random_psd(rng: &mut ChaCha8Rng, n: usize, rank: usize, scale: f64) -> CMat {
    let b = gaussian(rng, n, rank);
    linalg::herm_part(&(&b * b.adjoint())).scale(scale / n as f64)
}

fn check_scale(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::InvalidParams(format!("{name} must be finite and nonnegative, got {v}")));
    }
    Ok(())
}

/// Deterministic given `params.seed`.
pub fn generate(params: &GenerateParams) -> Result<OperatorSpec> {
    check_scale("psd_scale", params.psd_scale)?;
    check_scale("skew_scale", params.skew_scale)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (p, q) = params.signature;
    match params.kind {
        GenerateKind::RandomJDissipative => {
            let space = KreinSpace::from_signature(p, q)?;
            let n = p + q;
            let rank = rng.random_range(1..=n);
            let pm = random_psd(&mut rng, n, rank, params.psd_scale);
            let s = random_skew(&mut rng, n, params.skew_scale);
            let l = space.j() * (s - pm);
            OperatorSpec::new(l, space, format!("random_j_dissipative(seed={})", params.seed))
        }
        GenerateKind::Uniform { delta } => {
            if !(delta.is_finite() && delta > 0.0) {
                return Err(Error::InvalidParams(format!("uniform delta must be positive, got {delta}")));
            }
            let space = KreinSpace::from_signature(p, q)?;
            let n = p + q;
            let pm = random_psd(&mut rng, n, n, params.psd_scale) + linalg::eye(n).scale(delta);
            let s = random_skew(&mut rng, n, params.skew_scale);
            let l = space.j() * (s - pm);
            OperatorSpec::new(l, space, format!("uniform(delta={delta},seed={})", params.seed))
        }
        GenerateKind::Block { c12, c21 } => block(&mut rng, p, q, c12, c21, params),
        GenerateKind::DiscretizedFamily { n, coupling } => discretized(n, coupling),
    }
}

fn scaled_to(k: CMat, left: &CMat, right: &CMat, target: f64) -> CMat {
    if target == 0.0 {
        return CMat::zeros(k.nrows(), k.ncols());
    }
    let s = linalg::norm2(&k);
    left * k.scale(target / s) * right
}

/// `A11 = -P1 + S1`, `A22 = P2 + S2` with planted
/// `|M+^{-1/2} A12 M-^{-1/2}| = c12` and `|M-^{-1/2} A21 M+^{-1/2}| = c21`.
/// When `c12 == c21` the coupling is `A21 = A12^*`, which keeps `L` uniformly
/// J-dissipative.
fn block(rng: &mut ChaCha8Rng, p: usize, q: usize, c12: f64, c21: f64, params: &GenerateParams) -> Result<OperatorSpec> {
    if p == 0 || q == 0 {
        return Err(Error::InvalidParams("block operators need p, q >= 1".into()));
    }
    check_scale("c12", c12)?;
    check_scale("c21", c21)?;
    let p1 = random_psd(rng, p, p, params.psd_scale) + linalg::eye(p).scale(0.5);
    let p2 = random_psd(rng, q, q, params.psd_scale) + linalg::eye(q).scale(0.5);
    let a11 = random_skew(rng, p, params.skew_scale) - &p1;
    let a22 = random_skew(rng, q, params.skew_scale) + &p2;
    let mp_half = linalg::sqrtm_pd(&(linalg::eye(p) + &p1));
    let mm_half = linalg::sqrtm_pd(&(linalg::eye(q) + &p2));
    let a12 = scaled_to(gaussian(rng, p, q), &mp_half, &mm_half, c12);
    let a21 = if c12 == c21 { a12.adjoint() } else { scaled_to(gaussian(rng, q, p), &mm_half, &mp_half, c21) };
    let n = p + q;
    let mut l = CMat::zeros(n, n);
    l.view_mut((0, 0), (p, p)).copy_from(&a11);
    l.view_mut((0, p), (p, q)).copy_from(&a12);
    l.view_mut((p, 0), (q, p)).copy_from(&a21);
    l.view_mut((p, p), (q, q)).copy_from(&a22);
    let space = KreinSpace::from_signature(p, q)?;
    OperatorSpec::new(l, space, format!("block(c12={c12},c21={c21},seed={})", params.seed))
}

fn second_difference(m: usize, h: f64) -> CMat {
    CMat::from_fn(m, m, |i, j| {
        let v = if i == j {
            -2.0
        } else if i.abs_diff(j) == 1 {
            1.0
        } else {
            0.0
        };
        c(v / (h * h), 0.0)
    })
}

fn discretized(n: usize, coupling: f64) -> Result<OperatorSpec> {
    if n < 2 {
        return Err(Error::InvalidParams(format!("discretized family needs n >= 2, got {n}")));
    }
    if !coupling.is_finite() {
        return Err(Error::InvalidParams("coupling must be finite".into()));
    }
    let p = n.div_ceil(2);
    let q = n - p;
    let h = 1.0 / (p as f64 + 1.0);
    let d_plus = second_difference(p, h);
    let d_minus = second_difference(q, h);
    // forward difference H- -> H+
    let g = CMat::from_fn(p, q, |i, j| {
        if i == j {
            c(-1.0 / h, 0.0)
        } else if j == i + 1 {
            c(1.0 / h, 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    let mut l = CMat::zeros(n, n);
    l.view_mut((0, 0), (p, p)).copy_from(&d_plus);
    l.view_mut((0, p), (p, q)).copy_from(&g.scale(coupling));
    l.view_mut((p, 0), (q, p)).copy_from(&g.adjoint().scale(coupling));
    l.view_mut((p, p), (q, q)).copy_from(&(-d_minus));
    let space = KreinSpace::from_signature(p, q)?;
    OperatorSpec::new(l, space, format!("discretized(n={n},coupling={coupling})"))
}
