use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::json::{format_float, real_vec};
use super::{analyze_document, AnalyzeOptions, OperatorDocument, PLANTED_C12, PLANTED_C21};
use crate::dissipativity::{generate, GenerateKind, GenerateParams, OperatorSpec};
use crate::error::{Error, Result};
use crate::krein::KreinSpace;
use crate::linalg;

/// One-parameter operator families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Discretized indefinite problem, parameter `n`, coupling 1.
    Discretized,
    /// Discretized indefinite problem with `n = 16`, parameter the coupling.
    DiscretizedCoupling,
    /// `[[-1, a], [-a, 1]]` with `J = diag(1, -1)`, parameter `a`.
    Coupled2x2,
    /// Uniformly J-dissipative random operators of signature (3, 3), parameter `delta`.
    Uniform,
    /// Block operators of signature (3, 3) with `c12 = c21 = c`, parameter `c`.
    Block,
}

impl Family {
    pub fn parse(s: &str) -> Option<Family> {
        Some(match s {
            "discretized" => Family::Discretized,
            "discretized_coupling" => Family::DiscretizedCoupling,
            "coupled_2x2" => Family::Coupled2x2,
            "uniform" => Family::Uniform,
            "block" => Family::Block,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Discretized => "discretized",
            Family::DiscretizedCoupling => "discretized_coupling",
            Family::Coupled2x2 => "coupled_2x2",
            Family::Uniform => "uniform",
            Family::Block => "block",
        }
    }

    pub fn parameter(self) -> &'static str {
        match self {
            Family::Discretized => "n",
            Family::DiscretizedCoupling => "coupling",
            Family::Coupled2x2 => "a",
            Family::Uniform => "delta",
            Family::Block => "c",
        }
    }

    pub fn build(self, x: f64, seed: u64) -> Result<OperatorDocument> {
        let gen = |kind, sig| generate(&GenerateParams::new(kind, sig, seed));
        Ok(match self {
            Family::Discretized => {
                if !(x >= 2.0 && x.fract() == 0.0) {
                    return Err(Error::InvalidParams(format!("n must be an integer >= 2, got {x}")));
                }
                OperatorDocument::new(gen(GenerateKind::DiscretizedFamily { n: x as usize, coupling: 1.0 }, (0, 0))?)
            }
            Family::DiscretizedCoupling => {
                OperatorDocument::new(gen(GenerateKind::DiscretizedFamily { n: 16, coupling: x }, (0, 0))?)
            }
            Family::Coupled2x2 => {
                let l = linalg::from_real_rows(&[&[-1.0, x], &[-x, 1.0]]);
                OperatorDocument::new(OperatorSpec::new(l, KreinSpace::from_signature(1, 1)?, format!("coupled_2x2(a={x})"))?)
            }
            Family::Uniform => OperatorDocument::new(gen(GenerateKind::Uniform { delta: x }, (3, 3))?),
            Family::Block => {
                let op = gen(GenerateKind::Block { c12: x, c21: x }, (3, 3))?;
                OperatorDocument { op, metadata: BTreeMap::from([(PLANTED_C12.to_string(), x), (PLANTED_C21.to_string(), x)]) }
            }
        })
    }
}

/// `a,b,c` lists the points; `start:stop:count` is an equally spaced grid;
/// an empty string is the empty grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Parse { location: format!("grid entry {s:?}"), message: "expected a finite number".into() })
    };
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Parse { location: "grid".into(), message: "expected start:stop:count".into() });
        }
        let (a, b) = (num(parts[0])?, num(parts[1])?);
        let k: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| Error::Parse { location: "grid count".into(), message: format!("not a count: {:?}", parts[2]) })?;
        return Ok(match k {
            0 => Vec::new(),
            1 => vec![a],
            _ => (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect(),
        });
    }
    spec.split(',').map(num).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub family: String,
    pub parameter: String,
    pub seed: u64,
    #[serde(with = "real_vec")]
    pub grid: Vec<f64>,
    #[serde(with = "real_vec")]
    pub c_2_4: Vec<f64>,
    #[serde(with = "real_vec")]
    pub c_2_5: Vec<f64>,
    #[serde(with = "real_vec")]
    pub m_2_16: Vec<f64>,
    #[serde(with = "real_vec")]
    pub c_2_19: Vec<f64>,
    #[serde(with = "real_vec")]
    pub delta_plus: Vec<f64>,
    #[serde(with = "real_vec")]
    pub delta_minus: Vec<f64>,
    #[serde(with = "real_vec")]
    pub equivalence_lower: Vec<f64>,
    #[serde(with = "real_vec")]
    pub equivalence_upper: Vec<f64>,
    #[serde(with = "real_vec")]
    pub contour_schur_residual: Vec<f64>,
    /// Empty when every column was computed; otherwise why a value is `+inf`.
    pub reason: Vec<String>,
}

pub const SWEEP_COLUMNS: [&str; 12] = [
    "parameter",
    "grid",
    "c_2_4",
    "c_2_5",
    "m_2_16",
    "c_2_19",
    "delta_plus",
    "delta_minus",
    "equivalence_lower",
    "equivalence_upper",
    "contour_schur_residual",
    "reason",
];

struct Point {
    values: [f64; 9],
    reason: String,
}

fn point(family: Family, x: f64, seed: u64, opts: &AnalyzeOptions) -> Point {
    let mut values = [f64::INFINITY; 9];
    let doc = match family.build(x, seed) {
        Ok(d) => d,
        Err(e) => return Point { values, reason: format!("build: {e}") },
    };
    let rep = analyze_document(&doc, opts);
    let mut missing = Vec::new();
    let mut put = |k: usize, name: &str, v: Option<f64>| match v {
        Some(v) if !v.is_nan() => values[k] = v,
        _ => missing.push(name.to_string()),
    };
    let dis = rep.dissipativity.as_ref();
    put(0, "c_2_4", dis.and_then(|d| d.c_2_4));
    put(1, "c_2_5", dis.and_then(|d| d.c_2_5));
    put(2, "m_2_16", dis.and_then(|d| d.m_2_16));
    put(3, "c_2_19", dis.and_then(|d| d.c_2_19));
    let inv = rep.invariant_subspaces.as_ref();
    put(4, "delta_plus", inv.map(|i| i.delta_plus));
    put(5, "delta_minus", inv.map(|i| i.delta_minus));
    let tower = rep.interpolation.iter().find(|i| i.identity == "2.9");
    put(6, "equivalence_lower", tower.map(|t| t.equivalence_lower));
    put(7, "equivalence_upper", tower.map(|t| t.equivalence_upper));
    put(8, "contour_schur_residual", rep.dichotomy.as_ref().and_then(|d| d.projection_difference));
    let mut reason = String::new();
    if let Some(stage) = &rep.failure_stage {
        reason = format!("{stage}: {}", rep.failure_reason.clone().unwrap_or_default());
    }
    if !missing.is_empty() {
        if !reason.is_empty() {
            reason.push_str("; ");
        }
        reason.push_str(&format!("missing {}", missing.join(" ")));
    }
    Point { values, reason }
}

fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(k) = std::env::var("KREIN_NUM_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&k| k > 0) {
        b = b.num_threads(k);
    }
    b.build().map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))
}

/// Runs `analyze` at every grid point in parallel. Results do not depend on
/// the number of workers; failed points hold `+inf` and a reason.
pub fn sweep(family: Family, grid: &[f64], seed: u64, opts: &AnalyzeOptions) -> Result<SweepResult> {
    let pool = worker_pool()?;
    let points: Vec<Point> = pool.install(|| grid.par_iter().map(|&x| point(family, x, seed, opts)).collect());
    let col = |k: usize| points.iter().map(|p| p.values[k]).collect::<Vec<f64>>();
    Ok(SweepResult {
        family: family.name().into(),
        parameter: family.parameter().into(),
        seed,
        grid: grid.to_vec(),
        c_2_4: col(0),
        c_2_5: col(1),
        m_2_16: col(2),
        c_2_19: col(3),
        delta_plus: col(4),
        delta_minus: col(5),
        equivalence_lower: col(6),
        equivalence_upper: col(7),
        contour_schur_residual: col(8),
        reason: points.into_iter().map(|p| p.reason).collect(),
    })
}

/// CSV with a header row, RFC 4180 quoting and LF line endings.
pub fn sweep_to_csv(s: &SweepResult) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(SWEEP_COLUMNS).map_err(io)?;
    for i in 0..s.grid.len() {
        let nums = [
            s.grid[i],
            s.c_2_4[i],
            s.c_2_5[i],
            s.m_2_16[i],
            s.c_2_19[i],
            s.delta_plus[i],
            s.delta_minus[i],
            s.equivalence_lower[i],
            s.equivalence_upper[i],
            s.contour_schur_residual[i],
        ];
        let mut row = vec![s.parameter.clone()];
        row.extend(nums.iter().map(|&v| format_float(v)));
        row.push(s.reason[i].clone());
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}
