//! The analysis pipeline, parameter sweeps and report emission.

pub mod json;
mod operator_file;
pub mod sweep;

use serde::{Deserialize, Serialize};

pub use operator_file::{
    load_operator, load_operator_document, operator_to_string, parse_operator, save_operator, write_atomic, OperatorDocument,
    OPERATOR_SCHEMA_VERSION,
};
pub use sweep::{parse_grid, sweep, sweep_to_csv, Family, SweepResult};

use crate::certificate::{all_passed, Certificate};
use crate::dichotomy::{
    contour_projections, riesz_deflate, schur_dichotomy, theorem_3_8_constants, verify_theorem_3_2, DichotomyResult,
    SectorContour,
};
use crate::dissipativity::{
    classify_with_tol, condition_2_16, condition_2_4, condition_2_5, f_grams, full_report, resolvent_scan, DissipativityReport,
    OperatorSpec, ResolventScan, ScanOptions,
};
use crate::error::{Error, Result};
use crate::interpolation::{identity_check, Identity};
use crate::krein::{SignClass, SignKind};
use crate::linalg;
use crate::semigroup::{analytic_bounds, definiteness_from_energy, energy_identity, GridParams};
use json::{real, real_opt, to_canonical_string};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Pipeline stages in execution order.
pub const STAGES: [&str; 10] = [
    "classify",
    "f_grams",
    "conditions",
    "resolvent_scan",
    "deflate",
    "dichotomy",
    "invariant_subspaces",
    "interpolation",
    "semigroup",
    "blocks",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeOptions {
    /// Spectral and classification tolerance; `None` uses `1e-10 max(1, |L|)`.
    #[serde(with = "real_opt")]
    pub tol: Option<f64>,
    pub deflate: bool,
    pub contour_nodes: Option<usize>,
    /// Halves every tolerance.
    pub strict: bool,
    #[serde(with = "real")]
    pub quad_tol: f64,
    pub energy_samples: usize,
    /// Skip the contour quadrature (sweeps over large operators).
    pub contour: bool,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            tol: None,
            deflate: false,
            contour_nodes: None,
            strict: false,
            quad_tol: 1e-9,
            energy_samples: 4,
            contour: true,
        }
    }
}

impl AnalyzeOptions {
    fn factor(&self) -> f64 {
        if self.strict {
            0.5
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSummary {
    pub label: String,
    pub dim: usize,
    pub signature: (usize, usize),
    #[serde(with = "real")]
    pub norm: f64,
    pub spectrum: Vec<(f64, f64)>,
}

impl OperatorSummary {
    fn of(op: &OperatorSpec) -> OperatorSummary {
        let mut spectrum: Vec<(f64, f64)> =
            linalg::eigenvalues(&op.l).unwrap_or_default().into_iter().map(|z| (z.re, z.im)).collect();
        spectrum.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        OperatorSummary { label: op.label.clone(), dim: op.dim(), signature: op.space.signature(), norm: op.norm(), spectrum }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipativitySummary {
    pub is_dissipative: bool,
    pub is_j_dissipative: bool,
    pub is_strict: bool,
    pub is_uniform: bool,
    #[serde(with = "real")]
    pub lambda_max_herm: f64,
    #[serde(with = "real")]
    pub delta_uniform: f64,
    #[serde(with = "real_opt")]
    pub c_2_4: Option<f64>,
    #[serde(with = "real_opt")]
    pub c_2_5: Option<f64>,
    #[serde(with = "real_opt")]
    pub m_2_16: Option<f64>,
    #[serde(with = "real_opt")]
    pub omega0: Option<f64>,
    #[serde(with = "real_opt")]
    pub c_2_19: Option<f64>,
    #[serde(with = "real_opt")]
    pub sector_angle: Option<f64>,
}

impl From<&DissipativityReport> for DissipativitySummary {
    fn from(r: &DissipativityReport) -> Self {
        DissipativitySummary {
            is_dissipative: r.is_dissipative,
            is_j_dissipative: r.is_j_dissipative,
            is_strict: r.is_strict,
            is_uniform: r.is_uniform,
            lambda_max_herm: r.lambda_max_herm,
            delta_uniform: r.delta_uniform,
            c_2_4: r.c_2_4,
            c_2_5: r.c_2_5,
            m_2_16: r.m_2_16,
            omega0: r.omega0,
            c_2_19: r.c_2_19,
            sector_angle: r.sector_angle,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventSummary {
    #[serde(with = "real")]
    pub omega0: f64,
    #[serde(with = "real")]
    pub c_2_19: f64,
    #[serde(with = "real")]
    pub tail_bound: f64,
    #[serde(with = "real")]
    pub omega_max: f64,
    pub imaginary_spectrum: Vec<f64>,
    pub samples: usize,
}

impl From<&ResolventScan> for ResolventSummary {
    fn from(s: &ResolventScan) -> Self {
        ResolventSummary {
            omega0: s.omega0,
            c_2_19: s.c_2_19,
            tail_bound: s.tail_bound,
            omega_max: s.omega_max,
            imaginary_spectrum: s.imaginary_spectrum.clone(),
            samples: s.samples.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeflationSummary {
    pub rank: usize,
    pub removed: Vec<(f64, f64)>,
    pub nodes: Vec<usize>,
    pub deflated_dim: usize,
    pub deflated_signature: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSummary {
    #[serde(with = "real")]
    pub half_angle_delta: f64,
    #[serde(with = "real")]
    pub inner_radius: f64,
    #[serde(with = "real")]
    pub truncation_radius: f64,
    #[serde(with = "real")]
    pub tol: f64,
    #[serde(with = "real")]
    pub quadrature_error: f64,
    #[serde(with = "real")]
    pub truncation_bound: f64,
    #[serde(with = "real")]
    pub inner_arc_bound: f64,
    pub evaluations: usize,
    #[serde(with = "real")]
    pub min_resolvent_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomySummary {
    pub method: String,
    pub dim_plus: usize,
    pub dim_minus: usize,
    pub spectrum_plus: Vec<(f64, f64)>,
    pub spectrum_minus: Vec<(f64, f64)>,
    pub sign_plus: SignKind,
    pub sign_minus: SignKind,
    #[serde(with = "real")]
    pub delta_plus: f64,
    #[serde(with = "real")]
    pub delta_minus: f64,
    #[serde(with = "real")]
    pub idempotency: f64,
    #[serde(with = "real")]
    pub completeness: f64,
    #[serde(with = "real")]
    pub commutation: f64,
    #[serde(with = "real")]
    pub invariance: f64,
    #[serde(with = "real_opt")]
    pub inverse_commutation: Option<f64>,
    pub contour: Option<ContourSummary>,
}

fn delta_of(s: &SignClass) -> f64 {
    if s.degenerate {
        0.0
    } else {
        s.definiteness_constant
    }
}

impl From<&DichotomyResult> for DichotomySummary {
    fn from(d: &DichotomyResult) -> Self {
        let pairs = |v: &[num_complex::Complex64]| v.iter().map(|z| (z.re, z.im)).collect();
        DichotomySummary {
            method: match d.method {
                crate::dichotomy::Method::Schur => "schur".into(),
                crate::dichotomy::Method::Contour => "contour".into(),
            },
            dim_plus: d.m_plus.dim(),
            dim_minus: d.m_minus.dim(),
            spectrum_plus: pairs(&d.spectrum_plus),
            spectrum_minus: pairs(&d.spectrum_minus),
            sign_plus: d.sign_class_plus.kind,
            sign_minus: d.sign_class_minus.kind,
            delta_plus: delta_of(&d.sign_class_plus),
            delta_minus: delta_of(&d.sign_class_minus),
            idempotency: d.residuals.idempotency,
            completeness: d.residuals.completeness,
            commutation: d.residuals.commutation,
            invariance: d.residuals.invariance,
            inverse_commutation: d.residuals.inverse_commutation,
            contour: d.contour.map(|r| ContourSummary {
                half_angle_delta: r.contour.half_angle_delta,
                inner_radius: r.contour.inner_radius,
                truncation_radius: r.contour.truncation_radius,
                tol: r.contour.tol,
                quadrature_error: r.quadrature_error,
                truncation_bound: r.truncation_bound,
                inner_arc_bound: r.inner_arc_bound,
                evaluations: r.evaluations,
                min_resolvent_distance: r.min_resolvent_distance,
            }),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DichotomySection {
    pub schur: Option<DichotomySummary>,
    pub contour: Option<DichotomySummary>,
    /// `|P+_contour - P+_schur|_2`.
    #[serde(with = "real_opt")]
    pub projection_difference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantSummary {
    pub passed: bool,
    #[serde(with = "real")]
    pub delta_plus: f64,
    #[serde(with = "real")]
    pub delta_minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationSummary {
    pub identity: String,
    pub target_label: String,
    #[serde(with = "real")]
    pub equivalence_lower: f64,
    #[serde(with = "real")]
    pub equivalence_upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySummary {
    #[serde(with = "real")]
    pub u0_indefinite_square: f64,
    #[serde(with = "real")]
    pub energy_integral: f64,
    #[serde(with = "real")]
    pub boundary_term: f64,
    #[serde(with = "real")]
    pub residual: f64,
    #[serde(with = "real")]
    pub horizon: f64,
    pub reversed: bool,
    #[serde(with = "real")]
    pub f1_integral: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemigroupSummary {
    /// `plus` uses `e^{tL}` on `M+`, `minus` uses `e^{-tL}` on `M-`.
    pub side: String,
    pub dim: usize,
    #[serde(with = "real")]
    pub sup_norm: f64,
    #[serde(with = "real")]
    pub sup_t_norm_derivative: f64,
    #[serde(with = "real")]
    pub spectral_abscissa: f64,
    #[serde(with = "real")]
    pub lyapunov_constant: f64,
    pub grid_points: usize,
    pub energy: EnergySummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefinitenessSummary {
    #[serde(with = "real")]
    pub energy_delta_plus: f64,
    #[serde(with = "real")]
    pub energy_delta_minus: f64,
    #[serde(with = "real")]
    pub gram_delta_plus: f64,
    #[serde(with = "real")]
    pub gram_delta_minus: f64,
    #[serde(with = "real")]
    pub sampled_plus: f64,
    #[serde(with = "real")]
    pub sampled_minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSummary {
    #[serde(with = "real")]
    pub c_a12: f64,
    #[serde(with = "real")]
    pub c_a21: f64,
    #[serde(with = "real")]
    pub c0: f64,
    #[serde(with = "real")]
    pub c_a11_form: f64,
    #[serde(with = "real")]
    pub c_a22_form: f64,
    #[serde(with = "real_opt")]
    pub planted_c12: Option<f64>,
    #[serde(with = "real_opt")]
    pub planted_c21: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub operator: OperatorSummary,
    pub options: AnalyzeOptions,
    /// Stages that ran, in order.
    pub stages: Vec<String>,
    pub failure_stage: Option<String>,
    pub failure_reason: Option<String>,
    pub dissipativity: Option<DissipativitySummary>,
    pub resolvent: Option<ResolventSummary>,
    pub deflation: Option<DeflationSummary>,
    pub dichotomy: Option<DichotomySection>,
    pub invariant_subspaces: Option<InvariantSummary>,
    pub interpolation: Vec<InterpolationSummary>,
    pub semigroup: Vec<SemigroupSummary>,
    pub definiteness: Option<DefinitenessSummary>,
    pub blocks: Option<BlockSummary>,
    pub certificates: Vec<Certificate>,
    pub passed: bool,
}

impl AnalysisReport {
    pub fn to_json(&self) -> Result<String> {
        to_canonical_string(self)
    }

    pub fn from_json(text: &str) -> Result<AnalysisReport> {
        serde_json::from_str(text)
            .map_err(|e| Error::Parse { location: format!("line {} column {}", e.line(), e.column()), message: e.to_string() })
    }

    pub fn certificate(&self, name: &str) -> Option<&Certificate> {
        self.certificates.iter().find(|c| c.name == name)
    }
}

/// Planted subordination constants recorded by `generate` in operator metadata.
pub const PLANTED_C12: &str = "planted_c12";
pub const PLANTED_C21: &str = "planted_c21";

struct Run {
    report: AnalysisReport,
}

impl Run {
    fn enter(&mut self, stage: &str) {
        self.report.stages.push(stage.to_string());
    }

    fn cert(&mut self, c: Certificate) {
        self.report.certificates.push(c);
    }

    /// Records a fatal stage error and returns the finished report.
    fn fail(mut self, stage: &str, reason: String) -> AnalysisReport {
        self.cert(
            Certificate::flag(stage, &format!("{stage}_completed"), "stage ran to completion", false).with_detail(reason.clone()),
        );
        self.report.failure_stage = Some(stage.to_string());
        self.report.failure_reason = Some(reason);
        self.finish()
    }

    fn finish(mut self) -> AnalysisReport {
        self.report.passed = all_passed(&self.report.certificates);
        self.report
    }
}

/// Runs every stage in order. Failures never abort with an error: the report
/// names the stage that stopped the pipeline and carries a failing certificate.
pub fn analyze(op: &OperatorSpec, opts: &AnalyzeOptions) -> AnalysisReport {
    analyze_document(&OperatorDocument::new(op.clone()), opts)
}

pub fn analyze_document(doc: &OperatorDocument, opts: &AnalyzeOptions) -> AnalysisReport {
    let input = &doc.op;
    let f = opts.factor();
    let mut run = Run {
        report: AnalysisReport {
            schema_version: REPORT_SCHEMA_VERSION,
            operator: OperatorSummary::of(input),
            options: *opts,
            stages: Vec::new(),
            failure_stage: None,
            failure_reason: None,
            dissipativity: None,
            resolvent: None,
            deflation: None,
            dichotomy: None,
            invariant_subspaces: None,
            interpolation: Vec::new(),
            semigroup: Vec::new(),
            definiteness: None,
            blocks: None,
            certificates: Vec::new(),
            passed: false,
        },
    };
    let tol = opts.tol.unwrap_or_else(|| input.default_tol()) * f;

    run.enter("classify");
    let cls = classify_with_tol(input, tol);
    run.cert(Certificate::at_most(
        "classify",
        "j_dissipative",
        "Re[Lu, u] <= 0 for all u (L is J-dissipative)",
        cls.lambda_max_herm,
        tol,
    ));
    if !cls.is_j_dissipative {
        run.report.dissipativity = Some((&cls).into());
        return run.fail("classify", Error::NotJDissipative { lambda_max: cls.lambda_max_herm }.to_string());
    }

    run.enter("f_grams");
    let grams = match f_grams(input) {
        Ok(g) => g,
        Err(e) => return run.fail("f_grams", e.to_string()),
    };
    let m1_min = linalg::herm_eigenvalues(&grams.m1)[0];
    run.cert(Certificate::at_least("f_grams", "energy_gram_dominates_identity", "M1 = I - Herm(JL) >= I", m1_min, 1.0 - tol));

    run.enter("conditions");
    let c24 = condition_2_4(input, &grams);
    let c25 = condition_2_5(input, &grams);
    let m216 = condition_2_16(input, &grams);
    let slack = 1e-10 * f * c24.abs().max(1.0);
    run.cert(Certificate::at_most("conditions", "c_2_5_below_c_2_4", "c_2_5 <= c_2_4", c25 - c24, slack));
    run.cert(Certificate::at_most("conditions", "c_2_4_below_one_plus_c_2_5", "c_2_4 <= 1 + c_2_5", c24 - 1.0 - c25, slack));
    run.cert(Certificate::at_most("conditions", "m_2_16_at_most_one", "m_2_16 <= 1", m216, 1.0 + 1e-10 * f));

    run.enter("resolvent_scan");
    let scan_opts = ScanOptions { axis_tol: opts.tol.map(|t| t * f), ..ScanOptions::default() };
    let scan = match resolvent_scan(input, scan_opts) {
        Ok(s) => s,
        Err(e) => return run.fail("resolvent_scan", e.to_string()),
    };
    run.report.dissipativity = Some((&full_report(input, &scan)).into());
    run.report.resolvent = Some((&scan).into());
    let detected = scan.imaginary_spectrum_detected();
    let axis_cert =
        Certificate::flag("resolvent_scan", "imaginary_axis_in_resolvent_set", "iR lies in the resolvent set of L", !detected);
    run.cert(if detected {
        axis_cert.with_detail(format!("ImaginarySpectrumDetected at w = {:?}", scan.imaginary_spectrum))
    } else {
        axis_cert
    });

    let deflated;
    let op: &OperatorSpec = if opts.deflate {
        run.enter("deflate");
        let axis_tol = opts.tol.unwrap_or(1e-8 * input.norm().max(1.0)) * f;
        match riesz_deflate(input, axis_tol) {
            Ok(d) => {
                let mult_ok = d.rank == d.removed.len();
                run.cert(Certificate::flag(
                    "deflate",
                    "axis_projector_rank",
                    "the removed projector has rank equal to the algebraic multiplicity",
                    mult_ok,
                ));
                run.report.deflation = Some(DeflationSummary {
                    rank: d.rank,
                    removed: d.removed.iter().map(|z| (z.re, z.im)).collect(),
                    nodes: d.nodes.clone(),
                    deflated_dim: d.op.dim(),
                    deflated_signature: d.op.space.signature(),
                });
                if detected {
                    // the deflated operator replaces the axis certificate's verdict
                    if let Some(c) = run.report.certificates.iter_mut().find(|c| c.name == "imaginary_axis_in_resolvent_set") {
                        c.passed = true;
                        c.detail = Some(format!("deflated {} eigenvalue(s) on iR", d.rank));
                    }
                }
                deflated = d.op;
                &deflated
            }
            Err(e) => return run.fail("deflate", e.to_string()),
        }
    } else if detected {
        run.report.failure_stage = Some("resolvent_scan".into());
        run.report.failure_reason = Some("ImaginarySpectrumDetected".into());
        return run.finish();
    } else {
        input
    };

    run.enter("dichotomy");
    let scale = op.norm().max(1.0);
    let schur = match schur_dichotomy(op, op.default_tol()) {
        Ok(s) => s,
        Err(e) => return run.fail("dichotomy", e.to_string()),
    };
    let mut section = DichotomySection { schur: Some((&schur).into()), ..Default::default() };
    let res_tol = 1e-8 * scale * f;
    let r = &schur.residuals;
    run.cert(Certificate::at_most("dichotomy", "idempotency", "P^2 = P for both projections", r.idempotency, res_tol));
    run.cert(Certificate::at_most("dichotomy", "completeness", "P+ + P- = I", r.completeness, res_tol));
    run.cert(Certificate::at_most("dichotomy", "commutation", "L P = P L", r.commutation, res_tol));
    if let Some(ic) = r.inverse_commutation {
        let inv_norm = linalg::inverse(&op.l).map(|li| linalg::norm2(&li)).unwrap_or(f64::INFINITY);
        run.cert(Certificate::at_most(
            "dichotomy",
            "inverse_commutation",
            "P L^-1 = L^-1 P when 0 is in rho(L)",
            ic,
            1e-8 * inv_norm * f,
        ));
    }
    if opts.contour {
        let contour = SectorContour::for_operator(op).map(|c| match opts.contour_nodes {
            Some(k) => c.with_nodes(k),
            None => c,
        });
        match contour.and_then(|c| contour_projections(op, &c)) {
            Ok(cr) => {
                let diff = linalg::norm2(&(&cr.p_plus - &schur.p_plus));
                section.projection_difference = Some(diff);
                run.cert(Certificate::at_most(
                    "dichotomy",
                    "contour_matches_schur",
                    "the contour integral and the ordered Schur form give the same P+",
                    diff,
                    1e-6 * f,
                ));
                section.contour = Some((&cr).into());
            }
            Err(e) => {
                run.cert(
                    Certificate::flag(
                        "dichotomy",
                        "contour_matches_schur",
                        "the contour integral and the ordered Schur form give the same P+",
                        false,
                    )
                    .with_detail(e.to_string()),
                );
            }
        }
    }
    run.report.dichotomy = Some(section);

    run.enter("invariant_subspaces");
    let inv = verify_theorem_3_2(op, &schur, 1e-8 * f);
    run.report.invariant_subspaces =
        Some(InvariantSummary { passed: inv.passed, delta_plus: inv.delta_plus, delta_minus: inv.delta_minus });
    for c in inv.clauses {
        run.cert(c);
    }

    run.enter("interpolation");
    for which in Identity::ALL {
        match identity_check(op, which) {
            Ok(r) => {
                let name = format!("identity_{}", which.tag().replace('.', "_"));
                if which == Identity::Energy {
                    let dev = (r.equivalence_lower - 1.0).abs().max((r.equivalence_upper - 1.0).abs());
                    run.cert(Certificate::at_most(
                        "interpolation",
                        &name,
                        "(F1, F-1)_{1/2,2} = H with constants exactly 1",
                        dev,
                        1e-10 * f,
                    ));
                } else {
                    let ok = r.equivalence_lower > 0.0 && r.equivalence_upper.is_finite();
                    run.cert(
                        Certificate::flag("interpolation", &name, "(H1, H-1)_{1/2,2} and H are equivalent norms", ok)
                            .with_detail(format!("[{}, {}]", r.equivalence_lower, r.equivalence_upper)),
                    );
                }
                run.report.interpolation.push(InterpolationSummary {
                    identity: which.tag().into(),
                    target_label: r.target_label,
                    equivalence_lower: r.equivalence_lower,
                    equivalence_upper: r.equivalence_upper,
                });
            }
            Err(e) => run.cert(
                Certificate::flag(
                    "interpolation",
                    &format!("identity_{}", which.tag().replace('.', "_")),
                    "identity evaluated",
                    false,
                )
                .with_detail(e.to_string()),
            ),
        }
    }

    run.enter("semigroup");
    let quad_tol = opts.quad_tol * f;
    for plus in [true, false] {
        let m = if plus { &schur.m_plus } else { &schur.m_minus };
        if m.dim() == 0 {
            continue;
        }
        let side = if plus { "plus" } else { "minus" };
        let a = schur.restriction(op, plus);
        let gen = if plus { a } else { -a };
        let u0 = m.basis().column(0).into_owned();
        let outcome =
            analytic_bounds(&gen, GridParams::default()).and_then(|tr| Ok((tr, energy_identity(op, m, &u0, None, quad_tol)?)));
        match outcome {
            Ok((tr, en)) => {
                run.cert(Certificate::flag(
                    "semigroup",
                    &format!("analytic_bounds_{side}"),
                    "the restriction generates a bounded analytic semigroup",
                    tr.sup_bounds.0.is_finite() && tr.sup_bounds.1.is_finite(),
                ));
                run.cert(Certificate::at_most(
                    "semigroup",
                    &format!("energy_identity_{side}"),
                    "[u0,u0] = -2 int Re[Lv,v] dt + [v(T),v(T)]",
                    en.residual,
                    10.0 * quad_tol,
                ));
                run.cert(Certificate::flag(
                    "semigroup",
                    &format!("energy_boundary_sign_{side}"),
                    "the discarded boundary term has the sign of the subspace",
                    en.boundary_sign_ok(1e-8 * f),
                ));
                run.report.semigroup.push(SemigroupSummary {
                    side: side.into(),
                    dim: m.dim(),
                    sup_norm: tr.sup_bounds.0,
                    sup_t_norm_derivative: tr.sup_bounds.1,
                    spectral_abscissa: tr.spectral_abscissa,
                    lyapunov_constant: tr.lyapunov_constant,
                    grid_points: tr.time_grid.len(),
                    energy: EnergySummary {
                        u0_indefinite_square: en.u0_indefinite_square,
                        energy_integral: en.energy_integral,
                        boundary_term: en.boundary_term,
                        residual: en.residual,
                        horizon: en.horizon,
                        reversed: en.reversed,
                        f1_integral: en.f1_integral,
                    },
                });
            }
            Err(e) => return run.fail("semigroup", e.to_string()),
        }
    }
    match definiteness_from_energy(op, &schur, opts.energy_samples) {
        Ok(d) => {
            let dev_p = if schur.m_plus.dim() > 0 { (d.delta_plus - d.gram_delta_plus).abs() } else { 0.0 };
            let dev_m = if schur.m_minus.dim() > 0 { (d.delta_minus - d.gram_delta_minus).abs() } else { 0.0 };
            run.cert(Certificate::at_most(
                "semigroup",
                "energy_definiteness_matches_gram",
                "definiteness of M+- through the energy integrals equals the Gram value",
                dev_p.max(dev_m),
                1e-6 * f,
            ));
            run.report.definiteness = Some(DefinitenessSummary {
                energy_delta_plus: d.delta_plus,
                energy_delta_minus: d.delta_minus,
                gram_delta_plus: d.gram_delta_plus,
                gram_delta_minus: d.gram_delta_minus,
                sampled_plus: d.sampled_plus,
                sampled_minus: d.sampled_minus,
            });
        }
        Err(e) => return run.fail("semigroup", e.to_string()),
    }

    run.enter("blocks");
    // the block form is read in the coordinates of the input fundamental symmetry
    if opts.deflate && run.report.deflation.as_ref().is_some_and(|d| d.rank > 0) {
        return run.finish();
    }
    match theorem_3_8_constants(op) {
        Ok(k) => {
            let planted = (doc.metadata.get(PLANTED_C12).copied(), doc.metadata.get(PLANTED_C21).copied());
            if let (Some(p12), Some(p21)) = planted {
                let dev = (k.c_a12 - p12).abs().max((k.c_a21 - p21).abs());
                run.cert(Certificate::at_most(
                    "blocks",
                    "planted_subordination_constants",
                    "off-diagonal blocks are subordinate to the diagonal ones with the planted constants",
                    dev,
                    1e-8 * f,
                ));
            }
            run.report.blocks = Some(BlockSummary {
                c_a12: k.c_a12,
                c_a21: k.c_a21,
                c0: k.c0,
                c_a11_form: k.c_a11_form,
                c_a22_form: k.c_a22_form,
                planted_c12: planted.0,
                planted_c21: planted.1,
            });
        }
        // the block hypotheses are optional; nothing to certify
        Err(Error::BlocksNotDissipative(_)) => {}
        Err(e) => return run.fail("blocks", e.to_string()),
    }
    run.finish()
}

/// Output of the `dichotomy` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub schema_version: u32,
    pub operator: OperatorSummary,
    pub dichotomy: DichotomySection,
    pub certificates: Vec<Certificate>,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodChoice {
    Contour,
    Schur,
    Both,
}

pub fn dichotomy_report(
    op: &OperatorSpec,
    method: MethodChoice,
    tol: Option<f64>,
    contour_nodes: Option<usize>,
) -> Result<DichotomyReport> {
    let tol = tol.unwrap_or_else(|| op.default_tol());
    let mut section = DichotomySection::default();
    let mut certificates = Vec::new();
    let schur = match method {
        MethodChoice::Schur | MethodChoice::Both => Some(schur_dichotomy(op, tol)?),
        MethodChoice::Contour => None,
    };
    let contour = match method {
        MethodChoice::Contour | MethodChoice::Both => {
            let mut c = SectorContour::for_operator(op)?;
            if let Some(k) = contour_nodes {
                c = c.with_nodes(k);
            }
            Some(contour_projections(op, &c)?)
        }
        MethodChoice::Schur => None,
    };
    let res_tol = 1e-8 * op.norm().max(1.0);
    for d in schur.iter().chain(contour.iter()) {
        let tag = if d.method == crate::dichotomy::Method::Schur { "schur" } else { "contour" };
        let worst = d.residuals.idempotency.max(d.residuals.completeness).max(d.residuals.commutation);
        certificates.push(Certificate::at_most(
            "dichotomy",
            &format!("projection_algebra_{tag}"),
            "P^2 = P, P+ + P- = I, LP = PL",
            worst,
            res_tol,
        ));
    }
    if let (Some(s), Some(c)) = (&schur, &contour) {
        let diff = linalg::norm2(&(&c.p_plus - &s.p_plus));
        section.projection_difference = Some(diff);
        certificates.push(Certificate::at_most(
            "dichotomy",
            "contour_matches_schur",
            "the contour integral and the ordered Schur form give the same P+",
            diff,
            1e-6,
        ));
    }
    section.schur = schur.as_ref().map(Into::into);
    section.contour = contour.as_ref().map(Into::into);
    let passed = all_passed(&certificates);
    Ok(DichotomyReport {
        schema_version: REPORT_SCHEMA_VERSION,
        operator: OperatorSummary::of(op),
        dichotomy: section,
        certificates,
        passed,
    })
}

/// Output of the `semigroup` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemigroupReport {
    pub schema_version: u32,
    pub operator: OperatorSummary,
    pub summary: SemigroupSummary,
    pub trace: crate::semigroup::SemigroupTrace,
    pub certificates: Vec<Certificate>,
    pub passed: bool,
}

pub fn semigroup_report(op: &OperatorSpec, plus: bool, horizon: Option<f64>, quad_tol: f64) -> Result<SemigroupReport> {
    let d = schur_dichotomy(op, op.default_tol())?;
    let m = if plus { &d.m_plus } else { &d.m_minus };
    if m.dim() == 0 {
        return Err(Error::InvalidParams(format!("M{} is the zero subspace", if plus { "+" } else { "-" })));
    }
    let a = d.restriction(op, plus);
    let gen = if plus { a } else { -a };
    let tr = analytic_bounds(&gen, GridParams::default())?;
    let u0 = m.basis().column(0).into_owned();
    let en = energy_identity(op, m, &u0, horizon, quad_tol)?;
    let side = if plus { "plus" } else { "minus" };
    let certificates = vec![
        Certificate::flag(
            "semigroup",
            "analytic_bounds",
            "the restriction generates a bounded analytic semigroup",
            tr.sup_bounds.0.is_finite() && tr.sup_bounds.1.is_finite(),
        ),
        Certificate::at_most(
            "semigroup",
            "energy_identity",
            "[u0,u0] = -2 int Re[Lv,v] dt + [v(T),v(T)]",
            en.residual,
            10.0 * quad_tol,
        ),
        Certificate::flag(
            "semigroup",
            "energy_boundary_sign",
            "the discarded boundary term has the sign of the subspace",
            en.boundary_sign_ok(1e-8),
        ),
    ];
    let passed = all_passed(&certificates);
    Ok(SemigroupReport {
        schema_version: REPORT_SCHEMA_VERSION,
        operator: OperatorSummary::of(op),
        summary: SemigroupSummary {
            side: side.into(),
            dim: m.dim(),
            sup_norm: tr.sup_bounds.0,
            sup_t_norm_derivative: tr.sup_bounds.1,
            spectral_abscissa: tr.spectral_abscissa,
            lyapunov_constant: tr.lyapunov_constant,
            grid_points: tr.time_grid.len(),
            energy: EnergySummary {
                u0_indefinite_square: en.u0_indefinite_square,
                energy_integral: en.energy_integral,
                boundary_term: en.boundary_term,
                residual: en.residual,
                horizon: en.horizon,
                reversed: en.reversed,
                f1_integral: en.f1_integral,
            },
        },
        trace: tr,
        certificates,
        passed,
    })
}

/// Output of the `interp` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationReport {
    pub schema_version: u32,
    pub operator: OperatorSummary,
    pub identities: Vec<InterpolationSummary>,
}

pub fn interpolation_report(op: &OperatorSpec, which: &[Identity]) -> Result<InterpolationReport> {
    let mut identities = Vec::new();
    for &w in which {
        let r = identity_check(op, w)?;
        identities.push(InterpolationSummary {
            identity: w.tag().into(),
            target_label: r.target_label,
            equivalence_lower: r.equivalence_lower,
            equivalence_upper: r.equivalence_upper,
        });
    }
    Ok(InterpolationReport { schema_version: REPORT_SCHEMA_VERSION, operator: OperatorSummary::of(op), identities })
}

#[cfg(test)]
mod tests;
