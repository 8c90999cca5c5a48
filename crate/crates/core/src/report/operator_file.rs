//! Operator files: a JSON document with `schema_version`, `dim`, `J` (either
//! `{"signature": [p, q]}` or `{"matrix": {"re": .., "im": ..}}`), `L` as
//! `{"re": .., "im": ..}`, an optional `label` and an optional `metadata`
//! map of numbers.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use super::json::to_canonical_string;
use crate::dissipativity::OperatorSpec;
use crate::error::{Error, Result};
use crate::krein::KreinSpace;
use crate::linalg::{c, CMat};

pub const OPERATOR_SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone)]
pub struct OperatorDocument {
    pub op: OperatorSpec,
    /// Free numeric annotations, e.g. planted constants written by `generate`.
    pub metadata: BTreeMap<String, f64>,
}

impl OperatorDocument {
    pub fn new(op: OperatorSpec) -> OperatorDocument {
        OperatorDocument { op, metadata: BTreeMap::new() }
    }
}

fn schema(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::Schema(format!("{path}: {msg}"))
}

fn number(v: &Value, path: &str) -> Result<f64> {
    let x = v.as_f64().ok_or_else(|| schema(path, "expected a number"))?;
    if !x.is_finite() {
        return Err(schema(path, "expected a finite number"));
    }
    Ok(x)
}

fn count(v: &Value, path: &str) -> Result<usize> {
    v.as_u64().map(|x| x as usize).ok_or_else(|| schema(path, "expected a nonnegative integer"))
}

fn object<'a>(v: &'a Value, path: &str, allowed: &[&str]) -> Result<&'a serde_json::Map<String, Value>> {
    let m = v.as_object().ok_or_else(|| schema(path, "expected an object"))?;
    if let Some(k) = m.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(schema(path, format!("unknown field {k:?}")));
    }
    Ok(m)
}

fn real_rows(v: &Value, path: &str, n: usize) -> Result<Vec<f64>> {
    let rows = v.as_array().ok_or_else(|| schema(path, "expected an array of rows"))?;
    if rows.len() != n {
        return Err(schema(path, format!("expected {n} rows, found {}", rows.len())));
    }
    let mut out = Vec::with_capacity(n * n);
    for (i, row) in rows.iter().enumerate() {
        let rp = format!("{path}[{i}]");
        let row = row.as_array().ok_or_else(|| schema(&rp, "expected an array"))?;
        if row.len() != n {
            return Err(schema(&rp, format!("expected {n} entries, found {}", row.len())));
        }
        for (j, x) in row.iter().enumerate() {
            out.push(number(x, &format!("{rp}[{j}]"))?);
        }
    }
    Ok(out)
}

fn complex_matrix(v: &Value, path: &str, n: usize) -> Result<CMat> {
    let m = object(v, path, &["re", "im"])?;
    let re = real_rows(m.get("re").ok_or_else(|| schema(path, "missing field \"re\""))?, &format!("{path}.re"), n)?;
    let im = match m.get("im") {
        Some(x) => real_rows(x, &format!("{path}.im"), n)?,
        None => vec![0.0; n * n],
    };
    Ok(CMat::from_fn(n, n, |i, j| c(re[i * n + j], im[i * n + j])))
}

/// Parses an operator document. Syntax errors carry the line and column;
/// structural problems are `Schema`; a `J` that is not a fundamental
/// symmetry is `InvariantViolation`.
pub fn parse_operator(text: &str) -> Result<OperatorDocument> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| Error::Parse { location: format!("line {} column {}", e.line(), e.column()), message: e.to_string() })?;
    let m = object(&root, "$", &["schema_version", "dim", "label", "J", "L", "metadata"])?;
    let version =
        count(m.get("schema_version").ok_or_else(|| schema("$", "missing field \"schema_version\""))?, "$.schema_version")?;
    if version as u64 != OPERATOR_SCHEMA_VERSION {
        return Err(schema("$.schema_version", format!("unsupported version {version}")));
    }
    let n = count(m.get("dim").ok_or_else(|| schema("$", "missing field \"dim\""))?, "$.dim")?;
    if n == 0 {
        return Err(schema("$.dim", "must be positive"));
    }
    let label = match m.get("label") {
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(schema("$.label", "expected a string")),
        None => String::new(),
    };
    let jv = object(m.get("J").ok_or_else(|| schema("$", "missing field \"J\""))?, "$.J", &["signature", "matrix"])?;
    let space = match (jv.get("signature"), jv.get("matrix")) {
        (Some(sig), None) => {
            let a = sig.as_array().filter(|a| a.len() == 2).ok_or_else(|| schema("$.J.signature", "expected [p, q]"))?;
            let (p, q) = (count(&a[0], "$.J.signature[0]")?, count(&a[1], "$.J.signature[1]")?);
            if p + q != n {
                return Err(schema("$.J.signature", format!("p + q = {} does not match dim {n}", p + q)));
            }
            KreinSpace::from_signature(p, q)?
        }
        (None, Some(mat)) => {
            let j = complex_matrix(mat, "$.J.matrix", n)?;
            KreinSpace::from_matrix(j).map_err(|e| match e {
                Error::NotInvolutive { defect, eigenvalue } => Error::InvariantViolation(format!(
                    "J is not an involution: eigenvalue {eigenvalue} is not +-1 (|J^2 - I| = {defect:.3e})"
                )),
                Error::NotHermitian { defect } => Error::InvariantViolation(format!("J is not Hermitian (defect {defect:.3e})")),
                other => other,
            })?
        }
        _ => return Err(schema("$.J", "expected exactly one of \"signature\" or \"matrix\"")),
    };
    let l = complex_matrix(m.get("L").ok_or_else(|| schema("$", "missing field \"L\""))?, "$.L", n)?;
    let mut metadata = BTreeMap::new();
    if let Some(md) = m.get("metadata") {
        let md = md.as_object().ok_or_else(|| schema("$.metadata", "expected an object"))?;
        for (k, v) in md {
            metadata.insert(k.clone(), number(v, &format!("$.metadata.{k}"))?);
        }
    }
    let op = OperatorSpec::new(l, space, label).map_err(|e| Error::Schema(e.to_string()))?;
    Ok(OperatorDocument { op, metadata })
}

pub fn load_operator_document(path: &Path) -> Result<OperatorDocument> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_operator(&text)
}

pub fn load_operator(path: &Path) -> Result<OperatorSpec> {
    Ok(load_operator_document(path)?.op)
}

#[derive(Serialize)]
struct MatrixOut {
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl MatrixOut {
    fn of(a: &CMat) -> MatrixOut {
        let rows = |f: fn(&num_complex::Complex64) -> f64| {
            (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| f(&a[(i, j)])).collect()).collect()
        };
        MatrixOut { re: rows(|z| z.re), im: rows(|z| z.im) }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "snake_case")]
enum JOut {
    Signature([usize; 2]),
    Matrix(MatrixOut),
}

#[derive(Serialize)]
struct DocumentOut<'a> {
    schema_version: u64,
    dim: usize,
    label: &'a str,
    #[serde(rename = "J")]
    j: JOut,
    #[serde(rename = "L")]
    l: MatrixOut,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    metadata: &'a BTreeMap<String, f64>,
}

/// Canonical text; `parse_operator` followed by this is byte-stable.
pub fn operator_to_string(doc: &OperatorDocument) -> Result<String> {
    let op = &doc.op;
    let (p, q) = op.space.signature();
    let canonical = KreinSpace::from_signature(p, q)?;
    let j = if canonical.j() == op.space.j() { JOut::Signature([p, q]) } else { JOut::Matrix(MatrixOut::of(op.space.j())) };
    to_canonical_string(&DocumentOut {
        schema_version: OPERATOR_SCHEMA_VERSION,
        dim: op.dim(),
        label: &op.label,
        j,
        l: MatrixOut::of(&op.l),
        metadata: &doc.metadata,
    })
}

/// Writes through a temporary file in the target directory and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

pub fn save_operator(doc: &OperatorDocument, path: &Path) -> Result<()> {
    write_atomic(path, operator_to_string(doc)?.as_bytes())
}
