//! On-disk formats: instance files in and reports out, both JSON tagged with
//! `"version": "krein/1"`. Complex numbers are always `[re, im]` arrays.

use std::sync::Arc;

use krein_core::generate::Defect;
use krein_core::riesz::{construct_riesz, FailureReason, FrameBounds, OperatorPair};
use krein_core::{
    ComplexMatrix, KreinMetric, KreinSpace, KreinVector, Tolerances, VectorFamily, C64,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const FORMAT_VERSION: &str = "krein/1";

/// `[re, im]`.
pub type Complex = [f64; 2];

pub fn to_pair(z: C64) -> Complex {
    [z.re, z.im]
}

pub fn from_pair(p: &Complex) -> C64 {
    C64::new(p[0], p[1])
}

pub fn vector_to_json(v: &KreinVector) -> Vec<Complex> {
    v.coords().iter().map(|&z| to_pair(z)).collect()
}

pub fn matrix_to_json(m: &ComplexMatrix) -> Vec<Vec<Complex>> {
    (0..m.rows())
        .map(|i| m.row(i).into_iter().map(to_pair).collect())
        .collect()
}

/// Parses a square matrix given as rows; `expected` pins the size when known.
pub fn matrix_from_json(
    rows: &[Vec<Complex>],
    what: &str,
    expected: Option<usize>,
) -> Result<ComplexMatrix, CliError> {
    let n = rows.len();
    if let Some(e) = expected {
        if n != e {
            return Err(CliError::Schema(format!(
                "{what}: expected {e} rows, found {n}"
            )));
        }
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(CliError::Schema(format!(
                "{what}: row {i} has {} entries, expected {n} (matrix must be square)",
                row.len()
            )));
        }
    }
    let data = rows.iter().flatten().map(from_pair).collect();
    ComplexMatrix::from_vec(n, n, data).map_err(|e| CliError::Schema(format!("{what}: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSpec {
    /// `G = diag(+1 × p, −1 × q)`.
    Signature([usize; 2]),
    /// Dense Hermitian `G`, row by row.
    Matrix(Vec<Vec<Complex>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorsSpec {
    pub u_plus: Vec<Vec<Complex>>,
    pub u_minus: Vec<Vec<Complex>>,
}

/// Provenance of generated instances; ignored by the analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceMeta {
    pub seed: u64,
    pub cond_cap: f64,
    pub defect: String,
    pub expected_failure: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub version: String,
    pub metric: MetricSpec,
    #[serde(default)]
    pub family: Vec<Vec<Complex>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operators: Option<OperatorsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<InstanceMeta>,
}

/// A validated instance ready for analysis.
#[derive(Debug, Clone)]
pub struct Instance {
    pub space: Arc<KreinSpace>,
    pub family: VectorFamily,
    pub operators: Option<OperatorPair>,
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let file: InstanceFile = serde_json::from_str(text).map_err(|e| CliError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if file.version != FORMAT_VERSION {
            return Err(CliError::Schema(format!(
                "unsupported version {:?}, expected {FORMAT_VERSION:?}",
                file.version
            )));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }

    /// Builds the space, the family and the optional operators. When the
    /// family is empty but operators are given, the family is
    /// `construct_riesz(operators)`.
    pub fn build(&self, tol: Tolerances) -> Result<Instance, CliError> {
        let metric = match &self.metric {
            MetricSpec::Signature([p, q]) => {
                if p + q == 0 {
                    return Err(CliError::Schema(
                        "signature [0, 0] has no dimensions".into(),
                    ));
                }
                KreinMetric::signature(*p, *q, tol)
            }
            MetricSpec::Matrix(rows) => {
                let g = matrix_from_json(rows, "metric.matrix", None)?;
                KreinMetric::new(g, tol)
            }
        }
        .map_err(|e| CliError::Schema(format!("metric: {e}")))?;
        let space = Arc::new(
            KreinSpace::new(metric).map_err(|e| CliError::Schema(format!("metric: {e}")))?,
        );
        let n = space.dim();

        let operators = match &self.operators {
            None => None,
            Some(ops) => {
                let fd = space.fd();
                let up = matrix_from_json(&ops.u_plus, "operators.u_plus", Some(fd.p()))?;
                let um = matrix_from_json(&ops.u_minus, "operators.u_minus", Some(fd.q()))?;
                Some(
                    OperatorPair::new(up, um, &tol)
                        .map_err(|e| CliError::Schema(format!("operators: {e}")))?,
                )
            }
        };

        let family = if self.family.is_empty() {
            match &operators {
                Some(ops) => construct_riesz(ops, &space)
                    .map_err(|e| CliError::Schema(format!("operators: {e}")))?,
                None => {
                    return Err(CliError::Schema(
                        "instance needs a nonempty family or operators".into(),
                    ))
                }
            }
        } else {
            let mut vectors = Vec::with_capacity(self.family.len());
            for (k, v) in self.family.iter().enumerate() {
                if v.len() != n {
                    return Err(CliError::Schema(format!(
                        "family[{k}] has length {}, metric dimension is {n}",
                        v.len()
                    )));
                }
                let coords = v.iter().map(from_pair).collect();
                vectors.push(
                    KreinVector::new(coords)
                        .map_err(|e| CliError::Schema(format!("family[{k}]: {e}")))?,
                );
            }
            VectorFamily::split(Arc::clone(&space), vectors)
                .map_err(|e| CliError::Schema(format!("family: {e}")))?
        };

        Ok(Instance {
            space,
            family,
            operators,
        })
    }
}

impl InstanceMeta {
    pub fn new(seed: u64, cond_cap: f64, defect: Defect, expected: FailureReason) -> Self {
        Self {
            seed,
            cond_cap,
            defect: defect.as_str().to_owned(),
            expected_failure: expected.as_str().to_owned(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub a: f64,
    pub b: f64,
    pub a_prime: f64,
    pub b_prime: f64,
}

impl From<FrameBounds> for Bounds {
    fn from(f: FrameBounds) -> Self {
        Self {
            a: f.a,
            b: f.b,
            a_prime: f.a_prime,
            b_prime: f.b_prime,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub i_plus: Vec<usize>,
    pub i_minus: Vec<usize>,
    pub neutral: Vec<usize>,
    /// Per index: does `f_n` lie in the half its class requires.
    pub membership: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompletenessReport {
    pub plus: bool,
    pub minus: bool,
    pub total: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GramReport {
    pub norm_plus: f64,
    pub norm_minus: f64,
    pub sigma_min_plus: f64,
    pub sigma_min_minus: f64,
    /// Bessel bounds `(B, B′)` read off the Gram norms.
    pub bessel_b: f64,
    pub bessel_b_prime: f64,
    /// `Σ_{j,n} |[f_j, f_n]|` over the whole family.
    pub absolute_sum_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub is_riesz: bool,
    pub failure_reason: String,
    pub margin_plus: f64,
    pub margin_minus: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Bounds>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictsReport {
    pub inequalities: VerdictReport,
    pub gram: VerdictReport,
    pub factorization: FactorizationReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub samples_per_half: usize,
    /// Largest `‖reconstruct(f) − f‖_J / ‖f‖_J` per half.
    pub max_residual_plus: f64,
    pub max_residual_minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub u_plus: Vec<Vec<Complex>>,
    pub u_minus: Vec<Vec<Complex>>,
    pub optimal_bounds: Bounds,
    /// Duals aligned with the family order.
    pub duals: Vec<Vec<Complex>>,
    /// `max |[f_n, g_m] ∓ δ_nm|`.
    pub biorthogonality_residual: f64,
    pub reconstruction: ReconstructionReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub analyze_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certify_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub dim: usize,
    pub signature: [usize; 2],
    pub family_size: usize,
    pub split: SplitReport,
    pub completeness: CompletenessReport,
    pub gram: GramReport,
    pub verdicts: VerdictsReport,
    /// Optimal synthesis constants, present when the family splits cleanly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Bounds>,
    /// `optimal_frame_bounds` of the operators given in the instance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator_bounds: Option<Bounds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Output of `duals` / `certify --duals-only`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualsReport {
    pub version: String,
    pub duals: Vec<Vec<Complex>>,
    pub biorthogonality_residual: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_signature_instance() {
        let text = r#"{
            "version": "krein/1",
            "metric": {"signature": [1, 1]},
            "family": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]
        }"#;
        let file = InstanceFile::parse(text).unwrap();
        assert_eq!(file.metric, MetricSpec::Signature([1, 1]));
        let inst = file.build(Tolerances::default()).unwrap();
        assert_eq!(inst.family.i_plus(), &[0]);
        assert_eq!(inst.family.i_minus(), &[1]);
    }

    #[test]
    fn operators_alone_build_the_family() {
        let text = r#"{
            "version": "krein/1",
            "metric": {"matrix": [[[1, 0], [0, 0]], [[0, 0], [-1, 0]]]},
            "operators": {"u_plus": [[[2, 0]]], "u_minus": [[[0, 1]]]}
        }"#;
        let inst = InstanceFile::parse(text)
            .unwrap()
            .build(Tolerances::default())
            .unwrap();
        assert_eq!(inst.family.len(), 2);
        assert_eq!(inst.family.vectors()[1].coords()[1], C64::new(0.0, 1.0));
    }

    #[test]
    fn schema_errors() {
        let cases = [
            // wrong version
            r#"{"version": "krein/2", "metric": {"signature": [1, 0]}, "family": [[[1, 0]]]}"#,
            // vector length
            r#"{"version": "krein/1", "metric": {"signature": [1, 1]}, "family": [[[1, 0]]]}"#,
            // non-Hermitian metric
            r#"{"version": "krein/1", "metric": {"matrix": [[[1, 0], [1, 0]], [[0, 0], [1, 0]]]}, "family": [[[1, 0], [0, 0]]]}"#,
            // nothing to analyze
            r#"{"version": "krein/1", "metric": {"signature": [1, 0]}}"#,
            // operator of the wrong size
            r#"{"version": "krein/1", "metric": {"signature": [1, 1]}, "operators": {"u_plus": [], "u_minus": [[[1, 0]]]}}"#,
        ];
        for text in cases {
            let err =
                InstanceFile::parse(text).and_then(|f| f.build(Tolerances::default()).map(|_| ()));
            assert!(matches!(err, Err(CliError::Schema(_))), "{text}: {err:?}");
        }
    }

    #[test]
    fn malformed_json_reports_location() {
        let err = InstanceFile::parse("{\n  \"version\": \"krein/1\",\n  oops\n}").unwrap_err();
        match err {
            CliError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(
            InstanceFile::parse(
                r#"{"version": "krein/1", "metric": {"signature": [1, 0]}, "extra": 1}"#
            ),
            Err(CliError::Parse { .. })
        ));
    }
}
