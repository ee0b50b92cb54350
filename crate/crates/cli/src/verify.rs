//! The invariant suite behind `krein verify`.
//!
//! Each trial generates a clean Riesz instance and a defective sibling from
//! one seed and evaluates every property on them. A property yields a value
//! per trial and passes when the value is finite and at most its limit.

use std::fmt::Write as _;
use std::sync::Arc;

use krein_core::generate::{
    gen_defective_family, gen_metric, gen_operator_pair, Defect, GenSpec, InstanceRng,
    SignaturePolicy,
};
use krein_core::gram::{absolute_sum_bessel_test, gram_matrices, GramPair};
use krein_core::numerics::{hermitian_eig, spectral_norm};
use krein_core::riesz::{
    biorthogonality_residual, construct_riesz, factor_riesz, frame_inequality_bounds,
    optimal_frame_bounds, riesz_via_gram, riesz_via_inequalities,
};
use krein_core::{
    ComplexMatrix, FailureReason, KreinSpace, KreinVector, Result as CoreResult, RieszCertificate,
    Side, Tolerances, VectorFamily, C64,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{reconstruction_residuals, sample_in_half};

/// A deliberately injected bug, used to check that the suite notices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    None,
    /// Negates the minus-half Gram matrix before it is checked.
    FlipGramMinus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Property {
    TrialErrors,
    Decomposition,
    GramOracle,
    OptimalBounds,
    CleanAgreement,
    DefectAgreement,
    PlantedReason,
    Reconstruction,
    Biorthogonality,
    BesselTightness,
    SpectralLeAbsSum,
    BesselLeAbsSum,
}

impl Property {
    pub const ALL: [Property; 12] = [
        Property::TrialErrors,
        Property::Decomposition,
        Property::GramOracle,
        Property::OptimalBounds,
        Property::CleanAgreement,
        Property::DefectAgreement,
        Property::PlantedReason,
        Property::Reconstruction,
        Property::Biorthogonality,
        Property::BesselTightness,
        Property::SpectralLeAbsSum,
        Property::BesselLeAbsSum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::TrialErrors => "trial_errors",
            Property::Decomposition => "decomposition",
            Property::GramOracle => "gram_oracle",
            Property::OptimalBounds => "optimal_bounds",
            Property::CleanAgreement => "clean_agreement",
            Property::DefectAgreement => "defect_agreement",
            Property::PlantedReason => "planted_reason",
            Property::Reconstruction => "reconstruction",
            Property::Biorthogonality => "biorthogonality",
            Property::BesselTightness => "bessel_tightness",
            Property::SpectralLeAbsSum => "spectral_le_abs_sum",
            Property::BesselLeAbsSum => "bessel_le_abs_sum",
        }
    }

    /// What the value measures.
    pub fn description(self) -> &'static str {
        match self {
            Property::TrialErrors => "errors raised while evaluating a trial",
            Property::Decomposition => "max |W^H G W - diag(±1)|",
            Property::GramOracle => "relative Frobenius gap between Gram matrices and (C^H C)^T",
            Property::OptimalBounds => "max relative gap between inequality and operator bounds",
            Property::CleanAgreement => "clean instance not accepted by every route",
            Property::DefectAgreement => "defective instance not rejected by every route",
            Property::PlantedReason => "reported failure reason differs from the planted one",
            Property::Reconstruction => "max reconstruction residual / j_norm",
            Property::Biorthogonality => "max |[f_n, g_m] - (±δ)|",
            Property::BesselTightness => "max relative gap between sampled/top quotient and B",
            Property::SpectralLeAbsSum => "spectral norm / entry sum of a random Hermitian matrix",
            Property::BesselLeAbsSum => "max(B, B') / absolute-sum bound",
        }
    }

    pub fn limit(self, tol: &Tolerances) -> f64 {
        match self {
            Property::TrialErrors
            | Property::CleanAgreement
            | Property::DefectAgreement
            | Property::PlantedReason => 0.0,
            Property::Decomposition => 1e-9,
            Property::GramOracle => 1e-10,
            Property::OptimalBounds => 1e-8,
            Property::Reconstruction => tol.recon_tol,
            Property::Biorthogonality => 1e-9,
            Property::BesselTightness => 1e-8,
            Property::SpectralLeAbsSum | Property::BesselLeAbsSum => 1.0 + 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub trials: usize,
    pub seed: u64,
    pub max_dim: usize,
    /// Random `f` per half for the reconstruction check.
    pub recon_samples: usize,
    /// Random `f` per half for the Bessel tightness check.
    pub bessel_samples: usize,
    pub tol: Tolerances,
    pub mutation: Mutation,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            trials: 200,
            seed: 0,
            max_dim: 12,
            recon_samples: 20,
            bessel_samples: 50,
            tol: Tolerances::default(),
            mutation: Mutation::None,
        }
    }
}

/// Seed of trial `i`.
pub fn trial_seed(base: u64, i: usize) -> u64 {
    base ^ (i as u64)
        .wrapping_add(1)
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    pub signature: (usize, usize),
    pub defect: Defect,
    pub values: Vec<(Property, f64)>,
    pub errors: Vec<String>,
}

impl TrialRecord {
    pub fn value(&self, p: Property) -> Option<f64> {
        self.values.iter().find(|(q, _)| *q == p).map(|&(_, v)| v)
    }
}

fn feasible_defects(p: usize, q: usize) -> Vec<Defect> {
    let mut out = Vec::new();
    if p + q >= 2 {
        out.push(Defect::DropVector);
    }
    out.push(Defect::DuplicateVector);
    if p >= 1 && q >= 1 {
        out.push(Defect::NeutralInject);
        out.push(Defect::MixHalves);
    }
    out
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// `max |Wᴴ G W − diag(signs)|`.
pub fn decomposition_error(space: &KreinSpace) -> f64 {
    let fd = space.fd();
    let g = space.metric().matrix();
    let w = fd.w();
    let jw = &(&w.adjoint() * g) * w;
    let signs: Vec<f64> = fd.signs().iter().map(|&s| f64::from(s)).collect();
    (&jw - &ComplexMatrix::from_real_diag(&signs)).max_abs()
}

/// Gram matrices rebuilt from canonical coordinates: `(CᴴC)ᵀ` on `I₊`,
/// `−(DᴴD)ᵀ` on `I₋`.
pub fn gram_oracle(fam: &VectorFamily, side: Side) -> CoreResult<ComplexMatrix> {
    let c = fam.canonical_matrix(side)?;
    Ok((&c.adjoint() * &c)
        .transpose()
        .scale(C64::new(side.sign(), 0.0)))
}

/// Relative Frobenius gap between `gp` and the canonical-coordinate oracle,
/// worst over both halves.
pub fn gram_oracle_gap(fam: &VectorFamily, gp: &GramPair) -> CoreResult<f64> {
    let mut worst: f64 = 0.0;
    for side in [Side::Plus, Side::Minus] {
        let oracle = gram_oracle(fam, side)?;
        let scale = oracle.norm_fro();
        if scale == 0.0 {
            continue;
        }
        worst = worst.max((gp.matrix(side) - &oracle).norm_fro() / scale);
    }
    Ok(worst)
}

/// `Σ_{n ∈ I±} |[f, f_n]|² / ‖f‖²_J`.
pub fn bessel_quotient(fam: &VectorFamily, f: &KreinVector, side: Side) -> CoreResult<f64> {
    let space = fam.space();
    let mut total = 0.0;
    for fn_ in fam.half(side) {
        total += space.inner(f, fn_)?.norm_sqr();
    }
    Ok(total / space.fd().j_norm(f)?.powi(2))
}

/// The maximizer of the Bessel quotient on one half: the top eigenvector of
/// `CCᴴ`, embedded.
pub fn bessel_maximizer(fam: &VectorFamily, side: Side) -> CoreResult<KreinVector> {
    let c = fam.canonical_matrix(side)?;
    let cc = (&c * &c.adjoint()).hermitian_part();
    let eig = hermitian_eig(&cc, fam.space().tol())?;
    let top = eig.vectors.column(cc.rows() - 1);
    fam.space().fd().embed(&top, side)
}

/// Worst relative gap between the sampled/top Bessel quotients and `B`:
/// sampled quotients may not exceed `B`, the maximizer must reach it.
pub fn bessel_tightness_gap(
    fam: &VectorFamily,
    gp: &GramPair,
    rng: &mut InstanceRng,
    samples: usize,
) -> CoreResult<f64> {
    let mut worst: f64 = 0.0;
    for side in [Side::Plus, Side::Minus] {
        if fam.space().fd().half_dim(side) == 0 || fam.indices(side).is_empty() {
            continue;
        }
        let b = gp.norm(side);
        for _ in 0..samples {
            let f = sample_in_half(rng, fam.space(), side)?;
            worst = worst.max(bessel_quotient(fam, &f, side)? / b - 1.0);
        }
        let top = bessel_maximizer(fam, side)?;
        worst = worst.max(rel(bessel_quotient(fam, &top, side)?, b));
    }
    Ok(worst)
}

/// Random Hermitian matrix with Gaussian entries.
pub fn random_hermitian(rng: &mut InstanceRng, n: usize) -> ComplexMatrix {
    let a = ComplexMatrix::from_vec(n, n, rng.complex_gaussian_vec(n * n)).expect("finite");
    (&a + &a.adjoint()).scale(C64::new(0.5, 0.0))
}

fn space_for(spec: &GenSpec, tol: Tolerances) -> CoreResult<Arc<KreinSpace>> {
    Ok(Arc::new(KreinSpace::new(gen_metric(spec, tol)?)?))
}

struct Recorder {
    values: Vec<(Property, f64)>,
    errors: Vec<String>,
}

impl Recorder {
    fn record(&mut self, p: Property, v: CoreResult<f64>) {
        match v {
            Ok(v) => self.values.push((p, v)),
            Err(e) => self.errors.push(format!("{}: {e}", p.name())),
        }
    }
}

fn flag(b: bool) -> f64 {
    if b {
        0.0
    } else {
        1.0
    }
}

/// Evaluates every property on trial `index`.
pub fn run_trial(cfg: &SuiteConfig, index: usize) -> TrialRecord {
    let seed = trial_seed(cfg.seed, index);
    let tol = cfg.tol;
    let clean_spec = GenSpec {
        seed,
        dim_range: (1, cfg.max_dim),
        signature: SignaturePolicy::Random,
        ..GenSpec::default()
    };
    let mut rec = Recorder {
        values: Vec::new(),
        errors: Vec::new(),
    };
    let space = match space_for(&clean_spec, tol) {
        Ok(s) => s,
        Err(e) => {
            return TrialRecord {
                index,
                seed,
                signature: (0, 0),
                defect: Defect::None,
                values: vec![(Property::TrialErrors, 1.0)],
                errors: vec![format!("metric: {e}")],
            }
        }
    };
    let (p, q) = (space.fd().p(), space.fd().q());
    let defects = feasible_defects(p, q);
    let defect = defects[index % defects.len()];
    let mut rng = InstanceRng::new(seed, 4);

    rec.values
        .push((Property::Decomposition, decomposition_error(&space)));

    let clean = (|| -> CoreResult<(krein_core::OperatorPair, VectorFamily)> {
        let ops = gen_operator_pair(&clean_spec, &space)?;
        let fam = construct_riesz(&ops, &space)?;
        Ok((ops, fam))
    })();
    match clean {
        Err(e) => rec.errors.push(format!("generate: {e}")),
        Ok((ops, fam)) => {
            let gp = gram_matrices(&fam).map(|mut gp| {
                if cfg.mutation == Mutation::FlipGramMinus {
                    gp.g_minus = gp.g_minus.scale(C64::new(-1.0, 0.0));
                }
                gp
            });
            match gp {
                Err(e) => rec.errors.push(format!("gram: {e}")),
                Ok(gp) => {
                    rec.record(Property::GramOracle, gram_oracle_gap(&fam, &gp));
                    rec.record(
                        Property::BesselTightness,
                        bessel_tightness_gap(&fam, &gp, &mut rng, cfg.bessel_samples),
                    );
                    rec.record(
                        Property::BesselLeAbsSum,
                        absolute_sum_bessel_test(&fam).map(|s| gp.norm_plus.max(gp.norm_minus) / s),
                    );
                }
            }
            rec.record(
                Property::OptimalBounds,
                frame_inequality_bounds(&fam).map(|b| {
                    let opt = optimal_frame_bounds(&ops);
                    b.as_array()
                        .iter()
                        .zip(opt.as_array())
                        .map(|(&x, y)| rel(x, y))
                        .fold(0.0, f64::max)
                }),
            );
            let ineq = riesz_via_inequalities(&fam, &tol);
            let gram = riesz_via_gram(&fam, &tol);
            let factor = factor_riesz(&fam, &tol);
            rec.values.push((
                Property::CleanAgreement,
                flag(ineq.is_riesz && gram.is_riesz && factor.is_ok()),
            ));
            match RieszCertificate::from_family(&fam) {
                Err(e) => rec.errors.push(format!("certificate: {e}")),
                Ok(cert) => {
                    rec.record(
                        Property::Biorthogonality,
                        biorthogonality_residual(&cert.family, &cert.duals),
                    );
                    rec.record(
                        Property::Reconstruction,
                        reconstruction_residuals(
                            &cert.family,
                            &cert.duals,
                            &mut rng,
                            cfg.recon_samples,
                        )
                        .map(|(a, b)| a.max(b)),
                    );
                }
            }
        }
    }

    let defect_spec = GenSpec {
        defect,
        ..clean_spec.clone()
    };
    match gen_defective_family(&defect_spec, &space) {
        Err(e) => rec.errors.push(format!("defect: {e}")),
        Ok(planted) => {
            let fam = &planted.family;
            let ineq = riesz_via_inequalities(fam, &tol);
            let gram = riesz_via_gram(fam, &tol);
            let factor = factor_riesz(fam, &tol);
            rec.values.push((
                Property::DefectAgreement,
                flag(!ineq.is_riesz && !gram.is_riesz && factor.is_err()),
            ));
            rec.values.push((
                Property::PlantedReason,
                flag(
                    ineq.failure_reason == planted.expected
                        && gram.failure_reason == planted.expected
                        && planted.expected != FailureReason::None,
                ),
            ));
        }
    }

    let n = rng.index_in(1, cfg.max_dim);
    let h = random_hermitian(&mut rng, n);
    rec.record(
        Property::SpectralLeAbsSum,
        Ok(spectral_norm(&h) / h.abs_sum()),
    );

    rec.values
        .push((Property::TrialErrors, rec.errors.len() as f64));
    rec.values.sort_by_key(|&(p, _)| p);
    TrialRecord {
        index,
        seed,
        signature: (p, q),
        defect,
        values: rec.values,
        errors: rec.errors,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertySummary {
    pub name: String,
    pub description: String,
    pub limit: f64,
    pub checked: usize,
    pub passed: usize,
    /// Largest value seen; the limit applies to it.
    pub worst: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub trials: usize,
    pub seed: u64,
    pub max_dim: usize,
    pub properties: Vec<PropertySummary>,
    pub violations: usize,
    /// `(trial, message)` for every trial error.
    pub errors: Vec<(usize, String)>,
}

pub fn passes(value: f64, limit: f64) -> bool {
    value.is_finite() && value <= limit
}

/// Runs every trial (in parallel, results in trial order).
pub fn run_trials(cfg: &SuiteConfig) -> Vec<TrialRecord> {
    (0..cfg.trials)
        .into_par_iter()
        .map(|i| run_trial(cfg, i))
        .collect()
}

pub fn summarize(cfg: &SuiteConfig, records: &[TrialRecord]) -> Summary {
    let properties: Vec<PropertySummary> = Property::ALL
        .iter()
        .map(|&p| {
            let limit = p.limit(&cfg.tol);
            let vals: Vec<f64> = records.iter().filter_map(|r| r.value(p)).collect();
            let worst = vals.iter().fold(0.0f64, |w, &v| {
                if v.is_nan() || w.is_nan() {
                    f64::NAN
                } else {
                    w.max(v)
                }
            });
            PropertySummary {
                name: p.name().to_owned(),
                description: p.description().to_owned(),
                limit,
                checked: vals.len(),
                passed: vals.iter().filter(|&&v| passes(v, limit)).count(),
                worst,
            }
        })
        .collect();
    let violations = properties.iter().map(|p| p.checked - p.passed).sum();
    let errors = records
        .iter()
        .flat_map(|r| r.errors.iter().map(move |e| (r.index, e.clone())))
        .collect();
    Summary {
        trials: cfg.trials,
        seed: cfg.seed,
        max_dim: cfg.max_dim,
        properties,
        violations,
        errors,
    }
}

pub fn run_suite(cfg: &SuiteConfig) -> Summary {
    summarize(cfg, &run_trials(cfg))
}

impl Summary {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "verify: {} trials, seed {}, max dim {}",
            self.trials, self.seed, self.max_dim
        );
        for p in &self.properties {
            let _ = writeln!(
                s,
                "  {:<20} {:>4}/{:<4} worst {:<12.5e} limit {:.1e}",
                p.name, p.passed, p.checked, p.worst, p.limit
            );
        }
        for (i, e) in &self.errors {
            let _ = writeln!(s, "  error in trial {i}: {e}");
        }
        let _ = writeln!(s, "violations: {}", self.violations);
        s
    }
}

/// One line per trial: seed, signature, defect and every value.
pub fn render_log(records: &[TrialRecord]) -> String {
    let mut s = String::new();
    for r in records {
        let _ = write!(
            s,
            "trial {} seed {} signature ({}, {}) defect {}",
            r.index, r.seed, r.signature.0, r.signature.1, r.defect
        );
        for (p, v) in &r.values {
            let _ = write!(s, " {}={:e}", p.name(), v);
        }
        s.push('\n');
    }
    s
}
