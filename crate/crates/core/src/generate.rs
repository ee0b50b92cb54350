//! Seeded generators for metrics, operator pairs and defective families.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`) seeded with
//! `seed_from_u64(seed)`, one stream per artifact: stream 0 for the metric,
//! 1 for the operator pair, 2 for defect placement. Uniform variates are
//! `(next_u64 >> 11) · 2⁻⁵³`; Gaussians use the cosine branch of Box–Muller
//! on two uniforms; complex Gaussians are `(x + iy)/√2`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{KreinError, Result};
use crate::family::VectorFamily;
use crate::metric::{KreinMetric, KreinSpace, KreinVector, Side};
use crate::numerics::{dot, norm2, ComplexMatrix, Tolerances, C64};
use crate::riesz::{construct_riesz, FailureReason, OperatorPair};

pub const MAX_DIM: usize = 64;

const METRIC_STREAM: u64 = 0;
const OPERATOR_STREAM: u64 = 1;
const DEFECT_STREAM: u64 = 2;

/// How many positive and negative directions a generated metric has.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignaturePolicy {
    Random,
    Fixed(usize, usize),
}

/// A planted defect that turns a Riesz family into a non-Riesz one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Defect {
    None,
    DropVector,
    DuplicateVector,
    NeutralInject,
    MixHalves,
}

impl Defect {
    pub const ALL: [Defect; 5] = [
        Defect::None,
        Defect::DropVector,
        Defect::DuplicateVector,
        Defect::NeutralInject,
        Defect::MixHalves,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Defect::None => "none",
            Defect::DropVector => "drop_vector",
            Defect::DuplicateVector => "duplicate_vector",
            Defect::NeutralInject => "neutral_inject",
            Defect::MixHalves => "mix_halves",
        }
    }
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Defect {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Defect::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| format!("unknown defect {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub seed: u64,
    /// Inclusive range of ambient dimensions for [`SignaturePolicy::Random`].
    pub dim_range: (usize, usize),
    pub signature: SignaturePolicy,
    /// Largest allowed `σ_max/σ_min` for each generated `U±`.
    pub cond_cap: f64,
    pub defect: Defect,
}

impl Default for GenSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            dim_range: (1, 12),
            signature: SignaturePolicy::Random,
            cond_cap: 1e4,
            defect: Defect::None,
        }
    }
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.dim_range;
        if lo < 1 || hi > MAX_DIM || lo > hi {
            return Err(KreinError::InvalidSpec(format!(
                "dim_range ({lo}, {hi}) must satisfy 1 <= min <= max <= {MAX_DIM}"
            )));
        }
        if let SignaturePolicy::Fixed(p, q) = self.signature {
            if p + q < 1 || p + q > MAX_DIM {
                return Err(KreinError::InvalidSpec(format!(
                    "signature ({p}, {q}) must have 1 <= p + q <= {MAX_DIM}"
                )));
            }
        }
        if !(self.cond_cap >= 1.0 && self.cond_cap.is_finite()) {
            return Err(KreinError::InvalidSpec(format!(
                "cond_cap {} must be a finite number >= 1",
                self.cond_cap
            )));
        }
        Ok(())
    }
}

/// Seeded source of uniform, Gaussian and Haar-unitary variates.
pub struct InstanceRng(ChaCha8Rng);

impl InstanceRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self(rng)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `lo..=hi`.
    pub fn index_in(&mut self, lo: usize, hi: usize) -> usize {
        let span = (hi - lo + 1) as f64;
        lo + ((self.uniform() * span) as usize).min(hi - lo)
    }

    pub fn gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn complex_gaussian(&mut self) -> C64 {
        let re = self.gaussian();
        let im = self.gaussian();
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn complex_gaussian_vec(&mut self, n: usize) -> Vec<C64> {
        (0..n).map(|_| self.complex_gaussian()).collect()
    }

    /// Haar-distributed unitary via Gram–Schmidt on a complex Gaussian matrix.
    pub fn unitary(&mut self, n: usize) -> ComplexMatrix {
        let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
        for _ in 0..n {
            let mut v = self.complex_gaussian_vec(n);
            // two passes of modified Gram–Schmidt
            for _ in 0..2 {
                for u in &cols {
                    let proj = dot(&v, u);
                    for (vi, ui) in v.iter_mut().zip(u) {
                        *vi -= proj * ui;
                    }
                }
            }
            let norm = norm2(&v);
            for vi in v.iter_mut() {
                *vi /= norm;
            }
            cols.push(v);
        }
        ComplexMatrix::from_columns(n, &cols)
    }
}

fn pick_signature(spec: &GenSpec, rng: &mut InstanceRng) -> (usize, usize) {
    match spec.signature {
        SignaturePolicy::Fixed(p, q) => (p, q),
        SignaturePolicy::Random => {
            let n = rng.index_in(spec.dim_range.0, spec.dim_range.1);
            let p = rng.index_in(0, n);
            (p, n - p)
        }
    }
}

/// Hermitian invertible `G = Q diag(λ) Qᴴ` with inertia `(p, q)` and
/// `|λ| ∈ [0.1, 10]` log-uniform.
pub fn gen_metric(spec: &GenSpec, tol: Tolerances) -> Result<KreinMetric> {
    spec.validate()?;
    let mut rng = InstanceRng::new(spec.seed, METRIC_STREAM);
    let (p, q) = pick_signature(spec, &mut rng);
    let n = p + q;
    let lambdas: Vec<f64> = (0..n)
        .map(|i| {
            let mag = 10f64.powf(rng.uniform_in(-1.0, 1.0));
            if i < p {
                mag
            } else {
                -mag
            }
        })
        .collect();
    let u = rng.unitary(n);
    let g = &(&u * &ComplexMatrix::from_real_diag(&lambdas)) * &u.adjoint();
    KreinMetric::new(g.hermitian_part(), tol)
}

/// `U = Q₁ diag(s) Q₂` with `ln s` uniform on `[−½ ln cap, ½ ln cap]`, so
/// `cond(U) ≤ cap`.
fn gen_operator(rng: &mut InstanceRng, k: usize, cond_cap: f64) -> ComplexMatrix {
    if k == 0 {
        return ComplexMatrix::zeros(0, 0);
    }
    let half_log = 0.5 * cond_cap.ln();
    let s: Vec<f64> = (0..k)
        .map(|_| rng.uniform_in(-half_log, half_log).exp())
        .collect();
    let q1 = rng.unitary(k);
    let q2 = rng.unitary(k);
    &(&q1 * &ComplexMatrix::from_real_diag(&s)) * &q2
}

/// Random bounded bijections on `K⁺` and `K⁻` with condition number at most
/// `spec.cond_cap`.
pub fn gen_operator_pair(spec: &GenSpec, space: &KreinSpace) -> Result<OperatorPair> {
    spec.validate()?;
    let mut rng = InstanceRng::new(spec.seed, OPERATOR_STREAM);
    let fd = space.fd();
    let u_plus = gen_operator(&mut rng, fd.p(), spec.cond_cap);
    let u_minus = gen_operator(&mut rng, fd.q(), spec.cond_cap);
    OperatorPair::new(u_plus, u_minus, space.tol())
}

/// A family with a planted defect and the failure it must trigger.
#[derive(Debug, Clone)]
pub struct DefectiveFamily {
    pub family: VectorFamily,
    pub base: OperatorPair,
    pub expected: FailureReason,
}

fn unit_in_half(rng: &mut InstanceRng, space: &KreinSpace, side: Side) -> Result<KreinVector> {
    let k = space.fd().half_dim(side);
    let mut y = rng.complex_gaussian_vec(k);
    let norm = norm2(&y);
    for yi in y.iter_mut() {
        *yi /= norm;
    }
    space.fd().embed(&y, side)
}

/// Builds `construct_riesz(gen_operator_pair(spec))` and applies
/// `spec.defect` to it.
pub fn gen_defective_family(spec: &GenSpec, space: &Arc<KreinSpace>) -> Result<DefectiveFamily> {
    let base = gen_operator_pair(spec, space)?;
    let fam = construct_riesz(&base, space)?;
    let (p, q) = (space.fd().p(), space.fd().q());
    let n = p + q;
    let side_of = |i: usize| if i < p { Side::Plus } else { Side::Minus };
    let mut rng = InstanceRng::new(spec.seed, DEFECT_STREAM);
    let mut vectors = fam.vectors().to_vec();

    let expected = match spec.defect {
        Defect::None => FailureReason::None,
        Defect::DropVector => {
            if n < 2 {
                return Err(KreinError::DefectImpossible(
                    "drop_vector needs at least two vectors".into(),
                ));
            }
            let i = rng.index_in(0, n - 1);
            vectors.remove(i);
            match side_of(i) {
                Side::Plus => FailureReason::IncompletePlus,
                Side::Minus => FailureReason::IncompleteMinus,
            }
        }
        Defect::DuplicateVector => {
            let i = rng.index_in(0, n - 1);
            vectors.push(vectors[i].clone());
            match side_of(i) {
                Side::Plus => FailureReason::GramSingularPlus,
                Side::Minus => FailureReason::GramSingularMinus,
            }
        }
        Defect::NeutralInject => {
            if p == 0 || q == 0 {
                return Err(KreinError::DefectImpossible(
                    "neutral_inject needs p >= 1 and q >= 1".into(),
                ));
            }
            let basis_plus = space.fd().basis(Side::Plus);
            let basis_minus = space.fd().basis(Side::Minus);
            let a = &basis_plus[rng.index_in(0, p - 1)];
            let b = &basis_minus[rng.index_in(0, q - 1)];
            vectors.push(a.add(b));
            FailureReason::MixedMembership
        }
        Defect::MixHalves => {
            if p == 0 || q == 0 {
                return Err(KreinError::DefectImpossible(
                    "mix_halves needs p >= 1 and q >= 1".into(),
                ));
            }
            let i = rng.index_in(0, p - 1);
            let f = &vectors[i];
            let scale = space.fd().j_norm(f)?;
            // half the J-norm in K⁻ keeps [f, f] > 0
            let leak =
                unit_in_half(&mut rng, space, Side::Minus)?.scale(C64::new(0.5 * scale, 0.0));
            vectors[i] = f.add(&leak);
            FailureReason::MixedMembership
        }
    };

    Ok(DefectiveFamily {
        family: VectorFamily::split(Arc::clone(space), vectors)?,
        base,
        expected,
    })
}
