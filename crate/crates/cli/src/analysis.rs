//! Builds reports from validated instances.

use std::time::Instant;

use krein_core::generate::InstanceRng;
use krein_core::gram::{absolute_sum_bessel_test, bessel_from_gram, gram_matrices};
use krein_core::riesz::{
    biorthogonality_residual, factor_riesz, frame_inequality_bounds, optimal_frame_bounds,
    reconstruct, riesz_via_gram, riesz_via_inequalities,
};
use krein_core::{
    KreinSpace, KreinVector, Result as CoreResult, RieszCertificate, RieszVerdict, Side,
    Tolerances, VectorFamily,
};

use crate::format::{
    matrix_to_json, vector_to_json, Bounds, CertificateReport, CompletenessReport, DualsReport,
    FactorizationReport, GramReport, Instance, ReconstructionReport, Report, SplitReport, Timings,
    VerdictReport, VerdictsReport, FORMAT_VERSION,
};

/// Reconstruction samples per half in `certify`.
pub const CERTIFY_SAMPLES: usize = 32;
/// Fixed seed for the certify samples, so reports depend only on the input.
const SAMPLE_SEED: u64 = 0x006b_7265_696e;
const SAMPLE_STREAM: u64 = 3;

fn verdict_report(v: &RieszVerdict) -> VerdictReport {
    VerdictReport {
        is_riesz: v.is_riesz,
        failure_reason: v.failure_reason.as_str().to_owned(),
        margin_plus: v.margins.0,
        margin_minus: v.margins.1,
        bounds: v.bounds_witness.map(Bounds::from),
    }
}

/// Runs the split, Gram and verdict computations. Pure in the instance.
pub fn analyze(inst: &Instance, tol: &Tolerances) -> CoreResult<Report> {
    let fam = &inst.family;
    let fd = inst.space.fd();
    let c = fam.completeness();
    let gp = gram_matrices(fam)?;
    let (b, b_prime) = bessel_from_gram(&gp);
    let factorization = match factor_riesz(fam, tol) {
        Ok(_) => FactorizationReport {
            ok: true,
            error: None,
        },
        Err(e) => FactorizationReport {
            ok: false,
            error: Some(e.to_string()),
        },
    };
    Ok(Report {
        version: FORMAT_VERSION.to_owned(),
        dim: inst.space.dim(),
        signature: [fd.p(), fd.q()],
        family_size: fam.len(),
        split: SplitReport {
            i_plus: fam.i_plus().to_vec(),
            i_minus: fam.i_minus().to_vec(),
            neutral: fam.neutral().to_vec(),
            membership: fam.subspace_membership(),
        },
        completeness: CompletenessReport {
            plus: c.plus,
            minus: c.minus,
            total: c.total,
        },
        gram: GramReport {
            norm_plus: gp.norm_plus,
            norm_minus: gp.norm_minus,
            sigma_min_plus: gp.sigma_min_plus,
            sigma_min_minus: gp.sigma_min_minus,
            bessel_b: b,
            bessel_b_prime: b_prime,
            absolute_sum_bound: absolute_sum_bessel_test(fam)?,
        },
        verdicts: VerdictsReport {
            inequalities: verdict_report(&riesz_via_inequalities(fam, tol)),
            gram: verdict_report(&riesz_via_gram(fam, tol)),
            factorization,
        },
        bounds: frame_inequality_bounds(fam).ok().map(Bounds::from),
        operator_bounds: inst
            .operators
            .as_ref()
            .map(|ops| Bounds::from(optimal_frame_bounds(ops))),
        certificate: None,
        timings: None,
    })
}

/// `analyze` with wall-clock timings attached.
pub fn analyze_timed(inst: &Instance, tol: &Tolerances) -> CoreResult<Report> {
    let t = Instant::now();
    let mut report = analyze(inst, tol)?;
    report.timings = Some(Timings {
        analyze_ms: t.elapsed().as_secs_f64() * 1e3,
        certify_ms: None,
    });
    Ok(report)
}

/// Random `f` in one half: Gaussian canonical coordinates, embedded.
pub fn sample_in_half(
    rng: &mut InstanceRng,
    space: &KreinSpace,
    side: Side,
) -> CoreResult<KreinVector> {
    let k = space.fd().half_dim(side);
    space.fd().embed(&rng.complex_gaussian_vec(k), side)
}

/// Largest `‖reconstruct(f) − f‖_J / ‖f‖_J` over `samples` random `f` per
/// half; `(plus, minus)`. Empty halves give 0.
pub fn reconstruction_residuals(
    fam: &VectorFamily,
    duals: &VectorFamily,
    rng: &mut InstanceRng,
    samples: usize,
) -> CoreResult<(f64, f64)> {
    let space = fam.space();
    let mut worst = [0.0f64; 2];
    for (slot, side) in [Side::Plus, Side::Minus].into_iter().enumerate() {
        if space.fd().half_dim(side) == 0 {
            continue;
        }
        for _ in 0..samples {
            let f = sample_in_half(rng, space, side)?;
            let r = reconstruct(&f, fam, duals, side)?;
            let rel = space.fd().j_norm(&r.sub(&f))? / space.fd().j_norm(&f)?;
            worst[slot] = worst[slot].max(rel);
        }
    }
    Ok((worst[0], worst[1]))
}

/// Outcome of `certify`: either a full certificate or the plain analysis of
/// a family that is not a Riesz basis.
#[derive(Debug, Clone)]
pub enum Certified {
    Riesz(Report),
    NotRiesz(Report),
}

fn certificate_report(cert: &RieszCertificate, samples: usize) -> CoreResult<CertificateReport> {
    let mut rng = InstanceRng::new(SAMPLE_SEED, SAMPLE_STREAM);
    let (plus, minus) = reconstruction_residuals(&cert.family, &cert.duals, &mut rng, samples)?;
    Ok(CertificateReport {
        u_plus: matrix_to_json(cert.ops.u_plus()),
        u_minus: matrix_to_json(cert.ops.u_minus()),
        optimal_bounds: cert.bounds.into(),
        duals: cert.duals.vectors().iter().map(vector_to_json).collect(),
        biorthogonality_residual: biorthogonality_residual(&cert.family, &cert.duals)?,
        reconstruction: ReconstructionReport {
            samples_per_half: samples,
            max_residual_plus: plus,
            max_residual_minus: minus,
        },
    })
}

/// Analyzes, and for Riesz families factors them and attaches duals and
/// residuals.
pub fn certify(inst: &Instance, tol: &Tolerances, timed: bool) -> CoreResult<Certified> {
    let t = Instant::now();
    let mut report = analyze(inst, tol)?;
    let analyze_ms = t.elapsed().as_secs_f64() * 1e3;
    if !report.verdicts.gram.is_riesz || !report.verdicts.factorization.ok {
        if timed {
            report.timings = Some(Timings {
                analyze_ms,
                certify_ms: None,
            });
        }
        return Ok(Certified::NotRiesz(report));
    }
    let t = Instant::now();
    let cert = RieszCertificate::from_family(&inst.family)?;
    report.certificate = Some(certificate_report(&cert, CERTIFY_SAMPLES)?);
    if timed {
        report.timings = Some(Timings {
            analyze_ms,
            certify_ms: Some(t.elapsed().as_secs_f64() * 1e3),
        });
    }
    Ok(Certified::Riesz(report))
}

pub fn duals_only(report: &Report) -> Option<DualsReport> {
    report.certificate.as_ref().map(|c| DualsReport {
        version: FORMAT_VERSION.to_owned(),
        duals: c.duals.clone(),
        biorthogonality_residual: c.biorthogonality_residual,
    })
}

/// Short human-readable digest of a report.
pub fn summary(report: &Report) -> String {
    let v = &report.verdicts;
    let mut s = format!(
        "dim {} signature ({}, {}) family {}\n",
        report.dim, report.signature[0], report.signature[1], report.family_size
    );
    s += &format!(
        "split: I+ {:?} I- {:?} neutral {:?}\n",
        report.split.i_plus, report.split.i_minus, report.split.neutral
    );
    s += &format!(
        "gram: B {:e} B' {:e} sigma_min+ {:e} sigma_min- {:e}\n",
        report.gram.bessel_b,
        report.gram.bessel_b_prime,
        report.gram.sigma_min_plus,
        report.gram.sigma_min_minus
    );
    for (name, r) in [("inequalities", &v.inequalities), ("gram", &v.gram)] {
        s += &format!(
            "{name}: riesz {} reason {} margins ({:e}, {:e})\n",
            r.is_riesz, r.failure_reason, r.margin_plus, r.margin_minus
        );
    }
    s += &format!(
        "factorization: {}\n",
        if v.factorization.ok { "ok" } else { "failed" }
    );
    if let Some(b) = report.bounds {
        s += &format!(
            "bounds: A {:e} B {:e} A' {:e} B' {:e}\n",
            b.a, b.b, b.a_prime, b.b_prime
        );
    }
    if let Some(c) = &report.certificate {
        s += &format!(
            "certificate: biorthogonality {:e} reconstruction ({:e}, {:e})\n",
            c.biorthogonality_residual,
            c.reconstruction.max_residual_plus,
            c.reconstruction.max_residual_minus
        );
    }
    s
}
