//! Randomized invariants for every module, driven by proptest-chosen seeds.

use std::sync::Arc;

use krein_core::family::{split_indices, CoefficientSequence};
use krein_core::generate::{gen_metric, gen_operator_pair, GenSpec, InstanceRng, SignaturePolicy};
use krein_core::gram::{
    absolute_sum_bessel_test, absolute_sum_bound, bessel_from_gram, gram_matrices,
};
use krein_core::metric::{equality_via_pairings, j_norm, KreinSpace, KreinVector, Side};
use krein_core::numerics::{
    hermitian_eig, invert, norm2, numeric_rank, singular_extremes, ComplexMatrix, Tolerances, C64,
};
use krein_core::riesz::{
    biorthogonality_check, construct_riesz, dual_sequence, factor_riesz, frame_inequality_bounds,
    optimal_frame_bounds, reconstruct, riesz_via_gram, riesz_via_inequalities, span_operator,
    OperatorPair,
};
use proptest::prelude::*;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn random_matrix(rng: &mut InstanceRng, r: usize, c: usize) -> ComplexMatrix {
    ComplexMatrix::from_vec(r, c, rng.complex_gaussian_vec(r * c)).unwrap()
}

fn random_hermitian(rng: &mut InstanceRng, n: usize) -> ComplexMatrix {
    random_matrix(rng, n, n).hermitian_part()
}

fn instance(seed: u64, max_dim: usize) -> (Arc<KreinSpace>, OperatorPair) {
    let spec = GenSpec {
        seed,
        dim_range: (1, max_dim),
        ..GenSpec::default()
    };
    let space = Arc::new(KreinSpace::new(gen_metric(&spec, tol()).unwrap()).unwrap());
    let ops = gen_operator_pair(&spec, &space).unwrap();
    (space, ops)
}

fn random_in_half(rng: &mut InstanceRng, space: &KreinSpace, side: Side) -> KreinVector {
    let k = space.fd().half_dim(side);
    space
        .fd()
        .embed(&rng.complex_gaussian_vec(k), side)
        .unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hermitian_eig_reconstructs(seed in any::<u64>(), n in 1usize..16) {
        let mut rng = InstanceRng::new(seed, 0);
        let a = random_hermitian(&mut rng, n);
        let e = hermitian_eig(&a, &tol()).unwrap();
        let v = &e.vectors;
        let back = &(v * &ComplexMatrix::from_real_diag(&e.values)) * &v.adjoint();
        prop_assert!((&back - &a).norm_fro() <= 1e-10 * a.norm_fro());
        let gram = &v.adjoint() * v;
        prop_assert!((&gram - &ComplexMatrix::identity(n)).max_abs() < 1e-12);
        for j in 0..n {
            let col = v.column(j);
            let av = a.mul_vec(&col);
            let resid: Vec<C64> = av.iter().zip(&col).map(|(x, y)| x - y * e.values[j]).collect();
            prop_assert!(norm2(&resid) <= 1e-12 * a.norm_fro());
        }
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn inverse_norm_is_reciprocal_sigma_min(seed in any::<u64>(), n in 1usize..12) {
        let mut rng = InstanceRng::new(seed, 1);
        let a = random_matrix(&mut rng, n, n);
        let (lo, hi) = singular_extremes(&a).unwrap();
        prop_assume!(hi / lo < 1e4);
        let inv = invert(&a, &tol()).unwrap();
        let (_, hi_inv) = singular_extremes(&inv).unwrap();
        prop_assert!(rel(hi_inv, 1.0 / lo) <= 1e-10);
        let resid = (&(&a * &inv) - &ComplexMatrix::identity(n)).max_abs();
        prop_assert!(resid <= 1e-10 * hi / lo);
    }

    #[test]
    fn rank_invariant_under_well_conditioned_product(seed in any::<u64>(), n in 2usize..10, r in 1usize..10) {
        let r = r.min(n);
        let mut rng = InstanceRng::new(seed, 2);
        let low = &random_matrix(&mut rng, n, r) * &random_matrix(&mut rng, r, n);
        let mut m = rng.unitary(n);
        for j in 0..n {
            let s = 1.0 + 9.0 * rng.uniform();
            for i in 0..n {
                m[(i, j)] *= s;
            }
        }
        let (lo, hi) = singular_extremes(&m).unwrap();
        prop_assume!(hi / lo < 1e3);
        prop_assert_eq!(numeric_rank(&low, &tol()).unwrap(), r);
        prop_assert_eq!(numeric_rank(&(&m * &low), &tol()).unwrap(), r);
        prop_assert_eq!(numeric_rank(&(&low * &m), &tol()).unwrap(), r);
    }

    #[test]
    fn decomposition_matches_inertia(seed in any::<u64>()) {
        let (space, _) = instance(seed, 12);
        let fd = space.fd();
        let g = space.metric().matrix();
        let j: Vec<f64> = fd.signs().iter().map(|&s| s as f64).collect();
        let wgw = &(&fd.w().adjoint() * g) * fd.w();
        prop_assert!((&wgw - &ComplexMatrix::from_real_diag(&j)).max_abs() <= 1e-9);
        prop_assert_eq!(fd.p() + fd.q(), space.dim());
        let e = hermitian_eig(g, &tol()).unwrap();
        prop_assert_eq!(fd.p(), e.values.iter().filter(|&&l| l > 0.0).count());
        let pp = fd.projector(Side::Plus);
        let pm = fd.projector(Side::Minus);
        prop_assert!((&(pp + pm) - &ComplexMatrix::identity(space.dim())).max_abs() < 1e-12);
        prop_assert!((pp * pm).max_abs() < 1e-12);
    }

    #[test]
    fn halves_are_metric_orthogonal(seed in any::<u64>()) {
        let (space, _) = instance(seed, 12);
        let fd = space.fd();
        let mut rng = InstanceRng::new(seed, 3);
        let n = space.dim();
        let x = KreinVector::from(rng.complex_gaussian_vec(n));
        let y = KreinVector::from(rng.complex_gaussian_vec(n));
        let px = fd.project(&x, Side::Plus).unwrap();
        let my = fd.project(&y, Side::Minus).unwrap();
        let cross = space.inner(&px, &my).unwrap().norm();
        prop_assert!(cross <= 1e-10 * fd.j_norm(&x).unwrap() * fd.j_norm(&y).unwrap());
        // both J-norm routes agree
        let a = j_norm(&x, fd, space.metric()).unwrap();
        let b = fd.j_norm(&x).unwrap();
        prop_assert!(rel(a, b) < 1e-10);
    }

    #[test]
    fn positive_half_is_positive_definite(seed in any::<u64>()) {
        let (space, _) = instance(seed, 12);
        prop_assume!(space.fd().p() > 0);
        let sigma_plus = space.fd().eigenvalues()[..space.fd().p()]
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let mut rng = InstanceRng::new(seed, 4);
        for _ in 0..20 {
            let z = random_in_half(&mut rng, &space, Side::Plus);
            let zz = space.inner(&z, &z).unwrap().re;
            let e2 = z.euclidean_norm().powi(2);
            prop_assert!(zz >= (1.0 - 1e-9) * sigma_plus * e2);
        }
    }

    #[test]
    fn pairing_equality_matches_j_norm(seed in any::<u64>(), exp in -16i32..-2) {
        let (space, _) = instance(seed, 8);
        let side = if space.fd().p() > 0 { Side::Plus } else { Side::Minus };
        let mut rng = InstanceRng::new(seed, 5);
        let x = random_in_half(&mut rng, &space, side);
        let d = random_in_half(&mut rng, &space, side);
        let scale = 10f64.powi(exp) * space.fd().j_norm(&x).unwrap() / space.fd().j_norm(&d).unwrap();
        let y = x.add(&d.scale(C64::new(scale, 0.0)));
        let eq = equality_via_pairings(&x, &y, side, space.fd(), space.metric()).unwrap();
        let gap = space.fd().j_norm(&x.sub(&y)).unwrap();
        let norms = space.fd().j_norm(&x).unwrap() + space.fd().j_norm(&y).unwrap();
        // clear-cut cases on either side of the threshold
        if gap <= 1e-3 * tol().rank_tol * norms {
            prop_assert!(eq);
        }
        if gap >= 1e3 * tol().rank_tol * norms {
            prop_assert!(!eq);
        }
    }

    #[test]
    fn analysis_is_adjoint_of_synthesis(seed in any::<u64>()) {
        let (space, ops) = instance(seed, 10);
        let fam = construct_riesz(&ops, &space).unwrap();
        let mut rng = InstanceRng::new(seed, 6);
        let c = CoefficientSequence {
            plus: rng.complex_gaussian_vec(fam.i_plus().len()),
            minus: rng.complex_gaussian_vec(fam.i_minus().len()),
        };
        let (fp, fm) = fam.synthesis(&c).unwrap();
        for (side, f) in [(Side::Plus, fp), (Side::Minus, fm)] {
            if space.fd().half_dim(side) == 0 {
                continue;
            }
            let g = random_in_half(&mut rng, &space, side);
            let lhs = space.inner(&f, &g).unwrap();
            let a = fam.analysis(&g).unwrap();
            let rhs: C64 = c.half(side).iter().zip(a.half(side)).map(|(cn, an)| cn * an.conj()).sum();
            let scale = fam.space().fd().j_norm(&f).unwrap() * fam.space().fd().j_norm(&g).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-10 * scale.max(1.0));
        }
    }

    #[test]
    fn split_invariant_under_positive_scaling(seed in any::<u64>()) {
        let (space, _) = instance(seed, 8);
        let mut rng = InstanceRng::new(seed, 7);
        let vs: Vec<KreinVector> = (0..space.dim() + 2)
            .map(|_| KreinVector::from(rng.complex_gaussian_vec(space.dim())))
            .collect();
        let scaled: Vec<KreinVector> = vs
            .iter()
            .map(|v| v.scale(C64::new(10f64.powf(rng.uniform_in(-3.0, 3.0)), 0.0)))
            .collect();
        let a = split_indices(&space, vs).unwrap();
        let b = split_indices(&space, scaled).unwrap();
        prop_assert_eq!(a.i_plus(), b.i_plus());
        prop_assert_eq!(a.i_minus(), b.i_minus());
    }

    #[test]
    fn completeness_invariant_under_permutation(seed in any::<u64>(), drop in any::<bool>()) {
        let (space, ops) = instance(seed, 10);
        let mut vs = construct_riesz(&ops, &space).unwrap().vectors().to_vec();
        if drop && vs.len() > 1 {
            vs.pop();
        }
        let before = split_indices(&space, vs.clone()).unwrap().completeness();
        let mut rng = InstanceRng::new(seed, 8);
        for i in (1..vs.len()).rev() {
            let j = rng.index_in(0, i);
            vs.swap(i, j);
        }
        let after = split_indices(&space, vs).unwrap().completeness();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn gram_matches_canonical_oracle(seed in any::<u64>()) {
        let (space, ops) = instance(seed, 12);
        let fam = construct_riesz(&ops, &space).unwrap();
        let gp = gram_matrices(&fam).unwrap();
        // g(i, j) = [f_i, f_j] = c_jᴴ c_i in canonical coordinates
        for (side, g, sign) in [(Side::Plus, &gp.g_plus, 1.0), (Side::Minus, &gp.g_minus, -1.0)] {
            let c = fam.canonical_matrix(side).unwrap();
            if c.cols() == 0 {
                continue;
            }
            let oracle = (&c.adjoint() * &c).transpose().scale(C64::new(sign, 0.0));
            prop_assert!((g - &oracle).max_abs() <= 1e-10 * oracle.max_abs());
        }
    }

    #[test]
    fn prop_4_3_dominates_gram_bounds(seed in any::<u64>()) {
        let (space, ops) = instance(seed, 12);
        let fam = construct_riesz(&ops, &space).unwrap();
        let (b, b_prime) = bessel_from_gram(&gram_matrices(&fam).unwrap());
        let s = absolute_sum_bessel_test(&fam).unwrap();
        prop_assert!(b.max(b_prime) <= s * (1.0 + 1e-10));
    }

    #[test]
    fn bessel_bound_is_tight(seed in any::<u64>()) {
        let (space, ops) = instance(seed, 10);
        let fam = construct_riesz(&ops, &space).unwrap();
        let gp = gram_matrices(&fam).unwrap();
        let mut rng = InstanceRng::new(seed, 9);
        for side in [Side::Plus, Side::Minus] {
            if space.fd().half_dim(side) == 0 {
                continue;
            }
            let b = gp.norm(side);
            let quotient = |f: &KreinVector| -> f64 {
                let a = fam.analysis(f).unwrap();
                a.half(side).iter().map(|z| z.norm_sqr()).sum::<f64>()
                    / space.fd().j_norm(f).unwrap().powi(2)
            };
            for _ in 0..100 {
                let f = random_in_half(&mut rng, &space, side);
                prop_assert!(quotient(&f) <= b * (1.0 + 1e-8));
            }
            // top left singular vector of C maximizes ‖Cᴴy‖²/‖y‖²
            let c = fam.canonical_matrix(side).unwrap();
            let e = hermitian_eig(&(&c * &c.adjoint()), &tol()).unwrap();
            let top = e.vectors.column(e.values.len() - 1);
            let f = space.fd().embed(&top, side).unwrap();
            prop_assert!(quotient(&f) >= b * (1.0 - 1e-8));
        }
    }

    #[test]
    fn optimal_bounds_match_inequality_bounds(seed in any::<u64>()) {
        let (space, ops) = instance(seed, 12);
        let fam = construct_riesz(&ops, &space).unwrap();
        let got = frame_inequality_bounds(&fam).unwrap().as_array();
        let want = optimal_frame_bounds(&ops).as_array();
        for (g, w) in got.iter().zip(want) {
            prop_assert!(rel(*g, w) <= 1e-9 || (*g == 0.0 && w == 0.0), "{got:?} vs {want:?}");
        }
        // Gram-derived Bessel bounds equal ‖U±‖²
        let (b, b_prime) = bessel_from_gram(&gram_matrices(&fam).unwrap());
        prop_assert!(rel(b, want[1]) <= 1e-9 || b == 0.0);
        prop_assert!(rel(b_prime, want[3]) <= 1e-9 || b_prime == 0.0);
    }

    #[test]
    fn bounds_hold_and_are_attained(seed in any::<u64>()) {
        let (space, ops) = instance(seed, 10);
        let fam = construct_riesz(&ops, &space).unwrap();
        let bounds = optimal_frame_bounds(&ops);
        let mut rng = InstanceRng::new(seed, 10);
        for side in [Side::Plus, Side::Minus] {
            let k = space.fd().half_dim(side);
            if k == 0 {
                continue;
            }
            let (a, b) = (bounds.lower(side), bounds.upper(side));
            let energy = |c: &[C64]| -> f64 {
                let coeffs = match side {
                    Side::Plus => CoefficientSequence { plus: c.to_vec(), minus: vec![C64::new(0.0, 0.0); fam.i_minus().len()] },
                    Side::Minus => CoefficientSequence { plus: vec![C64::new(0.0, 0.0); fam.i_plus().len()], minus: c.to_vec() },
                };
                let (fp, fm) = fam.synthesis(&coeffs).unwrap();
                let f = if side == Side::Plus { fp } else { fm };
                space.fd().j_norm(&f).unwrap().powi(2)
            };
            for _ in 0..50 {
                let mut c = rng.complex_gaussian_vec(k);
                let n = norm2(&c);
                c.iter_mut().for_each(|z| *z /= n);
                let e = energy(&c);
                prop_assert!(a * (1.0 - 1e-8) <= e && e <= b * (1.0 + 1e-8));
            }
            let u = ops.u(side);
            let e = hermitian_eig(&(&u.adjoint() * u), &tol()).unwrap();
            prop_assert!(rel(energy(&e.vectors.column(0)), a) <= 1e-8);
            prop_assert!(rel(energy(&e.vectors.column(k - 1)), b) <= 1e-8);
        }
    }

    #[test]
    fn three_routes_agree_on_clean_instances(seed in any::<u64>()) {
        let (space, ops) = instance(seed, 12);
        let fam = construct_riesz(&ops, &space).unwrap();
        let ineq = riesz_via_inequalities(&fam, &tol());
        let gram = riesz_via_gram(&fam, &tol());
        prop_assert!(ineq.is_riesz && gram.is_riesz);
        let back = factor_riesz(&fam, &tol()).unwrap();
        // round trip construct ∘ factor
        for side in [Side::Plus, Side::Minus] {
            let d = back.u(side) - ops.u(side);
            prop_assert!(d.is_empty() || d.max_abs() <= 1e-10 * ops.u(side).max_abs());
        }
        let rebuilt = construct_riesz(&back, &space).unwrap();
        for (a, b) in rebuilt.vectors().iter().zip(fam.vectors()) {
            prop_assert!(a.sub(b).euclidean_norm() <= 1e-10 * b.euclidean_norm());
        }
    }

    #[test]
    fn duals_are_biorthogonal_and_reconstruct(seed in any::<u64>()) {
        let (space, ops) = instance(seed, 12);
        let fam = construct_riesz(&ops, &space).unwrap();
        let duals = dual_sequence(&ops, &space).unwrap();
        prop_assert!(biorthogonality_check(&fam, &duals).unwrap());
        prop_assert!(riesz_via_gram(&duals, &tol()).is_riesz);
        let mut rng = InstanceRng::new(seed, 11);
        for side in [Side::Plus, Side::Minus] {
            if space.fd().half_dim(side) == 0 {
                continue;
            }
            for _ in 0..20 {
                let f = random_in_half(&mut rng, &space, side);
                let r = reconstruct(&f, &fam, &duals, side).unwrap();
                let resid = space.fd().j_norm(&r.sub(&f)).unwrap();
                prop_assert!(resid <= 1e-8 * space.fd().j_norm(&f).unwrap());
            }
        }
    }

    #[test]
    fn dual_of_dual_is_original(seed in any::<u64>()) {
        let (space, ops) = instance(seed, 12);
        let fam = construct_riesz(&ops, &space).unwrap();
        let duals = dual_sequence(&ops, &space).unwrap();
        let dual_ops = factor_riesz(&duals, &tol()).unwrap();
        let again = dual_sequence(&dual_ops, &space).unwrap();
        for (a, b) in again.vectors().iter().zip(fam.vectors()) {
            let err = space.fd().j_norm(&a.sub(b)).unwrap();
            prop_assert!(err <= 1e-8 * space.fd().j_norm(b).unwrap());
        }
    }

    #[test]
    fn duals_are_unique(seed in any::<u64>(), eps_exp in -6i32..-1) {
        // perturbing one dual breaks reconstruction detectably
        let (space, ops) = instance(seed, 8);
        let fam = construct_riesz(&ops, &space).unwrap();
        let duals = dual_sequence(&ops, &space).unwrap();
        let mut rng = InstanceRng::new(seed, 12);
        let side = if space.fd().p() > 0 { Side::Plus } else { Side::Minus };
        let idx = fam.indices(side)[0];
        let mut vs = duals.vectors().to_vec();
        let bump = random_in_half(&mut rng, &space, side);
        let eps = 10f64.powi(eps_exp) * space.fd().j_norm(&vs[idx]).unwrap()
            / space.fd().j_norm(&bump).unwrap();
        vs[idx] = vs[idx].add(&bump.scale(C64::new(eps, 0.0)));
        let perturbed = split_indices(&space, vs).unwrap();
        prop_assert!(!biorthogonality_check(&fam, &perturbed).unwrap());
        let worst = (0..20)
            .map(|_| {
                let f = random_in_half(&mut rng, &space, side);
                let r = reconstruct(&f, &fam, &perturbed, side).unwrap();
                space.fd().j_norm(&r.sub(&f)).unwrap() / space.fd().j_norm(&f).unwrap()
            })
            .fold(0.0, f64::max);
        prop_assert!(worst > 1e-8);
    }

    #[test]
    fn span_operator_to_dual(seed in any::<u64>()) {
        let (space, ops) = instance(seed, 10);
        let fam = construct_riesz(&ops, &space).unwrap();
        let duals = dual_sequence(&ops, &space).unwrap();
        for side in [Side::Plus, Side::Minus] {
            if space.fd().half_dim(side) == 0 {
                continue;
            }
            let s = span_operator(&fam, &duals, side).unwrap();
            let u = ops.u(side);
            let expected = invert(&(u * &u.adjoint()), &tol()).unwrap();
            prop_assert!((&s.operator - &expected).max_abs() <= 1e-8 * expected.max_abs());
            prop_assert!(s.norm <= s.norm_bound * (1.0 + 1e-8));
        }
    }
}

#[test]
fn lemma_4_2_on_random_hermitian_matrices() {
    let mut rng = InstanceRng::new(4242, 0);
    for trial in 0..500 {
        let n = 1 + trial % 10;
        let a = random_hermitian(&mut rng, n);
        let s = absolute_sum_bound(&a, &tol()).unwrap();
        let (_, norm) = singular_extremes(&a).unwrap();
        assert!(norm <= s * (1.0 + 1e-12), "trial {trial}: {norm} > {s}");
    }
    // equality for a rank-one nonnegative matrix
    let ones = ComplexMatrix::from_real(3, 3, &[1.0; 9]);
    let (_, norm) = singular_extremes(&ones).unwrap();
    assert!((norm - 3.0).abs() < 1e-14);
    assert!(absolute_sum_bound(&ones, &tol()).unwrap() > norm);
    let single = ComplexMatrix::from_real(1, 1, &[5.0]);
    assert_eq!(absolute_sum_bound(&single, &tol()).unwrap(), 5.0);
}

#[test]
fn signature_only_spaces() {
    for (p, q) in [(3, 0), (0, 3)] {
        let spec = GenSpec {
            seed: 17,
            signature: SignaturePolicy::Fixed(p, q),
            ..GenSpec::default()
        };
        let space = Arc::new(KreinSpace::new(gen_metric(&spec, tol()).unwrap()).unwrap());
        let ops = gen_operator_pair(&spec, &space).unwrap();
        let fam = construct_riesz(&ops, &space).unwrap();
        assert!(riesz_via_gram(&fam, &tol()).is_riesz);
        assert!(riesz_via_inequalities(&fam, &tol()).is_riesz);
        assert!(factor_riesz(&fam, &tol()).is_ok());
    }
}
