//! Property tests for structural invariants across modules.

mod common;

use common::*;
use distsl::boundary::{canonical_to_linear, classify, separated_conditions};
use distsl::green::{apply_resolvent, kernel_for};
use distsl::linalg::spectral_norm;
use distsl::propagator::{propagate, propagate_segment, solve_inhomogeneous};
use distsl::spectral::{Rect, SpectralProblem};
use distsl::{
    CMat, CVec, CanonicalBC, CoefficientSet, ExtensionKind, Grid, LinearBC, Mesh,
    PiecewiseMatrixPoly, Variant, C64,
};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn random_set(r: &mut StdRng, s: usize, hermitian: bool) -> CoefficientSet {
    let iv = (0.0, 1.0);
    CoefficientSet::new(
        random_p_inv(r, iv, s, hermitian),
        random_poly(r, iv, s, hermitian, 3, 2, 1.0),
        hermitian,
    )
    .unwrap()
}

fn scalar_step(r: &mut StdRng) -> CoefficientSet {
    let q = PiecewiseMatrixPoly::step(
        0.0,
        1.0,
        r.gen_range(0.2..0.8),
        CMat::identity(1, 1) * c(r.gen_range(-5.0..5.0)),
        CMat::identity(1, 1) * c(r.gen_range(-5.0..5.0)),
    )
    .unwrap();
    CoefficientSet::with_unit_p(q, true).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn adjoint_is_an_involution(seed in any::<u64>(), s in 1usize..4) {
        let p = random_poly(&mut rng(seed), (-1.0, 2.0), s, false, 4, 3, 1.0);
        let back = p.adjoint().adjoint();
        prop_assert_eq!(p.breakpoints(), back.breakpoints());
        prop_assert_eq!(p.pieces(), back.pieces());
    }

    #[test]
    fn refinement_keeps_values_and_norm(seed in any::<u64>(), s in 1usize..4) {
        let mut r = rng(seed);
        let p = random_poly(&mut r, (0.0, 1.0), s, false, 3, 3, 1.0);
        let extra: Vec<f64> = (0..3).map(|_| r.gen_range(0.0..1.0)).collect();
        let q = p.refine(&extra);
        for _ in 0..10 {
            let t = r.gen_range(0.0..1.0);
            let (u, v) = (p.eval(t).unwrap(), q.eval(t).unwrap());
            prop_assert!((u - v).norm() <= 1e-12 * (1.0 + p.eval(t).unwrap().norm()));
        }
        let k = random_poly(&mut r, (0.0, 1.0), s, false, 3, 0, 1.0);
        let (a, b) = (k.l1_norm(), k.refine(&extra).l1_norm());
        prop_assert!((a - b).abs() <= 1e-13 * (1.0 + a));
    }

    #[test]
    fn det_one_and_symplectic(seed in any::<u64>(), s in 1usize..4, l in -5.0f64..5.0) {
        let mut r = rng(seed);
        let set = random_set(&mut r, s, true);
        let fs = propagate(&set.shin_zettl(c(l)), &Mesh::uniform(set.breakpoints(), 0.05).unwrap()).unwrap();
        let scale = fs.samples().iter().map(spectral_norm).fold(1.0f64, f64::max);
        prop_assert!(fs.det_defect() <= 1e-10);
        prop_assert!(fs.symplectic_defect() <= 1e-12 * scale * scale);
    }

    #[test]
    fn cocycle(seed in any::<u64>(), s in 1usize..3) {
        let mut r = rng(seed);
        let set = random_set(&mut r, s, false);
        let a = set.shin_zettl(C64::new(r.gen_range(-3.0..3.0), r.gen_range(-1.0..1.0)));
        let mesh = Mesh::uniform(set.breakpoints(), 0.05).unwrap();
        let fs = propagate(&a, &mesh).unwrap();
        let k = r.gen_range(1..mesh.len() - 1);
        let tail = propagate_segment(&a, &Mesh::new(mesh.nodes()[k..].to_vec()).unwrap()).unwrap();
        let composed = tail.end() * &fs.samples()[k];
        prop_assert!((composed - fs.end()).norm() <= 1e-11 * fs.end().norm().max(1.0));
    }

    #[test]
    fn classification_follows_norm(seed in any::<u64>(), s in 1usize..3, norm in 0.05f64..0.95) {
        let mut r = rng(seed);
        let u = random_unitary(&mut r, 2 * s);
        prop_assert_eq!(classify(&CanonicalBC::new(u, Variant::LK).unwrap(), 1e-10).kind, ExtensionKind::SelfAdjoint);
        let k = random_contraction(&mut r, 2 * s, norm);
        prop_assert_eq!(classify(&CanonicalBC::new(k.clone(), Variant::LK).unwrap(), 1e-10).kind, ExtensionKind::MaximalDissipative);
        prop_assert_eq!(classify(&CanonicalBC::new(k.clone(), Variant::LUpperK).unwrap(), 1e-10).kind, ExtensionKind::MaximalAccumulative);
        let big = k * c(1.5 / norm);
        prop_assert_eq!(classify(&CanonicalBC::new(big, Variant::LK).unwrap(), 1e-10).kind, ExtensionKind::OutsideTheorem);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn resolvent_kernel_reproduces_solve(seed in any::<u64>(), s in 1usize..3) {
        let mut r = rng(seed);
        let set = random_set(&mut r, s, false);
        let mu = C64::new(-4.0, 1.0);
        let bc = LinearBC::dirichlet(s);
        let grid = Grid::uniform(0.0, 1.0, 401).unwrap();
        let v = CVec::from_fn(s, |_, _| C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)));
        let f = |t: f64| &v * c((2.0 * t).sin() + 1.0);
        let Ok(kern) = kernel_for(&set, &bc, mu, &grid, 0.05) else {
            return Err(TestCaseError::reject("μ in the spectrum"));
        };
        let fv: Vec<CVec> = grid.points().iter().map(|&t| f(t)).collect();
        let via_kernel = apply_resolvent(&kern, &fv).unwrap();
        let y = solve_inhomogeneous(&set.shin_zettl(mu), f, &bc, &Mesh::uniform(set.breakpoints(), 0.01).unwrap()).unwrap();
        let scale = y.values().iter().map(|w| w.rows(0, s).norm()).fold(1e-3, f64::max);
        for (i, &t) in grid.points().iter().enumerate() {
            let direct = y.eval(t).unwrap().rows(0, s).into_owned();
            prop_assert!((&via_kernel[i] - direct).norm() <= 1e-4 * scale);
        }
    }

    #[test]
    // D¹y(b) = 0 reads y'(b) = Q(b) y(b), a Robin condition that may carry a
    // deep negative eigenvalue, hence the wide window.
    fn dirichlet_and_mixed_spectra_interlace(seed in any::<u64>()) {
        let set = scalar_step(&mut rng(seed));
        let one = CMat::identity(1, 1);
        let mixed = separated_conditions(&one, &(-&one), Variant::LK).unwrap();
        let eig = |bc: LinearBC| {
            let sp = SpectralProblem::new(set.clone(), bc, 0.1).unwrap();
            sp.eigenvalues_real_scan(-100.0, 150.0, 1000).unwrap().eigenvalues
                .iter().map(|e| e.lambda.re).collect::<Vec<_>>()
        };
        let d = eig(LinearBC::dirichlet(1));
        let m = eig(mixed);
        prop_assert!(!d.is_empty());
        for (k, &l) in d.iter().enumerate() {
            prop_assert!(m[k] < l, "mixed {:?} vs dirichlet {:?}", m, d);
            if k + 1 < m.len() {
                prop_assert!(l < m[k + 1], "mixed {:?} vs dirichlet {:?}", m, d);
            }
        }
    }

    #[test]
    fn real_count_matches_winding(seed in any::<u64>()) {
        let mut r = rng(seed);
        let set = scalar_step(&mut r);
        let k = random_unitary(&mut r, 2);
        let bc = canonical_to_linear(&CanonicalBC::new(k, Variant::LK).unwrap());
        let sp = SpectralProblem::new(set, bc, 0.1).unwrap();
        let (lo, hi) = (r.gen_range(-15.0..0.0), r.gen_range(30.0..120.0));
        let evs = sp.eigenvalues_real_scan(lo - 1.0, hi + 1.0, 800).unwrap().eigenvalues;
        prop_assume!(evs.iter().all(|e| (e.lambda.re - lo).abs() > 1e-3 && (e.lambda.re - hi).abs() > 1e-3));
        let inside: usize = evs.iter().filter(|e| e.lambda.re > lo && e.lambda.re < hi).map(|e| e.multiplicity).sum();
        let w = sp.winding_number(&Rect::new(lo, hi, -1.0, 1.0).unwrap()).unwrap();
        prop_assert_eq!(w, inside as i64);
    }
}

/// Z(b) at steps h, h/2, h/4 for smooth coefficients: successive differences
/// shrink by about 2⁴.
#[test]
fn magnus_is_fourth_order() {
    for seed in 0..4 {
        let mut r = rng(seed);
        let iv = (0.0, 1.0);
        let mut quadratic = |scale: f64| {
            let coeffs = (0..3).map(|_| random_cmat(&mut r, 2, scale)).collect();
            PiecewiseMatrixPoly::new(vec![iv.0, iv.1], vec![coeffs]).unwrap()
        };
        let p_inv = quadratic(0.3).add_constant(&CMat::identity(2, 2));
        let q = quadratic(2.0);
        let set = CoefficientSet::new(p_inv, q, false).unwrap();
        let a = set.shin_zettl(c(6.0));
        let end = |h: f64| {
            propagate(&a, &Mesh::uniform(set.breakpoints(), h).unwrap())
                .unwrap()
                .end()
                .clone()
        };
        let (z1, z2, z3) = (end(0.1), end(0.05), end(0.025));
        let ratio = (&z1 - &z2).norm() / (&z2 - &z3).norm();
        assert!((12.0..20.0).contains(&ratio), "seed {seed}: ratio {ratio}");
    }
}
