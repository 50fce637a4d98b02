use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use std::sync::Arc;
use utcat::algebra_object::{parse_state, unit_object, AlgebraObject};
use utcat::fixtures;
use utcat::fusion_ring::FusionRing;
use utcat::fusion_ring::{validate_ring, RawRing};
use utcat::io::parse_value;
use utcat::linalg::{herm_eig, max_abs, nullspace, r, random_matrix, random_unitary, random_vector, rank, Mat, Vector};
use utcat::semicircular::{
    build_fock, catalan, covariance_from_automorphisms, inner_automorphism, semicircular_ops, BaseAlgebra,
    CovarianceMatrix, Letter,
};
use utcat::skeletal_cat::Gauge;
use utcat::skeletal_cat::SkeletalUTC;

fn small_cat(i: usize) -> utcat::skeletal_cat::SkeletalUTC {
    match i % 5 {
        0 => fixtures::cyclic(2),
        1 => fixtures::cyclic(3),
        2 => fixtures::fibonacci(),
        3 => fixtures::ising(),
        _ => fixtures::cyclic(4),
    }
}

fn seeds() -> Vec<String> {
    let fib = Arc::new(fixtures::fibonacci());
    vec![
        fixtures::cyclic(3).to_json().to_string(),
        fib.to_json().to_string(),
        fib.ring().to_json().to_string(),
        unit_object(fib.clone()).to_json().to_string(),
        r#"{"values": [1, 0, [0.5, 0.25], 0]}"#.into(),
        r#"{"index": ["a", "b"], "entries": {"a,a": [[1, 0], [0, 1]], "b,a": [[0, 1], [1, 0]]}, "bound": 4}"#.into(),
        r#"{"kind": "diagonal", "k": 2}"#.into(),
    ]
}

// every parser must reject malformed input with an error, not a panic
fn parse_everything(s: &str) {
    let Ok(v) = parse_value(s) else { return };
    let fib = Arc::new(fixtures::fibonacci());
    let _ = RawRing::from_json(&v).and_then(|r| validate_ring(&r)).map(|r| r.violations());
    let _ = SkeletalUTC::from_json(&v);
    let _ = AlgebraObject::from_json(fib, &v);
    let _ = parse_state(&v, 4);
    let _ = CovarianceMatrix::from_json(BaseAlgebra::diagonal(2), &v);
    let _ = BaseAlgebra::from_json(&v);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // repeated eigenvalues were where the eigensolver used to go wrong
    #[test]
    fn herm_eig_degenerate(seed in any::<u64>(), spectrum in prop::collection::vec(0u8..3, 1..10)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = spectrum.len();
        let u = random_unitary(&mut rng, n);
        let d = Mat::from_diagonal(&Vector::from_iterator(n, spectrum.iter().map(|&s| r(s as f64))));
        let h = &u * d * u.adjoint();
        let (vals, vecs) = herm_eig(&h);
        let mut want: Vec<f64> = spectrum.iter().map(|&s| s as f64).collect();
        want.sort_by(f64::total_cmp);
        for (v, w) in vals.iter().zip(&want) {
            assert_abs_diff_eq!(*v, *w, epsilon = 1e-10);
        }
        let lam = Mat::from_diagonal(&Vector::from_iterator(n, vals.iter().map(|&v| r(v))));
        prop_assert!(max_abs(&(&h * &vecs - &vecs * lam)) < 1e-10);
        prop_assert!(max_abs(&(vecs.adjoint() * &vecs - Mat::identity(n, n))) < 1e-10);
    }

    #[test]
    fn rank_nullity(seed in any::<u64>(), m in 1usize..7, n in 1usize..9, k in 1usize..7) {
        let k = k.min(m).min(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(&mut rng, m, k) * random_matrix(&mut rng, k, n);
        let ns = nullspace(&a, 1e-10);
        prop_assert_eq!(rank(&a, 1e-10), k);
        prop_assert_eq!(ns.ncols(), n - k);
        prop_assert!(max_abs(&(&a * &ns)) < 1e-9);
    }

    #[test]
    fn ring_json_round_trip(i in 0usize..5) {
        let ring = small_cat(i).ring().clone();
        let back = FusionRing::from_json(&ring.to_json()).unwrap();
        prop_assert_eq!(back.to_json(), ring.to_json());
        prop_assert!(back.violations().is_empty());
    }

    #[test]
    fn saturated_closure_is_closed(i in 0usize..5, mask in any::<u16>()) {
        let ring = small_cat(i).ring().clone();
        let gens: Vec<usize> = (0..ring.len()).filter(|&x| mask & (1 << x) != 0).collect();
        let s = ring.closure_idx(&gens, ring.len() + 1);
        prop_assert!(s.contains(ring.unit()));
        prop_assert!(ring.is_closed(&s));
        prop_assert!(gens.iter().all(|&g| s.contains(g) && s.contains(ring.dual(g))));
    }

    #[test]
    fn gauge_preserves_axioms(i in 0usize..5, seed in any::<u64>()) {
        let cat = small_cat(i);
        let g = Gauge::random(cat.ring(), &mut ChaCha8Rng::seed_from_u64(seed));
        let res = cat.rebase(&g).residuals().unwrap();
        prop_assert!(res.pentagon < 1e-9);
        prop_assert!(res.zigzag < 1e-9);
        prop_assert!(res.unitarity < 1e-9);
        prop_assert!(res.hexagon.unwrap_or(0.0) < 1e-9);
    }

    #[test]
    fn scaled_semicircle_moments(t in 0.1f64..3.0) {
        let cov = CovarianceMatrix::new(BaseAlgebra::scalar(), vec!["x".into()], vec![vec![Mat::identity(1, 1) * r(t)]]).unwrap();
        let ms = semicircular_ops(&build_fock(&cov, 5).unwrap()).moments(0, 10).unwrap();
        let cat = catalan(5);
        for (m, e) in ms.iter().enumerate() {
            let want = if m % 2 == 0 { cat[m / 2] as f64 * t.powi(m as i32 / 2) } else { 0.0 };
            assert_abs_diff_eq!(e[0].re, want, epsilon = 1e-9 * want.max(1.0));
            assert_abs_diff_eq!(e[0].im, 0.0, epsilon = 1e-9);
        }
    }

    // E(X_i a X_j) = η_ij(a)
    #[test]
    fn sandwiched_second_moment(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = BaseAlgebra::matrix(2);
        let alphas: Vec<Mat> = (0..2).map(|_| inner_automorphism(&base, &random_unitary(&mut rng, 2))).collect();
        let cov = covariance_from_automorphisms(base, &alphas).unwrap();
        let fam = semicircular_ops(&build_fock(&cov, 1).unwrap());
        let a = Vector::from_vec(random_vector(&mut rng, cov.base.dim()));
        for i in 0..2 {
            for j in 0..2 {
                let e = fam.vacuum_expectation(&[Letter::X(i), Letter::A(a.clone()), Letter::X(j)]).unwrap();
                prop_assert!((e - cov.apply(i, j, &a)).norm() < 1e-10);
            }
        }
        prop_assert!(cov.trace_symmetry_residual() < 1e-12);
    }

    #[test]
    fn covariance_json_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = BaseAlgebra::matrix(2);
        let alphas: Vec<Mat> = (0..2).map(|_| inner_automorphism(&base, &random_unitary(&mut rng, 2))).collect();
        let cov = covariance_from_automorphisms(base.clone(), &alphas).unwrap();
        let back = CovarianceMatrix::from_json(base, &cov.to_json()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!(max_abs(&(&back.maps[i][j] - &cov.maps[i][j])) < 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn mutated_inputs_do_not_panic(which in 0usize..7, edits in prop::collection::vec((any::<prop::sample::Index>(), prop::char::range(' ', '~')), 1..6), cut in any::<prop::sample::Index>()) {
        let mut chars: Vec<char> = seeds()[which].chars().collect();
        for (at, ch) in edits {
            let i = at.index(chars.len());
            chars[i] = ch;
        }
        let keep = chars.len() - cut.index(chars.len() / 4 + 1);
        parse_everything(&chars[..keep].iter().collect::<String>());
    }
}
