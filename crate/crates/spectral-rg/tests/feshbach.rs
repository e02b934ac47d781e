use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectral_rg::feshbach::{
    intertwining_residual, isospectrality_suite, random, resolvent_reconstruct, schur_complement, FeshbachPair,
    Partition,
};
use spectral_rg::linalg::{self, frobenius, CMatrix};

#[test]
fn planted_kernels_are_transported() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 0..4 {
        let pair = random::pair(24, k, &mut rng).unwrap();
        let rep = isospectrality_suite(&pair).unwrap();
        assert_eq!(rep.dim_ker_h, k);
        assert_eq!(rep.dim_ker_f, k, "{rep:?}");
        assert!(rep.consistent(1e-9), "{rep:?}");
        assert!(intertwining_residual(&pair).unwrap() < 1e-12);
    }
}

#[test]
fn resolvent_identity_on_invertible_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let pair = random::pair(20, 0, &mut rng).unwrap();
        let inv = linalg::inverse(pair.h()).unwrap();
        let rec = resolvent_reconstruct(&pair).unwrap();
        assert!(frobenius(&(&rec - &inv)) <= 1e-10 * frobenius(&inv));
    }
}

#[test]
fn sharp_projection_gives_schur_complement() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let n = 10;
        let k = rng.gen_range(1..n);
        let h = random::gaussian_matrix(n, n, &mut rng) + CMatrix::eye(n).mapv(|z| z * 3.0);
        let chi: Vec<f64> = (0..n).map(|i| if i < k { 1.0 } else { 0.0 }).collect();
        let pair = FeshbachPair::new(h.clone(), CMatrix::zeros((n, n)), Partition::from_diagonal(&chi).unwrap())
            .unwrap();
        let f = pair.feshbach();
        let s = schur_complement(&h, k).unwrap();
        let top = f.slice(ndarray::s![..k, ..k]).to_owned();
        assert!(frobenius(&(&top - &s)) <= 1e-12 * frobenius(&s));
    }
}


mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn kernel_dimension_is_preserved(seed in any::<u64>(), n in 6usize..20, planted in 0usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pair = random::pair(n, planted, &mut rng).unwrap();
            let rep = isospectrality_suite(&pair).unwrap();
            prop_assert_eq!(rep.dim_ker_h, rep.dim_ker_f);
            prop_assert!(rep.invertibility_agrees());
            prop_assert!(intertwining_residual(&pair).unwrap() < 1e-10);
        }

        #[test]
        fn smooth_partition_squares_to_one(diag in prop::collection::vec(0.0..1.0f64, 1..12)) {
            let part = Partition::from_diagonal(&diag).unwrap();
            let sum = part.chi().dot(part.chi()) + part.chibar().dot(part.chibar());
            prop_assert!(linalg::max_abs(&(sum - CMatrix::eye(diag.len()))) < 1e-14);
        }
    }
}
