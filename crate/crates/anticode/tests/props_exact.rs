//! Property suites over the exact-arithmetic side of the crate: codes,
//! compression, gluings, configurations and the text formats.

use anticode::code::{ball, best_ball, BallSpec, Code};
use anticode::compression::{compress_full, is_compressed, reduce};
use anticode::configs::{
    find_realisation, projection, shadow, shearer_check, Configuration,
};
use anticode::fileio::{
    read_code, read_config, read_gluing, read_measure, read_realfn, write_code, write_config,
    write_gluing, write_measure, write_realfn, CodeEncoding,
};
use anticode::gluing::{glue_code, glue_measure, sample_gluing};
use anticode::measure::{random_factor, ProductMeasure};
use anticode::realfn::RealFn;
use anticode::space::{MixedShape, Shape};
use anticode::{rat, Rat};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn code_from_mask(shape: &Shape, mask: &[bool]) -> Code {
    let mut f = Code::empty(shape);
    for (i, &b) in mask.iter().enumerate() {
        if b {
            f.insert_rank(i);
        }
    }
    f
}

fn arb_code_33() -> impl Strategy<Value = Code> {
    proptest::collection::vec(any::<bool>(), 27).prop_map(|mask| {
        let shape = Shape::new(3, 3).unwrap();
        code_from_mask(&shape, &mask)
    })
}

proptest! {
    #[test]
    fn uniform_measure_counts_points(f in arb_code_33()) {
        prop_assert_eq!(f.measure(), rat(f.len(), 27));
    }

    #[test]
    fn compression_preserves_size_and_lands_compressed(f in arb_code_33()) {
        let c = compress_full(&f);
        prop_assert_eq!(c.len(), f.len());
        prop_assert!(is_compressed(&c));
    }

    #[test]
    fn compression_keeps_intersecting_subfamilies_intersecting(
        keep in proptest::collection::vec(any::<bool>(), 27),
        t in 1usize..3,
    ) {
        let shape = Shape::new(3, 3).unwrap();
        let b = ball(&shape, BallSpec { t, r: (3 - t) / 2 }).unwrap();
        let members: Vec<usize> = b.member_ranks().collect();
        let mut f = Code::empty(&shape);
        for (k, r) in members.into_iter().enumerate() {
            if keep[k % keep.len()] {
                f.insert_rank(r);
            }
        }
        prop_assert!(f.is_t_intersecting(t));
        prop_assert!(compress_full(&f).is_t_intersecting(t));
    }

    #[test]
    fn reduced_family_dominates_at_one_over_m(f in arb_code_33()) {
        // The reduce guarantees are stated for compressed families.
        let red = reduce(&compress_full(&f));
        prop_assert!(red.is_monotone());
        prop_assert!(red.mu_p(&rat(1, 3)).unwrap() >= f.measure());
    }

    #[test]
    fn binary_measure_is_monotone_in_p(f in arb_code_33(), num in 1usize..8) {
        let red = reduce(&compress_full(&f));
        let p = rat(num, 8);
        let q = rat(num + 1, 8);
        prop_assert!(red.mu_p(&p).unwrap() <= red.mu_p(&q).unwrap());
    }

    #[test]
    fn gluing_never_loses_measure(f in arb_code_33(), seed in any::<u64>(), k in 1usize..3) {
        // k = 1 -> [3] -> [3] balanced relabel impossible, use k in {1,2}
        // mapped to targets {3, 2}: b = 2 keeps both feasible.
        let target = if k == 1 { 3 } else { 2 };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pi = sample_gluing(3, target, 3, 2, &mut rng).unwrap();
        let nu = ProductMeasure::new(
            (0..3).map(|_| random_factor(3, 32, &mut rng)).collect(),
        ).unwrap();
        let glued = glue_code(&f, &pi).unwrap();
        let pushed = glue_measure(&nu, &pi).unwrap();
        prop_assert!(glued.measure_under(&pushed).unwrap() >= f.measure_under(&nu).unwrap());
    }

    #[test]
    fn pushforward_total_mass_is_one(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nu = ProductMeasure::new(
            (0..3).map(|_| random_factor(4, 32, &mut rng)).collect(),
        ).unwrap();
        let pi = sample_gluing(4, 2, 3, 1, &mut rng).unwrap();
        let pushed = glue_measure(&nu, &pi).unwrap();
        for i in 0..3 {
            let total: Rat = pushed.factor(i).iter().sum();
            prop_assert_eq!(total, rat(1, 1));
        }
    }

    #[test]
    fn pair_config_matches_avoidance(f in arb_code_33(), s in 0usize..3) {
        let cfg = Configuration::pair_config(s);
        let hit = find_realisation(&f, &cfg, 1_000_000).unwrap();
        prop_assert_eq!(f.is_s_avoiding(s), hit.found.is_none());
    }

    #[test]
    fn shadows_never_grow(f in arb_code_33(), i in 0usize..3) {
        let sh = shadow(&f, i).unwrap();
        prop_assert!(sh.len() <= f.len());
        // Projecting cannot empty a nonempty family.
        prop_assert_eq!(sh.is_empty(), f.is_empty());
    }

    #[test]
    fn projections_nest(f in arb_code_33()) {
        // |Pi_{1}| <= |Pi_{1,2}| <= |F|.
        let p12 = projection(&f, &[0, 1]).unwrap();
        let p1 = projection(&f, &[0]).unwrap();
        prop_assert!(p1.len() <= p12.len());
        prop_assert!(p12.len() <= f.len());
    }

    #[test]
    fn shearer_holds_for_random_families(f in arb_code_33(), k in 1usize..3) {
        let check = shearer_check(&f, k).unwrap();
        prop_assert!(check.holds);
    }

    #[test]
    fn best_ball_beats_the_radius_zero_ball(t in 1usize..3) {
        let shape = Shape::new(3, 4).unwrap();
        let zero = ball(&shape, BallSpec { t, r: 0 }).unwrap();
        let (_, size, _) = best_ball(&shape, t).unwrap();
        prop_assert!(size >= zero.len());
    }

    #[test]
    fn code_list_and_hex_round_trip(f in arb_code_33()) {
        let via_list = read_code(&write_code(&f, CodeEncoding::List)).unwrap();
        let via_hex = read_code(&write_code(&f, CodeEncoding::Hex)).unwrap();
        prop_assert_eq!(via_list.indicator_bytes(), f.indicator_bytes());
        prop_assert_eq!(via_hex.indicator_bytes(), f.indicator_bytes());
    }

    #[test]
    fn measure_and_gluing_files_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nu = ProductMeasure::new(
            (0..2).map(|_| random_factor(3, 64, &mut rng)).collect(),
        ).unwrap();
        let back = read_measure(&write_measure(&nu)).unwrap();
        for i in 0..2 {
            prop_assert_eq!(back.factor(i), nu.factor(i));
        }
        let pi = sample_gluing(4, 2, 2, 1, &mut rng).unwrap();
        prop_assert_eq!(read_gluing(&write_gluing(&pi)).unwrap(), pi);
    }

    #[test]
    fn realfn_files_round_trip(vals in proptest::collection::vec(-1e3f64..1e3, 8)) {
        let shape = MixedShape::new(vec![2, 2, 2]).unwrap();
        let f = RealFn::new(shape, vals).unwrap();
        let back = read_realfn(&write_realfn(&f)).unwrap();
        prop_assert_eq!(back.values(), f.values());
    }

    #[test]
    fn config_files_round_trip(sizes in proptest::collection::vec(1usize..4, 1..4), picks in any::<u64>()) {
        let mut state = picks;
        let edges: Vec<Vec<usize>> = (0..3)
            .map(|_| {
                sizes
                    .iter()
                    .map(|&s| {
                        let v = (state % s as u64) as usize;
                        state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                        v
                    })
                    .collect()
            })
            .collect();
        let cfg = Configuration::new(sizes, edges).unwrap();
        prop_assert_eq!(read_config(&write_config(&cfg).unwrap()).unwrap(), cfg);
    }
}
