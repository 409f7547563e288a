use nalgebra::DMatrix;
use proptest::prelude::*;

use wpframe::frame_cert::certify;
use wpframe::tile::{comparability_envelope, normal_form, sup_norm, tile_metric};
use wpframe::Tile;

fn matrix(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, d * d)
}

fn tile(d: usize, entries: &[f64], center: Vec<f64>) -> Option<Tile> {
    Tile::from_rows(d, entries, center).ok().filter(|t| t.det().abs() > 1e-3)
}

fn signed_permutation(d: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (
        Just((0..d).collect::<Vec<_>>()).prop_shuffle(),
        prop::collection::vec(any::<bool>(), d),
    )
        .prop_map(move |(perm, signs)| {
            let mut p = DMatrix::zeros(d, d);
            for (i, &j) in perm.iter().enumerate() {
                p[(i, j)] = if signs[i] { -1.0 } else { 1.0 };
            }
            p
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn metric_axioms(
        (d, ea, eb, ec) in (1usize..=4).prop_flat_map(|d| (Just(d), matrix(d), matrix(d), matrix(d))),
    ) {
        let (Some(a), Some(b), Some(c)) = (
            tile(d, &ea, vec![0.0; d]),
            tile(d, &eb, vec![1.0; d]),
            tile(d, &ec, vec![-2.0; d]),
        ) else {
            return Ok(());
        };
        let ab = tile_metric(&a, &b).unwrap();
        let ba = tile_metric(&b, &a).unwrap();
        let bc = tile_metric(&b, &c).unwrap();
        let ac = tile_metric(&a, &c).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(tile_metric(&a, &a).unwrap(), 0.0);
        prop_assert!((ab - ba).abs() <= 1e-12 * ab.max(1.0));
        prop_assert!(ac <= ab + bc + 1e-12 * (ab + bc).max(1.0));
    }

    #[test]
    fn signed_permutations_give_the_same_tile(
        (d, entries, p, points) in (1usize..=4).prop_flat_map(|d| (
            Just(d),
            matrix(d),
            signed_permutation(d),
            prop::collection::vec(prop::collection::vec(-6.0f64..6.0, d), 10),
        )),
    ) {
        let Some(a) = tile(d, &entries, vec![0.0; d]) else { return Ok(()); };
        let b = Tile::new(a.matrix() * &p, vec![0.0; d]).unwrap();
        prop_assert!(tile_metric(&a, &b).unwrap().abs() <= 1e-9);
        prop_assert!(normal_form(&a).approx_eq(&normal_form(&b), 1e-12));
        for x in &points {
            let ra = sup_norm(&a.local_coords(x).unwrap());
            let rb = sup_norm(&b.local_coords(x).unwrap());
            prop_assert!((ra - rb).abs() <= 1e-9 * ra.max(1.0));
            if (ra - 0.5).abs() > 1e-9 {
                prop_assert_eq!(a.contains(x, 1.0).unwrap(), b.contains(x, 1.0).unwrap());
            }
        }
    }

    #[test]
    fn comparability_envelope_brackets(
        (d, ea, eb, x) in (1usize..=4).prop_flat_map(|d| (
            Just(d),
            matrix(d),
            matrix(d),
            prop::collection::vec(-5.0f64..5.0, d),
        )),
    ) {
        let (Some(a), Some(b)) = (tile(d, &ea, vec![0.0; d]), tile(d, &eb, vec![0.0; d])) else {
            return Ok(());
        };
        let (lo, hi) = comparability_envelope(&a, &b, &x).unwrap();
        let r = sup_norm(&b.local_coords(&x).unwrap());
        prop_assert!(lo <= r * (1.0 + 1e-12) && r <= hi * (1.0 + 1e-12), "{} {} {}", lo, r, hi);
    }

    #[test]
    fn certificate_monotone_in_gamma(
        a in 0.1f64..10.0,
        ratio in 1.0f64..4.0,
        g1 in 0.0f64..1.0,
        g2 in 0.0f64..1.0,
        d in 1usize..=3,
    ) {
        let b = a * ratio;
        let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
        let c1 = certify(a, b, lo * a, d).unwrap();
        let c2 = certify(a, b, hi * a, d).unwrap();
        prop_assert!(c2.a_cert <= c1.a_cert + 1e-12);
        prop_assert!(c2.b_cert >= c1.b_cert - 1e-12);
        prop_assert!(c1.a_cert <= a && c1.b_cert >= b);
        prop_assert_eq!(c1.degenerate, c1.a_cert <= 0.0);
    }
}
