use super::*;
use crate::copula::{CopulaModel, ExplicitCdf};
use crate::empirical::{box_measure, grid_simple, FieldKind, GridBox};
use crate::rng::{stream, Purpose};
use proptest::prelude::*;
use rand::Rng;

/// Distribution function of signed point masses placed in the lattice cells
/// `(i−1, i] × (j−1, j]`.
fn field_from_masses(p: usize, masses: &[(usize, usize, f64)]) -> GridField {
    let mut field = GridField::zeros(p, 2, FieldKind::SimpleProcess);
    for i in 0..=p {
        for j in 0..=p {
            let v: f64 = masses
                .iter()
                .filter(|&&(a, b, _)| a <= i && b <= j)
                .map(|m| m.2)
                .sum();
            field.set(&[i, j], v);
        }
    }
    field
}

fn random_field(p: usize, d: usize, seed: u64) -> GridField {
    let mut rng = stream(seed, 0, Purpose::Test);
    let mut field = GridField::zeros(p, d, FieldKind::SimpleProcess);
    for v in field.values_mut() {
        *v = rng.random_range(-1.0..1.0);
    }
    field
}

/// Every grid box of a 2-d lattice, in `(lo, hi)` lexicographic order.
fn all_boxes_2d(p: usize) -> Vec<GridBox> {
    let mut boxes = Vec::new();
    for a0 in 0..p {
        for a1 in 0..p {
            for b0 in a0 + 1..=p {
                for b1 in a1 + 1..=p {
                    boxes.push(GridBox::new(vec![a0, a1], vec![b0, b1]).unwrap());
                }
            }
        }
    }
    boxes.sort();
    boxes
}

fn inclusion_exclusion(field: &GridField, b: &GridBox) -> f64 {
    let (lo, hi) = (b.lo(), b.hi());
    field.at(&[hi[0], hi[1]]) - field.at(&[lo[0], hi[1]]) - field.at(&[hi[0], lo[1]])
        + field.at(&[lo[0], lo[1]])
}

fn two_box_field() -> GridField {
    field_from_masses(4, &[(1, 1, 0.4), (3, 3, -0.3)])
}

#[test]
fn ks_examples() {
    let mut field = GridField::zeros(3, 2, FieldKind::SimpleProcess);
    assert_eq!(ks_statistic(&field), 0.0);
    field.set(&[1, 2], -0.7);
    assert_eq!(ks_statistic(&field), 0.7);

    let s = Sample::from_rows(&[[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]]).unwrap();
    let field = grid_simple(&s, &CopulaModel::independence(), 2).unwrap();
    assert_eq!(ks_statistic(&field), 0.5);
}

#[test]
fn cvm_examples() {
    let s = Sample::from_rows(&[[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]]).unwrap();
    // Atoms (k/4, k/4): 2·(k/4 − k²/16) = 0.375, 0.5, 0.375, 0.
    let expected = (0.375f64.powi(2) + 0.25 + 0.375f64.powi(2)) / 4.0;
    let value = cvm_statistic(&s, &CopulaModel::independence()).unwrap();
    assert!((value - expected).abs() < 1e-15);

    let one = Sample::from_rows(&[[0.3, 0.4]]).unwrap();
    let half = ExplicitCdf::new(Some(2), |_: &[f64]| 0.5);
    assert!((cvm_statistic(&one, &half).unwrap() - 0.25).abs() < 1e-15);

    let s =
        Sample::from_rows(&[[0.2, 0.9], [0.5, 0.1], [0.7, 0.6], [0.1, 0.3], [0.9, 0.8]]).unwrap();
    let own = EmpiricalCopula::from_sample(&s);
    let null = ExplicitCdf::new(Some(2), move |u: &[f64]| own.eval(u));
    assert_eq!(cvm_statistic(&s, &null).unwrap(), 0.0);
}

#[test]
fn box_count_examples() {
    assert_eq!(box_count_rule(800), 4);
    assert_eq!(box_count_rule(400), 3);
    assert_eq!(box_count_rule(200), 2);
    assert_eq!(box_count_rule(10), 1);
    assert_eq!(box_count_rule(2), 1);
}

#[test]
fn chi2_resolution_examples() {
    assert_eq!(chi2_resolution(1, 2), 2);
    assert_eq!(chi2_resolution(3, 2), 2);
    assert_eq!(chi2_resolution(4, 2), 3);
    assert_eq!(chi2_resolution(9, 2), 4);
    assert_eq!(chi2_resolution(7, 3), 2);
    assert_eq!(chi2_resolution(8, 3), 3);
}

#[test]
fn chi2_examples() {
    assert_eq!(
        chi2_statistic(&GridField::zeros(4, 2, FieldKind::SimpleProcess), 1).unwrap(),
        0.0
    );
    // Cell measures 0.1, 0.2, 0.1, 0.1.
    let values = vec![0.0, 0.0, 0.0, 0.0, 0.1, 0.3, 0.0, 0.2, 0.5];
    let field = GridField::new(2, 2, FieldKind::SimpleProcess, values).unwrap();
    assert!((chi2_statistic(&field, 1).unwrap() - 0.07).abs() < 1e-15);

    let fine = random_field(6, 2, 3);
    let mut coarse = GridField::zeros(3, 2, FieldKind::SimpleProcess);
    for i in 0..=3 {
        for j in 0..=3 {
            coarse.set(&[i, j], fine.at(&[2 * i, 2 * j]));
        }
    }
    let a = chi2_statistic(&fine, 4).unwrap();
    let b = chi2_statistic(&coarse, 4).unwrap();
    assert!((a - b).abs() < 1e-12);
    assert!(chi2_statistic(&random_field(5, 2, 1), 1).is_err());
}

#[test]
fn ranking_matches_brute_force() {
    for seed in 0..10 {
        let field = random_field(2, 2, seed);
        let mut expected: Vec<(GridBox, f64)> = all_boxes_2d(2)
            .into_iter()
            .map(|b| {
                let g = inclusion_exclusion(&field, &b);
                (b, g)
            })
            .collect();
        expected.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
        let ranked = enumerate_and_rank_boxes(&field, 9).unwrap();
        assert_eq!(ranked.len(), 9);
        for (r, (b, g)) in ranked.iter().zip(&expected) {
            assert_eq!(&r.bx, b);
            assert!((r.measure - g).abs() < 1e-12);
        }
        // Asking for more boxes than exist returns them all.
        assert_eq!(enumerate_and_rank_boxes(&field, 50).unwrap(), ranked);
    }
}

#[test]
fn ranking_of_degenerate_fields() {
    let zero = GridField::zeros(3, 2, FieldKind::SimpleProcess);
    let ranked = enumerate_and_rank_boxes(&zero, 5).unwrap();
    assert_eq!(ranked.len(), 5);
    assert!(ranked.iter().all(|b| b.score() == 0.0));

    let mut masses = vec![];
    for i in 1..=3 {
        for j in 1..=3 {
            masses.push((i, j, if (i, j) == (2, 3) { 0.5 } else { -0.01 }));
        }
    }
    let ranked = enumerate_and_rank_boxes(&field_from_masses(3, &masses), 3).unwrap();
    assert_eq!(ranked[0].bx, GridBox::new(vec![1, 2], vec![2, 3]).unwrap());
    assert!((ranked[0].measure - 0.5).abs() < 1e-12);
}

#[test]
fn ranking_scales_to_three_dimensions() {
    let field = random_field(3, 3, 5);
    let index = BoxIndex::new(3, 3).unwrap();
    assert_eq!(index.len(), 216);
    let measures = index.measures(&field).unwrap();
    for k in [0, 17, 100, 215] {
        let b = index.grid_box(k);
        assert!((measures[k] - box_measure(&field, &b).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn prs_single_box_is_the_top_of_the_ranking() {
    let field = random_field(5, 2, 8);
    let config = AtvConfig::new(1, 30, 200, 4).unwrap();
    let family = atv_prs(&field, &config).unwrap();
    let top = enumerate_and_rank_boxes(&field, 1).unwrap();
    assert_eq!(family.score, top[0].score());
    assert_eq!(family.boxes, vec![top[0].bx.clone()]);
}

#[test]
fn two_box_field_scores() {
    let field = two_box_field();
    let config = AtvConfig::new(2, 50, 10_000, 1).unwrap();
    let prs = atv_prs(&field, &config).unwrap();
    assert!((prs.score - 0.7).abs() < 1e-12, "{}", prs.score);
    assert!(prs.is_pairwise_disjoint());
    assert!((atv_exact(&field, 2).unwrap().score - 0.7).abs() < 1e-12);
    assert!((kuiper_statistic(&field, 2).unwrap() - 0.7).abs() < 1e-12);
}

#[test]
fn exact_matches_reversed_enumeration() {
    for seed in 0..20 {
        let field = random_field(2, 2, 100 + seed);
        let boxes = all_boxes_2d(2);
        let g: Vec<f64> = boxes
            .iter()
            .map(|b| inclusion_exclusion(&field, b).abs())
            .collect();
        let mut best: f64 = 0.0;
        for i in (0..boxes.len()).rev() {
            best = best.max(g[i]);
            for j in (0..i).rev() {
                if boxes[i].is_disjoint(&boxes[j]) {
                    best = best.max(g[i] + g[j]);
                }
            }
        }
        let exact = atv_exact(&field, 2).unwrap();
        assert!((exact.score - best).abs() < 1e-12);
        assert!(exact.is_pairwise_disjoint());
    }
}

#[test]
fn exact_trivial_cases() {
    let zero = GridField::zeros(3, 2, FieldKind::SimpleProcess);
    assert_eq!(atv_exact(&zero, 2).unwrap().score, 0.0);
    let field = random_field(4, 2, 9);
    let max_abs = all_boxes_2d(4)
        .iter()
        .map(|b| inclusion_exclusion(&field, b).abs())
        .fold(0.0, f64::max);
    assert_eq!(atv_exact(&field, 1).unwrap().score, max_abs);
    assert_eq!(kuiper_statistic(&field, 1).unwrap(), max_abs);
}

#[test]
fn resource_guard_and_config_errors() {
    let big = GridField::zeros(20, 2, FieldKind::SimpleProcess);
    assert!(matches!(
        atv_exact(&big, 3),
        Err(Error::ResourceGuard { .. })
    ));
    assert!(atv_exact(&big, 0).is_err());
    assert!(AtvConfig::new(0, 5, 10, 0).is_err());
    assert!(AtvConfig::new(6, 5, 10, 0).is_err());
    assert!(AtvConfig::new(1, 5, 0, 0).is_err());
    // Only nine boxes exist at p = 2.
    let config = AtvConfig::new(10, 20, 10, 0).unwrap();
    assert!(matches!(
        atv_prs(&GridField::zeros(2, 2, FieldKind::SimpleProcess), &config),
        Err(Error::Config(_))
    ));
    let defaults = AtvConfig::for_sample_size(800, 3);
    assert_eq!(
        (defaults.boxes, defaults.shortlist, defaults.draws),
        (4, 800, 10_000)
    );
}

#[test]
fn statistics_are_rank_invariant() {
    let model = CopulaModel::clayton(2.0).unwrap();
    let s = model.sample(150, &mut stream(4, 0, Purpose::Data)).unwrap();
    let t = s
        .map_column(0, f64::exp)
        .unwrap()
        .map_column(1, |x| -1.0 / x)
        .unwrap();
    let null = CopulaModel::frank(1.0).unwrap();
    let (a, b) = (
        grid_simple(&s, &null, 12).unwrap(),
        grid_simple(&t, &null, 12).unwrap(),
    );
    assert_eq!(ks_statistic(&a), ks_statistic(&b));
    assert_eq!(
        cvm_statistic(&s, &null).unwrap(),
        cvm_statistic(&t, &null).unwrap()
    );
    assert_eq!(
        chi2_statistic(&a, 3).unwrap(),
        chi2_statistic(&b, 3).unwrap()
    );
    assert_eq!(
        kuiper_statistic(&a, 3).unwrap(),
        kuiper_statistic(&b, 3).unwrap()
    );
    let config = AtvConfig::new(3, 150, 2000, 5).unwrap();
    assert_eq!(atv_prs(&a, &config).unwrap(), atv_prs(&b, &config).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prs_never_beats_exact(
        seed in 0u64..10_000, p in 2usize..5, l in 1usize..4, m in 3usize..40, k in 1usize..3000,
    ) {
        let field = random_field(p, 2, seed);
        let config = AtvConfig::new(l, m.max(l), k, seed).unwrap();
        let prs = atv_prs(&field, &config).unwrap();
        let exact = atv_exact(&field, l).unwrap();
        let kuiper = kuiper_family(&field, l).unwrap();
        prop_assert!(prs.score <= exact.score + 1e-12);
        prop_assert!(kuiper.score <= exact.score + 1e-12);
        prop_assert!(prs.is_pairwise_disjoint());
        prop_assert!(exact.is_pairwise_disjoint());
        prop_assert!(kuiper.is_pairwise_disjoint());
    }

    #[test]
    fn prs_is_monotone_in_draws(
        seed in 0u64..10_000, k1 in 1usize..3000, extra in 0usize..3000, l in 1usize..5,
    ) {
        let field = random_field(6, 2, seed);
        let small = AtvConfig::new(l, 60, k1, seed).unwrap();
        let large = AtvConfig { draws: k1 + extra, ..small };
        let a = atv_prs(&field, &small).unwrap();
        let b = atv_prs(&field, &large).unwrap();
        prop_assert!(b.score >= a.score);
    }
}
