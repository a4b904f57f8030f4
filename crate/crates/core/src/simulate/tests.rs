use super::*;
use crate::copula::empirical_tau;

fn small_config(seed: u64) -> TestConfig {
    TestConfig {
        replicates: 20,
        draws: 200,
        seed,
        ..TestConfig::default()
    }
}

/// Largest distance between the empirical cdf of `values` and the uniform
/// cdf.
fn uniform_distance(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    values
        .iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn arch_recursion_starts_at_zero() {
    let w = arch_path(5, &mut stream(1, 0, Purpose::Data));
    let mut rng = stream(1, 0, Purpose::Data);
    let z1: f64 = rng.sample(StandardNormal);
    let z2: f64 = rng.sample(StandardNormal);
    assert_eq!(w[0], 0.0);
    assert_eq!(w[1], z1);
    assert_eq!(w[2], z2 * (1.0 + 0.6 * z1 * z1).sqrt());
}

#[test]
fn arch_pairs_are_lagged_path_values() {
    let s = gen_arch(3, &mut stream(2, 0, Purpose::Data)).unwrap();
    let w = arch_path(301, &mut stream(2, 0, Purpose::Data));
    assert_eq!(s.row(1), &[w[200], w[201]]);
    assert_eq!(s.row(2), &[w[300], w[301]]);
    assert!(gen_arch(0, &mut stream(2, 0, Purpose::Data)).is_err());
}

#[test]
fn arch_is_centred() {
    let s = gen_arch(100_000, &mut stream(3, 0, Purpose::Data)).unwrap();
    let mean = s.column(0).iter().sum::<f64>() / s.n() as f64;
    assert!(mean.abs() < 0.02, "{mean}");
}

#[test]
fn mixture_margins_and_tau() {
    let n = 100_000;
    let s = gen_mixture(n, &mut stream(4, 0, Purpose::Data)).unwrap();
    let bound = 1.5 / (n as f64).sqrt();
    assert!(uniform_distance(s.column(0)) <= bound);
    assert!(uniform_distance(s.column(1)) <= bound);
    let tau = empirical_tau(&s).unwrap();
    assert!(tau.abs() < 0.02, "{tau}");
}

#[test]
fn mixture_with_certain_heads_is_frank() {
    let a = gen_mixture_with(500, &mut stream(5, 0, Purpose::Data), 1.0).unwrap();
    let b = gen_copula(
        Family::Frank,
        MIXTURE_TAU,
        500,
        &mut stream(5, 0, Purpose::Data),
    )
    .unwrap();
    assert_eq!(a, b);
    let tails = gen_mixture_with(500, &mut stream(5, 0, Purpose::Data), 0.0).unwrap();
    assert!(empirical_tau(&tails).unwrap() < -0.3);
    assert!(gen_mixture_with(5, &mut stream(5, 0, Purpose::Data), 1.5).is_err());
}

#[test]
fn gen_copula_hits_its_tau() {
    let n = 100_000;
    for (family, tau) in [
        (Family::Clayton, 0.4),
        (Family::Gumbel, 0.4),
        (Family::Frank, 0.4),
        (Family::Frank, -0.3),
        (Family::Independence, 0.0),
    ] {
        let s = gen_copula(family, tau, n, &mut stream(6, 0, Purpose::Data)).unwrap();
        // Var(τ_n) ≤ 2(1 − τ²)/n.
        let se = (2.0 * (1.0 - tau * tau) / n as f64).sqrt();
        let est = empirical_tau(&s).unwrap();
        assert!((est - tau).abs() <= 3.0 * se, "{family}: {est}");
    }
}

#[test]
fn scenario_names() {
    let c = small_config(0);
    let stats = vec![StatisticKind::Ks];
    let arch = Scenario::named("ARCH-S", 100, 3, 0.4, stats.clone(), c.clone()).unwrap();
    assert_eq!(arch.name, "arch-s");
    assert_eq!(arch.generator, Generator::Arch);
    assert!(matches!(arch.null, NullSpec::Simple { .. }));
    let mix = Scenario::named("mixture-c", 100, 3, 0.4, stats.clone(), c.clone()).unwrap();
    assert_eq!(mix.generator, Generator::Mixture);
    assert!(matches!(
        mix.null,
        NullSpec::Composite {
            family: Family::Frank,
            ..
        }
    ));
    let cg = Scenario::named("clayton-gumbel", 100, 3, 0.5, stats.clone(), c.clone()).unwrap();
    assert_eq!(
        cg.generator,
        Generator::Copula {
            family: Family::Clayton,
            tau: 0.5
        }
    );
    assert!(matches!(
        cg.null,
        NullSpec::Composite {
            family: Family::Gumbel,
            ..
        }
    ));

    for bad in ["arch", "frank-", "frank-foo", "independence-frank"] {
        assert!(
            Scenario::named(bad, 100, 3, 0.4, stats.clone(), c.clone()).is_err(),
            "{bad}"
        );
    }
    assert!(Scenario::named("arch-s", 100, 0, 0.4, stats.clone(), c.clone()).is_err());
    assert!(Scenario::named("arch-s", 100, 1, 0.4, vec![], c.clone()).is_err());
    assert!(Scenario::named("clayton-frank", 100, 1, -0.2, stats, c).is_err());
}

#[test]
fn single_replication_gives_zero_or_one() {
    let s = Scenario::named(
        "frank-frank",
        80,
        1,
        0.4,
        StatisticKind::ALL.to_vec(),
        small_config(7),
    )
    .unwrap();
    let report = run_study(&s).unwrap();
    assert_eq!(report.completed + report.aborted, 1);
    for f in &report.frequencies {
        assert!(f.frequency == 0.0 || f.frequency == 1.0);
    }
}

#[test]
fn studies_are_deterministic() {
    let stats = vec![StatisticKind::Atv, StatisticKind::Cvm];
    let make = |workers| {
        let config = TestConfig {
            workers,
            ..small_config(8)
        };
        Scenario::named("mixture-s", 60, 4, 0.4, stats.clone(), config).unwrap()
    };
    let a = run_study(&make(Some(1))).unwrap();
    let b = run_study(&make(Some(3))).unwrap();
    assert_eq!(a.frequencies, b.frequencies);
    assert_eq!(a.completed, 4);
    let json = serde_json::to_value(&a).unwrap();
    assert!(json.get("elapsed").is_none());
    assert!(json.get("frequencies").is_some());
}

#[test]
fn table_layout() {
    let scenario = Scenario::named(
        "arch-s",
        60,
        2,
        0.4,
        vec![StatisticKind::Ks],
        small_config(9),
    )
    .unwrap();
    let report = StudyReport {
        scenario,
        completed: 2,
        aborted: 0,
        frequencies: vec![Frequency {
            statistic: StatisticKind::Ks,
            rejections: 1,
            frequency: 0.5,
        }],
        elapsed: Duration::ZERO,
    };
    let table = render_table(&[report]);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("type") && lines[0].ends_with("arch-s"));
    assert!(lines[1].starts_with("KS") && lines[1].ends_with("50%"));
}
