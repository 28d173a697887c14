use hgrowth::popsim::{
    ratio_sweep, run, run_batch, BatchSummary, SimConfig, SimTrace, Termination,
};
use hgrowth::{binary_closed_form, solve_x_star, Lottery};

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[m - 1] + v[m]) / 2.0
    } else {
        v[m]
    }
}

fn second_half_high_share(t: &SimTrace) -> f64 {
    let years = t.last().year;
    t.mean_high_share(years / 2, years).unwrap()
}

#[test]
fn conservation_and_dynasty_bound() {
    let cfg = SimConfig {
        max_years: 4_000,
        seed: 11,
        ..SimConfig::default()
    };
    let trace = run(&cfg).unwrap();
    let mut prev = cfg.n_agents;
    for r in &trace.records {
        assert_eq!(r.population, prev + r.births - r.deaths, "year {}", r.year);
        assert!(r.occupied <= cfg.n_dynasties);
        assert!((0.0..=1.0).contains(&r.high_share));
        assert!((0.0..=1.0).contains(&r.max_dynasty_share));
        prev = r.population;
    }
}

#[test]
fn no_births_no_deaths_is_static() {
    let cfg = SimConfig {
        x_low: 0.0,
        x_high: 0.0,
        delta: 0.0,
        max_years: 500,
        seed: 3,
        ..SimConfig::default()
    };
    let trace = run(&cfg).unwrap();
    assert_eq!(trace.status, Termination::MaxYears);
    assert!(trace
        .records
        .iter()
        .all(|r| r.population == 3_000 && r.cum_growth == 0.0));
}

#[test]
fn ratio_split() {
    let base = SimConfig::default();
    let one = base.with_ratio(1.0, 0.02);
    assert!((one.lambda_m - 0.01).abs() < 1e-15 && (one.lambda_r - 0.01).abs() < 1e-15);
    let quarter = base.with_ratio(0.25, 0.02);
    assert!((quarter.lambda_m - 0.004).abs() < 1e-15 && (quarter.lambda_r - 0.016).abs() < 1e-15);
}

#[test]
fn single_run_batch_summary() {
    let cfg = SimConfig {
        max_years: 2_000,
        ..SimConfig::default()
    };
    let batch = run_batch(&cfg, 1, 77).unwrap();
    let alone = run(&SimConfig { seed: 77, ..cfg }).unwrap();
    assert_eq!(batch.traces[0], alone);
    assert_eq!(batch.summary.n_runs, 1);
    assert_eq!(batch.summary.mean_growth, alone.final_growth());
    assert_eq!(batch.summary.extinctions, 0);
    assert_eq!(batch.summary, BatchSummary::from_traces(&batch.traces));
}

#[test]
fn batch_matches_sequential_runs() {
    let cfg = SimConfig {
        max_years: 1_500,
        ..SimConfig::default().with_ratio(0.1, 0.02)
    };
    let batch = run_batch(&cfg, 6, 500).unwrap();
    for (i, trace) in batch.traces.iter().enumerate() {
        let alone = run(&SimConfig {
            seed: 500 + i as u64,
            ..cfg.clone()
        })
        .unwrap();
        assert_eq!(trace.to_csv_string(1, None), alone.to_csv_string(1, None));
    }
}

#[test]
fn continuum_consistency_tightens_with_scale() {
    let p_high = binary_closed_form(0.0, 0.02, 0.5, 0.02).unwrap().p_star[1];
    let small = SimConfig {
        max_years: 8_000,
        ..SimConfig::default()
    };
    let large = SimConfig {
        n_agents: 30_000,
        n_dynasties: 3_000,
        ..small.clone()
    };
    let spread = |cfg: &SimConfig| {
        let batch = run_batch(cfg, 4, 2_000).unwrap();
        assert!(batch
            .traces
            .iter()
            .all(|t| t.status == Termination::MaxYears));
        batch
            .traces
            .iter()
            .map(|t| (second_half_high_share(t) - p_high).abs())
            .fold(0.0, f64::max)
    };
    let (dev_small, dev_large) = (spread(&small), spread(&large));
    assert!(dev_small < 0.05, "1x deviation {dev_small}");
    assert!(dev_large < 0.02, "10x deviation {dev_large}");
    assert!(dev_large < dev_small, "10x {dev_large} vs 1x {dev_small}");
}

#[test]
fn zero_migration_concentrates() {
    let cfg = SimConfig {
        lambda_m: 0.0,
        max_years: 10_000,
        ..SimConfig::default()
    };
    let batch = run_batch(&cfg, 15, 300).unwrap();
    let (mut first, mut last) = (Vec::new(), Vec::new());
    for t in &batch.traces {
        let n = t.records.len();
        let quarter = (n / 4).max(1);
        let mean = |rs: &[hgrowth::popsim::YearRecord]| {
            rs.iter().map(|r| r.max_dynasty_share).sum::<f64>() / rs.len() as f64
        };
        first.push(mean(&t.records[..quarter]));
        last.push(mean(&t.records[n - quarter..]));
    }
    let (a, b) = (median(first), median(last));
    assert!(b > a, "first quartile {a}, last quartile {b}");
}

#[test]
fn reduced_sweep_ordering() {
    let base = SimConfig {
        max_years: 6_000,
        seed: 900,
        ..SimConfig::default()
    };
    let rows = ratio_sweep(&base, &[0.01, 0.1, 1.0], 0.02, 6).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].extinctions >= rows[2].extinctions);
    assert!(rows[0].mean_growth < rows[2].mean_growth);
    let continuum = {
        let l = Lottery::binary(0.0, 0.02, 0.5).unwrap();
        solve_x_star(&l, 0.02).unwrap().x_star - 0.014
    };
    assert!(rows[2].mean_growth < continuum + 2e-4);
}
