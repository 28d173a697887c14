#![allow(clippy::approx_constant)]

mod common;

use approx::assert_abs_diff_eq;
use hgrowth::dynamics::{
    integrate_dynasty_mass, integrate_mass_dynamics, integrate_share_dynamics,
    type_competition_share,
};
use hgrowth::lottery::{fosd_dominates, validate, LotteryError};
use hgrowth::risk::{
    beta_threshold, growth_under_utility, prefers_lottery, skewness_sufficient_condition,
};
use hgrowth::{
    binary_closed_form, equivalent_growth_rate, naive_aggregate_rate, solve_x_star,
    synchronous_growth_rate, ConsumptionLottery, GrowthProcess, Lottery, PowerUtility,
    RiskComponent,
};

fn base() -> Lottery {
    Lottery::binary(0.0, 0.02, 0.5).unwrap()
}

fn fig1() -> Lottery {
    Lottery::new(vec![0.0, 0.05], vec![0.9, 0.1]).unwrap()
}

fn skewed() -> ConsumptionLottery {
    ConsumptionLottery::new(Lottery::new(vec![1.0, 100.0], vec![0.99, 0.01]).unwrap()).unwrap()
}

#[test]
fn validate_examples() {
    assert!(validate(&[0.0, 0.02], &[0.5, 0.5]).is_ok());
    assert!(validate(&[0.05], &[1.0]).is_ok());
    assert!(matches!(
        validate(&[0.02, 0.0], &[0.5, 0.5]),
        Err(LotteryError::NonIncreasingSupport { .. })
    ));
}

#[test]
fn mean_examples() {
    assert_abs_diff_eq!(base().mean(), 0.01, epsilon = 1e-16);
    assert_abs_diff_eq!(
        Lottery::degenerate(0.05).unwrap().mean(),
        0.05,
        epsilon = 1e-16
    );
    assert_abs_diff_eq!(fig1().mean(), 0.005, epsilon = 1e-16);
}

#[test]
fn spread_examples() {
    let three = Lottery::new(vec![0.0, 0.01, 0.02], vec![0.25, 0.5, 0.25]).unwrap();
    let split = three.split_spread(1, 0.5).unwrap();
    assert_abs_diff_eq!(split.mean(), three.mean(), epsilon = 1e-16);
    assert!(split.variance() > three.variance());

    let narrow = Lottery::new(vec![0.01, 0.03], vec![0.5, 0.5]).unwrap();
    let wide = narrow.mean_preserving_spread(0, 0.005).unwrap();
    assert_abs_diff_eq!(wide.support()[0], 0.0, epsilon = 1e-16);
    assert_abs_diff_eq!(wide.support()[1], 0.04, epsilon = 1e-16);
    assert_eq!(wide.probs(), &[0.5, 0.5]);
    assert_abs_diff_eq!(wide.mean(), 0.02, epsilon = 1e-16);
}

#[test]
fn fosd_examples() {
    assert!(fosd_dominates(&[0.2929, 0.7071], &[0.5, 0.5]).unwrap());
    assert!(!fosd_dominates(&[0.5, 0.5], &[0.5, 0.5]).unwrap());
    assert!(!fosd_dominates(&[0.6, 0.4], &[0.5, 0.5]).unwrap());
}

#[test]
fn solve_examples() {
    let s = solve_x_star(&base(), 0.02).unwrap();
    assert_abs_diff_eq!(s.x_star, 0.0141421, epsilon = 1e-7);
    assert_abs_diff_eq!(s.p_star[0], 0.2929, epsilon = 1e-4);
    assert_abs_diff_eq!(s.p_star[1], 0.7071, epsilon = 1e-4);
    for lambda in [1e-4, 0.3, 50.0] {
        assert_eq!(
            solve_x_star(&Lottery::degenerate(0.05).unwrap(), lambda)
                .unwrap()
                .x_star,
            0.05
        );
    }
    assert_abs_diff_eq!(
        solve_x_star(&fig1(), 0.02).unwrap().x_star,
        0.0330278,
        epsilon = 1e-7
    );
}

#[test]
fn growth_rate_examples() {
    let p = GrowthProcess::heritable_only(base(), 0.02, 0.014).unwrap();
    assert_abs_diff_eq!(equivalent_growth_rate(&p).unwrap(), 1.42e-4, epsilon = 1e-6);

    // rate 0.05 for sure, delta 0.05
    let degenerate = Lottery::degenerate(0.05).unwrap();
    assert_eq!(solve_x_star(&degenerate, 0.1).unwrap().x_star - 0.05, 0.0);

    let raised = GrowthProcess::heritable_only(base(), 0.02, 0.024).unwrap();
    let drop = equivalent_growth_rate(&p).unwrap() - equivalent_growth_rate(&raised).unwrap();
    assert_abs_diff_eq!(drop, 0.01, epsilon = 1e-15);

    let with_other = GrowthProcess::new(
        0.014,
        RiskComponent::new(base(), 0.02),
        RiskComponent::new(Lottery::binary(0.0, 0.01, 0.5).unwrap(), 0.3),
        RiskComponent::zero(),
    )
    .unwrap();
    assert_abs_diff_eq!(
        equivalent_growth_rate(&with_other).unwrap(),
        equivalent_growth_rate(&p).unwrap() + 0.005,
        epsilon = 1e-15
    );
}

#[test]
fn naive_rate_examples() {
    assert_abs_diff_eq!(
        naive_aggregate_rate(&base(), 0.014),
        -0.004,
        epsilon = 1e-16
    );
    assert_eq!(
        naive_aggregate_rate(&Lottery::degenerate(0.05).unwrap(), 0.0),
        0.05
    );
    assert_abs_diff_eq!(naive_aggregate_rate(&fig1(), 0.0), 0.005, epsilon = 1e-16);
}

#[test]
fn closed_form_examples() {
    let s = binary_closed_form(0.0, 0.02, 0.5, 0.02).unwrap();
    assert_abs_diff_eq!(s.x_star, 0.0141421, epsilon = 1e-7);
    assert_abs_diff_eq!(s.p_star[1], 0.7071, epsilon = 1e-4);
    assert_abs_diff_eq!(
        binary_closed_form(0.0, 0.05, 0.1, 0.02).unwrap().x_star,
        0.0330278,
        epsilon = 1e-7
    );
    let near_certain = binary_closed_form(0.0, 0.05, 1.0 - 1e-12, 0.02)
        .unwrap()
        .x_star;
    assert_abs_diff_eq!(near_certain, 0.05, epsilon = 1e-12);
}

#[test]
fn synchronous_examples() {
    assert_abs_diff_eq!(
        synchronous_growth_rate(0.0, 0.05, 0.9, 100.0),
        0.005,
        epsilon = 1e-4
    );
    assert_abs_diff_eq!(
        synchronous_growth_rate(0.0, 0.05, 0.9, 1e-4),
        0.05,
        epsilon = 1e-3
    );
    for lambda in [1e-4, 0.1, 1.0, 100.0] {
        assert_abs_diff_eq!(
            synchronous_growth_rate(0.03, 0.03, 0.4, lambda),
            0.03,
            epsilon = 1e-15
        );
    }
}

#[test]
fn share_dynamics_examples() {
    let t = integrate_share_dynamics(&base(), 0.02, &[0.5, 0.5], 2_000.0, 0.1).unwrap();
    let target = binary_closed_form(0.0, 0.02, 0.5, 0.02).unwrap().p_star;
    for (a, b) in t.terminal().iter().zip(&target) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-6);
    }

    let flat = integrate_share_dynamics(&base(), 0.02, &target, 1_000.0, 0.1).unwrap();
    for s in &flat.shares {
        for (a, b) in s.iter().zip(&target) {
            assert!((a - b).abs() <= 1e-9 * 1_000.0);
        }
    }

    let mut rng = common::rng(21);
    let four = common::lottery(&mut rng, 4, 0.0, 0.05, 0.05);
    let p_star = solve_x_star(&four, 0.05).unwrap().p_star;
    for _ in 0..100 {
        let p0 = common::random_interior_simplex(&mut rng, 4);
        let t = integrate_share_dynamics(&four, 0.05, &p0, 1_000.0, 0.5).unwrap();
        for (a, b) in t.terminal().iter().zip(&p_star) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-6);
        }
    }
}

#[test]
fn mass_dynamics_examples() {
    let p = GrowthProcess::heritable_only(base(), 0.02, 0.014).unwrap();
    let m = integrate_mass_dynamics(&p, &[0.5, 0.5], 20_000.0, 0.1).unwrap();
    let rate = *m.log_w.last().unwrap() / 20_000.0;
    assert_abs_diff_eq!(rate, 1.42e-4, epsilon = 1e-5);

    let flat = integrate_dynasty_mass(
        &Lottery::degenerate(0.03).unwrap(),
        0.01,
        0.01,
        0.03,
        &[1.0],
        500.0,
        0.1,
    )
    .unwrap();
    for lw in &flat.log_w {
        assert_abs_diff_eq!(*lw, 0.0, epsilon = 1e-12);
    }
}

#[test]
fn dynasty_examples() {
    let p = GrowthProcess::heritable_only(base(), 0.02, 0.014).unwrap();
    let baseline = integrate_mass_dynamics(&p, &[0.5, 0.5], 3_000.0, 0.1).unwrap();
    for (lm, lr) in [(0.01, 0.01), (0.0, 0.02), (0.02, 0.0)] {
        let d = integrate_dynasty_mass(&base(), lm, lr, 0.014, &[0.5, 0.5], 3_000.0, 0.1).unwrap();
        assert_eq!(d, baseline);
    }
}

#[test]
fn competition_examples() {
    for t in [0.0, 10.0, 1e6] {
        assert_eq!(type_competition_share(0.01, 0.01, t), 0.5);
    }
    assert!(type_competition_share(0.011, 0.01, 1e6) >= 1.0 - 1e-12);
    assert_eq!(type_competition_share(0.3, 0.01, 0.0), 0.5);
}

#[test]
fn utility_examples() {
    let c = ConsumptionLottery::new(Lottery::degenerate(9.0).unwrap()).unwrap();
    for lambda in [0.01, 1.0] {
        let g = growth_under_utility(&c, &PowerUtility::new(0.5).unwrap(), lambda).unwrap();
        assert_abs_diff_eq!(g, 3.0, epsilon = 1e-15);
        assert!(!prefers_lottery(&c, &PowerUtility::new(0.5).unwrap(), lambda).unwrap());
    }
    assert_eq!(beta_threshold(&c, 0.5).unwrap(), None);

    let g = growth_under_utility(&skewed(), &PowerUtility::new(1.0).unwrap(), 0.5).unwrap();
    assert!(g > 99.5 && g < 100.0);
    assert!(prefers_lottery(&skewed(), &PowerUtility::new(1.0).unwrap(), 0.5).unwrap());
    assert!(!prefers_lottery(&skewed(), &PowerUtility::new(0.01).unwrap(), 0.5).unwrap());
    assert!(beta_threshold(&skewed(), 0.5).unwrap().is_some());
}

#[test]
fn skewness_examples() {
    let psi = PowerUtility::new(0.5).unwrap();
    assert!(skewness_sufficient_condition(&skewed(), &psi, 0.5));
    assert!(!skewness_sufficient_condition(&skewed(), &psi, 1e3));
}
