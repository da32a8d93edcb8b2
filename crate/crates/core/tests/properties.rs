//! Property and invariant tests: algebraic identities of the utility
//! factorings, derivative/finite-difference agreement, calibration
//! round-trips, and closed-form-vs-grid-oracle agreement on the worked
//! examples and on random scenarios.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use netgame::demand::{
    calibrate_smooth, derive_pwl_constants, LinearCommunalDemand, PwlConvexDemand,
    SmoothConvexDemand, SplitLinearDemand,
};
use netgame::dynamics::sample_field;
use netgame::equilibrium::{solve, solve_pwl_communal, verify_nep, Equilibrium, Mode};
use netgame::game::{Factoring, Player, PricePoint, Scenario};
use netgame::oracle::{find_grid_neps, numeric_profit_derivative, GridSpec};

fn thm1(p_s: f64) -> Scenario {
    Scenario::CommunalLinear {
        demand: LinearCommunalDemand::new(1.0, 1.0).unwrap(),
        side_payment: p_s,
    }
}

fn pwl(d_max: f64, d_th: f64, s_max: f64, s_th: f64, p_s: f64) -> Scenario {
    Scenario::PwlCommunal {
        demand: PwlConvexDemand::new(d_max, d_th, s_max, s_th).unwrap(),
        side_payment: p_s,
    }
}

fn pwl3() -> Scenario {
    pwl(1.0, 0.25, 1.0, 0.2, 0.125)
}

// ---------------------------------------------------------------------------
// Demand-curve properties
// ---------------------------------------------------------------------------

proptest! {
    // Both lines pass through (kink_price, theta_demand); f64 rounding in
    // the derived constants keeps the residual within a few ulps.
    #[test]
    fn pwl_pieces_meet_at_the_kink(
        d_max in 0.1f64..10.0,
        frac_d in 0.05f64..0.95,
        s_max in 0.1f64..10.0,
        frac_s in 0.05f64..0.95,
    ) {
        let d_theta = d_max * frac_d;
        let s_theta = s_max * frac_s;
        let m = PwlConvexDemand::new(d_max, d_theta, s_max, s_theta).unwrap();
        let steep = m.max_demand - m.max_sensitivity * m.kink_price;
        let shallow = m.shallow_intercept - m.theta_sensitivity * m.kink_price;
        prop_assert!((steep - d_theta).abs() <= 1e-14 * d_max);
        prop_assert!((shallow - d_theta).abs() <= 1e-14 * d_max);
    }

    // The envelope dominates each line and its slope never decreases.
    #[test]
    fn pwl_envelope_is_convex(
        d_max in 0.1f64..10.0,
        frac_d in 0.05f64..0.95,
        s_max in 0.1f64..10.0,
        frac_s in 0.05f64..0.95,
        t in 0.0f64..1.0,
    ) {
        let m = PwlConvexDemand::new(d_max, d_max * frac_d, s_max, s_max * frac_s).unwrap();
        let p = t * 1.2 * m.zero_price;
        let steep = m.max_demand - m.max_sensitivity * p;
        let shallow = m.shallow_intercept - m.theta_sensitivity * p;
        let v = m.eval(p);
        prop_assert!(v >= steep - 1e-15 && v >= shallow - 1e-15 && v >= 0.0);

        let q = p + 0.05 * m.zero_price;
        prop_assert!(m.slope(q).right >= m.slope(p).left - 1e-15);
    }

    #[test]
    fn derived_constants_satisfy_their_defining_relations(
        d_max in 0.1f64..10.0,
        frac_d in 0.05f64..0.95,
        s_max in 0.1f64..10.0,
        frac_s in 0.05f64..0.95,
    ) {
        let d_theta = d_max * frac_d;
        let s_theta = s_max * frac_s;
        let (dhat, p_theta, p_max) =
            derive_pwl_constants(d_max, d_theta, s_max, s_theta).unwrap();
        prop_assert!((p_max - (p_theta + d_theta / s_theta)).abs() <= 1e-12 * p_max);
        prop_assert!((dhat / s_theta - p_max).abs() <= 1e-12 * p_max);
    }

    // Calibration reproduces both slope conditions whenever feasible.
    #[test]
    fn calibration_round_trip(
        d_max in 0.2f64..5.0,
        frac_d in 0.05f64..0.9,
        s_max in 0.2f64..5.0,
        frac_s in 0.05f64..0.95,
    ) {
        prop_assume!(frac_d < frac_s); // D_theta/D_max < d_theta/d_max
        let d_theta = d_max * frac_d;
        let s_theta = s_max * frac_s;
        let m = calibrate_smooth(d_max, d_theta, s_max, s_theta).unwrap();
        prop_assert!((m.slope(0.0).right + s_max).abs() <= 1e-10 * s_max);
        let p_at = m.zero_price * (1.0 - (d_theta / d_max).powf(1.0 / m.alpha));
        prop_assert!((m.slope(p_at).right + s_theta).abs() <= 1e-10 * s_theta);
        prop_assert!(m.eval(m.zero_price) == 0.0);
    }
}

#[test]
fn demand_slopes_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let pwl = PwlConvexDemand::new(1.0, 0.4, 1.0, 0.2).unwrap();
    let smooth = SmoothConvexDemand::new(1.0, 1.0, 2.3).unwrap();
    let linear = LinearCommunalDemand::new(1.2, 0.8).unwrap();
    let h = 1e-6;
    let mut checked = 0;
    while checked < 100 {
        let p = rng.gen_range(0.01..0.9 * pwl.zero_price);
        // Away from the kink and the clamp.
        if (p - pwl.kink_price).abs() < 0.05 || p > pwl.zero_price - 0.05 {
            continue;
        }
        let fd = (pwl.eval(p + h) - pwl.eval(p - h)) / (2.0 * h);
        let an = pwl.slope(p).right;
        assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-3), "pwl at {p}: {fd} vs {an}");

        let q = rng.gen_range(0.01..0.9);
        let fd = (smooth.eval(q + h) - smooth.eval(q - h)) / (2.0 * h);
        let an = smooth.slope(q).right;
        assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-3), "smooth at {q}");

        let r = rng.gen_range(0.01..0.9 * linear.zero_price());
        let fd = (linear.eval(r + h) - linear.eval(r - h)) / (2.0 * h);
        assert!((fd - linear.slope(r).right).abs() <= 1e-6);
        checked += 1;
    }
}

// ---------------------------------------------------------------------------
// Utility factoring identities
// ---------------------------------------------------------------------------

#[test]
fn content_factoring_total_revenue_ignores_the_side_payment() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let demand = SplitLinearDemand::new(1.0, 1.0, 1.6, 2.0).unwrap();
    for _ in 0..200 {
        let p = PricePoint::new(rng.gen_range(0.0..0.5), rng.gen_range(0.0..0.5)).unwrap();
        let ps_a = rng.gen_range(-0.3..0.3);
        let ps_b = rng.gen_range(-0.3..0.3);
        let total = |p_s: f64| {
            let s = Scenario::SplitLinear {
                demand,
                side_payment: p_s,
                factoring: Factoring::Content,
            };
            let (u1, u2) = s.utilities(&p);
            u1 + u2
        };
        assert!((total(ps_a) - total(ps_b)).abs() <= 1e-12);
    }
}

#[test]
fn bandwidth_factoring_total_revenue_is_the_price_weighted_demand() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let demand = SplitLinearDemand::new(1.0, 1.0, 1.6, 2.0).unwrap();
    for _ in 0..200 {
        let p = PricePoint::new(rng.gen_range(0.0..0.5), rng.gen_range(0.0..0.5)).unwrap();
        let p_s = rng.gen_range(-0.3..0.3);
        let s = Scenario::SplitLinear {
            demand,
            side_payment: p_s,
            factoring: Factoring::Bandwidth,
        };
        let (u1, u2) = s.utilities(&p);
        let expected = p.p1 * demand.curve_1().eval(p.total())
            + p.p2 * demand.curve_2().eval(p.total());
        assert!((u1 + u2 - expected).abs() <= 1e-12);
    }
}

// ---------------------------------------------------------------------------
// Gradient vs finite differences, per scenario kind
// ---------------------------------------------------------------------------

fn fd_gradient(s: &Scenario, p: &PricePoint, h: f64) -> (f64, f64) {
    let u = |p1: f64, p2: f64| s.utilities(&PricePoint { p1, p2 });
    let d1 = (u(p.p1 + h, p.p2).0 - u(p.p1 - h, p.p2).0) / (2.0 * h);
    let d2 = (u(p.p1, p.p2 + h).1 - u(p.p1, p.p2 - h).1) / (2.0 * h);
    (d1, d2)
}

/// Rejects points near any utility kink or demand clamp of the scenario.
fn away_from_kinks(s: &Scenario, p: &PricePoint, margin: f64) -> bool {
    let total = p.total();
    if p.p1 < margin || p.p2 < margin {
        return false;
    }
    match s {
        Scenario::CommunalLinear { demand, .. } => demand.eval(total) > margin,
        Scenario::SplitLinear { demand, .. } => {
            demand.curve_1().eval(total) > margin && demand.curve_2().eval(total) > margin
        }
        Scenario::PwlCommunal { demand, .. } => {
            (total - demand.kink_price).abs() > margin
                && netgame::game::pwl_game_demand(demand, total) > margin
        }
        Scenario::SmoothCommunal { demand, .. } => total < demand.zero_price - margin,
        Scenario::SmoothSplit { zero_price, .. } => total < zero_price - margin,
        Scenario::EyeballTransit {
            max_demand_a,
            max_demand_b,
            zero_price,
            alpha,
            miss_fraction_a,
            miss_fraction_b,
            ..
        } => {
            let unit = |q: f64| (1.0 - q / zero_price).max(0.0).powf(*alpha);
            let net = miss_fraction_b * max_demand_a * unit(p.p2)
                - miss_fraction_a * max_demand_b * unit(p.p1);
            p.p1 < zero_price - margin && p.p2 < zero_price - margin && net.abs() > margin
        }
    }
}

#[test]
fn gradients_match_finite_differences_away_from_kinks() {
    let scenarios: Vec<Scenario> = vec![
        thm1(0.07),
        Scenario::SplitLinear {
            demand: SplitLinearDemand::new(1.0, 1.0, 1.6, 2.0).unwrap(),
            side_payment: 0.05,
            factoring: Factoring::Bandwidth,
        },
        Scenario::SplitLinear {
            demand: SplitLinearDemand::new(1.0, 1.0, 1.6, 2.0).unwrap(),
            side_payment: 0.05,
            factoring: Factoring::Content,
        },
        pwl3(),
        Scenario::SmoothCommunal {
            demand: SmoothConvexDemand::new(1.0, 1.0, 2.0).unwrap(),
            side_payment: 0.03,
        },
        Scenario::SmoothSplit {
            max_demand_1: 1.0,
            max_demand_2: 2.0,
            zero_price: 1.0,
            alpha: 2.0,
            side_payment: 0.03,
        },
        Scenario::EyeballTransit {
            max_demand_a: 1.0,
            max_demand_b: 0.5,
            zero_price: 1.0,
            alpha: 1.0,
            miss_fraction_a: 0.8,
            miss_fraction_b: 0.4,
            transit_price: 0.2,
        },
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let h = 1e-6;
    for s in &scenarios {
        let ceiling = s.price_ceiling();
        let mut checked = 0;
        while checked < 100 {
            let p = PricePoint::new(
                rng.gen_range(0.02..0.95 * ceiling),
                rng.gen_range(0.02..0.95 * ceiling),
            )
            .unwrap();
            if !away_from_kinks(s, &p, 0.03) {
                continue;
            }
            let g = s.utility_gradient(&p);
            let (fd1, fd2) = fd_gradient(s, &p, h);
            assert!(
                (g.d_u1_d_p1.right - fd1).abs() <= 1e-6 * fd1.abs().max(1e-3),
                "{} dU1 at {p:?}: {} vs {fd1}",
                s.kind(),
                g.d_u1_d_p1.right
            );
            assert!(
                (g.d_u2_d_p2.right - fd2).abs() <= 1e-6 * fd2.abs().max(1e-3),
                "{} dU2 at {p:?}: {} vs {fd2}",
                s.kind(),
                g.d_u2_d_p2.right
            );
            checked += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// Closed forms vs the grid oracle
// ---------------------------------------------------------------------------

fn oracle_contains(s: &Scenario, expected: &PricePoint, step: f64) -> bool {
    let grid = GridSpec::new(0.0, s.price_ceiling(), step).unwrap();
    let found = find_grid_neps(s, &grid, None).unwrap();
    found
        .all_nodes()
        .iter()
        .any(|n| (n.p1 - expected.p1).abs() <= step + 1e-9 && (n.p2 - expected.p2).abs() <= step + 1e-9)
}

#[test]
fn solver_points_agree_with_the_grid_oracle() {
    // Worked closed-form examples across the scenario kinds (the
    // below-kink PWL case is covered separately: its candidate is not a
    // grid equilibrium of the kink-spiked utilities).
    let cases: Vec<Scenario> = vec![
        thm1(0.0),
        thm1(0.1),
        Scenario::SplitLinear {
            demand: SplitLinearDemand::new(1.0, 1.0, 1.6, 2.0).unwrap(),
            side_payment: 0.0,
            factoring: Factoring::Bandwidth,
        },
        pwl(1.0, 0.4, 1.0, 0.2, 0.0),
        Scenario::SmoothCommunal {
            demand: SmoothConvexDemand::new(1.0, 1.0, 2.0).unwrap(),
            side_payment: 0.0,
        },
        Scenario::EyeballTransit {
            max_demand_a: 1.0,
            max_demand_b: 0.5,
            zero_price: 1.0,
            alpha: 1.0,
            miss_fraction_a: 0.8,
            miss_fraction_b: 0.4,
            transit_price: 0.2,
        },
    ];
    for s in &cases {
        let eq = solve(s, Mode::AsDerived).unwrap();
        let point = eq.as_point().unwrap_or_else(|| panic!("{}: expected a point", s.kind()));
        assert!(
            oracle_contains(s, &point, 1e-3 * s.price_ceiling()),
            "{}: oracle does not contain {point:?}",
            s.kind()
        );
        let rep = verify_nep(s, &point, 1e-3, 1e-6).unwrap();
        assert!(rep.passes, "{}: verify failed, gains {:?}", s.kind(), rep.deviation_gain);
    }
}

#[test]
fn segment_samples_verify_and_bracket_while_offsets_break_the_bracket() {
    let s = pwl3();
    let seg = solve_pwl_communal(&s);
    let (p_sum, lo, hi) = match &seg {
        Equilibrium::Segment { p_sum, p1_lo, p1_hi, .. } => (*p_sum, *p1_lo, *p1_hi),
        other => panic!("expected segment, got {other:?}"),
    };

    // Ten equally spaced interior samples pass the deviation check and
    // their one-sided marginals bracket zero.
    for k in 1..=10 {
        let p1 = lo + (hi - lo) * k as f64 / 11.0;
        let cand = PricePoint { p1, p2: p_sum - p1 };
        let rep = verify_nep(&s, &cand, 1e-3, 1e-6).unwrap();
        assert!(rep.passes, "sample {k} gains {:?}", rep.deviation_gain);
        assert!(rep.stationarity_ok[0] && rep.stationarity_ok[1]);
    }

    // Just outside either open endpoint the bracketing fails: one player's
    // marginal is strictly one-signed there. (On a 1e-3 deviation grid the
    // residual gain is quadratically small, so the bracket, which
    // verify_nep reports, is the discriminating signal.)
    for p1 in [lo - 1e-3, hi + 1e-3] {
        let cand = PricePoint { p1, p2: p_sum - p1 };
        let rep = verify_nep(&s, &cand, 1e-3, 1e-6).unwrap();
        assert!(
            !(rep.stationarity_ok[0] && rep.stationarity_ok[1]),
            "offset point {p1} still brackets: {:?}",
            rep.partials
        );
    }
}

#[test]
fn communal_equilibrium_revenue_is_invariant_in_the_side_payment() {
    for k in 0..=12 {
        let p_s = -0.3 + 0.05 * k as f64;
        let s = thm1(p_s);
        let eq = solve(&s, Mode::AsDerived).unwrap();
        let p = eq.as_point().unwrap();
        let (u1, _) = s.utilities(&p);
        assert!((u1 - 1.0 / 9.0).abs() <= 1e-12, "p_s = {p_s}: U1 = {u1}");
    }
}

#[test]
fn smooth_joint_price_solves_the_aggregate_condition() {
    for alpha in [1.0, 1.5, 2.0, 3.0] {
        let demand = SmoothConvexDemand::new(1.3, 0.9, alpha).unwrap();
        let p_star = 2.0 * demand.zero_price / (2.0 + alpha);
        let residual = 2.0 * demand.eval(p_star) + p_star * demand.slope(p_star).right;
        assert!(residual.abs() <= 1e-12, "alpha {alpha}: residual {residual}");
    }
}

/// Random PWL scenarios: the solver classifies by the first consistent
/// marginal-revenue case. When that is the above-kink case the grid oracle
/// agrees with the point; when it is a segment the oracle's kink run
/// covers it. The below-kink case can be globally dominated by pricing to
/// the kink spike, so there the oracle may report a kink run instead; the
/// test pins exactly that trichotomy.
#[test]
fn random_pwl_scenarios_classify_against_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    let mut seen = [0usize; 3];
    for _ in 0..60 {
        let d_max = rng.gen_range(0.5..2.0);
        let d_theta = d_max * rng.gen_range(0.1..0.9);
        let s_max = rng.gen_range(0.5..2.0);
        let s_theta = s_max * rng.gen_range(0.1..0.9);
        let p_s = rng.gen_range(-0.1..0.1);
        let s = pwl(d_max, d_theta, s_max, s_theta, p_s);
        let eq = solve_pwl_communal(&s);

        let step = 2e-3 * s.price_ceiling();
        let grid = GridSpec::new(0.0, s.price_ceiling(), step).unwrap();
        let found = find_grid_neps(&s, &grid, None).unwrap();
        let kink = s.kink_price_sum().unwrap();

        match &eq {
            Equilibrium::Point { p1, p2, case, .. } if case == "p*>p_theta" => {
                seen[0] += 1;
                assert!(
                    found.all_nodes().iter().any(|n| (n.p1 - p1).abs() <= step + 1e-9
                        && (n.p2 - p2).abs() <= step + 1e-9),
                    "above-kink point {p1},{p2} missing from oracle ({found:?})"
                );
            }
            Equilibrium::Point { p1, p2, case, .. } => {
                seen[1] += 1;
                let agrees = found.all_nodes().iter().any(|n| {
                    (n.p1 - p1).abs() <= step + 1e-9 && (n.p2 - p2).abs() <= step + 1e-9
                });
                let kink_run_instead = !found.runs.is_empty()
                    && found
                        .runs
                        .iter()
                        .all(|r| (r.p_sum - kink).abs() <= 2.0 * step);
                assert!(
                    agrees || kink_run_instead,
                    "below-kink case ({case}): oracle neither agrees nor reports the kink run: \
                     {found:?}"
                );
            }
            Equilibrium::Segment { p_sum, p1_lo, p1_hi, .. } => {
                seen[2] += 1;
                assert!((p_sum - kink).abs() <= 1e-12);
                // Oracle finds a run on the kink sum covering the segment.
                let run = found
                    .runs
                    .iter()
                    .find(|r| (r.p_sum - p_sum).abs() <= 2.0 * step)
                    .unwrap_or_else(|| panic!("no kink run found: {found:?}"));
                assert!(run.p1_lo <= p1_lo + 2.0 * step);
                assert!(run.p1_hi >= p1_hi - 2.0 * step);
            }
            Equilibrium::None { .. } => {}
        }
    }
    // The draw box reaches every branch.
    assert!(seen[0] > 0 && seen[1] > 0 && seen[2] > 0, "case coverage {seen:?}");
}

#[test]
fn printed_profit_conditions_disagreement_is_counted_not_hidden() {
    let mut rng = ChaCha8Rng::seed_from_u64(46);
    let mut disagreements = 0;
    let mut runs = 0;
    while runs < 100 {
        let demand = SplitLinearDemand::new(
            rng.gen_range(0.5..2.0),
            rng.gen_range(0.5..2.0),
            rng.gen_range(0.5..2.0),
            rng.gen_range(0.5..2.0),
        )
        .unwrap();
        let s = Scenario::SplitLinear {
            demand,
            side_payment: 0.0,
            factoring: Factoring::Bandwidth,
        };
        let Ok(report) = netgame::analysis::profitability_report(&s) else {
            continue; // boundary family
        };
        runs += 1;
        assert_eq!(
            report.derived_condition_verdict,
            report.analytic_derivative > 1e-9,
            "derived verdict must be the analytic sign"
        );
        // Analytic and numeric derivatives always agree in sign (or are
        // both numerically zero).
        let (a, n) = (report.analytic_derivative, report.numeric_derivative);
        assert!(
            a * n > 0.0 || (a.abs() <= 1e-8 && n.abs() <= 1e-8),
            "sign disagreement: analytic {a}, numeric {n}"
        );
        if report.printed_condition_verdict != report.derived_condition_verdict {
            disagreements += 1;
            assert!(!report.consistent);
        }
    }
    println!("printed-vs-derived profitability disagreements: {disagreements}/100");
}

#[test]
fn field_nodes_equal_right_side_gradients_exactly() {
    let s = pwl3();
    let f = sample_field(&s, 0.0, 1.0, 21).unwrap();
    for idx in 0..f.p1.len() {
        let g = s.utility_gradient(&PricePoint {
            p1: f.p1[idx],
            p2: f.p2[idx],
        });
        assert_eq!(f.d_u1_d_p1[idx].to_bits(), g.d_u1_d_p1.right.to_bits());
        assert_eq!(f.d_u2_d_p2[idx].to_bits(), g.d_u2_d_p2.right.to_bits());
    }
}

#[test]
fn numeric_profit_derivative_matches_the_analytic_expression() {
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    let mut checked = 0;
    while checked < 20 {
        let d1 = rng.gen_range(0.5..2.0);
        let d2 = rng.gen_range(0.5..2.0);
        let dm1 = rng.gen_range(0.5..2.0);
        let dm2 = rng.gen_range(0.5..2.0);
        let demand = SplitLinearDemand::new(dm1, d1, dm2, d2).unwrap();
        let s = Scenario::SplitLinear {
            demand,
            side_payment: 0.0,
            factoring: Factoring::Bandwidth,
        };
        let analytic =
            2.0 * d1 / 9.0 * (1.0 - d1 / d2) * (2.0 * demand.delta_1() - demand.delta_2());
        let Ok(numeric) = numeric_profit_derivative(&s, Player::One, None) else {
            continue; // no interior equilibrium at p_s = +/- h
        };
        checked += 1;
        assert!(
            (numeric - analytic).abs() <= 1e-4 * analytic.abs().max(1.0),
            "analytic {analytic} vs numeric {numeric}"
        );
    }
}
