//! Self-checking reproduction of the worked examples. Each target prints
//! an expected-vs-computed table and fails (exit 3) if any quantity
//! deviates beyond its tolerance: 1e-9 for closed forms, one grid step
//! for oracle-backed quantities.

use netgame::analysis::profitability_report;
use netgame::demand::{LinearCommunalDemand, PwlConvexDemand, SmoothConvexDemand};
use netgame::equilibrium::{solve, Equilibrium, Mode};
use netgame::game::{PricePoint, Scenario};
use netgame::oracle::{find_grid_neps, GridSpec};

use crate::output::sig;

const CLOSED_FORM_TOL: f64 = 1e-9;

struct Table {
    rows: Vec<(String, f64, f64, f64, bool)>,
}

impl Table {
    fn new() -> Self {
        Table { rows: Vec::new() }
    }

    fn check(&mut self, name: &str, expected: f64, computed: f64, tol: f64) {
        let diff = (expected - computed).abs();
        self.rows.push((name.to_string(), expected, computed, tol, diff <= tol));
    }

    /// Passes when the computed value is far from zero (discrepancy rows).
    fn check_nonzero(&mut self, name: &str, computed: f64, floor: f64) {
        self.rows
            .push((format!("{name} (nonzero)"), floor, computed, floor, computed.abs() > floor));
    }

    fn finish(self, target: &str) -> Result<(), String> {
        println!("{:<44} {:>16} {:>16}  status", "quantity", "expected", "computed");
        let mut failures = 0;
        for (name, expected, computed, _tol, ok) in &self.rows {
            println!(
                "{:<44} {:>16} {:>16}  {}",
                name,
                sig(*expected),
                sig(*computed),
                if *ok { "OK" } else { "MISMATCH" }
            );
            if !ok {
                failures += 1;
            }
        }
        if failures == 0 {
            println!("{target}: all {} checks OK", self.rows.len());
            Ok(())
        } else {
            Err(format!("{target}: {failures} of {} checks failed", self.rows.len()))
        }
    }
}

fn point_of(eq: &Equilibrium) -> Result<PricePoint, String> {
    eq.as_point()
        .ok_or_else(|| format!("expected a point equilibrium, got {eq:?}"))
}

fn thm1(p_s: f64) -> Scenario {
    Scenario::CommunalLinear {
        demand: LinearCommunalDemand::new(1.0, 1.0).unwrap(),
        side_payment: p_s,
    }
}

fn reproduce_thm1() -> Result<(), String> {
    let mut table = Table::new();
    for k in 0..=12 {
        let p_s = -0.30 + 0.05 * k as f64;
        let s = thm1(p_s);
        let p = point_of(&solve(&s, Mode::AsDerived).map_err(|e| e.to_string())?)?;
        table.check(
            &format!("p1* at p_s = {p_s:+.2}"),
            1.0 / 3.0 - p_s,
            p.p1,
            CLOSED_FORM_TOL,
        );
        let (u1, _) = s.utilities(&p);
        table.check(&format!("U1* at p_s = {p_s:+.2}"), 1.0 / 9.0, u1, CLOSED_FORM_TOL);
    }
    let report = profitability_report(&thm1(0.0)).map_err(|e| e.to_string())?;
    table.check("dU1*/dp_s at 0 (numeric)", 0.0, report.numeric_derivative, 1e-8);
    table.check(
        "profitable verdict (0 = no)",
        0.0,
        if report.profitable { 1.0 } else { 0.0 },
        0.5,
    );
    table.finish("thm1")
}

fn pwl_scenario(d_th: f64, s_th: f64, p_s: f64) -> Scenario {
    Scenario::PwlCommunal {
        demand: PwlConvexDemand::new(1.0, d_th, 1.0, s_th).unwrap(),
        side_payment: p_s,
    }
}

fn reproduce_pwl1() -> Result<(), String> {
    let s = pwl_scenario(0.4, 0.2, 0.0);
    let eq = solve(&s, Mode::AsDerived).map_err(|e| e.to_string())?;
    let mut table = Table::new();
    match &eq {
        Equilibrium::Point { p1, p2, p_star, case } => {
            table.check("case label is p*>p_theta (1 = yes)", 1.0, (case == "p*>p_theta") as u8 as f64, 0.5);
            table.check("p*", 2.0 / 3.0, *p_star, CLOSED_FORM_TOL);
            table.check("p1*", 1.0 / 3.0, *p1, CLOSED_FORM_TOL);
            table.check("p2*", 1.0 / 3.0, *p2, CLOSED_FORM_TOL);
        }
        other => return Err(format!("pwl1: expected point, got {other:?}")),
    }
    table.finish("pwl1")
}

fn reproduce_pwl2() -> Result<(), String> {
    let s = pwl_scenario(1.0 / 6.0, 1.0 / 6.0, 0.0);
    let eq = solve(&s, Mode::AsDerived).map_err(|e| e.to_string())?;
    let mut table = Table::new();
    match &eq {
        Equilibrium::Point { p_star, case, .. } => {
            table.check("case label is p*<p_theta (1 = yes)", 1.0, (case == "p*<p_theta") as u8 as f64, 0.5);
            table.check("p*", 2.0 / 3.0, *p_star, CLOSED_FORM_TOL);
            table.check("p_theta", 5.0 / 6.0, s.kink_price_sum().unwrap(), CLOSED_FORM_TOL);
        }
        other => return Err(format!("pwl2: expected point, got {other:?}")),
    }
    table.finish("pwl2")
}

fn reproduce_pwl3() -> Result<(), String> {
    let s = pwl_scenario(0.25, 0.2, 0.125);
    let eq = solve(&s, Mode::AsDerived).map_err(|e| e.to_string())?;
    let mut table = Table::new();
    match &eq {
        Equilibrium::Segment { p_sum, p1_lo, p1_hi, .. } => {
            table.check("segment price sum", 0.75, *p_sum, CLOSED_FORM_TOL);
            table.check("segment lower endpoint", 0.125, *p1_lo, CLOSED_FORM_TOL);
            table.check("segment upper endpoint", 0.375, *p1_hi, CLOSED_FORM_TOL);
        }
        other => return Err(format!("pwl3: expected segment, got {other:?}")),
    }

    // Independent grid search at a coarse step.
    let step = 5e-3;
    let grid = GridSpec::new(0.0, s.price_ceiling(), step).map_err(|e| e.to_string())?;
    let found = find_grid_neps(&s, &grid, None).map_err(|e| e.to_string())?;
    let run = found
        .runs
        .iter()
        .find(|r| (r.p_sum - 0.75).abs() <= step + 1e-9)
        .ok_or("pwl3: grid search found no kink run")?;
    table.check("grid-search run lower endpoint", 0.125, run.p1_lo, step + 1e-9);
    table.check("grid-search run upper endpoint", 0.375, run.p1_hi, step + 1e-9);
    table.check("grid-search run price sum", 0.75, run.p_sum, step + 1e-9);
    table.finish("pwl3")
}

fn reproduce_smooth() -> Result<(), String> {
    let demand = SmoothConvexDemand::new(1.0, 1.0, 2.0).unwrap();
    let s = Scenario::SmoothCommunal {
        demand,
        side_payment: 0.0,
    };
    let p = point_of(&solve(&s, Mode::AsDerived).map_err(|e| e.to_string())?)?;
    let mut table = Table::new();
    table.check("p1*", 0.25, p.p1, 1e-12);
    table.check("p2*", 0.25, p.p2, 1e-12);
    let p_star = p.p1 + p.p2;
    let residual = 2.0 * demand.eval(p_star) + p_star * demand.slope(p_star).right;
    table.check("aggregate first-order residual", 0.0, residual, 1e-12);
    let (u1, _) = s.utilities(&p);
    table.check("U1*", 1.0 / 16.0, u1, 1e-12);
    table.finish("smooth")
}

fn reproduce_transit() -> Result<(), String> {
    let s = Scenario::EyeballTransit {
        max_demand_a: 1.0,
        max_demand_b: 0.5,
        zero_price: 1.0,
        alpha: 1.0,
        miss_fraction_a: 0.8,
        miss_fraction_b: 0.4,
        transit_price: 0.2,
    };
    let mut table = Table::new();

    let derived = point_of(&solve(&s, Mode::AsDerived).map_err(|e| e.to_string())?)?;
    table.check("derived p_a*", 0.54, derived.p1, CLOSED_FORM_TOL);
    table.check("derived p_b*", 0.50, derived.p2, CLOSED_FORM_TOL);
    let lhs = 0.4 * (1.0 - derived.p2);
    let rhs = 0.8 * 0.5 * (1.0 - derived.p1);
    table.check("net-flow check lhs", 0.2, lhs, CLOSED_FORM_TOL);
    table.check("net-flow check rhs", 0.184, rhs, CLOSED_FORM_TOL);
    table.check("flow direction to a (1 = yes)", 1.0, (lhs > rhs) as u8 as f64, 0.5);

    let printed = point_of(&solve(&s, Mode::AsPrinted).map_err(|e| e.to_string())?)?;
    table.check("printed p_a*", 0.52, printed.p1, CLOSED_FORM_TOL);
    let g = s.utility_gradient(&printed);
    table.check("printed candidate marginal (not a root)", 0.04, g.d_u1_d_p1.right, CLOSED_FORM_TOL);
    table.check_nonzero("printed candidate marginal", g.d_u1_d_p1.right, 1e-6);
    table.finish("transit")
}

pub fn run(target: &str) -> Result<(), String> {
    match target {
        "thm1" => reproduce_thm1(),
        "pwl1" => reproduce_pwl1(),
        "pwl2" => reproduce_pwl2(),
        "pwl3" => reproduce_pwl3(),
        "smooth" => reproduce_smooth(),
        "transit" => reproduce_transit(),
        other => Err(format!("unknown reproduction target `{other}`")),
    }
}
