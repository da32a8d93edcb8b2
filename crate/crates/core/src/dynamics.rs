//! Synchronous-play price dynamics and marginal-utility vector fields.
//!
//! Three update rules are provided. `Printed` integrates
//! `dp_k/dt = dU_k/dp_k - p_k` exactly as published; its rest points are
//! not first-order-condition points, so `Gradient` (`dp_k/dt = dU_k/dp_k`)
//! and `BestResponseRelaxation` (`dp_k/dt = BR_k(p_-k) - p_k`) are also
//! available. At utility kinks the right-side partial drives the state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Factoring, Player, PricePoint, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DynamicsMode {
    Printed,
    Gradient,
    BestResponseRelaxation,
}

/// Integrated price path with utilities along it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<PricePoint>,
    pub utilities: Vec<(f64, f64)>,
}

impl Trajectory {
    pub fn terminal(&self) -> PricePoint {
        *self.points.last().expect("trajectory is never empty")
    }
}

/// Marginal-utility vectors `(dU1/dp1, dU2/dp2)` (right-side values) on a
/// rectangular grid, in row-major order: the `p1` index varies slowest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VectorField {
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub d_u1_d_p1: Vec<f64>,
    pub d_u2_d_p2: Vec<f64>,
    pub resolution: usize,
}

const REST_DISPLACEMENT: f64 = 1e-10;

/// Fixed-step explicit Euler integration from `init`, clamping prices at
/// zero and stopping early once a step moves the state less than 1e-10.
pub fn integrate(
    s: &Scenario,
    init: &PricePoint,
    mode: DynamicsMode,
    dt: f64,
    t_max: f64,
) -> Result<Trajectory> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidParameter {
            field: "dt",
            reason: format!("must be finite and > 0, got {dt}"),
        });
    }
    if !t_max.is_finite() || t_max < dt {
        return Err(Error::InvalidParameter {
            field: "t_max",
            reason: format!("must be finite and >= dt, got {t_max}"),
        });
    }

    let mut state = *init;
    let mut t = 0.0;
    let mut times = vec![0.0];
    let mut points = vec![state];
    let mut utilities = vec![s.utilities(&state)];

    let steps = (t_max / dt).floor() as u64;
    for _ in 0..steps {
        let (v1, v2) = velocity(s, &state, mode);
        let next = PricePoint {
            p1: (state.p1 + dt * v1).max(0.0),
            p2: (state.p2 + dt * v2).max(0.0),
        };
        let displacement = ((next.p1 - state.p1).powi(2) + (next.p2 - state.p2).powi(2)).sqrt();
        if displacement < REST_DISPLACEMENT {
            break;
        }
        state = next;
        t += dt;
        times.push(t);
        points.push(state);
        utilities.push(s.utilities(&state));
    }
    Ok(Trajectory {
        times,
        points,
        utilities,
    })
}

fn velocity(s: &Scenario, p: &PricePoint, mode: DynamicsMode) -> (f64, f64) {
    match mode {
        DynamicsMode::Printed => {
            let g = s.utility_gradient(p);
            (g.d_u1_d_p1.right - p.p1, g.d_u2_d_p2.right - p.p2)
        }
        DynamicsMode::Gradient => {
            let g = s.utility_gradient(p);
            (g.d_u1_d_p1.right, g.d_u2_d_p2.right)
        }
        DynamicsMode::BestResponseRelaxation => (
            analytic_best_response(s, Player::One, p.p2) - p.p1,
            analytic_best_response(s, Player::Two, p.p1) - p.p2,
        ),
    }
}

/// Exact (closed-form) best response of one player to the opponent's
/// price: stationary candidates of each utility piece, piece boundaries and
/// the zero price are evaluated and the best taken, ties toward the lowest.
pub fn analytic_best_response(s: &Scenario, player: Player, opponent: f64) -> f64 {
    let mut candidates: Vec<f64> = vec![0.0];
    match s {
        Scenario::CommunalLinear {
            demand,
            side_payment,
        } => {
            let signed = signed_payment(player, *side_payment);
            candidates.push((demand.zero_price() - opponent - signed) / 2.0);
        }
        Scenario::SplitLinear {
            demand,
            side_payment,
            factoring,
        } => {
            let stationary = match (factoring, player) {
                (Factoring::Bandwidth, Player::One) => {
                    (demand.delta_1() - opponent - side_payment) / 2.0
                }
                (Factoring::Bandwidth, Player::Two) => {
                    (demand.delta_2() - opponent
                        + side_payment * demand.sensitivity_1 / demand.sensitivity_2)
                        / 2.0
                }
                (Factoring::Content, Player::One) => {
                    (demand.delta_1() - opponent
                        - side_payment * demand.sensitivity_2 / demand.sensitivity_1)
                        / 2.0
                }
                (Factoring::Content, Player::Two) => {
                    (demand.delta_2() - opponent + side_payment) / 2.0
                }
            };
            candidates.push(stationary);
        }
        Scenario::PwlCommunal {
            demand,
            side_payment,
        } => {
            let signed = signed_payment(player, *side_payment);
            let kink = demand.kink_price - opponent;
            if kink >= 0.0 {
                candidates.push(kink);
            }
            // Shallow-segment stationary point, valid below the kink.
            let low = (demand.theta_demand / demand.theta_sensitivity - opponent - signed) / 2.0;
            if low + opponent < demand.kink_price {
                candidates.push(low);
            }
            // Steep-segment stationary point, valid at or above the kink.
            let high = (demand.max_demand / demand.max_sensitivity - opponent - signed) / 2.0;
            if high + opponent >= demand.kink_price {
                candidates.push(high);
            }
        }
        Scenario::SmoothCommunal {
            demand,
            side_payment,
        } => {
            let signed = signed_payment(player, *side_payment);
            candidates.push(
                (demand.zero_price - opponent - demand.alpha * signed) / (1.0 + demand.alpha),
            );
        }
        Scenario::SmoothSplit {
            zero_price,
            alpha,
            side_payment,
            max_demand_1,
            max_demand_2,
        } => {
            let stationary = match player {
                Player::One => (zero_price - opponent - alpha * side_payment) / (1.0 + alpha),
                Player::Two => {
                    (zero_price - opponent
                        + alpha * side_payment * max_demand_1 / max_demand_2)
                        / (1.0 + alpha)
                }
            };
            candidates.push(stationary);
        }
        Scenario::EyeballTransit {
            max_demand_a,
            max_demand_b,
            zero_price,
            alpha,
            miss_fraction_a,
            miss_fraction_b,
            transit_price,
        } => {
            // Monopoly stationary point of the own-revenue term.
            candidates.push(zero_price / (1.0 + alpha));
            // Stationary point of the branch where the own transit bracket
            // is active: own price appears through the opponent-content
            // demand at the own price.
            let unit = |p: f64| (1.0 - p / zero_price).max(0.0).powf(*alpha);
            let (own_max, cross_max, own_miss, other_at) = match player {
                Player::One => (
                    *max_demand_a,
                    *max_demand_b,
                    *miss_fraction_a,
                    miss_fraction_b * max_demand_a * unit(opponent),
                ),
                Player::Two => (
                    *max_demand_b,
                    *max_demand_a,
                    *miss_fraction_b,
                    miss_fraction_a * max_demand_b * unit(opponent),
                ),
            };
            if *alpha == 1.0 {
                // Closed form for the linear case.
                candidates.push(
                    (zero_price + own_miss * cross_max / own_max * transit_price) / 2.0,
                );
            } else {
                // The active-branch stationary point solves
                // own_max*(g + p g') = own_miss*cross_max*g'(p)*p_t; scan a
                // fine bracket of the branch boundary instead of a closed
                // form (the branch boundary is where the bracket ties).
                let f = |p: f64| {
                    let x = (1.0 - p / zero_price).max(0.0);
                    let g = x.powf(*alpha);
                    let gp = -alpha / zero_price * x.powf(alpha - 1.0);
                    own_max * (g + p * gp) - own_miss * cross_max * gp * transit_price
                };
                if let Some(root) = scan_root(f, 0.0, *zero_price) {
                    candidates.push(root);
                }
            }
            // Branch boundary: own price at which the net flow ties.
            let tie = |target: f64| {
                if target <= 0.0 || target >= own_miss * cross_max {
                    None
                } else {
                    Some(zero_price * (1.0 - (target / (own_miss * cross_max)).powf(1.0 / alpha)))
                }
            };
            if let Some(boundary) = tie(other_at) {
                candidates.push(boundary);
            }
        }
    }

    let ceiling = s.price_ceiling();
    let mut best_q = 0.0;
    let mut best_u = f64::NEG_INFINITY;
    candidates.retain(|q| q.is_finite());
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for q in candidates {
        let q = q.clamp(0.0, ceiling);
        let u = match player {
            Player::One => {
                s.utilities(&PricePoint {
                    p1: q,
                    p2: opponent,
                })
                .0
            }
            Player::Two => {
                s.utilities(&PricePoint {
                    p1: opponent,
                    p2: q,
                })
                .1
            }
        };
        if u > best_u + 1e-15 {
            best_u = u;
            best_q = q;
        }
    }
    best_q
}

fn signed_payment(player: Player, p_s: f64) -> f64 {
    match player {
        Player::One => p_s,
        Player::Two => -p_s,
    }
}

fn scan_root(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Option<f64> {
    const SCAN: usize = 512;
    let step = (hi - lo) / SCAN as f64;
    let mut prev_x = lo;
    let mut prev_f = f(lo);
    for k in 1..=SCAN {
        let x = lo + k as f64 * step;
        let fx = f(x);
        if prev_f == 0.0 {
            return Some(prev_x);
        }
        if prev_f.signum() != fx.signum() {
            // Bisection refinement.
            let (mut a, mut b, mut fa) = (prev_x, x, prev_f);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                let fm = f(m);
                if fm == 0.0 {
                    return Some(m);
                }
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            return Some(0.5 * (a + b));
        }
        prev_x = x;
        prev_f = fx;
    }
    None
}

/// Samples the right-side marginal-utility field on `[lo, hi]^2` with
/// `resolution` nodes per axis.
pub fn sample_field(s: &Scenario, lo: f64, hi: f64, resolution: usize) -> Result<VectorField> {
    if resolution < 2 {
        return Err(Error::InvalidParameter {
            field: "resolution",
            reason: format!("must be >= 2, got {resolution}"),
        });
    }
    if !lo.is_finite() || !hi.is_finite() || lo >= hi || lo < 0.0 {
        return Err(Error::InvalidParameter {
            field: "box",
            reason: format!("requires 0 <= lo < hi, got [{lo}, {hi}]"),
        });
    }
    let step = (hi - lo) / (resolution - 1) as f64;
    let n = resolution * resolution;
    let mut field = VectorField {
        p1: Vec::with_capacity(n),
        p2: Vec::with_capacity(n),
        d_u1_d_p1: Vec::with_capacity(n),
        d_u2_d_p2: Vec::with_capacity(n),
        resolution,
    };
    for i in 0..resolution {
        let p1 = lo + i as f64 * step;
        for j in 0..resolution {
            let p2 = lo + j as f64 * step;
            let g = s.utility_gradient(&PricePoint { p1, p2 });
            field.p1.push(p1);
            field.p2.push(p2);
            field.d_u1_d_p1.push(g.d_u1_d_p1.right);
            field.d_u2_d_p2.push(g.d_u2_d_p2.right);
        }
    }
    Ok(field)
}
