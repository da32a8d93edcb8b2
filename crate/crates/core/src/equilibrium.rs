//! Closed-form interior Nash equilibrium solvers with case classification,
//! plus a grid-based no-profitable-deviation verifier.
//!
//! Interiority is strict throughout: a candidate with a zero price or zero
//! demand is reported as `None`, never as a boundary equilibrium.

use serde::{Deserialize, Serialize};

use crate::demand::SlopePair;
use crate::error::{Error, Result};
use crate::game::{Factoring, PricePoint, Scenario};

/// How the transit-game first-order conditions are closed.
///
/// `AsPrinted` uses the cross-term cache coefficients exactly as published
/// (the opposite ISP's miss fraction); `AsDerived` uses the coefficients
/// obtained by differentiating the stated utilities (the own miss
/// fraction). The two disagree; both are kept so the discrepancy can be
/// reported rather than silently resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    AsPrinted,
    AsDerived,
}

/// Interior Nash equilibrium result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Equilibrium {
    Point {
        p1: f64,
        p2: f64,
        p_star: f64,
        case: String,
    },
    /// A continuum of equilibria on the line `p1 + p2 = p_sum`, with `p1`
    /// ranging over the open interval `(p1_lo, p1_hi)`. Endpoint
    /// membership is strict, with no tolerance.
    Segment {
        p_sum: f64,
        p1_lo: f64,
        p1_hi: f64,
        case: String,
    },
    None {
        reason: String,
    },
}

impl Equilibrium {
    pub fn as_point(&self) -> Option<PricePoint> {
        match self {
            Equilibrium::Point { p1, p2, .. } => Some(PricePoint { p1: *p1, p2: *p2 }),
            _ => None,
        }
    }

    /// Representative price point: the point itself, or the segment midpoint.
    pub fn representative(&self) -> Option<PricePoint> {
        match self {
            Equilibrium::Point { p1, p2, .. } => Some(PricePoint { p1: *p1, p2: *p2 }),
            Equilibrium::Segment { p_sum, p1_lo, p1_hi, .. } => {
                let p1 = 0.5 * (p1_lo + p1_hi);
                Some(PricePoint { p1, p2: p_sum - p1 })
            }
            Equilibrium::None { .. } => None,
        }
    }

    /// Strict open-interval membership test for segment equilibria.
    pub fn segment_contains(&self, p1: f64) -> bool {
        match self {
            Equilibrium::Segment { p1_lo, p1_hi, .. } => *p1_lo < p1 && p1 < *p1_hi,
            _ => false,
        }
    }
}

/// Dispatches to the scenario's solver. `mode` only affects the transit game.
pub fn solve(s: &Scenario, mode: Mode) -> Result<Equilibrium> {
    match s {
        Scenario::CommunalLinear { .. } => Ok(solve_communal_linear(s)),
        Scenario::SplitLinear { .. } => Ok(solve_split_linear(s)),
        Scenario::PwlCommunal { .. } => Ok(solve_pwl_communal(s)),
        Scenario::SmoothCommunal { .. } | Scenario::SmoothSplit { .. } => solve_smooth(s),
        Scenario::EyeballTransit { .. } => Ok(solve_eyeball(s, mode)),
    }
}

/// `p_k* = D_max/(3d) -/+ p_s`, interior iff `|p_s| < D_max/(3d)`.
pub fn solve_communal_linear(s: &Scenario) -> Equilibrium {
    let (demand, p_s) = match s {
        Scenario::CommunalLinear {
            demand,
            side_payment,
        } => (demand, *side_payment),
        _ => {
            return Equilibrium::None {
                reason: "solver requires a communal_linear scenario".into(),
            }
        }
    };
    let bound = demand.max_demand / (3.0 * demand.sensitivity);
    if p_s.abs() >= bound {
        return Equilibrium::None {
            reason: format!("|p_s| >= D_max/(3d): |{p_s}| >= {bound}"),
        };
    }
    Equilibrium::Point {
        p1: bound - p_s,
        p2: bound + p_s,
        p_star: 2.0 * bound,
        case: "interior".into(),
    }
}

/// Joint-price solution `p* = (delta_1 - p_s + delta_2 + (d_1/d_2) p_s)/3`
/// for the bandwidth factoring; the content factoring is the same game
/// with provider roles swapped and the side payment reversed.
pub fn solve_split_linear(s: &Scenario) -> Equilibrium {
    let (demand, p_s, factoring) = match s {
        Scenario::SplitLinear {
            demand,
            side_payment,
            factoring,
        } => (demand, *side_payment, *factoring),
        _ => {
            return Equilibrium::None {
                reason: "solver requires a split_linear scenario".into(),
            }
        }
    };

    // Bandwidth closed form in terms of the recipient (R) and the other
    // provider (O): p* = (delta_R - p_s + delta_O + (d_R/d_O) p_s)/3,
    // p_R* = delta_R - p* - p_s, p_O* = p* - p_R*.
    let bandwidth = |delta_r: f64, d_r: f64, delta_o: f64, d_o: f64, p_s: f64| {
        let p_star = (delta_r - p_s + delta_o + (d_r / d_o) * p_s) / 3.0;
        let p_r = delta_r - p_star - p_s;
        let p_o = p_star - p_r;
        (p_star, p_r, p_o)
    };

    let (p_star, p1, p2) = match factoring {
        Factoring::Bandwidth => {
            let (p_star, p_r, p_o) = bandwidth(
                demand.delta_1(),
                demand.sensitivity_1,
                demand.delta_2(),
                demand.sensitivity_2,
                p_s,
            );
            (p_star, p_r, p_o)
        }
        Factoring::Content => {
            // Player 2 (the CP) plays the recipient role with the side
            // payment's sign flipped.
            let (p_star, p_r, p_o) = bandwidth(
                demand.delta_2(),
                demand.sensitivity_2,
                demand.delta_1(),
                demand.sensitivity_1,
                -p_s,
            );
            (p_star, p_o, p_r)
        }
    };

    let d1 = demand.curve_1().eval(p_star.max(0.0));
    let d2 = demand.curve_2().eval(p_star.max(0.0));
    if p1 <= 0.0 || p2 <= 0.0 {
        return Equilibrium::None {
            reason: format!("boundary: p1* = {p1}, p2* = {p2} (both must be > 0)"),
        };
    }
    if d1 <= 0.0 || d2 <= 0.0 {
        return Equilibrium::None {
            reason: format!("boundary: D_1(p*) = {d1}, D_2(p*) = {d2} (both must be > 0)"),
        };
    }
    Equilibrium::Point {
        p1,
        p2,
        p_star,
        case: "interior".into(),
    }
}

/// Tests the three mutually exclusive marginal-revenue cases in order:
/// joint price above the kink, below the kink, and on the kink (the
/// equilibrium segment).
pub fn solve_pwl_communal(s: &Scenario) -> Equilibrium {
    let (demand, p_s) = match s {
        Scenario::PwlCommunal {
            demand,
            side_payment,
        } => (demand, *side_payment),
        _ => {
            return Equilibrium::None {
                reason: "solver requires a pwl_communal scenario".into(),
            }
        }
    };
    let d_max = demand.max_demand;
    let d_theta = demand.theta_demand;
    let s_max = demand.max_sensitivity;
    let s_theta = demand.theta_sensitivity;
    let p_theta = demand.kink_price;
    let mut failures = Vec::new();

    // Case p* > p_theta: steep-segment marginals, p* = 2 D_max / (3 d_max),
    // consistent iff 3 D_theta > D_max.
    let p_star_high = 2.0 * d_max / (3.0 * s_max);
    if 3.0 * d_theta > d_max {
        if p_s.abs() < p_star_high / 2.0 {
            return Equilibrium::Point {
                p1: p_star_high / 2.0 - p_s,
                p2: p_star_high / 2.0 + p_s,
                p_star: p_star_high,
                case: "p*>p_theta".into(),
            };
        }
        failures.push(format!(
            "case p*>p_theta: |p_s| >= p*/2 ({} >= {})",
            p_s.abs(),
            p_star_high / 2.0
        ));
    } else {
        failures.push(format!(
            "case p*>p_theta: 3*D_theta <= D_max ({} <= {d_max})",
            3.0 * d_theta
        ));
    }

    // Case p* < p_theta: shallow-segment marginals, p* = 2 D_theta / (3 d_theta).
    let p_star_low = 2.0 * d_theta / (3.0 * s_theta);
    if p_star_low < p_theta {
        if p_s.abs() < p_star_low / 2.0 {
            return Equilibrium::Point {
                p1: p_star_low / 2.0 - p_s,
                p2: p_star_low / 2.0 + p_s,
                p_star: p_star_low,
                case: "p*<p_theta".into(),
            };
        }
        failures.push(format!(
            "case p*<p_theta: |p_s| >= p*/2 ({} >= {})",
            p_s.abs(),
            p_star_low / 2.0
        ));
    } else {
        failures.push(format!(
            "case p*<p_theta: p* >= p_theta ({p_star_low} >= {p_theta})"
        ));
    }

    // Case p* = p_theta: both players' one-sided marginals must bracket
    // zero, which reduces to an open interval for p1*.
    let lo = (d_theta / s_max - p_s)
        .max(2.0 * p_theta - d_theta / s_theta - p_s)
        .max(0.0);
    let hi = ((d_max - 2.0 * d_theta) / s_max - p_s)
        .min(d_theta / s_theta - p_theta - p_s)
        .min(p_theta);
    if lo < hi {
        return Equilibrium::Segment {
            p_sum: p_theta,
            p1_lo: lo,
            p1_hi: hi,
            case: "p*=p_theta".into(),
        };
    }
    failures.push(format!(
        "case p*=p_theta: empty interval (lower {lo} >= upper {hi})"
    ));

    Equilibrium::None {
        reason: failures.join("; "),
    }
}

/// Smooth-demand solver. Communal: closed form `p* = 2 p_max/(2+alpha)`,
/// re-verified as the root of `2D(p) + pD'(p) = 0` by bisection. Split:
/// damped fixed-point iteration on the two first-order conditions.
pub fn solve_smooth(s: &Scenario) -> Result<Equilibrium> {
    match s {
        Scenario::SmoothCommunal {
            demand,
            side_payment,
        } => {
            let alpha = demand.alpha;
            let p_max = demand.zero_price;
            let p_star = 2.0 * p_max / (2.0 + alpha);

            // Independent root check of the aggregate first-order condition.
            let f = |p: f64| 2.0 * demand.eval(p) + p * demand.slope(p).right;
            let root = bisect(f, 1e-12 * p_max, p_max * (1.0 - 1e-12), 200).ok_or_else(|| {
                Error::SolverFailure("no sign change for 2D(p) + pD'(p) on (0, p_max)".into())
            })?;
            if (root - p_star).abs() > 1e-12 * p_max {
                return Err(Error::SolverFailure(format!(
                    "closed-form p* = {p_star} disagrees with bisection root {root}"
                )));
            }

            if side_payment.abs() >= p_star / 2.0 {
                return Ok(Equilibrium::None {
                    reason: format!(
                        "|p_s| >= p*/2: |{side_payment}| >= {}",
                        p_star / 2.0
                    ),
                });
            }
            Ok(Equilibrium::Point {
                p1: p_star / 2.0 - side_payment,
                p2: p_star / 2.0 + side_payment,
                p_star,
                case: "interior".into(),
            })
        }
        Scenario::SmoothSplit {
            max_demand_1,
            max_demand_2,
            zero_price,
            alpha,
            side_payment,
        } => solve_smooth_split(
            *max_demand_1,
            *max_demand_2,
            *zero_price,
            *alpha,
            *side_payment,
        ),
        _ => Ok(Equilibrium::None {
            reason: "solver requires a smooth scenario".into(),
        }),
    }
}

/// Damped Jacobi iteration on the stationarity map
/// `p1 <- (p_max - p)/alpha - p_s`, `p2 <- (p_max - p)/alpha + (D1/D2) p_s`,
/// halving the step whenever the residual increases.
fn solve_smooth_split(
    dm1: f64,
    dm2: f64,
    p_max: f64,
    alpha: f64,
    p_s: f64,
) -> Result<Equilibrium> {
    let rho = dm1 / dm2;
    let foc = |p1: f64, p2: f64| -> (f64, f64) {
        let p = p1 + p2;
        let x = (1.0 - p / p_max).max(0.0);
        let g = x.powf(alpha);
        let gp = -alpha / p_max * x.powf(alpha - 1.0);
        (
            dm1 * (g + (p1 + p_s) * gp),
            dm2 * (g + p2 * gp) - dm1 * p_s * gp,
        )
    };
    let residual = |p1: f64, p2: f64| {
        let (r1, r2) = foc(p1, p2);
        r1.abs().max(r2.abs())
    };

    let mut p1 = p_max / (2.0 + alpha);
    let mut p2 = p1;
    let mut lambda = 0.5;
    let mut res = residual(p1, p2);
    const MAX_ITERS: usize = 10_000;
    const TARGET: f64 = 1e-12;

    for _ in 0..MAX_ITERS {
        if res <= TARGET {
            break;
        }
        let p = p1 + p2;
        let t1 = (p_max - p) / alpha - p_s;
        let t2 = (p_max - p) / alpha + rho * p_s;
        let n1 = p1 + lambda * (t1 - p1);
        let n2 = p2 + lambda * (t2 - p2);
        if !n1.is_finite()
            || !n2.is_finite()
            || n1 < -p_max
            || n2 < -p_max
            || n1 > 2.0 * p_max
            || n2 > 2.0 * p_max
        {
            return Ok(Equilibrium::None {
                reason: "iteration left the price box [0, p_max]^2".into(),
            });
        }
        let new_res = residual(n1, n2);
        if new_res > res {
            lambda *= 0.5;
            if lambda < 1e-8 {
                return Err(Error::SolverFailure(format!(
                    "damping exhausted at residual {res:.3e}"
                )));
            }
            continue;
        }
        p1 = n1;
        p2 = n2;
        res = new_res;
    }
    if res > 1e-10 {
        return Err(Error::SolverFailure(format!(
            "first-order conditions not met after {MAX_ITERS} iterations, residual {res:.3e}"
        )));
    }

    let p_star = p1 + p2;
    if p1 <= 0.0 || p2 <= 0.0 || p_star >= p_max {
        return Ok(Equilibrium::None {
            reason: format!(
                "boundary: p1* = {p1}, p2* = {p2}, p* = {p_star} (need interior of [0, p_max])"
            ),
        });
    }
    Ok(Equilibrium::Point {
        p1,
        p2,
        p_star,
        case: "interior".into(),
    })
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Transit-game candidates for both flow directions, each validated by
/// evaluating its defining case inequality directly (never by the
/// published parametric bound, whose direction disagrees with a
/// re-derivation). Returns the unique consistent candidate.
pub fn solve_eyeball(s: &Scenario, mode: Mode) -> Equilibrium {
    let (max_a, max_b, p_max, alpha, phi_a, phi_b, p_t) = match s {
        Scenario::EyeballTransit {
            max_demand_a,
            max_demand_b,
            zero_price,
            alpha,
            miss_fraction_a,
            miss_fraction_b,
            transit_price,
        } => (
            *max_demand_a,
            *max_demand_b,
            *zero_price,
            *alpha,
            *miss_fraction_a,
            *miss_fraction_b,
            *transit_price,
        ),
        _ => {
            return Equilibrium::None {
                reason: "solver requires an eyeball_transit scenario".into(),
            }
        }
    };
    let delta = max_b / max_a;

    let unit = |p: f64| (1.0 - p / p_max).max(0.0).powf(alpha);
    let monopoly = p_max / (1.0 + alpha);

    // Case A: net flow priced to ISP a. The receiver's first-order
    // condition carries the cross term; its cache coefficient is phi_b as
    // printed, phi_a as derived from the stated utilities.
    let coeff_a = match mode {
        Mode::AsPrinted => phi_b,
        Mode::AsDerived => phi_a,
    };
    let cand_a = PricePoint {
        p1: monopoly + alpha * coeff_a * delta / (1.0 + alpha) * p_t,
        p2: monopoly,
    };
    // Case B: net flow priced to ISP b, mirrored.
    let coeff_b = match mode {
        Mode::AsPrinted => phi_a,
        Mode::AsDerived => phi_b,
    };
    let cand_b = PricePoint {
        p1: monopoly,
        p2: monopoly + alpha * coeff_b / delta / (1.0 + alpha) * p_t,
    };

    let net_to_a = |p: &PricePoint| phi_b * max_a * unit(p.p2) - phi_a * max_b * unit(p.p1);
    let flow_a = net_to_a(&cand_a);
    let flow_b = -net_to_a(&cand_b);
    let interior =
        |p: &PricePoint| p.p1 > 0.0 && p.p2 > 0.0 && p.p1 < p_max && p.p2 < p_max;

    let a_ok = flow_a > 0.0 && interior(&cand_a);
    let b_ok = flow_b > 0.0 && interior(&cand_b);
    // Near phi = delta both directions can self-sustain (each candidate's
    // own price rise suppresses exactly the cross-demand its case needs to
    // dominate), so the game carries one equilibrium per direction. The
    // flow-to-a case is preferred then, matching the customary
    // normalization that ISP a carries the larger demand; the case report
    // exposes both consistency flags.
    match (a_ok, b_ok) {
        (true, _) => Equilibrium::Point {
            p1: cand_a.p1,
            p2: cand_a.p2,
            p_star: cand_a.total(),
            case: "A".into(),
        },
        (false, true) => Equilibrium::Point {
            p1: cand_b.p1,
            p2: cand_b.p2,
            p_star: cand_b.total(),
            case: "B".into(),
        },
        (false, false) => {
            if flow_a == 0.0 || flow_b == 0.0 {
                Equilibrium::None {
                    reason: "balanced flow: neither direction carries strictly positive \
                             net transit"
                        .into(),
                }
            } else {
                Equilibrium::None {
                    reason: format!(
                        "neither case self-consistent (net flows {flow_a:.6e} and {flow_b:.6e})"
                    ),
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

/// Grid verification of a candidate equilibrium.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    /// No unilateral grid deviation improves either player by more than epsilon.
    pub passes: bool,
    /// Per-player maximal utility gain over all grid deviations.
    pub deviation_gain: [f64; 2],
    /// Deviation price achieving the maximal gain, per player.
    pub best_deviation: [f64; 2],
    /// One-sided own-price partials at the candidate, per player.
    pub partials: [SlopePair; 2],
    /// Per player: both one-sided partials within 1e-9 of zero, or the
    /// pair strictly brackets zero (left >= -1e-9 >= ... >= right).
    pub stationarity_ok: [bool; 2],
    pub grid_step: f64,
    pub epsilon: f64,
    pub price_ceiling: f64,
    /// Gains below this are attributable to grid quantization alone
    /// (curvature * step^2 / 4).
    pub quantization_bound: f64,
}

const STATIONARITY_TOL: f64 = 1e-9;

fn curvature_scale(s: &Scenario) -> f64 {
    match s {
        Scenario::CommunalLinear { demand, .. } => demand.sensitivity,
        Scenario::SplitLinear { demand, .. } => demand.sensitivity_1.max(demand.sensitivity_2),
        Scenario::PwlCommunal { demand, .. } => demand.max_sensitivity,
        Scenario::SmoothCommunal { demand, .. } => {
            demand.max_demand * demand.alpha * (demand.alpha + 1.0) / demand.zero_price.powi(2)
                * demand.zero_price
        }
        Scenario::SmoothSplit {
            max_demand_1,
            max_demand_2,
            zero_price,
            alpha,
            ..
        } => max_demand_1.max(*max_demand_2) * alpha * (alpha + 1.0) / zero_price,
        Scenario::EyeballTransit {
            max_demand_a,
            max_demand_b,
            zero_price,
            alpha,
            ..
        } => max_demand_a.max(*max_demand_b) * alpha * (alpha + 1.0) / zero_price,
    }
}

/// Scans each player's unilateral deviations over `[0, price_ceiling]` at
/// `grid_step` and reports the maximal gains, alongside the one-sided
/// stationarity diagnosis at the candidate.
pub fn verify_nep(
    s: &Scenario,
    candidate: &PricePoint,
    grid_step: f64,
    epsilon: f64,
) -> Result<VerificationReport> {
    if grid_step <= 0.0 || !grid_step.is_finite() {
        return Err(Error::InvalidParameter {
            field: "grid_step",
            reason: format!("must be finite and > 0, got {grid_step}"),
        });
    }
    if epsilon <= 0.0 || !epsilon.is_finite() {
        return Err(Error::InvalidParameter {
            field: "epsilon",
            reason: format!("must be finite and > 0, got {epsilon}"),
        });
    }
    let ceiling = s.price_ceiling();
    let n = (ceiling / grid_step).floor() as u64 + 1;
    const GUARD: u64 = 10_000_000;
    if n > GUARD {
        return Err(Error::GridTooLarge {
            points: n,
            limit: GUARD,
        });
    }

    let (u1, u2) = s.utilities(candidate);
    let mut gain = [f64::NEG_INFINITY; 2];
    let mut best = [0.0f64; 2];
    for i in 0..n {
        let q = i as f64 * grid_step;
        let (v1, _) = s.utilities(&PricePoint {
            p1: q,
            p2: candidate.p2,
        });
        if v1 - u1 > gain[0] {
            gain[0] = v1 - u1;
            best[0] = q;
        }
        let (_, v2) = s.utilities(&PricePoint {
            p1: candidate.p1,
            p2: q,
        });
        if v2 - u2 > gain[1] {
            gain[1] = v2 - u2;
            best[1] = q;
        }
    }

    let g = s.utility_gradient(candidate);
    let stationary = |sp: &SlopePair| {
        (sp.left.abs() <= STATIONARITY_TOL && sp.right.abs() <= STATIONARITY_TOL)
            || (sp.left >= -STATIONARITY_TOL && sp.right <= STATIONARITY_TOL)
    };
    Ok(VerificationReport {
        passes: gain[0] <= epsilon && gain[1] <= epsilon,
        deviation_gain: gain,
        best_deviation: best,
        partials: [g.d_u1_d_p1, g.d_u2_d_p2],
        stationarity_ok: [stationary(&g.d_u1_d_p1), stationary(&g.d_u2_d_p2)],
        grid_step,
        epsilon,
        price_ceiling: ceiling,
        quantization_bound: curvature_scale(s) * grid_step * grid_step / 4.0,
    })
}
