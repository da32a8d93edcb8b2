//! Game scenarios: player utilities and their one-sided price gradients.
//!
//! Player 1 (the ISP, or eyeball ISP "a") receives the side payment under
//! the bandwidth factoring and the transit payment when it is the net
//! receiver; the content factoring reverses the beneficiary. Player
//! indexing is fixed throughout.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::demand::{
    LinearCommunalDemand, PwlConvexDemand, SlopePair, SmoothConvexDemand, SplitLinearDemand,
};
use crate::error::{Error, Result};

/// A pair of nonnegative prices, one per player.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricePoint {
    pub p1: f64,
    pub p2: f64,
}

impl PricePoint {
    pub fn new(p1: f64, p2: f64) -> Result<Self> {
        for (field, v) in [("p1", p1), ("p2", p2)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter {
                    field: if field == "p1" { "p1" } else { "p2" },
                    reason: format!("price must be finite and >= 0, got {v}"),
                });
            }
        }
        Ok(PricePoint { p1, p2 })
    }

    pub fn total(&self) -> f64 {
        self.p1 + self.p2
    }
}

/// Which provider's consumption meters the side payment in the split game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Factoring {
    /// `U1 = (p1+p_s)D1`, `U2 = p2 D2 - p_s D1`.
    Bandwidth,
    /// `U1 = p1 D1 + p_s D2`, `U2 = (p2-p_s)D2`.
    Content,
}

/// Player selector for per-player operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub fn index(self) -> usize {
        match self {
            Player::One => 0,
            Player::Two => 1,
        }
    }
}

/// One-sided partial derivatives of both players' utilities with respect
/// to their own price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityGradient {
    pub d_u1_d_p1: SlopePair,
    pub d_u2_d_p2: SlopePair,
}

/// `[x]^+ = max{x, 0}`; at the tie both transit terms are exactly zero.
pub fn positive_part(x: f64) -> f64 {
    x.max(0.0)
}

/// A complete two-player game instance.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    CommunalLinear {
        demand: LinearCommunalDemand,
        side_payment: f64,
    },
    SplitLinear {
        demand: SplitLinearDemand,
        side_payment: f64,
        factoring: Factoring,
    },
    PwlCommunal {
        demand: PwlConvexDemand,
        side_payment: f64,
    },
    SmoothCommunal {
        demand: SmoothConvexDemand,
        side_payment: f64,
    },
    SmoothSplit {
        max_demand_1: f64,
        max_demand_2: f64,
        zero_price: f64,
        alpha: f64,
        side_payment: f64,
    },
    EyeballTransit {
        max_demand_a: f64,
        max_demand_b: f64,
        zero_price: f64,
        alpha: f64,
        /// Fraction of remote demand NOT cached by ISP a.
        miss_fraction_a: f64,
        miss_fraction_b: f64,
        transit_price: f64,
    },
}

/// Relative tolerance for recognizing a total price as sitting on the PWL
/// kink. Wide enough to absorb both floating-point summation noise and the
/// residual of relaxation dynamics that stop once steps fall below 1e-10
/// (leaving the state within ~1e-8 of the kink line), and far below any
/// price-grid step in use.
const KINK_SNAP: f64 = 1e-7;

impl Scenario {
    /// Scenario kind string as used in scenario files.
    pub fn kind(&self) -> &'static str {
        match self {
            Scenario::CommunalLinear { .. } => "communal_linear",
            Scenario::SplitLinear {
                factoring: Factoring::Bandwidth,
                ..
            } => "split_linear_bandwidth",
            Scenario::SplitLinear {
                factoring: Factoring::Content,
                ..
            } => "split_linear_content",
            Scenario::PwlCommunal { .. } => "pwl_communal",
            Scenario::SmoothCommunal { .. } => "smooth_communal",
            Scenario::SmoothSplit { .. } => "smooth_split",
            Scenario::EyeballTransit { .. } => "eyeball_transit",
        }
    }

    /// The side payment, for kinds that carry one.
    pub fn side_payment(&self) -> Option<f64> {
        match self {
            Scenario::CommunalLinear { side_payment, .. }
            | Scenario::SplitLinear { side_payment, .. }
            | Scenario::PwlCommunal { side_payment, .. }
            | Scenario::SmoothCommunal { side_payment, .. }
            | Scenario::SmoothSplit { side_payment, .. } => Some(*side_payment),
            Scenario::EyeballTransit { .. } => None,
        }
    }

    /// Clone with the side payment replaced (errors for the transit game).
    pub fn with_side_payment(&self, p_s: f64) -> Result<Scenario> {
        let mut s = self.clone();
        match &mut s {
            Scenario::CommunalLinear { side_payment, .. }
            | Scenario::SplitLinear { side_payment, .. }
            | Scenario::PwlCommunal { side_payment, .. }
            | Scenario::SmoothCommunal { side_payment, .. }
            | Scenario::SmoothSplit { side_payment, .. } => *side_payment = p_s,
            Scenario::EyeballTransit { .. } => {
                return Err(Error::Unsupported(
                    "the transit game has no side payment".into(),
                ))
            }
        }
        Ok(s)
    }

    /// Price beyond which every demand in the scenario is zero. Used as
    /// the default search ceiling by the oracle and verifier.
    pub fn price_ceiling(&self) -> f64 {
        match self {
            Scenario::CommunalLinear { demand, .. } => demand.zero_price(),
            Scenario::SplitLinear { demand, .. } => demand.delta_1().max(demand.delta_2()),
            // The game demand follows the steep segment at and above the
            // kink, so it vanishes at D_max/d_max.
            Scenario::PwlCommunal { demand, .. } => demand.max_demand / demand.max_sensitivity,
            Scenario::SmoothCommunal { demand, .. } => demand.zero_price,
            Scenario::SmoothSplit { zero_price, .. } => *zero_price,
            Scenario::EyeballTransit { zero_price, .. } => *zero_price,
        }
    }

    /// Total price at the utility kink, for the PWL game.
    pub fn kink_price_sum(&self) -> Option<f64> {
        match self {
            Scenario::PwlCommunal { demand, .. } => Some(demand.kink_price),
            _ => None,
        }
    }

    /// Strict interiority at a price point: both prices positive and every
    /// demand the scenario's utilities draw on positive. Boundary profiles
    /// (a player opting out, or demand clamped to zero) are excluded from
    /// equilibrium searches.
    pub fn is_interior(&self, p: &PricePoint) -> bool {
        if p.p1 <= 0.0 || p.p2 <= 0.0 {
            return false;
        }
        let total = p.total();
        match self {
            Scenario::CommunalLinear { demand, .. } => demand.eval(total) > 0.0,
            Scenario::SplitLinear { demand, .. } => {
                demand.curve_1().eval(total) > 0.0 && demand.curve_2().eval(total) > 0.0
            }
            Scenario::PwlCommunal { demand, .. } => pwl_game_demand(demand, total) > 0.0,
            Scenario::SmoothCommunal { demand, .. } => demand.eval(total) > 0.0,
            Scenario::SmoothSplit { zero_price, .. } => total < *zero_price,
            Scenario::EyeballTransit { zero_price, .. } => {
                p.p1 < *zero_price && p.p2 < *zero_price
            }
        }
    }

    /// Non-fatal modeling warnings (standing assumptions that are checked
    /// and reported rather than enforced).
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if let Scenario::EyeballTransit {
            max_demand_a,
            max_demand_b,
            ..
        } = self
        {
            if max_demand_b >= max_demand_a {
                w.push(format!(
                    "delta = D_max_b/D_max_a = {:.6} >= 1; the customary normalization \
                     puts the higher-demand ISP first",
                    max_demand_b / max_demand_a
                ));
            }
        }
        w
    }

    /// Both players' revenue rates at a price point.
    pub fn utilities(&self, p: &PricePoint) -> (f64, f64) {
        let total = p.total();
        match self {
            Scenario::CommunalLinear {
                demand,
                side_payment,
            } => {
                let d = demand.eval(total);
                ((p.p1 + side_payment) * d, (p.p2 - side_payment) * d)
            }
            Scenario::SplitLinear {
                demand,
                side_payment,
                factoring,
            } => {
                let d1 = demand.curve_1().eval(total);
                let d2 = demand.curve_2().eval(total);
                match factoring {
                    Factoring::Bandwidth => (
                        (p.p1 + side_payment) * d1,
                        p.p2 * d2 - side_payment * d1,
                    ),
                    Factoring::Content => (
                        p.p1 * d1 + side_payment * d2,
                        (p.p2 - side_payment) * d2,
                    ),
                }
            }
            Scenario::PwlCommunal {
                demand,
                side_payment,
            } => {
                let d = pwl_game_demand(demand, total);
                ((p.p1 + side_payment) * d, (p.p2 - side_payment) * d)
            }
            Scenario::SmoothCommunal {
                demand,
                side_payment,
            } => {
                let d = demand.eval(total);
                ((p.p1 + side_payment) * d, (p.p2 - side_payment) * d)
            }
            Scenario::SmoothSplit {
                max_demand_1,
                max_demand_2,
                zero_price,
                alpha,
                side_payment,
            } => {
                let g = unit_power_demand(total, *zero_price, *alpha);
                (
                    max_demand_1 * g * (p.p1 + side_payment),
                    max_demand_2 * g * p.p2 - max_demand_1 * g * side_payment,
                )
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
                let da_at_a = max_demand_a * unit_power_demand(p.p1, *zero_price, *alpha);
                let da_at_b = max_demand_a * unit_power_demand(p.p2, *zero_price, *alpha);
                let db_at_a = max_demand_b * unit_power_demand(p.p1, *zero_price, *alpha);
                let db_at_b = max_demand_b * unit_power_demand(p.p2, *zero_price, *alpha);
                let net_to_a = miss_fraction_b * da_at_b - miss_fraction_a * db_at_a;
                (
                    da_at_a * p.p1 + positive_part(net_to_a) * transit_price,
                    db_at_b * p.p2 + positive_part(-net_to_a) * transit_price,
                )
            }
        }
    }

    /// One-sided partials `(dU1/dp1, dU2/dp2)` at a price point.
    ///
    /// For every scenario this is the demand-slope chain rule applied to
    /// the same curve `utilities` evaluates; for the PWL game that curve is
    /// the case-consistent two-segment curve of `pwl_game_demand`, whose
    /// kink exposes distinct one-sided values.
    pub fn utility_gradient(&self, p: &PricePoint) -> UtilityGradient {
        let total = p.total();
        match self {
            Scenario::CommunalLinear {
                demand,
                side_payment,
            } => communal_gradient(
                demand.eval(total),
                demand.slope(total),
                p,
                *side_payment,
            ),
            Scenario::SplitLinear {
                demand,
                side_payment,
                factoring,
            } => {
                let d1 = demand.curve_1().eval(total);
                let d2 = demand.curve_2().eval(total);
                let s1 = demand.curve_1().slope(total);
                let s2 = demand.curve_2().slope(total);
                match factoring {
                    Factoring::Bandwidth => UtilityGradient {
                        d_u1_d_p1: SlopePair {
                            left: d1 + (p.p1 + side_payment) * s1.left,
                            right: d1 + (p.p1 + side_payment) * s1.right,
                        },
                        d_u2_d_p2: SlopePair {
                            left: d2 + p.p2 * s2.left - side_payment * s1.left,
                            right: d2 + p.p2 * s2.right - side_payment * s1.right,
                        },
                    },
                    Factoring::Content => UtilityGradient {
                        d_u1_d_p1: SlopePair {
                            left: d1 + p.p1 * s1.left + side_payment * s2.left,
                            right: d1 + p.p1 * s1.right + side_payment * s2.right,
                        },
                        d_u2_d_p2: SlopePair {
                            left: d2 + (p.p2 - side_payment) * s2.left,
                            right: d2 + (p.p2 - side_payment) * s2.right,
                        },
                    },
                }
            }
            Scenario::PwlCommunal {
                demand,
                side_payment,
            } => pwl_gradient(demand, p, *side_payment),
            Scenario::SmoothCommunal {
                demand,
                side_payment,
            } => communal_gradient(
                demand.eval(total),
                demand.slope(total),
                p,
                *side_payment,
            ),
            Scenario::SmoothSplit {
                max_demand_1,
                max_demand_2,
                zero_price,
                alpha,
                side_payment,
            } => {
                let curve = SmoothConvexDemand {
                    max_demand: 1.0,
                    zero_price: *zero_price,
                    alpha: *alpha,
                };
                let g = curve.eval(total);
                let gs = curve.slope(total);
                UtilityGradient {
                    d_u1_d_p1: SlopePair {
                        left: max_demand_1 * (g + (p.p1 + side_payment) * gs.left),
                        right: max_demand_1 * (g + (p.p1 + side_payment) * gs.right),
                    },
                    d_u2_d_p2: SlopePair {
                        left: max_demand_2 * (g + p.p2 * gs.left)
                            - max_demand_1 * side_payment * gs.left,
                        right: max_demand_2 * (g + p.p2 * gs.right)
                            - max_demand_1 * side_payment * gs.right,
                    },
                }
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
                let unit = SmoothConvexDemand {
                    max_demand: 1.0,
                    zero_price: *zero_price,
                    alpha: *alpha,
                };
                let ga = unit.eval(p.p1);
                let gb = unit.eval(p.p2);
                let sa = unit.slope(p.p1);
                let sb = unit.slope(p.p2);
                let net_to_a = miss_fraction_b * max_demand_a * gb
                    - miss_fraction_a * max_demand_b * ga;

                // Own-price monopoly term plus, where the own transit
                // bracket is active, the cross term from the opponent's
                // demand at the own price. The bracket is increasing in
                // the own price, so at the tie the term switches on from
                // the right for player a and symmetrically for player b.
                let base_a = |slope: f64| max_demand_a * (ga + p.p1 * slope);
                let cross_a = |slope: f64| -miss_fraction_a * max_demand_b * slope * transit_price;
                let base_b = |slope: f64| max_demand_b * (gb + p.p2 * slope);
                let cross_b = |slope: f64| -miss_fraction_b * max_demand_a * slope * transit_price;

                let (a_left, a_right) = if net_to_a > 0.0 {
                    (base_a(sa.left) + cross_a(sa.left), base_a(sa.right) + cross_a(sa.right))
                } else if net_to_a < 0.0 {
                    (base_a(sa.left), base_a(sa.right))
                } else {
                    (base_a(sa.left), base_a(sa.right) + cross_a(sa.right))
                };
                let (b_left, b_right) = if net_to_a < 0.0 {
                    (base_b(sb.left) + cross_b(sb.left), base_b(sb.right) + cross_b(sb.right))
                } else if net_to_a > 0.0 {
                    (base_b(sb.left), base_b(sb.right))
                } else {
                    (base_b(sb.left), base_b(sb.right) + cross_b(sb.right))
                };
                UtilityGradient {
                    d_u1_d_p1: SlopePair {
                        left: a_left,
                        right: a_right,
                    },
                    d_u2_d_p2: SlopePair {
                        left: b_left,
                        right: b_right,
                    },
                }
            }
        }
    }
}

fn communal_gradient(
    d: f64,
    slope: SlopePair,
    p: &PricePoint,
    side_payment: f64,
) -> UtilityGradient {
    UtilityGradient {
        d_u1_d_p1: SlopePair {
            left: d + (p.p1 + side_payment) * slope.left,
            right: d + (p.p1 + side_payment) * slope.right,
        },
        d_u2_d_p2: SlopePair {
            left: d + (p.p2 - side_payment) * slope.left,
            right: d + (p.p2 - side_payment) * slope.right,
        },
    }
}

fn unit_power_demand(p: f64, zero_price: f64, alpha: f64) -> f64 {
    (1.0 - p / zero_price).max(0.0).powf(alpha)
}

/// The demand curve the PWL pricing game is played on: the shallow
/// `(D_theta, d_theta)` segment below the kink and the steep
/// `(D_max, d_max)` segment at and above it, clamped at zero.
///
/// This is the curve whose marginal-revenue cases the solver's three-way
/// classification, the equilibrium segment and the price dynamics are all
/// built on. It takes the steep segment's (higher) value at the kink, so
/// `D(kink_price) = D_theta` exactly. It differs below the kink from the
/// upper-envelope curve `PwlConvexDemand::eval`, which describes the
/// demand response itself; see the analysis notes in the README.
pub fn pwl_game_demand(demand: &PwlConvexDemand, total: f64) -> f64 {
    let kink = demand.kink_price;
    if (total - kink).abs() <= KINK_SNAP * kink.max(1.0) {
        return demand.theta_demand;
    }
    if total < kink {
        (demand.theta_demand - demand.theta_sensitivity * total).max(0.0)
    } else {
        (demand.max_demand - demand.max_sensitivity * total).max(0.0)
    }
}

fn pwl_gradient(demand: &PwlConvexDemand, p: &PricePoint, side_payment: f64) -> UtilityGradient {
    let total = p.total();
    let kink = demand.kink_price;
    let own_1 = p.p1 + side_payment;
    let own_2 = p.p2 - side_payment;

    // Marginal revenue on the shallow segment (active below the kink),
    // zero where that segment is clamped.
    let low = |own: f64| {
        if demand.theta_demand - demand.theta_sensitivity * total <= 0.0 {
            0.0
        } else {
            demand.theta_demand - demand.theta_sensitivity * (total + own)
        }
    };
    // Marginal revenue on the steep segment (active at and above the kink).
    let high = |own: f64| {
        if demand.max_demand - demand.max_sensitivity * total <= 0.0 {
            0.0
        } else {
            demand.max_demand - demand.max_sensitivity * (total + own)
        }
    };

    let at_kink = (total - kink).abs() <= KINK_SNAP * kink.max(1.0);
    let pair = |own: f64| {
        if at_kink {
            SlopePair {
                left: low(own),
                right: high(own),
            }
        } else if total < kink {
            SlopePair::both(low(own))
        } else {
            SlopePair::both(high(own))
        }
    };
    UtilityGradient {
        d_u1_d_p1: pair(own_1),
        d_u2_d_p2: pair(own_2),
    }
}

// ---------------------------------------------------------------------------
// Scenario files
// ---------------------------------------------------------------------------

/// On-disk scenario description: `{"kind": ..., "params": {...}, "notes": ...}`.
///
/// `params` keys must exactly match the scenario kind's numeric fields;
/// unknown or missing keys are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub kind: String,
    pub params: serde_json::Map<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

fn expected_params(kind: &str) -> Option<&'static [&'static str]> {
    match kind {
        "communal_linear" => Some(&["D_max", "d", "p_s"]),
        "split_linear_bandwidth" | "split_linear_content" => {
            Some(&["D_max_1", "d_1", "D_max_2", "d_2", "p_s"])
        }
        "pwl_communal" => Some(&["D_max", "D_theta", "d_max", "d_theta", "p_s"]),
        "smooth_communal" => Some(&["D_max", "p_max", "alpha", "p_s"]),
        "smooth_split" => Some(&["D_max_1", "D_max_2", "p_max", "alpha", "p_s"]),
        "eyeball_transit" => Some(&[
            "D_max_a", "D_max_b", "p_max", "alpha", "Phi_a", "Phi_b", "p_t",
        ]),
        _ => None,
    }
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<ScenarioFile>(text)
            .map_err(|e| Error::ScenarioFile(format!("malformed JSON: {e}")))
    }

    fn number(&self, key: &str) -> Result<f64> {
        let v = self
            .params
            .get(key)
            .ok_or_else(|| Error::ScenarioFile(format!("params.{key}: missing")))?;
        let x = v
            .as_f64()
            .ok_or_else(|| Error::ScenarioFile(format!("params.{key}: not a number")))?;
        if !x.is_finite() {
            return Err(Error::ScenarioFile(format!("params.{key}: not finite")));
        }
        Ok(x)
    }

    /// Validates the parameter set and builds the in-memory scenario.
    pub fn to_scenario(&self) -> Result<Scenario> {
        let expected = expected_params(&self.kind).ok_or_else(|| {
            Error::ScenarioFile(format!(
                "kind: unknown scenario kind `{}`",
                self.kind
            ))
        })?;
        for key in self.params.keys() {
            if !expected.contains(&key.as_str()) {
                return Err(Error::ScenarioFile(format!(
                    "params.{key}: unknown key for kind `{}`",
                    self.kind
                )));
            }
        }

        match self.kind.as_str() {
            "communal_linear" => Ok(Scenario::CommunalLinear {
                demand: LinearCommunalDemand::new(self.number("D_max")?, self.number("d")?)?,
                side_payment: self.number("p_s")?,
            }),
            "split_linear_bandwidth" | "split_linear_content" => Ok(Scenario::SplitLinear {
                demand: SplitLinearDemand::new(
                    self.number("D_max_1")?,
                    self.number("d_1")?,
                    self.number("D_max_2")?,
                    self.number("d_2")?,
                )?,
                side_payment: self.number("p_s")?,
                factoring: if self.kind == "split_linear_bandwidth" {
                    Factoring::Bandwidth
                } else {
                    Factoring::Content
                },
            }),
            "pwl_communal" => Ok(Scenario::PwlCommunal {
                demand: PwlConvexDemand::new(
                    self.number("D_max")?,
                    self.number("D_theta")?,
                    self.number("d_max")?,
                    self.number("d_theta")?,
                )?,
                side_payment: self.number("p_s")?,
            }),
            "smooth_communal" => Ok(Scenario::SmoothCommunal {
                demand: SmoothConvexDemand::new(
                    self.number("D_max")?,
                    self.number("p_max")?,
                    self.number("alpha")?,
                )?,
                side_payment: self.number("p_s")?,
            }),
            "smooth_split" => {
                let s = Scenario::SmoothSplit {
                    max_demand_1: self.number("D_max_1")?,
                    max_demand_2: self.number("D_max_2")?,
                    zero_price: self.number("p_max")?,
                    alpha: self.number("alpha")?,
                    side_payment: self.number("p_s")?,
                };
                validate_smooth_split(&s)?;
                Ok(s)
            }
            "eyeball_transit" => {
                let s = Scenario::EyeballTransit {
                    max_demand_a: self.number("D_max_a")?,
                    max_demand_b: self.number("D_max_b")?,
                    zero_price: self.number("p_max")?,
                    alpha: self.number("alpha")?,
                    miss_fraction_a: self.number("Phi_a")?,
                    miss_fraction_b: self.number("Phi_b")?,
                    transit_price: self.number("p_t")?,
                };
                validate_eyeball(&s)?;
                Ok(s)
            }
            _ => unreachable!("kind checked above"),
        }
    }

    /// Serializes a scenario back to file form.
    pub fn from_scenario(s: &Scenario, notes: Option<String>) -> Self {
        let mut params = serde_json::Map::new();
        let mut put = |k: &str, v: f64| {
            params.insert(k.to_string(), serde_json::json!(v));
        };
        match s {
            Scenario::CommunalLinear {
                demand,
                side_payment,
            } => {
                put("D_max", demand.max_demand);
                put("d", demand.sensitivity);
                put("p_s", *side_payment);
            }
            Scenario::SplitLinear {
                demand,
                side_payment,
                ..
            } => {
                put("D_max_1", demand.max_demand_1);
                put("d_1", demand.sensitivity_1);
                put("D_max_2", demand.max_demand_2);
                put("d_2", demand.sensitivity_2);
                put("p_s", *side_payment);
            }
            Scenario::PwlCommunal {
                demand,
                side_payment,
            } => {
                put("D_max", demand.max_demand);
                put("D_theta", demand.theta_demand);
                put("d_max", demand.max_sensitivity);
                put("d_theta", demand.theta_sensitivity);
                put("p_s", *side_payment);
            }
            Scenario::SmoothCommunal {
                demand,
                side_payment,
            } => {
                put("D_max", demand.max_demand);
                put("p_max", demand.zero_price);
                put("alpha", demand.alpha);
                put("p_s", *side_payment);
            }
            Scenario::SmoothSplit {
                max_demand_1,
                max_demand_2,
                zero_price,
                alpha,
                side_payment,
            } => {
                put("D_max_1", *max_demand_1);
                put("D_max_2", *max_demand_2);
                put("p_max", *zero_price);
                put("alpha", *alpha);
                put("p_s", *side_payment);
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
                put("D_max_a", *max_demand_a);
                put("D_max_b", *max_demand_b);
                put("p_max", *zero_price);
                put("alpha", *alpha);
                put("Phi_a", *miss_fraction_a);
                put("Phi_b", *miss_fraction_b);
                put("p_t", *transit_price);
            }
        }
        ScenarioFile {
            kind: s.kind().to_string(),
            params,
            notes,
        }
    }
}

fn validate_smooth_split(s: &Scenario) -> Result<()> {
    if let Scenario::SmoothSplit {
        max_demand_1,
        max_demand_2,
        zero_price,
        alpha,
        ..
    } = s
    {
        for (field, v) in [
            ("D_max_1", *max_demand_1),
            ("D_max_2", *max_demand_2),
            ("p_max", *zero_price),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParameter {
                    field: match field {
                        "D_max_1" => "D_max_1",
                        "D_max_2" => "D_max_2",
                        _ => "p_max",
                    },
                    reason: format!("must be finite and > 0, got {v}"),
                });
            }
        }
        if !alpha.is_finite() || *alpha < 1.0 {
            return Err(Error::InvalidParameter {
                field: "alpha",
                reason: format!("must be finite and >= 1, got {alpha}"),
            });
        }
    }
    Ok(())
}

fn validate_eyeball(s: &Scenario) -> Result<()> {
    if let Scenario::EyeballTransit {
        max_demand_a,
        max_demand_b,
        zero_price,
        alpha,
        miss_fraction_a,
        miss_fraction_b,
        transit_price,
    } = s
    {
        for (field, v) in [
            ("D_max_a", *max_demand_a),
            ("D_max_b", *max_demand_b),
            ("p_max", *zero_price),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParameter {
                    field: match field {
                        "D_max_a" => "D_max_a",
                        "D_max_b" => "D_max_b",
                        _ => "p_max",
                    },
                    reason: format!("must be finite and > 0, got {v}"),
                });
            }
        }
        if !alpha.is_finite() || *alpha < 1.0 {
            return Err(Error::InvalidParameter {
                field: "alpha",
                reason: format!("must be finite and >= 1, got {alpha}"),
            });
        }
        for (field, v) in [
            ("Phi_a", *miss_fraction_a),
            ("Phi_b", *miss_fraction_b),
        ] {
            if !v.is_finite() || v <= 0.0 || v > 1.0 {
                return Err(Error::InvalidParameter {
                    field: if field == "Phi_a" { "Phi_a" } else { "Phi_b" },
                    reason: format!("must lie in (0, 1], got {v}"),
                });
            }
        }
        if !transit_price.is_finite() || *transit_price < 0.0 {
            return Err(Error::InvalidParameter {
                field: "p_t",
                reason: format!("must be finite and >= 0, got {transit_price}"),
            });
        }
    }
    Ok(())
}
