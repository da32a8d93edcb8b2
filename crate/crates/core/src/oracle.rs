//! Brute-force verification: grid best responses, exhaustive epsilon-Nash
//! search, and finite-difference equilibrium-revenue derivatives. Every
//! closed form in this crate is checked against these before being trusted.

use serde::{Deserialize, Serialize};

use crate::equilibrium::{solve, Equilibrium, Mode};
use crate::error::{Error, Result};
use crate::game::{Player, PricePoint, Scenario};

const NODE_GUARD: u64 = 10_000_000;

/// A one-dimensional price grid `lo, lo+step, ..., <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(Error::InvalidParameter {
                field: "grid",
                reason: format!("requires finite lo <= hi, got [{lo}, {hi}]"),
            });
        }
        if !step.is_finite() || step <= 0.0 {
            return Err(Error::InvalidParameter {
                field: "step",
                reason: format!("must be finite and > 0, got {step}"),
            });
        }
        let g = GridSpec { lo, hi, step };
        if g.len() > NODE_GUARD {
            return Err(Error::GridTooLarge {
                points: g.len(),
                limit: NODE_GUARD,
            });
        }
        Ok(g)
    }

    pub fn len(&self) -> u64 {
        ((self.hi - self.lo) / self.step).floor() as u64 + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, i: u64) -> f64 {
        self.lo + i as f64 * self.step
    }
}

/// Default search grid per the scenario's zero-demand price:
/// `[0, ceiling]` at `1e-3 * ceiling`.
pub fn default_grid(s: &Scenario) -> GridSpec {
    let ceiling = s.price_ceiling();
    GridSpec {
        lo: 0.0,
        hi: ceiling,
        step: 1e-3 * ceiling,
    }
}

fn utility_for(s: &Scenario, player: Player, own: f64, other: f64) -> f64 {
    let p = match player {
        Player::One => PricePoint { p1: own, p2: other },
        Player::Two => PricePoint { p1: other, p2: own },
    };
    let (u1, u2) = s.utilities(&p);
    match player {
        Player::One => u1,
        Player::Two => u2,
    }
}

/// Grid argmax of the player's utility holding the opponent fixed.
/// Ties break toward the lowest price.
pub fn best_response(s: &Scenario, player: Player, opponent_price: f64, grid: &GridSpec) -> f64 {
    let mut best_q = grid.node(0);
    let mut best_u = utility_for(s, player, best_q, opponent_price);
    for i in 1..grid.len() {
        let q = grid.node(i);
        let u = utility_for(s, player, q, opponent_price);
        if u > best_u {
            best_u = u;
            best_q = q;
        }
    }
    best_q
}

/// A maximal run of adjacent epsilon-NEP nodes along a constant-price-sum
/// anti-diagonal of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NepRun {
    pub p_sum: f64,
    pub p1_lo: f64,
    pub p1_hi: f64,
    pub nodes: u64,
}

/// Result of the exhaustive epsilon-NEP search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSearch {
    /// Isolated epsilon-NEP grid nodes (not part of any run), sorted by (p1, p2).
    pub points: Vec<PricePoint>,
    /// Anti-diagonal runs of two or more adjacent nodes.
    pub runs: Vec<NepRun>,
    pub step: f64,
    pub epsilon: f64,
    /// Largest absolute utility over the grid (the epsilon scale).
    pub max_abs_utility: f64,
}

impl GridSearch {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.runs.is_empty()
    }

    /// All found nodes, including run members.
    pub fn all_nodes(&self) -> Vec<PricePoint> {
        let mut out = self.points.clone();
        for r in &self.runs {
            let spacing = (r.p1_hi - r.p1_lo) / (r.nodes - 1) as f64;
            for k in 0..r.nodes {
                let p1 = r.p1_lo + k as f64 * spacing;
                out.push(PricePoint {
                    p1,
                    p2: r.p_sum - p1,
                });
            }
        }
        out
    }
}

/// Exhaustive epsilon-NEP search over the grid squared: a node passes when
/// neither player can gain more than `epsilon` by any unilateral grid
/// deviation. `epsilon = None` uses `1e-6 * max|U|` over the grid.
#[allow(clippy::needless_range_loop)] // i/j address the grid and two tables at once
pub fn find_grid_neps(s: &Scenario, grid: &GridSpec, epsilon: Option<f64>) -> Result<GridSearch> {
    let n = grid.len();
    if n.saturating_mul(n) > NODE_GUARD {
        return Err(Error::GridTooLarge {
            points: n * n,
            limit: NODE_GUARD,
        });
    }
    let n = n as usize;

    // Column-wise best response values for player 1 (max over p1 for each
    // p2) and row-wise for player 2, plus the utility scale.
    let mut br1 = vec![f64::NEG_INFINITY; n];
    let mut br2 = vec![f64::NEG_INFINITY; n];
    let mut max_abs = 0.0f64;
    for i in 0..n {
        let p1 = grid.node(i as u64);
        for j in 0..n {
            let p2 = grid.node(j as u64);
            let (u1, u2) = s.utilities(&PricePoint { p1, p2 });
            if u1 > br1[j] {
                br1[j] = u1;
            }
            if u2 > br2[i] {
                br2[i] = u2;
            }
            max_abs = max_abs.max(u1.abs()).max(u2.abs());
        }
    }
    let eps = epsilon.unwrap_or(1e-6 * max_abs);

    // Only interior profiles count: at boundary profiles (zero price or
    // clamped demand) both utilities are degenerate and "no profitable
    // deviation" holds vacuously.
    let mut hits: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        let p1 = grid.node(i as u64);
        for j in 0..n {
            let p2 = grid.node(j as u64);
            let point = PricePoint { p1, p2 };
            if !s.is_interior(&point) {
                continue;
            }
            let (u1, u2) = s.utilities(&point);
            if br1[j] - u1 <= eps && br2[i] - u2 <= eps {
                hits.push((i, j));
            }
        }
    }

    // Group hits into anti-diagonal runs: same i+j, contiguous i.
    let mut by_sum: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for &(i, j) in &hits {
        by_sum.entry(i + j).or_default().push(i);
    }
    let mut points = Vec::new();
    let mut runs = Vec::new();
    for (sum, mut is) in by_sum {
        is.sort_unstable();
        let mut k = 0;
        while k < is.len() {
            let start = k;
            while k + 1 < is.len() && is[k + 1] == is[k] + 1 {
                k += 1;
            }
            let (i_lo, i_hi) = (is[start], is[k]);
            let count = (i_hi - i_lo + 1) as u64;
            if count >= 2 {
                runs.push(NepRun {
                    p_sum: grid.node(sum as u64),
                    p1_lo: grid.node(i_lo as u64),
                    p1_hi: grid.node(i_hi as u64),
                    nodes: count,
                });
            } else {
                let i = i_lo;
                points.push(PricePoint {
                    p1: grid.node(i as u64),
                    p2: grid.node((sum - i) as u64),
                });
            }
            k += 1;
        }
    }
    points.sort_by(|a, b| (a.p1, a.p2).partial_cmp(&(b.p1, b.p2)).unwrap());
    runs.sort_by(|a, b| {
        (a.p_sum, a.p1_lo)
            .partial_cmp(&(b.p_sum, b.p1_lo))
            .unwrap()
    });
    Ok(GridSearch {
        points,
        runs,
        step: grid.step,
        epsilon: eps,
        max_abs_utility: max_abs,
    })
}

/// Central-difference derivative of the chosen player's equilibrium
/// revenue with respect to the side payment at `p_s = 0`, re-solving the
/// game at `p_s = -h` and `p_s = +h`.
pub fn numeric_profit_derivative(s: &Scenario, player: Player, h: Option<f64>) -> Result<f64> {
    let base = s.with_side_payment(0.0)?;
    let p_star0 = match solve(&base, Mode::AsDerived)? {
        Equilibrium::Point { p_star, .. } => p_star,
        Equilibrium::Segment { .. } => {
            return Err(Error::Unsupported(
                "equilibrium at p_s = 0 is a segment; revenue is not single-valued".into(),
            ))
        }
        Equilibrium::None { reason } => {
            return Err(Error::SolverFailure(format!(
                "no interior equilibrium at p_s = 0: {reason}"
            )))
        }
    };
    let h = h.unwrap_or(1e-4 * p_star0);

    let revenue_at = |p_s: f64, side: &str| -> Result<f64> {
        let shifted = s.with_side_payment(p_s)?;
        match solve(&shifted, Mode::AsDerived)? {
            Equilibrium::Point { p1, p2, .. } => {
                let (u1, u2) = shifted.utilities(&PricePoint { p1, p2 });
                Ok(match player {
                    Player::One => u1,
                    Player::Two => u2,
                })
            }
            Equilibrium::Segment { .. } => Err(Error::Unsupported(format!(
                "equilibrium at p_s = {side}h is a segment; revenue is not single-valued"
            ))),
            Equilibrium::None { reason } => Err(Error::SolverFailure(format!(
                "no interior equilibrium at p_s = {side}h: {reason}"
            ))),
        }
    };
    let plus = revenue_at(h, "+")?;
    let minus = revenue_at(-h, "-")?;
    Ok((plus - minus) / (2.0 * h))
}
