//! Demand-response curves: linear communal, coupled split-linear pair,
//! convex piecewise-linear, and smooth convex power-law.
//!
//! Every curve maps a total usage price to a demand volume per unit time.
//! Formulas are clamped at zero past the zero-demand price so that grid
//! searches and dynamics can roam freely; closed-form solvers check
//! interiority themselves and never rely on the clamped region.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One-sided slopes of a demand curve at a price point.
///
/// Curves here are piecewise differentiable; at kinks (the PWL breakpoint,
/// clamp points) the two entries differ. Callers that need a single value
/// must state which side they take.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopePair {
    pub left: f64,
    pub right: f64,
}

impl SlopePair {
    pub fn both(v: f64) -> Self {
        SlopePair { left: v, right: v }
    }
}

fn require_positive(field: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() || v <= 0.0 {
        return Err(Error::InvalidParameter {
            field,
            reason: format!("must be finite and > 0, got {v}"),
        });
    }
    Ok(())
}

fn require_nonnegative_price(p: f64) -> Result<()> {
    if !p.is_finite() || p < 0.0 {
        return Err(Error::InvalidParameter {
            field: "p",
            reason: format!("price must be finite and >= 0, got {p}"),
        });
    }
    Ok(())
}

/// Single linear demand shared by both providers: `D(p) = D_max - d*p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearCommunalDemand {
    /// Demand volume at zero price (D_max).
    pub max_demand: f64,
    /// Demand sensitivity to the total price (d).
    pub sensitivity: f64,
}

impl LinearCommunalDemand {
    pub fn new(max_demand: f64, sensitivity: f64) -> Result<Self> {
        require_positive("D_max", max_demand)?;
        require_positive("d", sensitivity)?;
        Ok(LinearCommunalDemand {
            max_demand,
            sensitivity,
        })
    }

    /// Price at which demand reaches zero.
    pub fn zero_price(&self) -> f64 {
        self.max_demand / self.sensitivity
    }

    pub fn eval(&self, p: f64) -> f64 {
        (self.max_demand - self.sensitivity * p).max(0.0)
    }

    pub fn slope(&self, p: f64) -> SlopePair {
        let z = self.zero_price();
        if p < z {
            SlopePair::both(-self.sensitivity)
        } else if p > z {
            SlopePair::both(0.0)
        } else {
            SlopePair {
                left: -self.sensitivity,
                right: 0.0,
            }
        }
    }
}

/// Per-provider linear demands coupled through the total price:
/// `D_k(p) = D_max_k - d_k*(p_1 + p_2)`.
///
/// The two demands may carry different units (e.g. Mbps vs songs/s);
/// only the shared price argument couples them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitLinearDemand {
    pub max_demand_1: f64,
    pub sensitivity_1: f64,
    pub max_demand_2: f64,
    pub sensitivity_2: f64,
}

impl SplitLinearDemand {
    pub fn new(
        max_demand_1: f64,
        sensitivity_1: f64,
        max_demand_2: f64,
        sensitivity_2: f64,
    ) -> Result<Self> {
        require_positive("D_max_1", max_demand_1)?;
        require_positive("d_1", sensitivity_1)?;
        require_positive("D_max_2", max_demand_2)?;
        require_positive("d_2", sensitivity_2)?;
        Ok(SplitLinearDemand {
            max_demand_1,
            sensitivity_1,
            max_demand_2,
            sensitivity_2,
        })
    }

    pub fn curve_1(&self) -> LinearCommunalDemand {
        LinearCommunalDemand {
            max_demand: self.max_demand_1,
            sensitivity: self.sensitivity_1,
        }
    }

    pub fn curve_2(&self) -> LinearCommunalDemand {
        LinearCommunalDemand {
            max_demand: self.max_demand_2,
            sensitivity: self.sensitivity_2,
        }
    }

    /// delta_1 = D_max_1 / d_1, the zero-demand price of provider 1's curve.
    pub fn delta_1(&self) -> f64 {
        self.max_demand_1 / self.sensitivity_1
    }

    /// delta_2 = D_max_2 / d_2.
    pub fn delta_2(&self) -> f64 {
        self.max_demand_2 / self.sensitivity_2
    }
}

/// Convex piecewise-linear demand: the upper envelope of a steep line
/// (sensitivity `d_max`, intercept `D_max`) and a shallow line
/// (sensitivity `d_theta`, intercept `shallow_intercept`), meeting at
/// `(kink_price, theta_demand)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PwlConvexDemand {
    pub max_demand: f64,
    pub theta_demand: f64,
    pub max_sensitivity: f64,
    pub theta_sensitivity: f64,
    /// Shallow line's value at zero price (derived).
    pub shallow_intercept: f64,
    /// Price where the two lines cross (derived).
    pub kink_price: f64,
    /// Price at which the envelope reaches zero (derived).
    pub zero_price: f64,
}

/// Derived constants of the piecewise-linear curve, in the order
/// (shallow_intercept, kink_price, zero_price).
pub fn derive_pwl_constants(
    max_demand: f64,
    theta_demand: f64,
    max_sensitivity: f64,
    theta_sensitivity: f64,
) -> Result<(f64, f64, f64)> {
    require_positive("D_max", max_demand)?;
    require_positive("D_theta", theta_demand)?;
    require_positive("d_max", max_sensitivity)?;
    require_positive("d_theta", theta_sensitivity)?;
    if theta_demand >= max_demand {
        return Err(Error::InvalidParameter {
            field: "D_theta",
            reason: format!("requires D_theta < D_max, got {theta_demand} >= {max_demand}"),
        });
    }
    if theta_sensitivity >= max_sensitivity {
        return Err(Error::InvalidParameter {
            field: "d_theta",
            reason: format!(
                "requires d_theta < d_max, got {theta_sensitivity} >= {max_sensitivity}"
            ),
        });
    }
    let shallow_intercept =
        theta_demand + (max_demand - theta_demand) * theta_sensitivity / max_sensitivity;
    let kink_price = (max_demand - theta_demand) / max_sensitivity;
    let zero_price = kink_price + theta_demand / theta_sensitivity;
    Ok((shallow_intercept, kink_price, zero_price))
}

impl PwlConvexDemand {
    pub fn new(
        max_demand: f64,
        theta_demand: f64,
        max_sensitivity: f64,
        theta_sensitivity: f64,
    ) -> Result<Self> {
        let (shallow_intercept, kink_price, zero_price) = derive_pwl_constants(
            max_demand,
            theta_demand,
            max_sensitivity,
            theta_sensitivity,
        )?;
        Ok(PwlConvexDemand {
            max_demand,
            theta_demand,
            max_sensitivity,
            theta_sensitivity,
            shallow_intercept,
            kink_price,
            zero_price,
        })
    }

    /// Upper envelope of the two lines, clamped at zero.
    pub fn eval(&self, p: f64) -> f64 {
        let steep = self.max_demand - self.max_sensitivity * p;
        let shallow = self.shallow_intercept - self.theta_sensitivity * p;
        steep.max(shallow).max(0.0)
    }

    pub fn slope(&self, p: f64) -> SlopePair {
        if p < self.kink_price {
            SlopePair::both(-self.max_sensitivity)
        } else if p == self.kink_price {
            SlopePair {
                left: -self.max_sensitivity,
                right: -self.theta_sensitivity,
            }
        } else if p < self.zero_price {
            SlopePair::both(-self.theta_sensitivity)
        } else if p == self.zero_price {
            SlopePair {
                left: -self.theta_sensitivity,
                right: 0.0,
            }
        } else {
            SlopePair::both(0.0)
        }
    }
}

/// Smooth convex demand `D(p) = D_max * (1 - p/p_max)^alpha` on
/// `[0, p_max]`, zero beyond.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothConvexDemand {
    pub max_demand: f64,
    pub zero_price: f64,
    pub alpha: f64,
}

impl SmoothConvexDemand {
    pub fn new(max_demand: f64, zero_price: f64, alpha: f64) -> Result<Self> {
        require_positive("D_max", max_demand)?;
        require_positive("p_max", zero_price)?;
        if !alpha.is_finite() || alpha < 1.0 {
            return Err(Error::InvalidParameter {
                field: "alpha",
                reason: format!("must be finite and >= 1, got {alpha}"),
            });
        }
        Ok(SmoothConvexDemand {
            max_demand,
            zero_price,
            alpha,
        })
    }

    pub fn eval(&self, p: f64) -> f64 {
        // Clamp before the power: a negative base with fractional alpha is NaN.
        let x = (1.0 - p / self.zero_price).max(0.0);
        self.max_demand * x.powf(self.alpha)
    }

    fn derivative_inside(&self, p: f64) -> f64 {
        let x = 1.0 - p / self.zero_price;
        -self.max_demand * self.alpha / self.zero_price * x.powf(self.alpha - 1.0)
    }

    pub fn slope(&self, p: f64) -> SlopePair {
        if p < self.zero_price {
            SlopePair::both(self.derivative_inside(p))
        } else if p == self.zero_price {
            let left = if self.alpha > 1.0 {
                0.0
            } else {
                -self.max_demand / self.zero_price
            };
            SlopePair { left, right: 0.0 }
        } else {
            SlopePair::both(0.0)
        }
    }
}

/// Tagged family of demand-response models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DemandModel {
    LinearCommunal(LinearCommunalDemand),
    SplitLinear(SplitLinearDemand),
    PwlConvex(PwlConvexDemand),
    SmoothConvex(SmoothConvexDemand),
}

/// Evaluates a single-curve demand model at total price `p` (clamped at zero).
///
/// The split family carries one curve per provider and has no single value;
/// evaluate `SplitLinearDemand::curve_1()`/`curve_2()` instead.
pub fn eval_demand(model: &DemandModel, p: f64) -> Result<f64> {
    require_nonnegative_price(p)?;
    match model {
        DemandModel::LinearCommunal(m) => Ok(m.eval(p)),
        DemandModel::PwlConvex(m) => Ok(m.eval(p)),
        DemandModel::SmoothConvex(m) => Ok(m.eval(p)),
        DemandModel::SplitLinear(_) => Err(Error::Unsupported(
            "split demand evaluates per provider; use curve_1()/curve_2()".into(),
        )),
    }
}

/// One-sided demand slopes at total price `p`.
pub fn demand_slope(model: &DemandModel, p: f64) -> Result<SlopePair> {
    require_nonnegative_price(p)?;
    match model {
        DemandModel::LinearCommunal(m) => Ok(m.slope(p)),
        DemandModel::PwlConvex(m) => Ok(m.slope(p)),
        DemandModel::SmoothConvex(m) => Ok(m.slope(p)),
        DemandModel::SplitLinear(_) => Err(Error::Unsupported(
            "split demand evaluates per provider; use curve_1()/curve_2()".into(),
        )),
    }
}

/// Fits the smooth convex model to a piecewise-linear description:
/// chooses `(alpha, p_max)` such that `D'(0) = -d_max` and
/// `D'(D^{-1}(D_theta)) = -d_theta`.
///
/// Feasible only when `D_theta/D_max < d_theta/d_max`; in that case
/// `alpha = 1/(1 - r)` with `r = ln(d_theta/d_max)/ln(D_theta/D_max)` and
/// `p_max = alpha*D_max/d_max`. Both slope conditions are re-checked
/// numerically before the model is returned.
pub fn calibrate_smooth(
    max_demand: f64,
    theta_demand: f64,
    max_sensitivity: f64,
    theta_sensitivity: f64,
) -> Result<SmoothConvexDemand> {
    require_positive("D_max", max_demand)?;
    require_positive("D_theta", theta_demand)?;
    require_positive("d_max", max_sensitivity)?;
    require_positive("d_theta", theta_sensitivity)?;
    if theta_demand >= max_demand {
        return Err(Error::CalibrationInfeasible(format!(
            "violated inequality D_theta < D_max ({theta_demand} >= {max_demand})"
        )));
    }
    if theta_sensitivity >= max_sensitivity {
        return Err(Error::CalibrationInfeasible(format!(
            "violated inequality d_theta < d_max ({theta_sensitivity} >= {max_sensitivity})"
        )));
    }
    if theta_demand / max_demand >= theta_sensitivity / max_sensitivity {
        return Err(Error::CalibrationInfeasible(format!(
            "violated inequality D_theta/D_max < d_theta/d_max \
             ({} >= {}); no finite alpha >= 1 matches both slopes",
            theta_demand / max_demand,
            theta_sensitivity / max_sensitivity
        )));
    }

    let r = (theta_sensitivity / max_sensitivity).ln() / (theta_demand / max_demand).ln();
    let alpha = 1.0 / (1.0 - r);
    let zero_price = alpha * max_demand / max_sensitivity;
    let model = SmoothConvexDemand::new(max_demand, zero_price, alpha)?;

    // The closed form is implementer-derived, so both defining conditions
    // are validated numerically before the model is trusted.
    let res0 = (model.slope(0.0).right + max_sensitivity).abs() / max_sensitivity;
    let p_theta = zero_price * (1.0 - (theta_demand / max_demand).powf(1.0 / alpha));
    let res_theta = (model.slope(p_theta).right + theta_sensitivity).abs() / theta_sensitivity;
    const RESIDUAL_LIMIT: f64 = 1e-10;
    if res0 > RESIDUAL_LIMIT || res_theta > RESIDUAL_LIMIT {
        return Err(Error::SolverFailure(format!(
            "calibration residuals too large: |D'(0)+d_max|/d_max = {res0:.3e}, \
             |D'(p_theta)+d_theta|/d_theta = {res_theta:.3e}"
        )));
    }
    Ok(model)
}
