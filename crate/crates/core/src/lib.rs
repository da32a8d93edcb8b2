//! Noncooperative pricing games between network access and content
//! providers: demand-response models, closed-form Nash equilibrium solvers
//! with case classification, an independent brute-force oracle, price
//! dynamics, and side-payment profitability analysis.
//!
//! The crate deliberately keeps two routes to every equilibrium: a closed
//! form and a grid search over the actual utilities, so that each can
//! check the other. Where published closed forms disagree with what the
//! stated utilities imply, both variants are exposed (`Mode::AsPrinted`
//! vs `Mode::AsDerived`) and the discrepancy is reported.

pub mod analysis;
pub mod demand;
pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod game;
pub mod oracle;

pub use analysis::{profitability_report, sweep, transit_case_report, ProfitabilityReport};
pub use demand::{
    calibrate_smooth, demand_slope, derive_pwl_constants, eval_demand, DemandModel,
    LinearCommunalDemand, PwlConvexDemand, SlopePair, SmoothConvexDemand, SplitLinearDemand,
};
pub use dynamics::{integrate, sample_field, DynamicsMode, Trajectory, VectorField};
pub use equilibrium::{solve, verify_nep, Equilibrium, Mode, VerificationReport};
pub use error::{Error, Result};
pub use game::{Factoring, Player, PricePoint, Scenario, ScenarioFile};
pub use oracle::{best_response, find_grid_neps, numeric_profit_derivative, GridSearch, GridSpec};
