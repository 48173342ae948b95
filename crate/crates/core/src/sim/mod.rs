//! Deterministic compartment models integrated with fixed-step RK4.
//!
//! The ODE state vector is the compartment counts followed by four running cost
//! integrals (infectious person-days, hospitalized person-days, deaths, doses
//! delivered); all of them advance in the same RK4 pass.

mod integrate;
mod model;
mod rhs;
mod rk4;
mod state;

pub use integrate::{integrate_interval, integrate_week, IntervalOutcome, CONSERVATION_TOLERANCE};
pub use model::{
    c15, sirv, C15Rates, CompartmentModel, ModelId, ModelParams, C15_COMPARTMENTS,
    SIRV_COMPARTMENTS, SIR_COMPARTMENTS,
};
pub use rhs::{c15_hospitalized, c15_infectious, rhs, rhs_c15, rhs_sir, rhs_sirv, vaccination_flow};
pub use rk4::{rk4_step, Rk4};
pub use state::{acc, Accumulators, CostDeltas, RateModifiers, SimState, NUM_ACCUMULATORS};
