use super::model::CompartmentModel;
use super::rhs::rhs;
use super::rk4::Rk4;
use super::state::{CostDeltas, RateModifiers, SimState};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest tolerated drift of the population total, relative to N.
pub const CONSERVATION_TOLERANCE: f64 = 1e-6;

/// Result of integrating one piecewise-constant interval.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalOutcome<T> {
    pub state: SimState<T>,
    pub deltas: CostDeltas<T>,
    /// Smallest compartment value seen at any RK4 step, before clamping.
    pub min_compartment: T,
    /// Largest |sum(compartments) - N| seen at any RK4 step.
    pub max_conservation_error: T,
}

/// Integrates the model over `days` with fixed step `dt` and constant modifiers.
///
/// Compartments are clamped at zero and rescaled to sum to N afterwards; drift beyond
/// [`CONSERVATION_TOLERANCE`] is an error.
pub fn integrate_interval<T: Scalar>(
    rk4: &mut Rk4<T>,
    state: &SimState<T>,
    model: &CompartmentModel<T>,
    mods: &RateModifiers<T>,
    days: T,
    dt: T,
) -> Result<IntervalOutcome<T>> {
    mods.validate()?;
    if !(days > T::zero()) || !(dt > T::zero()) {
        return Err(Error::Domain {
            name: "dt",
            value: dt.as_f64(),
            domain: "(0, days]",
        });
    }
    let n = model.num_compartments();
    if state.compartments.len() != n {
        return Err(Error::shape(
            format!("{n} compartments for {}", model.id),
            state.compartments.len(),
        ));
    }
    let steps = (days / dt).round().to_usize().unwrap_or(0).max(1);
    let h = days / T::from_usize_lossy(steps);
    let population = model.population;
    let tolerance = T::lit(CONSERVATION_TOLERANCE) * population;

    let mut y = state.to_vector();
    let mut min_compartment = y[..n].iter().copied().fold(T::infinity(), T::min);
    let mut max_err = T::zero();
    for _ in 0..steps {
        rk4.step(&mut y, h, |y, dy| rhs(model, mods, y, dy))?;
        let total: T = y[..n].iter().copied().sum();
        let err = (total - population).abs();
        max_err = max_err.max(err);
        if err > tolerance {
            return Err(Error::Integration(format!(
                "population drifted to {total} (N = {population})"
            )));
        }
        min_compartment = y[..n].iter().copied().fold(min_compartment, T::min);
    }

    for x in &mut y[..n] {
        *x = x.max(T::zero());
    }
    let total: T = y[..n].iter().copied().sum();
    if total > T::zero() && total != population {
        let scale = population / total;
        for x in &mut y[..n] {
            *x *= scale;
        }
    }

    let next = SimState::from_vector(&y, state.time + days);
    let deltas = CostDeltas::between(&state.accumulators, &next.accumulators);
    Ok(IntervalOutcome {
        state: next,
        deltas,
        min_compartment,
        max_conservation_error: max_err,
    })
}

/// One MDP step: seven days at a fixed step, modifiers held constant.
pub fn integrate_week<T: Scalar>(
    state: &SimState<T>,
    model: &CompartmentModel<T>,
    mods: &RateModifiers<T>,
    dt: T,
) -> Result<IntervalOutcome<T>> {
    integrate_interval(&mut Rk4::new(), state, model, mods, T::lit(7.0), dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::model::{c15, sirv, ModelId};

    const N: f64 = 2_000_000.0;

    fn initial(id: ModelId) -> SimState<f64> {
        SimState::seeded(id.num_compartments(), N, id.seed_compartment(), 100.0)
    }

    #[test]
    fn disease_free_week_is_identity() {
        for id in ModelId::ALL {
            let model = CompartmentModel::new(id);
            let s = SimState::seeded(id.num_compartments(), N, 0, 0.0);
            let out = integrate_week(&s, &model, &RateModifiers::none(), 0.1).unwrap();
            assert_eq!(out.state.compartments, s.compartments);
            assert_eq!(out.deltas, CostDeltas::default());
            assert_eq!(out.state.time, 7.0);
        }
    }

    #[test]
    fn step_refinement_agrees() {
        for id in ModelId::ALL {
            let model = CompartmentModel::new(id);
            let mods = RateModifiers {
                transmission_scale: 0.9,
                facility_scale: 1.0,
                doses_per_day: 5_000.0,
            };
            let coarse = integrate_week(&initial(id), &model, &mods, 0.1).unwrap();
            let fine = integrate_week(&initial(id), &model, &mods, 0.001).unwrap();
            for (a, b) in coarse
                .state
                .compartments
                .iter()
                .zip(&fine.state.compartments)
            {
                let scale = b.abs().max(1e-3);
                assert!((a - b).abs() / scale < 1e-5, "{id}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn sir_epidemic_grows_in_first_week() {
        let model = CompartmentModel::new(ModelId::Sir);
        let out = integrate_week(&initial(ModelId::Sir), &model, &RateModifiers::none(), 0.1)
            .unwrap();
        assert!(out.state.compartments[sirv::I] > 100.0);
        // linearised growth: I(7) ~ 100 exp(0.2 * 7)
        let linear = 100.0 * (0.2f64 * 7.0).exp();
        assert!((out.state.compartments[sirv::I] / linear - 1.0).abs() < 0.01);
        assert!(out.deltas.infectious_person_days > 700.0);
    }

    #[test]
    fn c15_deaths_increase_once_critical_cases_appear() {
        let model = CompartmentModel::new(ModelId::C15);
        let mods = RateModifiers::none();
        let mut rk4 = Rk4::new();
        let mut s = initial(ModelId::C15);
        let mut seen_critical = false;
        let mut last_deaths = 0.0;
        let mut increasing_steps = 0;
        for _ in 0..7000 {
            let out = integrate_interval(&mut rk4, &s, &model, &mods, 0.001, 0.001).unwrap();
            let deaths = out.state.accumulators.deaths;
            if seen_critical {
                assert!(deaths > last_deaths, "deaths stalled at t = {}", out.state.time);
                increasing_steps += 1;
            }
            seen_critical |= out.state.compartments[c15::CRI] > 0.0;
            last_deaths = deaths;
            s = out.state;
        }
        assert!(increasing_steps > 6000);
        assert!((s.compartments[c15::D] - s.accumulators.deaths).abs() < 1e-9);

        let coarse = integrate_week(&initial(ModelId::C15), &model, &mods, 0.1).unwrap();
        let rel = (coarse.state.accumulators.deaths - s.accumulators.deaths).abs()
            / s.accumulators.deaths;
        assert!(rel < 1e-5, "{rel}");
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        let model = CompartmentModel::new(ModelId::Sirv);
        let err = integrate_week(&initial(ModelId::Sir), &model, &RateModifiers::none(), 0.1);
        assert!(err.is_err());
    }

    #[test]
    fn invalid_modifiers_rejected() {
        let model = CompartmentModel::new(ModelId::Sir);
        let mods = RateModifiers {
            transmission_scale: -0.5,
            ..RateModifiers::none()
        };
        assert!(integrate_week(&initial(ModelId::Sir), &model, &mods, 0.1).is_err());
    }
}
