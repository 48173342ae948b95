//! Mapping from intervention control parameters to rate modifiers, and the
//! dollar cost of interventions and disease burden.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sim::{CostDeltas, RateModifiers};

/// Interventions available to the agent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActionSpace {
    /// Mask wearing and vaccination.
    A,
    /// Adds school and workplace closures.
    B,
}

impl ActionSpace {
    pub fn dim(self) -> usize {
        match self {
            ActionSpace::A => 2,
            ActionSpace::B => 4,
        }
    }

    pub fn labels(self) -> &'static [&'static str] {
        &["m", "v", "s", "w"][..self.dim()]
    }
}

impl fmt::Display for ActionSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ActionSpace::A => "A",
            ActionSpace::B => "B",
        })
    }
}

impl FromStr for ActionSpace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" => Ok(ActionSpace::A),
            "B" => Ok(ActionSpace::B),
            other => Err(Error::Config(format!("unknown action space `{other}`"))),
        }
    }
}

/// Control parameters of the four interventions, each in [0, 1].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Action<T> {
    /// Mask compliance degree.
    pub m: T,
    /// Vaccination administration rate, as a fraction of the daily dose supply.
    pub v: T,
    /// Remote learning proportion.
    pub s: T,
    /// Remote working proportion.
    pub w: T,
    pub space: ActionSpace,
}

fn check_unit<T: Scalar>(name: &'static str, value: T) -> Result<()> {
    if value >= T::zero() && value <= T::one() {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value: value.as_f64(),
            domain: "[0, 1]",
        })
    }
}

impl<T: Scalar> Action<T> {
    pub fn none(space: ActionSpace) -> Self {
        Self {
            m: T::zero(),
            v: T::zero(),
            s: T::zero(),
            w: T::zero(),
            space,
        }
    }

    /// Builds a validated action from its components: `[m, v]` or `[m, v, s, w]`.
    pub fn from_slice(space: ActionSpace, values: &[T]) -> Result<Self> {
        if values.len() != space.dim() {
            return Err(Error::shape(
                format!("{} action components for space {space}", space.dim()),
                values.len(),
            ));
        }
        let get = |i: usize| values.get(i).copied().unwrap_or_else(T::zero);
        let action = Self {
            m: get(0),
            v: get(1),
            s: get(2),
            w: get(3),
            space,
        };
        action.validate()?;
        Ok(action)
    }

    /// Like [`Action::from_slice`] but clamps every component into [0, 1].
    /// Non-finite components become 0.
    pub fn clamped(space: ActionSpace, values: &[T]) -> Result<Self> {
        let clamped: Vec<T> = values
            .iter()
            .map(|&x| {
                if x.is_nan() {
                    T::zero()
                } else {
                    x.max(T::zero()).min(T::one())
                }
            })
            .collect();
        Self::from_slice(space, &clamped)
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("m", self.m)?;
        check_unit("v", self.v)?;
        check_unit("s", self.s)?;
        check_unit("w", self.w)?;
        if self.space == ActionSpace::A && (self.s != T::zero() || self.w != T::zero()) {
            return Err(Error::Usage(
                "school and workplace closures are not available in action space A".into(),
            ));
        }
        Ok(())
    }

    pub fn to_vec(&self) -> Vec<T> {
        [self.m, self.v, self.s, self.w][..self.space.dim()].to_vec()
    }
}

/// Effect sizes of masks and the vaccine supply.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "T: Scalar")]
pub struct InterventionParams<T> {
    /// Reduction of transmission at full mask compliance.
    pub mask_effectiveness: T,
    /// Maximum number of doses available per day.
    pub max_daily_doses: T,
}

impl<T: Scalar> Default for InterventionParams<T> {
    fn default() -> Self {
        Self {
            mask_effectiveness: T::lit(0.8),
            max_daily_doses: T::lit(10_000.0),
        }
    }
}

/// Share of transmission happening in schools and workplaces, how much of it a
/// closure removes, and who is affected by a closure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "T: Scalar")]
pub struct FacilityParams<T> {
    pub school_transmission_share: T,
    pub workplace_transmission_share: T,
    pub closure_effectiveness: T,
    /// Students, as a fraction of the population.
    pub school_population_fraction: T,
    /// Workers, as a fraction of the population.
    pub workplace_population_fraction: T,
}

impl<T: Scalar> Default for FacilityParams<T> {
    fn default() -> Self {
        Self {
            school_transmission_share: T::lit(0.2),
            workplace_transmission_share: T::lit(0.35),
            closure_effectiveness: T::lit(0.9),
            school_population_fraction: T::lit(0.25),
            workplace_population_fraction: T::lit(0.5),
        }
    }
}

/// Dollar rates for interventions and disease states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "T: Scalar")]
pub struct CostRates<T> {
    pub mask_per_person_day: T,
    pub vaccine_per_dose: T,
    pub school_closure_per_person_day: T,
    pub workplace_closure_per_person_day: T,
    pub infectious_per_person_day: T,
    pub hospitalized_per_person_day: T,
    pub per_death: T,
}

impl<T: Scalar> Default for CostRates<T> {
    fn default() -> Self {
        Self {
            mask_per_person_day: T::lit(0.05),
            vaccine_per_dose: T::lit(40.0),
            school_closure_per_person_day: T::lit(1.8),
            workplace_closure_per_person_day: T::lit(1.8),
            infectious_per_person_day: T::lit(173.0),
            hospitalized_per_person_day: T::lit(250.0),
            per_death: T::lit(100_000.0),
        }
    }
}

/// Transmission multiplier of mask wearing: `1 - R m`.
pub fn mask_factor<T: Scalar>(m: T, params: &InterventionParams<T>) -> Result<T> {
    check_unit("m", m)?;
    Ok(T::one() - params.mask_effectiveness * m)
}

/// Requested vaccination flow in persons per day: `v C`.
pub fn dose_flow<T: Scalar>(v: T, params: &InterventionParams<T>) -> Result<T> {
    check_unit("v", v)?;
    Ok(v * params.max_daily_doses)
}

/// Transmission multiplier of school and workplace closures.
pub fn facility_factor<T: Scalar>(s: T, w: T, params: &FacilityParams<T>) -> Result<T> {
    check_unit("s", s)?;
    check_unit("w", w)?;
    let e = params.closure_effectiveness;
    Ok(T::one()
        - params.school_transmission_share * e * s
        - params.workplace_transmission_share * e * w)
}

/// Intervention spending, by intervention.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct InterventionCosts<T> {
    pub mask: T,
    pub vaccine: T,
    pub school: T,
    pub workplace: T,
}

impl<T: Scalar> InterventionCosts<T> {
    pub fn total(&self) -> T {
        self.mask + self.vaccine + self.school + self.workplace
    }
}

/// Disease burden, by disease state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DiseaseCosts<T> {
    pub infections: T,
    pub hospitalizations: T,
    pub deaths: T,
}

impl<T: Scalar> DiseaseCosts<T> {
    pub fn total(&self) -> T {
        self.infections + self.hospitalizations + self.deaths
    }
}

/// All costs incurred during one MDP step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CostLedger<T> {
    pub interventions: InterventionCosts<T>,
    pub disease: DiseaseCosts<T>,
}

impl<T: Scalar> CostLedger<T> {
    pub fn intervention_total(&self) -> T {
        self.interventions.total()
    }

    pub fn disease_total(&self) -> T {
        self.disease.total()
    }

    pub fn total(&self) -> T {
        self.intervention_total() + self.disease_total()
    }

    /// Component-wise sum, for episode totals.
    pub fn accumulate(&mut self, other: &Self) {
        let (a, b) = (&mut self.interventions, &other.interventions);
        a.mask += b.mask;
        a.vaccine += b.vaccine;
        a.school += b.school;
        a.workplace += b.workplace;
        let (a, b) = (&mut self.disease, &other.disease);
        a.infections += b.infections;
        a.hospitalizations += b.hospitalizations;
        a.deaths += b.deaths;
    }
}

/// Cost of applying `action` to a population of `population` for `days`, billing
/// `doses_given` vaccine doses actually delivered.
pub fn intervention_cost<T: Scalar>(
    action: &Action<T>,
    population: T,
    doses_given: T,
    days: T,
    rates: &CostRates<T>,
    facilities: &FacilityParams<T>,
) -> InterventionCosts<T> {
    let students = facilities.school_population_fraction * population;
    let workers = facilities.workplace_population_fraction * population;
    InterventionCosts {
        mask: rates.mask_per_person_day * action.m * population * days,
        vaccine: rates.vaccine_per_dose * doses_given.max(T::zero()),
        school: rates.school_closure_per_person_day * action.s * students * days,
        workplace: rates.workplace_closure_per_person_day * action.w * workers * days,
    }
}

/// Disease burden of one interval's accumulator deltas.
pub fn disease_cost<T: Scalar>(deltas: &CostDeltas<T>, rates: &CostRates<T>) -> Result<DiseaseCosts<T>> {
    // integration round-off can leave deltas a hair below zero
    let slack = T::lit(-1e-6);
    for (name, v) in [
        ("infectious person-days", deltas.infectious_person_days),
        ("hospitalized person-days", deltas.hospital_person_days),
        ("new deaths", deltas.new_deaths),
    ] {
        if !(v >= slack) {
            return Err(Error::Integration(format!("negative {name} delta: {v}")));
        }
    }
    Ok(DiseaseCosts {
        infections: rates.infectious_per_person_day * deltas.infectious_person_days.max(T::zero()),
        hospitalizations: rates.hospitalized_per_person_day
            * deltas.hospital_person_days.max(T::zero()),
        deaths: rates.per_death * deltas.new_deaths.max(T::zero()),
    })
}

/// Intervention parameters, facility structure and cost rates bundled together.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "T: Scalar")]
pub struct InterventionModel<T> {
    pub interventions: InterventionParams<T>,
    pub facilities: FacilityParams<T>,
    pub costs: CostRates<T>,
}

impl<T: Scalar> Default for InterventionModel<T> {
    fn default() -> Self {
        Self {
            interventions: InterventionParams::default(),
            facilities: FacilityParams::default(),
            costs: CostRates::default(),
        }
    }
}

impl<T: Scalar> InterventionModel<T> {
    pub fn modifiers(&self, action: &Action<T>) -> Result<RateModifiers<T>> {
        action.validate()?;
        Ok(RateModifiers {
            transmission_scale: mask_factor(action.m, &self.interventions)?,
            facility_scale: facility_factor(action.s, action.w, &self.facilities)?,
            doses_per_day: dose_flow(action.v, &self.interventions)?,
        })
    }

    pub fn ledger(
        &self,
        action: &Action<T>,
        population: T,
        days: T,
        deltas: &CostDeltas<T>,
    ) -> Result<CostLedger<T>> {
        Ok(CostLedger {
            interventions: intervention_cost(
                action,
                population,
                deltas.doses_given,
                days,
                &self.costs,
                &self.facilities,
            ),
            disease: disease_cost(deltas, &self.costs)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const N: f64 = 2_000_000.0;

    #[test]
    fn mask_factor_values() {
        let p = InterventionParams::<f64>::default();
        assert_eq!(mask_factor(0.0, &p).unwrap(), 1.0);
        assert!((mask_factor(1.0, &p).unwrap() - 0.2).abs() < 1e-15);
        assert!((mask_factor(0.5, &p).unwrap() - 0.6).abs() < 1e-15);
        assert!(mask_factor(1.01, &p).is_err());
        assert!(mask_factor(-0.01, &p).is_err());
    }

    #[test]
    fn dose_flow_values() {
        let p = InterventionParams::<f64>::default();
        assert_eq!(dose_flow(0.0, &p).unwrap(), 0.0);
        assert_eq!(dose_flow(1.0, &p).unwrap(), 10_000.0);
        assert!((dose_flow(0.62963, &p).unwrap() - 6_296.3).abs() < 1e-9);
        assert!(dose_flow(2.0, &p).is_err());
    }

    #[test]
    fn facility_factor_values() {
        let p = FacilityParams::<f64>::default();
        assert_eq!(facility_factor(0.0, 0.0, &p).unwrap(), 1.0);
        assert!((facility_factor(1.0, 1.0, &p).unwrap() - 0.505).abs() < 1e-15);
        assert!((facility_factor(1.0, 0.0, &p).unwrap() - 0.82).abs() < 1e-15);
        assert!(facility_factor(0.0, 1.5, &p).is_err());
    }

    #[test]
    fn factors_are_monotone() {
        let ip = InterventionParams::<f64>::default();
        let fp = FacilityParams::<f64>::default();
        let grid: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
        for pair in grid.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            assert!(mask_factor(hi, &ip).unwrap() < mask_factor(lo, &ip).unwrap());
            assert!(dose_flow(hi, &ip).unwrap() > dose_flow(lo, &ip).unwrap());
            for &other in &grid {
                assert!(
                    facility_factor(hi, other, &fp).unwrap() < facility_factor(lo, other, &fp).unwrap()
                );
                assert!(
                    facility_factor(other, hi, &fp).unwrap() < facility_factor(other, lo, &fp).unwrap()
                );
            }
        }
    }

    #[test]
    fn intervention_cost_examples() {
        let rates = CostRates::default();
        let fac = FacilityParams::default();
        let none = Action::none(ActionSpace::B);
        assert_eq!(intervention_cost(&none, N, 0.0, 7.0, &rates, &fac).total(), 0.0);

        let masks = Action { m: 1.0, ..none };
        let c = intervention_cost(&masks, N, 0.0, 7.0, &rates, &fac);
        assert_eq!(c.mask, 700_000.0);
        assert_eq!(c.total(), 700_000.0);

        let c = intervention_cost(&none, N, 44_074.0, 7.0, &rates, &fac);
        assert_eq!(c.vaccine, 1_762_960.0);

        let closures = Action { s: 1.0, w: 1.0, ..none };
        let c = intervention_cost(&closures, N, 0.0, 7.0, &rates, &fac);
        assert!((c.school - 1.8 * 500_000.0 * 7.0).abs() < 1e-6);
        assert!((c.workplace - 1.8 * 1_000_000.0 * 7.0).abs() < 1e-6);
    }

    #[test]
    fn disease_cost_examples() {
        let rates = CostRates::default();
        assert_eq!(disease_cost(&CostDeltas::default(), &rates).unwrap().total(), 0.0);
        let d = CostDeltas {
            infectious_person_days: 1_000.0,
            ..CostDeltas::default()
        };
        assert_eq!(disease_cost(&d, &rates).unwrap().total(), 173_000.0);
        let d = CostDeltas {
            new_deaths: 2.0,
            ..CostDeltas::default()
        };
        assert_eq!(disease_cost(&d, &rates).unwrap().deaths, 200_000.0);
        let d = CostDeltas {
            hospital_person_days: -1.0,
            ..CostDeltas::default()
        };
        assert!(disease_cost(&d, &rates).is_err());
    }

    #[test]
    fn space_a_matches_space_b_without_closures() {
        let model = InterventionModel::<f64>::default();
        let a = Action::from_slice(ActionSpace::A, &[0.3, 0.7]).unwrap();
        let b = Action::from_slice(ActionSpace::B, &[0.3, 0.7, 0.0, 0.0]).unwrap();
        assert_eq!(model.modifiers(&a).unwrap(), model.modifiers(&b).unwrap());
        let deltas = CostDeltas {
            infectious_person_days: 10.0,
            hospital_person_days: 0.0,
            new_deaths: 0.0,
            doses_given: 49_000.0,
        };
        assert_eq!(
            model.ledger(&a, N, 7.0, &deltas).unwrap(),
            model.ledger(&b, N, 7.0, &deltas).unwrap()
        );
    }

    #[test]
    fn action_construction() {
        assert!(Action::from_slice(ActionSpace::A, &[0.5]).is_err());
        assert!(Action::from_slice(ActionSpace::B, &[0.5, 0.5, 1.2, 0.0]).is_err());
        let a = Action::clamped(ActionSpace::B, &[-3.0, 0.4, 7.0, f64::NAN]).unwrap();
        assert_eq!(a.to_vec(), vec![0.0, 0.4, 1.0, 0.0]);
        assert_eq!(ActionSpace::A.labels(), &["m", "v"]);
    }

    #[test]
    fn ledger_totals_are_sums_of_breakdowns() {
        let model = InterventionModel::<f64>::default();
        let a = Action::from_slice(ActionSpace::B, &[0.8, 0.63, 1.0, 0.5]).unwrap();
        let deltas = CostDeltas {
            infectious_person_days: 12_345.6,
            hospital_person_days: 789.0,
            new_deaths: 3.5,
            doses_given: 44_074.0,
        };
        let l = model.ledger(&a, N, 7.0, &deltas).unwrap();
        let i = l.interventions;
        let d = l.disease;
        let sum = i.mask + i.vaccine + i.school + i.workplace + d.infections + d.hospitalizations + d.deaths;
        assert!((l.total() - sum).abs() <= 1e-9 * sum);
        assert_eq!(l.total(), l.intervention_total() + l.disease_total());
    }
}
