use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Number of cost accumulators appended after the compartments in the ODE state vector.
pub const NUM_ACCUMULATORS: usize = 4;

/// Offsets of the accumulators relative to the end of the compartment block.
pub mod acc {
    pub const INFECTIOUS_PERSON_DAYS: usize = 0;
    pub const HOSPITAL_PERSON_DAYS: usize = 1;
    pub const DEATHS: usize = 2;
    pub const DOSES: usize = 3;
}

/// Running integrals carried alongside the compartments.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Accumulators<T> {
    pub infectious_person_days: T,
    pub hospital_person_days: T,
    pub deaths: T,
    /// Vaccine doses actually delivered.
    pub doses: T,
}

impl<T: Scalar> Accumulators<T> {
    fn to_array(self) -> [T; NUM_ACCUMULATORS] {
        [
            self.infectious_person_days,
            self.hospital_person_days,
            self.deaths,
            self.doses,
        ]
    }

    fn from_slice(s: &[T]) -> Self {
        Self {
            infectious_person_days: s[acc::INFECTIOUS_PERSON_DAYS],
            hospital_person_days: s[acc::HOSPITAL_PERSON_DAYS],
            deaths: s[acc::DEATHS],
            doses: s[acc::DOSES],
        }
    }
}

/// Population distribution plus cost accumulators at a point in simulated time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SimState<T> {
    /// Person counts; real valued.
    pub compartments: Vec<T>,
    pub accumulators: Accumulators<T>,
    /// Days since the start of the simulation.
    pub time: T,
}

impl<T: Scalar> SimState<T> {
    pub fn new(compartments: Vec<T>) -> Self {
        Self {
            compartments,
            accumulators: Accumulators::default(),
            time: T::zero(),
        }
    }

    /// Everyone susceptible except `infected` persons placed in `seed_compartment`.
    pub fn seeded(
        num_compartments: usize,
        population: T,
        seed_compartment: usize,
        infected: T,
    ) -> Self {
        let mut c = vec![T::zero(); num_compartments];
        c[0] = population - infected;
        c[seed_compartment] += infected;
        Self::new(c)
    }

    pub fn total(&self) -> T {
        self.compartments.iter().copied().sum()
    }

    /// Compartments followed by the accumulators, the layout the integrator works on.
    pub fn to_vector(&self) -> Vec<T> {
        let mut y = Vec::with_capacity(self.compartments.len() + NUM_ACCUMULATORS);
        y.extend_from_slice(&self.compartments);
        y.extend_from_slice(&self.accumulators.to_array());
        y
    }

    pub fn from_vector(y: &[T], time: T) -> Self {
        let n = y.len() - NUM_ACCUMULATORS;
        Self {
            compartments: y[..n].to_vec(),
            accumulators: Accumulators::from_slice(&y[n..]),
            time,
        }
    }

    /// Compartments with tiny negative round-off clamped to zero.
    pub fn observation(&self) -> Vec<T> {
        self.compartments.iter().map(|&x| x.max(T::zero())).collect()
    }
}

/// Intervention effects on the transition rates, held constant over one MDP step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RateModifiers<T> {
    /// Multiplier on beta from mask wearing, in [0, 1].
    pub transmission_scale: T,
    /// Combined multiplier on beta from school and workplace closures, in [0, 1].
    pub facility_scale: T,
    /// Requested vaccination flow before tapering, persons per day.
    pub doses_per_day: T,
}

impl<T: Scalar> Default for RateModifiers<T> {
    fn default() -> Self {
        Self::none()
    }
}

impl<T: Scalar> RateModifiers<T> {
    pub fn none() -> Self {
        Self {
            transmission_scale: T::one(),
            facility_scale: T::one(),
            doses_per_day: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name, v: T| {
            if v >= T::zero() && v <= T::one() {
                Ok(())
            } else {
                Err(Error::Domain {
                    name,
                    value: v.as_f64(),
                    domain: "[0, 1]",
                })
            }
        };
        unit("transmission_scale", self.transmission_scale)?;
        unit("facility_scale", self.facility_scale)?;
        if !(self.doses_per_day >= T::zero()) || !self.doses_per_day.is_finite() {
            return Err(Error::Domain {
                name: "doses_per_day",
                value: self.doses_per_day.as_f64(),
                domain: "[0, inf)",
            });
        }
        Ok(())
    }
}

/// Increase of each accumulator over one integration interval.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CostDeltas<T> {
    pub infectious_person_days: T,
    pub hospital_person_days: T,
    pub new_deaths: T,
    pub doses_given: T,
}

impl<T: Scalar> CostDeltas<T> {
    pub fn between(before: &Accumulators<T>, after: &Accumulators<T>) -> Self {
        Self {
            infectious_person_days: after.infectious_person_days - before.infectious_person_days,
            hospital_person_days: after.hospital_person_days - before.hospital_person_days,
            new_deaths: after.deaths - before.deaths,
            doses_given: after.doses - before.doses,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_layout_roundtrip() {
        let mut s = SimState::seeded(3, 2_000_000.0, 1, 100.0);
        s.accumulators.deaths = 3.0;
        s.accumulators.doses = 7.0;
        let y = s.to_vector();
        assert_eq!(y.len(), 3 + NUM_ACCUMULATORS);
        assert_eq!(&y[..3], &[1_999_900.0, 100.0, 0.0]);
        assert_eq!(SimState::from_vector(&y, 0.0), s);
    }

    #[test]
    fn modifier_domains() {
        assert!(RateModifiers::<f64>::none().validate().is_ok());
        let mut m = RateModifiers::<f64>::none();
        m.transmission_scale = 1.2;
        assert!(m.validate().is_err());
        let mut m = RateModifiers::<f64>::none();
        m.doses_per_day = -1.0;
        assert!(m.validate().is_err());
    }
}
