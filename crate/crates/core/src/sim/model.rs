//! Compartment model definitions and their epidemiological parameters.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The three benchmark disease structures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelId {
    #[serde(rename = "SIR")]
    Sir,
    #[serde(rename = "SIRV")]
    Sirv,
    #[serde(rename = "C15")]
    C15,
}

pub const SIR_COMPARTMENTS: [&str; 3] = ["S", "I", "R"];
pub const SIRV_COMPARTMENTS: [&str; 5] = ["S", "I", "R", "V1", "V2"];
pub const C15_COMPARTMENTS: [&str; 15] = [
    "S", "V", "E", "P", "A", "M", "Sev", "Cri", "QA", "QM", "QS", "H", "ICU", "R", "D",
];

/// Compartment indices shared by SIR and SIRV.
pub mod sirv {
    pub const S: usize = 0;
    pub const I: usize = 1;
    pub const R: usize = 2;
    pub const V1: usize = 3;
    pub const V2: usize = 4;
}

/// Compartment indices of the 15-compartment model.
pub mod c15 {
    pub const S: usize = 0;
    pub const V: usize = 1;
    pub const E: usize = 2;
    pub const P: usize = 3;
    pub const A: usize = 4;
    pub const M: usize = 5;
    pub const SEV: usize = 6;
    pub const CRI: usize = 7;
    pub const QA: usize = 8;
    pub const QM: usize = 9;
    pub const QS: usize = 10;
    pub const H: usize = 11;
    pub const ICU: usize = 12;
    pub const R: usize = 13;
    pub const D: usize = 14;
}

impl ModelId {
    pub const ALL: [ModelId; 3] = [ModelId::Sir, ModelId::Sirv, ModelId::C15];

    pub fn compartment_names(self) -> &'static [&'static str] {
        match self {
            ModelId::Sir => &SIR_COMPARTMENTS,
            ModelId::Sirv => &SIRV_COMPARTMENTS,
            ModelId::C15 => &C15_COMPARTMENTS,
        }
    }

    pub fn num_compartments(self) -> usize {
        self.compartment_names().len()
    }

    /// Compartment seeded with the initial cases on reset.
    pub fn seed_compartment(self) -> usize {
        match self {
            ModelId::Sir | ModelId::Sirv => sirv::I,
            ModelId::C15 => c15::E,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::Sir => "SIR",
            ModelId::Sirv => "SIRV",
            ModelId::C15 => "C15",
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "SIR" => Ok(ModelId::Sir),
            "SIRV" => Ok(ModelId::Sirv),
            "C15" => Ok(ModelId::C15),
            other => Err(Error::Config(format!(
                "unknown model `{other}` (expected SIR, SIRV or C15)"
            ))),
        }
    }
}

/// Progression rates (per day) and branching fractions of the 15-compartment model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "T: Scalar")]
pub struct C15Rates<T> {
    /// E -> P.
    pub incubation: T,
    /// P -> A | M.
    pub presymptomatic: T,
    /// Share of P that becomes asymptomatic.
    pub asymptomatic_fraction: T,
    /// A -> R.
    pub asymptomatic_recovery: T,
    /// M -> R | Sev.
    pub mild_progression: T,
    /// Share of M that becomes severe.
    pub mild_to_severe_fraction: T,
    /// Sev -> H | Cri.
    pub severe_progression: T,
    /// Share of Sev that becomes critical.
    pub severe_to_critical_fraction: T,
    /// Cri -> ICU.
    pub critical_admission: T,
    /// H -> R.
    pub hospital_recovery: T,
    /// ICU -> R | D.
    pub icu_exit: T,
    /// Share of ICU exits that are deaths.
    pub icu_fatality_fraction: T,
    /// A -> QA, M -> QM, Sev -> QS.
    pub quarantine_entry: T,
    /// QA -> R.
    pub quarantined_asymptomatic_recovery: T,
    /// QM -> R.
    pub quarantined_mild_recovery: T,
    /// QS -> H.
    pub quarantined_severe_admission: T,
    /// Relative infectiousness of M and Sev.
    pub symptomatic_infectiousness: T,
    /// Relative infectiousness of QA, QM and QS.
    pub quarantined_infectiousness: T,
}

impl<T: Scalar> Default for C15Rates<T> {
    fn default() -> Self {
        Self {
            incubation: T::lit(1.0 / 3.0),
            presymptomatic: T::lit(0.5),
            asymptomatic_fraction: T::lit(0.4),
            asymptomatic_recovery: T::lit(1.0 / 7.0),
            mild_progression: T::lit(1.0 / 7.0),
            mild_to_severe_fraction: T::lit(0.1),
            severe_progression: T::lit(0.5),
            severe_to_critical_fraction: T::lit(0.2),
            critical_admission: T::one(),
            hospital_recovery: T::lit(0.1),
            icu_exit: T::lit(1.0 / 14.0),
            icu_fatality_fraction: T::lit(0.3),
            quarantine_entry: T::lit(0.05),
            quarantined_asymptomatic_recovery: T::lit(1.0 / 7.0),
            quarantined_mild_recovery: T::lit(1.0 / 7.0),
            quarantined_severe_admission: T::lit(0.5),
            symptomatic_infectiousness: T::lit(0.5),
            quarantined_infectiousness: T::lit(0.1),
        }
    }
}

impl<T: Scalar> C15Rates<T> {
    fn validate(&self) -> Result<()> {
        let rates = [
            ("c15.incubation", self.incubation),
            ("c15.presymptomatic", self.presymptomatic),
            ("c15.asymptomatic_recovery", self.asymptomatic_recovery),
            ("c15.mild_progression", self.mild_progression),
            ("c15.severe_progression", self.severe_progression),
            ("c15.critical_admission", self.critical_admission),
            ("c15.hospital_recovery", self.hospital_recovery),
            ("c15.icu_exit", self.icu_exit),
            ("c15.quarantine_entry", self.quarantine_entry),
            (
                "c15.quarantined_asymptomatic_recovery",
                self.quarantined_asymptomatic_recovery,
            ),
            ("c15.quarantined_mild_recovery", self.quarantined_mild_recovery),
            (
                "c15.quarantined_severe_admission",
                self.quarantined_severe_admission,
            ),
            ("c15.symptomatic_infectiousness", self.symptomatic_infectiousness),
            ("c15.quarantined_infectiousness", self.quarantined_infectiousness),
        ];
        for (name, value) in rates {
            check_rate(name, value)?;
        }
        let fractions = [
            ("c15.asymptomatic_fraction", self.asymptomatic_fraction),
            ("c15.mild_to_severe_fraction", self.mild_to_severe_fraction),
            (
                "c15.severe_to_critical_fraction",
                self.severe_to_critical_fraction,
            ),
            ("c15.icu_fatality_fraction", self.icu_fatality_fraction),
        ];
        for (name, value) in fractions {
            check_fraction(name, value)?;
        }
        Ok(())
    }
}

/// Transition rates in persons per person per day.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "T: Scalar")]
pub struct ModelParams<T> {
    /// Transmission rate.
    pub beta: T,
    /// Recovery rate (SIR, SIRV).
    pub gamma: T,
    /// Immunity loss rate R -> S (SIRV, C15).
    pub nu: T,
    /// First to second dose progression V1 -> V2 (SIRV).
    pub omega: T,
    /// Susceptible count below which the vaccination flow tapers linearly to zero.
    pub soft_susceptible: T,
    pub c15: C15Rates<T>,
}

impl<T: Scalar> Default for ModelParams<T> {
    fn default() -> Self {
        Self {
            beta: T::lit(0.3),
            gamma: T::lit(0.1),
            nu: T::lit(1.0 / 180.0),
            omega: T::lit(1.0 / 28.0),
            soft_susceptible: T::lit(1000.0),
            c15: C15Rates::default(),
        }
    }
}

impl<T: Scalar> ModelParams<T> {
    pub fn validate(&self) -> Result<()> {
        check_rate("beta", self.beta)?;
        check_rate("gamma", self.gamma)?;
        check_rate("nu", self.nu)?;
        check_rate("omega", self.omega)?;
        if !(self.soft_susceptible > T::zero()) || !self.soft_susceptible.is_finite() {
            return Err(Error::Domain {
                name: "soft_susceptible",
                value: self.soft_susceptible.as_f64(),
                domain: "(0, inf)",
            });
        }
        self.c15.validate()
    }
}

fn default_population<T: Scalar>() -> T {
    T::lit(2_000_000.0)
}

/// A disease model: structure, rates and the closed population size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CompartmentModel<T> {
    #[serde(rename = "model")]
    pub id: ModelId,
    #[serde(flatten)]
    pub params: ModelParams<T>,
    #[serde(default = "default_population")]
    pub population: T,
}

impl<T: Scalar> CompartmentModel<T> {
    /// Model with default rates and a population of two million.
    pub fn new(id: ModelId) -> Self {
        Self {
            id,
            params: ModelParams::default(),
            population: default_population(),
        }
    }

    pub fn with_params(id: ModelId, params: ModelParams<T>, population: T) -> Result<Self> {
        let model = Self {
            id,
            params,
            population,
        };
        model.validate()?;
        Ok(model)
    }

    /// Parses a document such as `{"model": "SIRV", "beta": 0.3, "nu": 0.0055}`.
    /// Missing rates keep their defaults.
    pub fn from_json(json: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(json)?;
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.population > T::zero()) || !self.population.is_finite() {
            return Err(Error::Domain {
                name: "population",
                value: self.population.as_f64(),
                domain: "(0, inf)",
            });
        }
        Ok(())
    }

    pub fn num_compartments(&self) -> usize {
        self.id.num_compartments()
    }

    pub fn compartment_names(&self) -> &'static [&'static str] {
        self.id.compartment_names()
    }
}

fn check_rate<T: Scalar>(name: &'static str, value: T) -> Result<()> {
    if value >= T::zero() && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value: value.as_f64(),
            domain: "[0, inf)",
        })
    }
}

fn check_fraction<T: Scalar>(name: &'static str, value: T) -> Result<()> {
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
