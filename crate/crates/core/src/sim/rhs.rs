//! Right-hand sides of the compartment ODEs.
//!
//! Every function reads the augmented state `y` (compartments followed by the
//! [`NUM_ACCUMULATORS`] cost accumulators) and writes the time derivative of the
//! same layout into `dy`. Each flow is computed once and moved between exactly two
//! compartments, so the compartment derivatives always sum to zero.

use super::model::{c15, sirv, CompartmentModel, ModelId};
use super::state::{acc, RateModifiers, NUM_ACCUMULATORS};
use crate::scalar::Scalar;

/// Vaccination flow actually achieved: the requested doses, tapered linearly to
/// zero once fewer than `soft_susceptible` persons remain susceptible.
#[inline]
pub fn vaccination_flow<T: Scalar>(doses_per_day: T, susceptible: T, soft_susceptible: T) -> T {
    let availability = (susceptible / soft_susceptible).max(T::zero()).min(T::one());
    doses_per_day * availability
}

#[inline]
fn effective_beta<T: Scalar>(model: &CompartmentModel<T>, mods: &RateModifiers<T>) -> T {
    model.params.beta * mods.transmission_scale * mods.facility_scale
}

/// Dispatches on the model structure.
pub fn rhs<T: Scalar>(model: &CompartmentModel<T>, mods: &RateModifiers<T>, y: &[T], dy: &mut [T]) {
    match model.id {
        ModelId::Sir => rhs_sir(model, mods, y, dy),
        ModelId::Sirv => rhs_sirv(model, mods, y, dy),
        ModelId::C15 => rhs_c15(model, mods, y, dy),
    }
}

/// S -> I -> R with vaccination moving susceptibles straight to R. No reinfection.
pub fn rhs_sir<T: Scalar>(
    model: &CompartmentModel<T>,
    mods: &RateModifiers<T>,
    y: &[T],
    dy: &mut [T],
) {
    debug_assert_eq!(y.len(), 3 + NUM_ACCUMULATORS);
    debug_assert_eq!(dy.len(), y.len());
    let p = &model.params;
    let (s, i) = (y[sirv::S], y[sirv::I]);

    let infection = effective_beta(model, mods) * s * i / model.population;
    let recovery = p.gamma * i;
    let vaccination = vaccination_flow(mods.doses_per_day, s, p.soft_susceptible);

    dy[sirv::S] = -infection - vaccination;
    dy[sirv::I] = infection - recovery;
    dy[sirv::R] = recovery + vaccination;

    let a = &mut dy[3..];
    a[acc::INFECTIOUS_PERSON_DAYS] = i;
    a[acc::HOSPITAL_PERSON_DAYS] = T::zero();
    a[acc::DEATHS] = T::zero();
    a[acc::DOSES] = vaccination;
}

/// SIR with waning immunity (R -> S) and a two-dose regimen S -> V1 -> V2.
pub fn rhs_sirv<T: Scalar>(
    model: &CompartmentModel<T>,
    mods: &RateModifiers<T>,
    y: &[T],
    dy: &mut [T],
) {
    debug_assert_eq!(y.len(), 5 + NUM_ACCUMULATORS);
    debug_assert_eq!(dy.len(), y.len());
    let p = &model.params;
    let (s, i, r, v1) = (y[sirv::S], y[sirv::I], y[sirv::R], y[sirv::V1]);

    let infection = effective_beta(model, mods) * s * i / model.population;
    let recovery = p.gamma * i;
    let waning = p.nu * r;
    let first_dose = vaccination_flow(mods.doses_per_day, s, p.soft_susceptible);
    let second_dose = p.omega * v1;

    dy[sirv::S] = -infection - first_dose + waning;
    dy[sirv::I] = infection - recovery;
    dy[sirv::R] = recovery - waning;
    dy[sirv::V1] = first_dose - second_dose;
    dy[sirv::V2] = second_dose;

    let a = &mut dy[5..];
    a[acc::INFECTIOUS_PERSON_DAYS] = i;
    a[acc::HOSPITAL_PERSON_DAYS] = T::zero();
    a[acc::DEATHS] = T::zero();
    a[acc::DOSES] = first_dose;
}

/// Persons billed at the infectious rate in the 15-compartment model: everyone
/// infected and outside hospital.
#[inline]
pub fn c15_infectious<T: Scalar>(y: &[T]) -> T {
    y[c15::P]
        + y[c15::A]
        + y[c15::M]
        + y[c15::SEV]
        + y[c15::CRI]
        + y[c15::QA]
        + y[c15::QM]
        + y[c15::QS]
}

#[inline]
pub fn c15_hospitalized<T: Scalar>(y: &[T]) -> T {
    y[c15::H] + y[c15::ICU]
}

/// Fifteen compartments with severity levels, quarantine, hospital and ICU care,
/// deaths and waning immunity.
pub fn rhs_c15<T: Scalar>(
    model: &CompartmentModel<T>,
    mods: &RateModifiers<T>,
    y: &[T],
    dy: &mut [T],
) {
    use c15::*;
    debug_assert_eq!(y.len(), 15 + NUM_ACCUMULATORS);
    debug_assert_eq!(dy.len(), y.len());
    let r = &model.params.c15;
    let one = T::one();

    let weighted_infectious = y[P]
        + y[A]
        + r.symptomatic_infectiousness * (y[M] + y[SEV])
        + r.quarantined_infectiousness * (y[QA] + y[QM] + y[QS]);
    let force = effective_beta(model, mods) * weighted_infectious / model.population;

    let infection = force * y[S];
    let vaccination = vaccination_flow(mods.doses_per_day, y[S], model.params.soft_susceptible);
    let waning = model.params.nu * y[R];

    let e_p = r.incubation * y[E];
    let p_a = r.presymptomatic * r.asymptomatic_fraction * y[P];
    let p_m = r.presymptomatic * (one - r.asymptomatic_fraction) * y[P];
    let a_r = r.asymptomatic_recovery * y[A];
    let a_qa = r.quarantine_entry * y[A];
    let m_r = r.mild_progression * (one - r.mild_to_severe_fraction) * y[M];
    let m_sev = r.mild_progression * r.mild_to_severe_fraction * y[M];
    let m_qm = r.quarantine_entry * y[M];
    let sev_h = r.severe_progression * (one - r.severe_to_critical_fraction) * y[SEV];
    let sev_cri = r.severe_progression * r.severe_to_critical_fraction * y[SEV];
    let sev_qs = r.quarantine_entry * y[SEV];
    let cri_icu = r.critical_admission * y[CRI];
    let h_r = r.hospital_recovery * y[H];
    let icu_r = r.icu_exit * (one - r.icu_fatality_fraction) * y[ICU];
    let icu_d = r.icu_exit * r.icu_fatality_fraction * y[ICU];
    let qa_r = r.quarantined_asymptomatic_recovery * y[QA];
    let qm_r = r.quarantined_mild_recovery * y[QM];
    let qs_h = r.quarantined_severe_admission * y[QS];

    dy[S] = waning - infection - vaccination;
    dy[V] = vaccination;
    dy[E] = infection - e_p;
    dy[P] = e_p - p_a - p_m;
    dy[A] = p_a - a_r - a_qa;
    dy[M] = p_m - m_r - m_sev - m_qm;
    dy[SEV] = m_sev - sev_h - sev_cri - sev_qs;
    dy[CRI] = sev_cri - cri_icu;
    dy[QA] = a_qa - qa_r;
    dy[QM] = m_qm - qm_r;
    dy[QS] = sev_qs - qs_h;
    dy[H] = sev_h + qs_h - h_r;
    dy[ICU] = cri_icu - icu_r - icu_d;
    dy[R] = a_r + m_r + h_r + icu_r + qa_r + qm_r - waning;
    dy[D] = icu_d;

    let a = &mut dy[15..];
    a[acc::INFECTIOUS_PERSON_DAYS] = c15_infectious(y);
    a[acc::HOSPITAL_PERSON_DAYS] = c15_hospitalized(y);
    a[acc::DEATHS] = icu_d;
    a[acc::DOSES] = vaccination;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::state::SimState;
    use proptest::prelude::*;

    const N: f64 = 2_000_000.0;

    fn deriv(model: &CompartmentModel<f64>, mods: &RateModifiers<f64>, y: &[f64]) -> Vec<f64> {
        let mut dy = vec![0.0; y.len()];
        rhs(model, mods, y, &mut dy);
        dy
    }

    fn compartment_sum(model: &CompartmentModel<f64>, dy: &[f64]) -> f64 {
        dy[..model.num_compartments()].iter().sum()
    }

    #[test]
    fn sir_worked_example() {
        let model = CompartmentModel::new(ModelId::Sir);
        let y = SimState::new(vec![1_999_900.0, 100.0, 0.0]).to_vector();
        let dy = deriv(&model, &RateModifiers::none(), &y);
        assert!((dy[sirv::I] - 19.9985).abs() < 1e-10, "{}", dy[sirv::I]);
        assert_eq!(dy[3 + acc::INFECTIOUS_PERSON_DAYS], 100.0);
    }

    #[test]
    fn disease_free_equilibrium_is_stationary() {
        for id in ModelId::ALL {
            let model = CompartmentModel::new(id);
            let y = SimState::seeded(id.num_compartments(), N, id.seed_compartment(), 0.0)
                .to_vector();
            let dy = deriv(&model, &RateModifiers::none(), &y);
            assert!(dy.iter().all(|&d| d == 0.0), "{id}: {dy:?}");
        }
    }

    #[test]
    fn sirv_immunity_loss_flow() {
        let model = CompartmentModel::new(ModelId::Sirv);
        let y = SimState::new(vec![N - 1000.0, 0.0, 1000.0, 0.0, 0.0]).to_vector();
        let dy = deriv(&model, &RateModifiers::none(), &y);
        assert!((dy[sirv::S] - 5.5556).abs() < 1e-4);
        assert!((dy[sirv::R] + 1000.0 / 180.0).abs() < 1e-12);
    }

    #[test]
    fn sirv_without_waning_or_doses_reduces_to_sir() {
        let mut sirv_model = CompartmentModel::new(ModelId::Sirv);
        sirv_model.params.nu = 0.0;
        let sir_model = CompartmentModel::new(ModelId::Sir);
        let mods = RateModifiers::none();
        let y5 = SimState::new(vec![1_500_000.0, 200_000.0, 250_000.0, 30_000.0, 20_000.0])
            .to_vector();
        let y3 = SimState::new(vec![1_500_000.0, 200_000.0, 250_000.0]).to_vector();
        let d5 = deriv(&sirv_model, &mods, &y5);
        let d3 = deriv(&sir_model, &mods, &y3);
        assert_eq!(&d5[..3], &d3[..3]);
        assert_eq!(d5[sirv::V1], -sirv_model.params.omega * 30_000.0);
    }

    #[test]
    fn vaccination_tapers_as_susceptibles_deplete() {
        assert_eq!(vaccination_flow(10_000.0, 5_000.0, 1_000.0), 10_000.0);
        assert_eq!(vaccination_flow(10_000.0, 500.0, 1_000.0), 5_000.0);
        assert_eq!(vaccination_flow(10_000.0, 0.0, 1_000.0), 0.0);
        assert_eq!(vaccination_flow(10_000.0, -1e-6, 1_000.0), 0.0);
    }

    fn arbitrary_state(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0..1.0f64, n).prop_map(|w| {
            let total: f64 = w.iter().sum::<f64>() + 1e-12;
            w.iter().map(|x| x / total * N).collect()
        })
    }

    fn arbitrary_mods() -> impl Strategy<Value = RateModifiers<f64>> {
        (0.0..=1.0f64, 0.0..=1.0f64, 0.0..=10_000.0f64).prop_map(|(t, f, d)| RateModifiers {
            transmission_scale: t,
            facility_scale: f,
            doses_per_day: d,
        })
    }

    proptest! {
        #[test]
        fn derivatives_conserve_persons(
            id in prop::sample::select(ModelId::ALL.to_vec()),
            w in arbitrary_state(15),
            mods in arbitrary_mods(),
        ) {
            let model = CompartmentModel::new(id);
            let n = id.num_compartments();
            let total: f64 = w[..n].iter().sum();
            let comps: Vec<f64> = w[..n].iter().map(|x| x / total * N).collect();
            let y = SimState::new(comps).to_vector();
            let dy = deriv(&model, &mods, &y);
            prop_assert!(compartment_sum(&model, &dy).abs() <= 1e-12 * N);
            prop_assert!(dy[n..].iter().all(|&a| a >= 0.0));
        }
    }
}
