//! CSV export of episode trajectories.

use std::io::Write;

use super::epidemic::StepInfo;
use super::evaluate::Episode;
use crate::error::Result;
use crate::interventions::ActionSpace;

pub fn trajectory_header(compartments: &[&str], space: ActionSpace) -> Vec<String> {
    let mut h = vec!["day".to_string()];
    h.extend(compartments.iter().map(|c| c.to_string()));
    h.extend(space.labels().iter().map(|c| c.to_string()));
    h.extend(
        [
            "reward",
            "cost_mask",
            "cost_vaccine",
            "cost_school",
            "cost_workplace",
            "cost_infections",
            "cost_hospitalizations",
            "cost_deaths",
        ]
        .iter()
        .map(|c| c.to_string()),
    );
    h
}

fn row(step: &StepInfo) -> Vec<String> {
    let l = &step.ledger;
    let mut r = vec![step.day.to_string()];
    r.extend(step.raw_observation.iter().map(|x| x.to_string()));
    r.extend(step.action.to_vec().iter().map(|x| x.to_string()));
    r.extend(
        [
            step.raw_reward,
            l.interventions.mask,
            l.interventions.vaccine,
            l.interventions.school,
            l.interventions.workplace,
            l.disease.infections,
            l.disease.hospitalizations,
            l.disease.deaths,
        ]
        .iter()
        .map(|x| x.to_string()),
    );
    r
}

/// One row per step: start day, end-of-step compartments, applied action, reward and
/// cost breakdown.
pub fn write_trajectory_csv<W: Write>(
    writer: W,
    episode: &Episode,
    compartments: &[&str],
    space: ActionSpace,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(trajectory_header(compartments, space))?;
    for step in &episode.steps {
        w.write_record(row(step))?;
    }
    w.flush()?;
    Ok(())
}
