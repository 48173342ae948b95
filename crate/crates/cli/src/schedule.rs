//! Intervention schedules as JSON documents and plot-ready CSV.

use std::path::Path;

use anyhow::Result;
use epiplan::env::{EnvConfig, Episode};
use serde::{Deserialize, Serialize};

use crate::artifacts::{write_csv, write_json};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleWeek {
    pub week: usize,
    /// Day the action takes effect.
    pub day: f64,
    pub action: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleDoc {
    pub env: String,
    pub algorithm: String,
    /// How the schedule was produced, e.g. `best-sampled` or `greedy`.
    pub source: String,
    pub seed: u64,
    pub cumulative_reward: f64,
    /// Action labels, in the order of each week's `action`.
    pub columns: Vec<String>,
    pub weeks: Vec<ScheduleWeek>,
}

impl ScheduleDoc {
    pub fn from_actions(
        env: &EnvConfig,
        algorithm: &str,
        source: &str,
        seed: u64,
        cumulative_reward: f64,
        actions: &[Vec<f64>],
    ) -> Self {
        Self {
            env: env.name.to_string(),
            algorithm: algorithm.to_string(),
            source: source.to_string(),
            seed,
            cumulative_reward,
            columns: env.name.space.labels().iter().map(|s| s.to_string()).collect(),
            weeks: actions
                .iter()
                .enumerate()
                .map(|(week, a)| ScheduleWeek {
                    week,
                    day: week as f64 * env.episode.step_days,
                    action: a.clone(),
                })
                .collect(),
        }
    }

    pub fn from_episode(env: &EnvConfig, algorithm: &str, source: &str, episode: &Episode) -> Self {
        let mut doc = Self::from_actions(
            env,
            algorithm,
            source,
            episode.seed,
            episode.cumulative_reward(),
            &episode.schedule(),
        );
        for (w, step) in doc.weeks.iter_mut().zip(&episode.steps) {
            w.day = step.day;
        }
        doc
    }

    pub fn csv_header(&self) -> Vec<String> {
        let mut h = vec!["day".to_string()];
        h.extend(self.columns.iter().cloned());
        h
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.weeks
            .iter()
            .map(|w| {
                let mut r = vec![w.day.to_string()];
                r.extend(w.action.iter().map(|v| v.to_string()));
                r
            })
            .collect()
    }

    /// Writes `<stem>.json` and `<stem>.csv` into `dir`, returning both file names.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<[String; 2]> {
        let json = format!("{stem}.json");
        let csv = format!("{stem}.csv");
        write_json(&dir.join(&json), self)?;
        write_csv(&dir.join(&csv), &self.csv_header(), &self.csv_rows())?;
        Ok([json, csv])
    }
}
