use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Args;
use epiplan::env::{EnvName, SummaryStats};

use crate::artifacts::{write_new, RunManifest, SeedStatus, MANIFEST_FILE};

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Directory searched recursively for run manifests.
    #[arg(long)]
    pub dir: PathBuf,
    /// Also write the table as CSV to this new file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

const ROW_ORDER: [&str; 5] = ["Aggressive", "Lax", "Random", "PPO", "SAC"];

/// Highest cumulative rewards per (policy or algorithm, environment).
#[derive(Debug, Default)]
pub struct ResultsTable {
    cells: BTreeMap<(usize, String, usize), Vec<f64>>,
    pub warnings: Vec<String>,
}

fn row_rank(label: &str) -> usize {
    ROW_ORDER.iter().position(|l| *l == label).unwrap_or(ROW_ORDER.len())
}

fn env_index(env: EnvName) -> usize {
    EnvName::ALL.iter().position(|e| *e == env).expect("known environment")
}

impl ResultsTable {
    pub fn collect(dir: &Path) -> Result<Self> {
        let mut table = Self::default();
        let mut manifests = Vec::new();
        find_manifests(dir, &mut manifests)?;
        manifests.sort();
        for path in manifests {
            match RunManifest::load(&path) {
                Ok(m) => table.add(&m, &path),
                Err(e) => table.warnings.push(format!("skipping {}: {e:#}", path.display())),
            }
        }
        if table.cells.is_empty() {
            table.warnings.push(format!("no completed runs found under {}", dir.display()));
        } else {
            for label in table.labels() {
                for env in EnvName::ALL {
                    if table.values(&label, env).is_none() {
                        table.warnings.push(format!("no {label} results for {env}"));
                    }
                }
            }
        }
        Ok(table)
    }

    fn add(&mut self, m: &RunManifest, path: &Path) {
        for r in &m.results {
            if r.status != SeedStatus::Completed {
                self.warnings.push(format!(
                    "{}: seed {} is {:?} and is left out",
                    path.display(),
                    r.seed,
                    r.status
                ));
            }
        }
        let values: Vec<f64> = m
            .results
            .iter()
            .filter(|r| r.status == SeedStatus::Completed)
            .filter_map(|r| r.value)
            .collect();
        if values.is_empty() {
            return;
        }
        self.cells
            .entry((row_rank(&m.label), m.label.clone(), env_index(m.env)))
            .or_default()
            .extend(values);
    }

    pub fn labels(&self) -> Vec<String> {
        let mut labels: Vec<(usize, String)> = self.cells.keys().map(|(r, l, _)| (*r, l.clone())).collect();
        labels.dedup();
        labels.into_iter().map(|(_, l)| l).collect()
    }

    pub fn values(&self, label: &str, env: EnvName) -> Option<SummaryStats> {
        let v = self.cells.get(&(row_rank(label), label.to_string(), env_index(env)))?;
        SummaryStats::from_values(v.clone()).ok()
    }

    pub fn csv_header() -> Vec<String> {
        let mut h = vec!["policy".to_string(), "statistic".to_string()];
        h.extend(EnvName::ALL.iter().map(|e| format!("{e} (M$)")));
        h
    }

    /// Rows of max, mean, std and seed count per label, in millions of dollars.
    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        let mut rows = Vec::new();
        for label in self.labels() {
            let stats: Vec<Option<SummaryStats>> = EnvName::ALL.iter().map(|&e| self.values(&label, e)).collect();
            let stat_rows: [(&str, fn(&SummaryStats) -> String); 4] = [
                ("max", |s| (s.max / 1e6).to_string()),
                ("mean", |s| (s.mean / 1e6).to_string()),
                ("std", |s| (s.std / 1e6).to_string()),
                ("seeds", |s| s.values.len().to_string()),
            ];
            for (name, f) in stat_rows {
                let mut row = vec![label.clone(), name.to_string()];
                row.extend(stats.iter().map(|s| s.as_ref().map(f).unwrap_or_default()));
                rows.push(row);
            }
        }
        rows
    }

    pub fn pretty(&self) -> String {
        const W: usize = 22;
        let mut out = String::from("Highest cumulative reward in M$: max and mean ± std across seeds\n");
        let _ = write!(out, "{:<12}", "");
        for e in EnvName::ALL {
            let _ = write!(out, "{:>W$}", e.to_string());
        }
        out.push('\n');
        for label in self.labels() {
            let stats: Vec<_> = EnvName::ALL.iter().map(|&e| self.values(&label, e)).collect();
            let _ = write!(out, "{:<12}", label);
            for s in &stats {
                let cell = s.as_ref().map(|s| format!("{:.2}", s.max / 1e6)).unwrap_or("-".into());
                let _ = write!(out, "{cell:>W$}");
            }
            out.push('\n');
            let _ = write!(out, "{:<12}", "");
            for s in &stats {
                let cell = s
                    .as_ref()
                    .map(|s| format!("{:.2} ± {:.2}", s.mean / 1e6, s.std / 1e6))
                    .unwrap_or("-".into());
                let _ = write!(out, "{cell:>W$}");
            }
            out.push('\n');
        }
        out
    }
}

fn find_manifests(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in std::fs::read_dir(dir).with_context(|| format!("cannot read {}", dir.display()))? {
        let path = entry?.path();
        if path.is_dir() {
            find_manifests(&path, out)?;
        } else if path.file_name().is_some_and(|n| n == MANIFEST_FILE) {
            out.push(path);
        }
    }
    Ok(())
}

pub fn run(args: CompareArgs) -> Result<ExitCode> {
    let table = ResultsTable::collect(&args.dir)?;
    for w in &table.warnings {
        eprintln!("warning: {w}");
    }
    print!("{}", table.pretty());
    if let Some(path) = args.csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(ResultsTable::csv_header())?;
        for r in table.csv_rows() {
            w.write_record(r)?;
        }
        write_new(&path, &w.into_inner()?)?;
    }
    Ok(ExitCode::SUCCESS)
}
