use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use qtt_nte::criticality::MatvecMode;
use qtt_nte::report::{compare, SolveKind, SolveReport};
use qtt_nte::transport::Representation;
use qtt_nte::{NteError, Result};
use serde::Deserialize;

use crate::{outcome_line, run, RunConfig};

/// Suite definition. Problem paths are relative to the suite file.
///
/// ```toml
/// [[run]]
/// label = "dense-L8"
/// problem = "pu239_slab.toml"
/// mode = "dense"
/// quadrature = 8
///
/// [[compare]]
/// name = "angular-refinement"
/// runs = ["dense-L8", "dense-L16"]
/// ```
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteFile {
    #[serde(rename = "run")]
    pub runs: Vec<SuiteRun>,
    #[serde(default, rename = "compare")]
    pub compares: Vec<SuiteCompare>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteRun {
    pub label: String,
    pub problem: PathBuf,
    #[serde(default = "default_mode")]
    pub mode: Representation,
    #[serde(default = "default_solve")]
    pub solve: SolveKind,
    pub tol: Option<f64>,
    pub max_outer: Option<usize>,
    pub seed: Option<u64>,
    pub quadrature: Option<usize>,
    pub nodes: Option<usize>,
    pub scale: Option<f64>,
    pub matvec: Option<MatvecMode>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteCompare {
    pub name: String,
    pub runs: Vec<String>,
}

fn default_mode() -> Representation {
    Representation::Dense
}

fn default_solve() -> SolveKind {
    SolveKind::Keff
}

impl SuiteRun {
    fn config(&self, base: &Path, out_dir: &Path) -> RunConfig {
        let mut c = RunConfig::new(base.join(&self.problem), self.mode, self.solve);
        c.tol = self.tol.unwrap_or(c.tol);
        c.max_outer = self.max_outer.unwrap_or(c.max_outer);
        c.seed = self.seed.unwrap_or(c.seed);
        c.matvec = self.matvec.unwrap_or(c.matvec);
        c.quadrature = self.quadrature;
        c.nodes = self.nodes;
        c.scale = self.scale;
        c.output_path = Some(out_dir.join(format!("{}.json", self.label)));
        c
    }
}

impl SuiteFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| NteError::Io(e).context(path.display().to_string()))?;
        let suite: SuiteFile = toml::from_str(&text).map_err(|e| NteError::Parse(format!("suite: {e}")))?;
        let mut labels: Vec<&str> = suite.runs.iter().map(|r| r.label.as_str()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(NteError::Validation("suite run labels must be unique".into()));
        }
        for c in &suite.compares {
            if let Some(missing) = c.runs.iter().find(|r| !labels.contains(&r.as_str())) {
                return Err(NteError::Validation(format!("compare '{}' names unknown run '{missing}'", c.name)));
            }
        }
        Ok(suite)
    }
}

/// Runs a suite with `jobs` worker threads. Writes `<label>.json` for every
/// run that produced a report, `<name>.json` for every comparison and
/// `summary.csv`. Returns `(label, exit code, summary line)` per run.
pub fn run_suite(config: &Path, out_dir: &Path, jobs: usize) -> Result<Vec<(String, i32, String)>> {
    let suite = SuiteFile::read(config)?;
    let base = config.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(out_dir)?;
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<(i32, String, Option<SolveReport>)>>> = Mutex::new(vec![None; suite.runs.len()]);
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, suite.runs.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(entry) = suite.runs.get(i) else { break };
                let cfg = entry.config(base, out_dir);
                let outcome = run(&cfg);
                let mut code = outcome.exit_code();
                let mut line = outcome_line(&outcome);
                if let Some(r) = &outcome.report {
                    let written = r.to_json().and_then(|t| {
                        let p = cfg.output_path.as_ref().expect("suite runs always have an output path");
                        std::fs::write(p, t).map_err(NteError::from)
                    });
                    if let Err(e) = written {
                        code = crate::exit_code(&e);
                        line = e.to_string();
                    }
                }
                results.lock().expect("no worker panics while holding the lock")[i] =
                    Some((code, line, outcome.report));
            });
        }
    });
    let results: Vec<(i32, String, Option<SolveReport>)> = results
        .into_inner()
        .expect("workers have finished")
        .into_iter()
        .map(|r| r.expect("every run is visited"))
        .collect();

    let mut summary = String::from("label,mode,solve,exit_code,eigenvalue,iterations,wall_time_seconds\n");
    for (run, (code, _, report)) in suite.runs.iter().zip(&results) {
        let (value, iters, time) = report.as_ref().map_or((String::new(), 0, 0.0), |r| {
            (r.eigenvalue.map_or(String::new(), |v| v.to_string()), r.iterations, r.wall_time_seconds)
        });
        summary.push_str(&format!("{},{},{},{code},{value},{iters},{time}\n", run.label, run.mode, run.solve));
    }
    std::fs::write(out_dir.join("summary.csv"), summary)?;

    let mut out: Vec<(String, i32, String)> = suite
        .runs
        .iter()
        .zip(&results)
        .map(|(r, (code, line, _))| (r.label.clone(), *code, line.clone()))
        .collect();
    for c in &suite.compares {
        let picked: Vec<(String, SolveReport)> = c
            .runs
            .iter()
            .filter_map(|label| {
                let i = suite.runs.iter().position(|r| &r.label == label)?;
                results[i].2.clone().map(|rep| (label.clone(), rep))
            })
            .collect();
        let written = compare(&picked).and_then(|cmp| {
            let text = cmp.to_json()?;
            std::fs::write(out_dir.join(format!("{}.json", c.name)), text).map_err(NteError::from)?;
            Ok(format!("{} pairs, monotone distance to critical: {}", cmp.pairs.len(), cmp.monotone_convergence()))
        });
        match written {
            Ok(line) => out.push((c.name.clone(), 0, line)),
            Err(e) => out.push((c.name.clone(), crate::exit_code(&e), e.to_string())),
        }
    }
    Ok(out)
}
