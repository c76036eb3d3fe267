//! CSV and text serialization of experiment results.
//!
//! Files written for a prefix `p`:
//!
//! - `p_curves.csv`: `policy,t,mean_cum_regret,stderr`
//! - `p_runs.csv`: `policy,seed,t,arm,reward,mode,inst_regret,cum_regret`
//! - `p_summary.txt`: final regret per policy and switch statistics
//!
//! Rows are ordered by policy name, then seed, then round. Arms are 0-based.
//! Floats are written in shortest round-trip form, so parsing them back gives
//! the exact same `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::harness::{AggregateCurve, RunRecord};

pub const CURVES_HEADER: &str = "policy,t,mean_cum_regret,stderr";
pub const RUNS_HEADER: &str = "policy,seed,t,arm,reward,mode,inst_regret,cum_regret";

fn sorted_curves(curves: &[AggregateCurve]) -> Vec<&AggregateCurve> {
    let mut v: Vec<&AggregateCurve> = curves.iter().collect();
    v.sort_by_key(|c| c.policy.as_str());
    v
}

pub fn curves_csv(curves: &[AggregateCurve]) -> String {
    let mut out = String::new();
    out.push_str(CURVES_HEADER);
    out.push('\n');
    for c in sorted_curves(curves) {
        for (i, (m, s)) in c.mean_regret.iter().zip(&c.stderr).enumerate() {
            writeln!(out, "{},{},{},{}", c.policy, i + 1, m, s).expect("writing to a String");
        }
    }
    out
}

pub fn runs_csv(runs: &[RunRecord]) -> String {
    let mut ordered: Vec<&RunRecord> = runs.iter().collect();
    ordered.sort_by(|a, b| a.policy.as_str().cmp(b.policy.as_str()).then(a.seed.cmp(&b.seed)));
    let mut out = String::new();
    out.push_str(RUNS_HEADER);
    out.push('\n');
    for r in ordered {
        let mut cum = 0.0;
        for l in &r.logs {
            cum += l.inst_regret;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.policy, r.seed, l.round, l.arm, l.reward, l.mode, l.inst_regret, cum
            )
            .expect("writing to a String");
        }
    }
    out
}

pub fn summary_text(curves: &[AggregateCurve]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<8} {:>6} {:>22} {:>22} {:>9} {:>10} {:>12}",
        "policy", "runs", "final_mean_regret", "final_stderr", "switches", "switch_freq", "mean_switch_t"
    )
    .expect("writing to a String");
    for c in sorted_curves(curves) {
        let mean_switch = if c.switch_rounds.is_empty() {
            "-".to_string()
        } else {
            let s: usize = c.switch_rounds.iter().sum();
            format!("{}", s as f64 / c.switch_rounds.len() as f64)
        };
        writeln!(
            out,
            "{:<8} {:>6} {:>22} {:>22} {:>9} {:>10} {:>12}",
            c.policy.as_str(),
            c.runs,
            c.final_mean(),
            c.final_stderr(),
            c.switch_rounds.len(),
            c.switch_frequency(),
            mean_switch
        )
        .expect("writing to a String");
    }
    out
}

/// Paths of the files written by [`write_results`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFiles {
    pub curves: PathBuf,
    pub runs: PathBuf,
    pub summary: PathBuf,
}

impl OutputFiles {
    pub fn for_prefix(prefix: &Path) -> Self {
        let with = |suffix: &str| {
            let mut s = prefix.as_os_str().to_owned();
            s.push(suffix);
            PathBuf::from(s)
        };
        Self {
            curves: with("_curves.csv"),
            runs: with("_runs.csv"),
            summary: with("_summary.txt"),
        }
    }
}

pub fn write_results(curves: &[AggregateCurve], runs: &[RunRecord], prefix: &Path) -> Result<OutputFiles> {
    let files = OutputFiles::for_prefix(prefix);
    if let Some(dir) = files.curves.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(&files.curves, curves_csv(curves))?;
    fs::write(&files.runs, runs_csv(runs))?;
    fs::write(&files.summary, summary_text(curves))?;
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::PolicyKind;
    use crate::types::{ModelKind, RoundLog};

    fn record(policy: PolicyKind, seed: u64, regrets: &[f64]) -> RunRecord {
        RunRecord {
            policy,
            seed,
            logs: regrets
                .iter()
                .enumerate()
                .map(|(i, &r)| RoundLog {
                    round: i + 1,
                    arm: i % 2,
                    reward: 0.1 * i as f64,
                    mode: ModelKind::Simple,
                    optimistic_value: None,
                    inst_regret: r,
                })
                .collect(),
            switch_round: None,
        }
    }

    #[test]
    fn empty_results_have_headers_only() {
        assert_eq!(curves_csv(&[]), format!("{CURVES_HEADER}\n"));
        assert_eq!(runs_csv(&[]), format!("{RUNS_HEADER}\n"));
    }

    #[test]
    fn row_counts_and_order() {
        let runs = vec![
            record(PolicyKind::Ucb, 2, &[0.5, 0.25]),
            record(PolicyKind::Osom, 1, &[0.1, 0.2]),
            record(PolicyKind::Ucb, 1, &[0.0, 0.3]),
        ];
        let ucb: Vec<&RunRecord> = runs.iter().filter(|r| r.policy == PolicyKind::Ucb).collect();
        let curve = AggregateCurve::from_runs(PolicyKind::Ucb, &ucb);
        let csv = curves_csv(std::slice::from_ref(&curve));
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.contains("ucb,2,0.525,"));

        let text = runs_csv(&runs);
        let keys: Vec<(String, String)> = text
            .lines()
            .skip(1)
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                (f[0].to_string(), f[1].to_string())
            })
            .collect();
        assert_eq!(keys[0], ("osom".into(), "1".into()));
        assert_eq!(keys[2], ("ucb".into(), "1".into()));
        assert_eq!(keys[4], ("ucb".into(), "2".into()));
        assert!(text.contains("ucb,2,2,1,0.1,simple,0.25,0.75"));
    }

    #[test]
    fn prefix_paths() {
        let f = OutputFiles::for_prefix(Path::new("out/exp"));
        assert_eq!(f.curves, PathBuf::from("out/exp_curves.csv"));
        assert_eq!(f.runs, PathBuf::from("out/exp_runs.csv"));
        assert_eq!(f.summary, PathBuf::from("out/exp_summary.txt"));
    }
}
