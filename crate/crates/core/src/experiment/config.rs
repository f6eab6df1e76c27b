//! Experiment configuration: the on-disk JSON form, CLI overrides, time
//! expressions, and validation into a fully resolved [`ExperimentConfig`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::MAX_EXACT_N;
use crate::rule::{RuleKind, ShuffleRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Spectra,
    Moment,
    Lowerbound,
    Couple,
    UniformTime,
    ExactTv,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Spectra,
        ExperimentKind::Moment,
        ExperimentKind::Lowerbound,
        ExperimentKind::Couple,
        ExperimentKind::UniformTime,
        ExperimentKind::ExactTv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Spectra => "spectra",
            ExperimentKind::Moment => "moment",
            ExperimentKind::Lowerbound => "lowerbound",
            ExperimentKind::Couple => "couple",
            ExperimentKind::UniformTime => "uniform-time",
            ExperimentKind::ExactTv => "exact-tv",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownExperiment {
                name: s.to_string(),
                valid: ExperimentKind::ALL.iter().map(|k| k.name()).collect::<Vec<_>>().join(", "),
            })
    }
}

/// A time: an integer, a real (floored), or an expression in `n`.
///
/// Expressions are products of factors separated by `*` or spaces. A
/// factor is a number, `n`, `ln(n)` (natural log; `log(n)` is accepted as a
/// synonym), or a number immediately followed by `n`. Examples: `354`,
/// `4n`, `0.05*n*ln(n)`, `3 n ln(n)`. The value is floored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeSpec {
    Int(u64),
    Real(f64),
    Expr(String),
}

impl TimeSpec {
    pub fn eval(&self, n: usize) -> std::result::Result<u64, String> {
        let v = match self {
            TimeSpec::Int(t) => return Ok(*t),
            TimeSpec::Real(x) => *x,
            TimeSpec::Expr(s) => eval_expr(s, n)?,
        };
        if !v.is_finite() || v < 0.0 {
            return Err(format!("time {self} evaluates to {v} at n = {n}"));
        }
        Ok(v.floor() as u64)
    }
}

impl fmt::Display for TimeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeSpec::Int(t) => write!(f, "{t}"),
            TimeSpec::Real(x) => write!(f, "{x}"),
            TimeSpec::Expr(s) => write!(f, "{s:?}"),
        }
    }
}

impl FromStr for TimeSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if let Ok(t) = s.parse::<u64>() {
            return Ok(TimeSpec::Int(t));
        }
        // validate eagerly with a dummy size
        eval_expr(s, 2)?;
        Ok(TimeSpec::Expr(s.to_string()))
    }
}

fn eval_expr(s: &str, n: usize) -> std::result::Result<f64, String> {
    let nf = n as f64;
    let mut value = 1.0;
    let mut factors = 0;
    for tok in s.split(|c: char| c == '*' || c.is_whitespace()).filter(|t| !t.is_empty()) {
        let tok = tok.to_ascii_lowercase();
        let x = match tok.as_str() {
            "n" => nf,
            "ln(n)" | "log(n)" => nf.ln(),
            _ => {
                if let Some(num) = tok.strip_suffix('n') {
                    num.parse::<f64>().map(|c| c * nf)
                } else {
                    tok.parse::<f64>()
                }
                .map_err(|_| format!("bad factor {tok:?} in time expression {s:?}"))?
            }
        };
        value *= x;
        factors += 1;
    }
    if factors == 0 {
        return Err(format!("empty time expression {s:?}"));
    }
    Ok(value)
}

/// `count` equally spaced times from `start` to `stop` (inclusive), floored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub start: TimeSpec,
    pub stop: TimeSpec,
    pub count: usize,
}

impl TimeGrid {
    pub fn eval(&self, n: usize) -> std::result::Result<Vec<u64>, String> {
        let (a, b) = (self.start.eval(n)?, self.stop.eval(n)?);
        if self.count == 0 || b < a {
            return Err(format!("time_grid needs count >= 1 and stop >= start, got {self:?}"));
        }
        if self.count == 1 {
            return Ok(vec![a]);
        }
        let step = (b - a) as f64 / (self.count - 1) as f64;
        Ok((0..self.count).map(|k| a + (k as f64 * step).floor() as u64).collect())
    }
}

/// Acceptance tolerances used by `--check`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Standard-error multiplier for Monte Carlo comparisons.
    pub sigmas: f64,
    /// Root residual tolerance.
    pub residual: f64,
    /// Eigen-residual tolerance relative to `||f||_inf`.
    pub eigen_residual: f64,
    /// Minimum chi-squared p-value.
    pub p_value: f64,
    /// Maximum fraction of uniform-time runs with `T > 8 n ln n`.
    pub tail_fraction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            sigmas: 4.0,
            residual: 1e-12,
            eigen_residual: 1e-10,
            p_value: 1e-3,
            tail_fraction: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SizeSpec {
    One(usize),
    Many(Vec<usize>),
}

/// The config file as written. Every field is optional; CLI flags
/// override file values before validation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: Option<String>,
    pub n: Option<SizeSpec>,
    pub rule: Option<String>,
    /// Locations for the `explicit` rule.
    pub sequence: Option<Vec<usize>>,
    pub branch: Option<u32>,
    pub times: Option<Vec<TimeSpec>>,
    pub time_grid: Option<TimeGrid>,
    pub replicas: Option<usize>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub i: Option<usize>,
    pub j: Option<usize>,
    pub t: Option<TimeSpec>,
    pub cap: Option<TimeSpec>,
    pub threshold: Option<f64>,
    pub horizon: Option<TimeSpec>,
    pub dump_times: Option<Vec<TimeSpec>>,
    pub tolerances: Option<Tolerances>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f; } )*
    };
}

impl ConfigFile {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(vec![format!("cannot read {}: {e}", path.display())]))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(vec![format!("config: {e}")]))
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(mut self, top: ConfigFile) -> ConfigFile {
        overlay!(
            self, top, experiment, n, rule, sequence, branch, times, time_grid, replicas, runs,
            seed, out, i, j, t, cap, threshold, horizon, dump_times, tolerances
        );
        self
    }

    /// Validates every field for `kind` and fills defaults. All problems are
    /// reported together.
    pub fn resolve(self, kind: ExperimentKind) -> Result<ExperimentConfig> {
        let mut errs = Vec::new();
        if let Some(name) = &self.experiment {
            match name.parse::<ExperimentKind>() {
                Ok(k) if k != kind => errs.push(format!(
                    "experiment: config names {k:?} but {} was requested",
                    kind.name()
                )),
                Ok(_) => {}
                Err(e) => errs.push(format!("experiment: {e}")),
            }
        }
        let n = match &self.n {
            None => {
                errs.push("n: required".into());
                vec![]
            }
            Some(SizeSpec::One(n)) => vec![*n],
            Some(SizeSpec::Many(v)) => v.clone(),
        };
        if self.n.is_some() && n.is_empty() {
            errs.push("n: list must be nonempty".into());
        }
        let min_n = match kind {
            ExperimentKind::Spectra | ExperimentKind::Moment | ExperimentKind::Lowerbound | ExperimentKind::Couple => 3,
            _ => 2,
        };
        for &k in &n {
            if k < min_n {
                errs.push(format!("n: {k} is below the minimum {min_n} for {kind}"));
            }
            if kind == ExperimentKind::ExactTv && k > MAX_EXACT_N {
                errs.push(format!("n: exact-tv supports n <= {MAX_EXACT_N}, got {k}"));
            }
        }
        let rule = match self.rule.as_deref().unwrap_or("cyclic").parse::<RuleKind>() {
            Ok(r) => r,
            Err(e) => {
                errs.push(format!("rule: {e}"));
                RuleKind::Cyclic
            }
        };
        let uses_rule = matches!(kind, ExperimentKind::UniformTime | ExperimentKind::ExactTv);
        if !uses_rule && rule != RuleKind::Cyclic {
            errs.push(format!("rule: {kind} is defined for the cyclic rule only"));
        }
        if kind == ExperimentKind::ExactTv
            && !matches!(
                rule,
                RuleKind::Cyclic | RuleKind::Star | RuleKind::ExplicitSequence | RuleKind::UniformIid
            )
        {
            errs.push(format!("rule: exact-tv needs a deterministic rule or uniform, got {rule}"));
        }
        if rule == RuleKind::ExplicitSequence {
            match &self.sequence {
                None => errs.push("sequence: required for the explicit rule".into()),
                Some(seq) => {
                    for &k in &n {
                        if let Err(e) = ShuffleRule::explicit(k, seq.clone()) {
                            errs.push(format!("sequence: {e}"));
                        }
                    }
                }
            }
        } else if self.sequence.is_some() {
            errs.push("sequence: only valid with the explicit rule".into());
        }
        let branch = self.branch.unwrap_or(1);
        if branch == 0 {
            errs.push("branch: starts at 1".into());
        }
        if matches!(kind, ExperimentKind::Spectra | ExperimentKind::Moment | ExperimentKind::Lowerbound)
            && branch != 1
            && n.iter().any(|&k| k < crate::statistic::ASYMPTOTIC_MIN_N)
        {
            errs.push("branch: only branch 1 is available for n < 8".into());
        }
        let default_times: Vec<TimeSpec> = match kind {
            ExperimentKind::Moment => ["0", "n", "2n", "4n"].iter().map(|s| s.parse().unwrap()).collect(),
            ExperimentKind::Lowerbound => ["0", "0.02*n*ln(n)", "0.05*n*ln(n)", "0.1*n*ln(n)", "0.2*n*ln(n)", "0.5*n*ln(n)", "n*ln(n)", "2*n*ln(n)", "3*n*ln(n)"]
                .iter()
                .map(|s| s.parse().unwrap())
                .collect(),
            _ => vec![],
        };
        if self.times.is_some() && self.time_grid.is_some() {
            errs.push("times: give either times or time_grid, not both".into());
        }
        let times = self.times.clone().unwrap_or(default_times);
        for &k in &n {
            for ts in &times {
                if let Err(e) = ts.eval(k) {
                    errs.push(format!("times: {e}"));
                }
            }
            if let Some(g) = &self.time_grid {
                if let Err(e) = g.eval(k) {
                    errs.push(format!("time_grid: {e}"));
                }
            }
        }
        let default_replicas = 10_000;
        let replicas = self.replicas.unwrap_or(default_replicas);
        match kind {
            ExperimentKind::Moment | ExperimentKind::Lowerbound
                if replicas < crate::statistic::MIN_MOMENT_REPLICAS =>
            {
                errs.push(format!(
                    "replicas: must be >= {} for {kind}, got {replicas}",
                    crate::statistic::MIN_MOMENT_REPLICAS
                ))
            }
            ExperimentKind::Couple if replicas == 0 => errs.push("replicas: must be >= 1".into()),
            _ => {}
        }
        let runs = self.runs.unwrap_or(10_000);
        if kind == ExperimentKind::UniformTime && runs == 0 {
            errs.push("runs: must be >= 1".into());
        }
        let (i, j) = (self.i.unwrap_or(1), self.j.unwrap_or(2));
        if kind == ExperimentKind::Couple {
            if i == j {
                errs.push(format!("i, j: must differ, both are {i}"));
            }
            for &k in &n {
                if i >= k || j >= k {
                    errs.push(format!("i, j: cards {i}, {j} out of range for n = {k}"));
                }
            }
        }
        let t = self.t.clone().unwrap_or_else(|| "4n".parse().unwrap());
        let cap = self.cap.clone().unwrap_or_else(|| "1000*n*ln(n)".parse().unwrap());
        let horizon = self.horizon.clone().unwrap_or_else(|| "4*n*ln(n)".parse().unwrap());
        for &k in &n {
            for (name, ts) in [("t", &t), ("cap", &cap), ("horizon", &horizon)] {
                match ts.eval(k) {
                    Err(e) => errs.push(format!("{name}: {e}")),
                    Ok(v) if name == "cap" && kind == ExperimentKind::UniformTime && v < k as u64 => {
                        errs.push(format!("cap: must be >= n = {k}, got {v}"))
                    }
                    Ok(_) => {}
                }
            }
        }
        let threshold = self.threshold.unwrap_or_else(crate::exact::default_threshold);
        if !(threshold > 0.0 && threshold < 1.0) {
            errs.push(format!("threshold: must lie in (0, 1), got {threshold}"));
        }
        let dump_times = self.dump_times.clone().unwrap_or_default();
        for &k in &n {
            for ts in &dump_times {
                if let Err(e) = ts.eval(k) {
                    errs.push(format!("dump_times: {e}"));
                }
            }
        }
        let tolerances = self.tolerances.unwrap_or_default();
        if !(tolerances.sigmas > 0.0) {
            errs.push("tolerances.sigmas: must be positive".into());
        }
        if !errs.is_empty() {
            return Err(Error::InvalidConfig(errs));
        }
        Ok(ExperimentConfig {
            experiment: kind,
            n,
            rule,
            sequence: self.sequence,
            branch,
            times,
            time_grid: self.time_grid,
            replicas,
            runs,
            seed: self.seed.unwrap_or(0),
            out: self.out.unwrap_or_else(|| PathBuf::from("out")),
            i,
            j,
            t,
            cap,
            threshold,
            horizon,
            dump_times,
            tolerances,
        })
    }
}

/// A validated configuration with all defaults filled. Its JSON form is
/// what gets hashed into the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n: Vec<usize>,
    pub rule: RuleKind,
    pub sequence: Option<Vec<usize>>,
    pub branch: u32,
    pub times: Vec<TimeSpec>,
    pub time_grid: Option<TimeGrid>,
    pub replicas: usize,
    pub runs: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub i: usize,
    pub j: usize,
    pub t: TimeSpec,
    pub cap: TimeSpec,
    pub threshold: f64,
    pub horizon: TimeSpec,
    pub dump_times: Vec<TimeSpec>,
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    /// Sorted, deduplicated times for deck size `n`.
    pub fn times_for(&self, n: usize) -> Vec<u64> {
        let mut out: Vec<u64> = self.times.iter().map(|t| t.eval(n).expect("validated")).collect();
        if let Some(g) = &self.time_grid {
            out.extend(g.eval(n).expect("validated"));
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn rule_for(&self, n: usize) -> Result<ShuffleRule> {
        match (&self.rule, &self.sequence) {
            (RuleKind::ExplicitSequence, Some(seq)) => ShuffleRule::explicit(n, seq.clone()),
            (kind, _) => ShuffleRule::new(*kind, n),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_expressions() {
        let ev = |s: &str, n| s.parse::<TimeSpec>().unwrap().eval(n).unwrap();
        assert_eq!(ev("354", 1024), 354);
        assert_eq!(ev("4n", 64), 256);
        assert_eq!(ev("0.05*n*ln(n)", 1024), 354);
        assert_eq!(ev("3 n ln(n)", 1024), 21293);
        assert_eq!(ev("4*n*log(n)", 7), 54);
        assert!("2*m".parse::<TimeSpec>().is_err());
        assert!("".parse::<TimeSpec>().is_err());
        assert_eq!(TimeSpec::Real(-1.0).eval(3).is_err(), true);
    }

    #[test]
    fn json_forms() {
        let c = ConfigFile::from_json(r#"{"n": 5, "times": [0, 2.5, "n"], "seed": 3}"#).unwrap();
        let r = c.resolve(ExperimentKind::Moment).unwrap();
        assert_eq!(r.times_for(5), vec![0, 2, 5]);
        assert!(ConfigFile::from_json(r#"{"nn": 5}"#).is_err());
    }

    #[test]
    fn all_problems_reported() {
        let c = ConfigFile::from_json(r#"{"n": [1, 2000], "replicas": 5, "rule": "bogus", "experiment": "exact-tv"}"#)
            .unwrap();
        match c.resolve(ExperimentKind::ExactTv) {
            Err(Error::InvalidConfig(v)) => {
                assert!(v.iter().any(|e| e.starts_with("n: 1 ")));
                assert!(v.iter().any(|e| e.contains("n <= 8")));
                assert!(v.iter().any(|e| e.starts_with("rule:")));
            }
            other => panic!("{other:?}"),
        }
        let c = ConfigFile::from_json(r#"{"n": 64, "replicas": 5}"#).unwrap();
        assert!(matches!(c.resolve(ExperimentKind::Lowerbound), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn overlay_prefers_top() {
        let base = ConfigFile::from_json(r#"{"n": 5, "seed": 1}"#).unwrap();
        let top = ConfigFile {
            seed: Some(9),
            ..Default::default()
        };
        let merged = base.overlay(top);
        assert_eq!(merged.seed, Some(9));
        assert_eq!(merged.n, Some(SizeSpec::One(5)));
    }

    #[test]
    fn unknown_kind_names_valid_ones() {
        let e = "bogus".parse::<ExperimentKind>().unwrap_err();
        let msg = e.to_string();
        for k in ExperimentKind::ALL {
            assert!(msg.contains(k.name()), "{msg}");
        }
    }
}
