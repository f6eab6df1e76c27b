//! Config-driven experiments: each kind runs the corresponding module and
//! writes CSV/JSON artifacts plus a `manifest.json` into the output
//! directory.
//!
//! # Output files
//!
//! File names carry the deck size, e.g. `moment_n64.csv`. Columns:
//!
//! | file | columns |
//! |---|---|
//! | `spectra_n{n}.json` | see [`SpectraReport`] |
//! | `eigenfunction_n{n}.csv` | `state, f_re, f_im` (only for `n <= 4096`) |
//! | `moment_n{n}.csv` | [`MOMENT_CSV_HEADER`] |
//! | `lowerbound_n{n}.csv` | [`LOWERBOUND_CSV_HEADER`] |
//! | `couple_n{n}.csv` | [`COUPLING_CSV_HEADER`] |
//! | `uniform_time_n{n}.csv` | [`UNIFORM_TIME_CSV_HEADER`] |
//! | `epochs_n{n}.csv` | [`EPOCH_CSV_HEADER`] |
//! | `exact_tv_n{n}.csv` | `t, tv, tv_lb` (`tv_lb` empty when not defined) |
//! | `distribution_n{n}_t{t}.csv` | `rank, prob` in lexicographic rank order |
//!
//! Reals are printed with 17 significant digits. Times are the literal
//! evaluated integers. All randomness derives from the config seed through
//! [`crate::rng::stream`], keyed by purpose and replica index, so outputs do
//! not depend on the number of worker threads.

pub mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

pub use config::{ConfigFile, ExperimentConfig, ExperimentKind, SizeSpec, TimeGrid, TimeSpec, Tolerances};

use crate::coupling::{
    correlation_from_runs, run_coupling_batch, write_coupling_csv, UnglueReport, COUPLING_CSV_HEADER,
    MIN_CORRELATION_REPLICAS,
};
use crate::error::{Error, Result};
use crate::exact::{exact_evolution, ExactDistribution};
use crate::marking::{
    chi_squared_uniform, epoch_check, epoch_stats, final_deck_counts, run_uniform_time_batch,
    theta_constants, write_epoch_csv, write_uniform_time_csv, EPOCH_CSV_HEADER, UNIFORM_TIME_CSV_HEADER,
};
use crate::rule::RuleKind;
use crate::spectral::{all_gamma_roots, solve_gamma, solve_zeta, Eigenfunction, DEFAULT_TOL};
use crate::statistic::{
    lower_bound_experiment, moment_experiment_with, tv_lower_bound, uniform_control, write_lowerbound_csv,
    write_moment_csv, TestStatistic, ASYMPTOTIC_MIN_N, LOWERBOUND_CSV_HEADER, MOMENT_CSV_HEADER,
};

/// One parameter of an experiment kind.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamSchema {
    pub name: &'static str,
    pub kind: &'static str,
    pub default: &'static str,
    pub constraint: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentInfo {
    pub name: &'static str,
    pub description: &'static str,
    pub params: Vec<ParamSchema>,
}

const fn p(name: &'static str, kind: &'static str, default: &'static str, constraint: &'static str) -> ParamSchema {
    ParamSchema {
        name,
        kind,
        default,
        constraint,
    }
}

/// The fixed catalog of experiment kinds.
pub fn list_experiments() -> Vec<ExperimentInfo> {
    let seed = p("seed", "u64", "0", "");
    let n_list = |c| p("n", "integer or list", "required", c);
    ExperimentKind::ALL
        .iter()
        .map(|k| match k {
            ExperimentKind::Spectra => ExperimentInfo {
                name: k.name(),
                description: "root of e^z - z - 1, the matching eigenvalue of the renewal chain, and its eigenfunction",
                params: vec![n_list(">= 3; branch 1 only below 8"), p("branch", "integer", "1", ">= 1")],
            },
            ExperimentKind::Moment => ExperimentInfo {
                name: k.name(),
                description: "Monte Carlo moments of the test statistic against the closed forms",
                params: vec![
                    n_list(">= 3"),
                    p("branch", "integer", "1", ">= 1"),
                    p("times", "list of times", "[0, n, 2n, 4n]", ">= 0"),
                    p("time_grid", "{start, stop, count}", "none", "count >= 1"),
                    p("replicas", "integer", "10000", ">= 100"),
                    seed.clone(),
                ],
            },
            ExperimentKind::Lowerbound => ExperimentInfo {
                name: k.name(),
                description: "total-variation lower bound and distinguisher advantage over time",
                params: vec![
                    n_list(">= 3"),
                    p("branch", "integer", "1", ">= 1"),
                    p("times", "list of times", "[0, 0.02..3 * n*ln(n)]", ">= 0"),
                    p("time_grid", "{start, stop, count}", "none", "count >= 1"),
                    p("replicas", "integer", "10000", ">= 100"),
                    seed.clone(),
                ],
            },
            ExperimentKind::Couple => ExperimentInfo {
                name: k.name(),
                description: "coupling with independent single-card copies: unglue rate and pair correlation",
                params: vec![
                    n_list(">= 3"),
                    p("i", "card", "1", "< n, != j"),
                    p("j", "card", "2", "< n, != i"),
                    p("t", "time", "4n", ">= 0"),
                    p("replicas", "integer", "10000", ">= 1; correlation check needs >= 10000"),
                    seed.clone(),
                ],
            },
            ExperimentKind::UniformTime => ExperimentInfo {
                name: k.name(),
                description: "card-marking strong uniform time and epoch statistics",
                params: vec![
                    n_list(">= 2"),
                    p("rule", "cyclic|star|uniform|quenched|pak|explicit", "cyclic", ""),
                    p("sequence", "list of locations", "none", "explicit rule only"),
                    p("runs", "integer", "10000", ">= 1"),
                    p("cap", "time", "1000*n*ln(n)", ">= n"),
                    seed.clone(),
                ],
            },
            ExperimentKind::ExactTv => ExperimentInfo {
                name: k.name(),
                description: "exact law over all n! permutations, total variation to uniform, mixing time",
                params: vec![
                    n_list("2..=8"),
                    p("rule", "cyclic|star|explicit|uniform", "cyclic", "no other random rules"),
                    p("sequence", "list of locations", "none", "explicit rule only"),
                    p("threshold", "real", "1/(2e)", "(0, 1)"),
                    p("horizon", "time", "4*n*ln(n)", ">= 0"),
                    p("dump_times", "list of times", "[]", "full distribution dumps"),
                ],
            },
        })
        .collect()
}

/// Catalog entry for `name`, or an error listing the valid kinds.
pub fn find_experiment(name: &str) -> Result<ExperimentInfo> {
    let kind: ExperimentKind = name.parse()?;
    Ok(list_experiments().into_iter().find(|e| e.name == kind.name()).expect("catalog covers all kinds"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub path: String,
    pub complete: bool,
    /// SHA-256 of the file contents.
    pub sha256: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub experiment: ExperimentKind,
    pub config: ExperimentConfig,
    /// SHA-256 of the resolved config's JSON form.
    pub config_hash: String,
    pub seed: u64,
    pub stream_derivation: String,
    pub threads: usize,
    pub started_unix_s: u64,
    pub wall_time_s: f64,
    pub complete: bool,
    pub error: Option<String>,
    pub outputs: Vec<OutputEntry>,
    pub checks: Vec<CheckResult>,
    pub summary: serde_json::Value,
}

impl Manifest {
    pub fn checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn config_hash(config: &ExperimentConfig) -> String {
    let bytes = serde_json::to_vec(config).expect("config serializes");
    hex(&Sha256::digest(bytes))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects outputs and checks while an experiment runs.
struct Sink {
    dir: PathBuf,
    outputs: Vec<OutputEntry>,
    checks: Vec<CheckResult>,
    summary: serde_json::Map<String, serde_json::Value>,
}

impl Sink {
    fn write<F>(&mut self, name: &str, body: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let path = self.dir.join(name);
        let result = (|| {
            let mut w = BufWriter::new(File::create(&path)?);
            body(&mut w)?;
            w.flush()?;
            Ok(())
        })();
        let complete = result.is_ok();
        let sha256 = if complete {
            std::fs::read(&path).ok().map(|b| hex(&Sha256::digest(b)))
        } else {
            None
        };
        self.outputs.push(OutputEntry {
            path: name.to_string(),
            complete,
            sha256,
        });
        result
    }

    fn write_json(&mut self, name: &str, value: &serde_json::Value) -> Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }
}

/// Runs `config` on a pool of `threads` workers (0 = rayon default),
/// writes all artifacts and `manifest.json`, and returns the manifest.
/// Failing checks do not make this an error; inspect
/// [`Manifest::checks_passed`].
pub fn run_experiment(config: &ExperimentConfig, threads: usize) -> Result<Manifest> {
    std::fs::create_dir_all(&config.out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    let mut sink = Sink {
        dir: config.out.clone(),
        outputs: vec![],
        checks: vec![],
        summary: serde_json::Map::new(),
    };
    let result = pool.install(|| match config.experiment {
        ExperimentKind::Spectra => run_spectra(config, &mut sink),
        ExperimentKind::Moment => run_moment(config, &mut sink),
        ExperimentKind::Lowerbound => run_lowerbound(config, &mut sink),
        ExperimentKind::Couple => run_couple(config, &mut sink),
        ExperimentKind::UniformTime => run_uniform_time(config, &mut sink),
        ExperimentKind::ExactTv => run_exact_tv(config, &mut sink),
    });
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: config.experiment,
        config: config.clone(),
        config_hash: config_hash(config),
        seed: config.seed,
        stream_derivation: "ChaCha8 keyed by splitmix64(seed, domain), stream = replica index; \
                            domains: swap=1 rule=2 uniform=3 coupling=4 marking=5 marking-rule=6"
            .to_string(),
        threads: pool.current_num_threads(),
        started_unix_s: started,
        wall_time_s: clock.elapsed().as_secs_f64(),
        complete: result.is_ok() && sink.outputs.iter().all(|o| o.complete),
        error: result.as_ref().err().map(|e| e.to_string()),
        outputs: sink.outputs.clone(),
        checks: sink.checks.clone(),
        summary: serde_json::Value::Object(sink.summary.clone()),
    };
    let file = File::create(config.out.join("manifest.json"))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    writeln!(w)?;
    w.flush()?;
    result.map(|_| manifest)
}

fn c(z: Complex64) -> serde_json::Value {
    json!([z.re, z.im])
}

/// Contents of `spectra_n{n}.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectraReport {
    pub n: usize,
    pub branch: u32,
    /// `"asymptotic"` (tracked from `zeta`) or `"exact"` (slowest exact root, `n < 8`).
    pub source: String,
    pub zeta: [f64; 2],
    pub abs_one_plus_zeta: f64,
    pub psi_residual: f64,
    pub gamma: [f64; 2],
    pub lambda: [f64; 2],
    pub one_minus_lambda_abs: f64,
    pub rho: f64,
    pub poly_residual: f64,
    pub norm2: f64,
    pub norm_inf: f64,
    pub eigen_residual: f64,
    /// All roots of the characteristic polynomial (`n <= 64` only).
    pub all_gamma_roots: Option<Vec<[f64; 2]>>,
}

pub fn spectra_report(n: usize, branch: u32) -> Result<SpectraReport> {
    let zeta = solve_zeta(branch, DEFAULT_TOL)?;
    let psi_residual = (zeta.exp() - zeta - 1.0).norm();
    let (gamma, source, poly_residual) = if n >= ASYMPTOTIC_MIN_N {
        let pair = solve_gamma(n, zeta, branch, DEFAULT_TOL)?;
        (pair.gamma, "asymptotic", pair.poly_residual)
    } else {
        let g = TestStatistic::slowest_exact(n)?.eigenfunction().gamma;
        (g, "exact", crate::spectral::char_poly(n, g).norm())
    };
    let ef = Eigenfunction::new(n, gamma)?;
    let nf = n as f64;
    let roots = if n <= 64 {
        Some(all_gamma_roots(n)?.into_iter().map(|g| [g.re, g.im]).collect())
    } else {
        None
    };
    Ok(SpectraReport {
        n,
        branch,
        source: source.to_string(),
        zeta: [zeta.re, zeta.im],
        abs_one_plus_zeta: (zeta + 1.0).norm(),
        psi_residual,
        gamma: [gamma.re, gamma.im],
        lambda: [ef.lambda.re, ef.lambda.im],
        one_minus_lambda_abs: (1.0 - ef.lambda).norm(),
        rho: nf * (1.0 - ef.lambda).norm(),
        poly_residual,
        norm2: ef.norm2,
        norm_inf: ef.norm_inf,
        eigen_residual: ef.residual(),
        all_gamma_roots: roots,
    })
}

const EIGENFUNCTION_DUMP_MAX_N: usize = 4096;

fn run_spectra(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<()> {
    let tol = cfg.tolerances;
    for &n in &cfg.n {
        let rep = spectra_report(n, cfg.branch)?;
        sink.checks.push(check(
            format!("psi_residual_n{n}"),
            rep.psi_residual <= tol.residual,
            format!("{:e} <= {:e}", rep.psi_residual, tol.residual),
        ));
        sink.checks.push(check(
            format!("eigen_residual_n{n}"),
            rep.eigen_residual <= tol.eigen_residual * rep.norm_inf,
            format!("{:e} <= {:e} * {}", rep.eigen_residual, tol.eigen_residual, rep.norm_inf),
        ));
        sink.write_json(&format!("spectra_n{n}.json"), &serde_json::to_value(&rep)?)?;
        if n <= EIGENFUNCTION_DUMP_MAX_N {
            let ef = Eigenfunction::new(n, Complex64::new(rep.gamma[0], rep.gamma[1]))?;
            sink.write(&format!("eigenfunction_n{n}.csv"), |w| {
                let mut cw = csv::Writer::from_writer(w);
                cw.write_record(["state", "f_re", "f_im"])?;
                for (k, v) in ef.values.iter().enumerate() {
                    cw.write_record([k.to_string(), format!("{:.17e}", v.re), format!("{:.17e}", v.im)])?;
                }
                cw.flush()?;
                Ok(())
            })?;
        }
    }
    Ok(())
}

fn run_moment(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<()> {
    let k = cfg.tolerances.sigmas;
    let mut summary = vec![];
    for &n in &cfg.n {
        let stat = TestStatistic::branch(n, cfg.branch)?;
        let rows = moment_experiment_with(&stat, &cfg.times_for(n), cfg.replicas, cfg.seed)?;
        for r in &rows {
            sink.checks.push(check(
                format!("mean_n{n}_t{}", r.t),
                r.mean_within(k),
                format!(
                    "|{} - {}| <= {k} * {:e}",
                    r.empirical_mean, r.predicted_mean, r.std_error
                ),
            ));
            sink.checks.push(check(
                format!("second_moment_n{n}_t{}", r.t),
                r.second_moment_within(k),
                format!("{} <= {} + {k} * {:e}", r.empirical_second_moment, r.second_moment_bound, r.second_moment_std_error),
            ));
        }
        let ctl = uniform_control(&stat, cfg.replicas, cfg.seed)?;
        sink.checks.push(check(
            format!("uniform_mean_n{n}"),
            ctl.empirical_mean.norm() <= k * ctl.std_error,
            format!("|{}| <= {k} * {:e}", ctl.empirical_mean, ctl.std_error),
        ));
        sink.checks.push(check(
            format!("stationary_second_moment_n{n}"),
            (ctl.empirical_second_moment - ctl.stationary_second_moment).abs() <= k * ctl.second_moment_std_error,
            format!("{} vs {} (se {:e})", ctl.empirical_second_moment, ctl.stationary_second_moment, ctl.second_moment_std_error),
        ));
        sink.write(&format!("moment_n{n}.csv"), |w| write_moment_csv(w, &rows))?;
        summary.push(json!({"n": n, "lambda": c(stat.lambda()), "uniform_control": ctl}));
    }
    sink.summary.insert("moment".into(), json!(summary));
    Ok(())
}

fn run_lowerbound(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<()> {
    let mut summary = vec![];
    for &n in &cfg.n {
        let stat = TestStatistic::branch(n, cfg.branch)?;
        let rows = lower_bound_experiment(&stat, &cfg.times_for(n), cfg.replicas, cfg.seed)?;
        sink.write(&format!("lowerbound_n{n}.csv"), |w| write_lowerbound_csv(w, &rows))?;
        let adv: Vec<f64> = rows.iter().map(|r| r.advantage.value).collect();
        // reported, not enforced
        let monotone = adv.windows(2).all(|w| w[1] <= w[0] + 0.02);
        summary.push(json!({
            "n": n,
            "lambda": c(stat.lambda()),
            "advantage_bins": rows.first().map(|r| r.advantage.bins),
            "advantage_sigmas": crate::statistic::DEFAULT_ADVANTAGE_SIGMAS,
            "advantage_nonincreasing": monotone,
        }));
    }
    sink.summary.insert("lowerbound".into(), json!(summary));
    Ok(())
}

fn run_couple(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<()> {
    let k = cfg.tolerances.sigmas;
    let mut summary = vec![];
    for &n in &cfg.n {
        let t = cfg.t.eval(n).expect("validated");
        let stat = TestStatistic::branch(n, 1)?;
        let runs = run_coupling_batch(n, cfg.i, cfg.j, t, cfg.replicas, cfg.seed)?;
        let unglue = UnglueReport::from_runs(n, t, &runs)?;
        sink.checks.push(check(
            format!("unglue_n{n}"),
            unglue.holds(k),
            format!("{} <= {} + {k} * {:e}", unglue.unglue_prob, unglue.bound, unglue.std_error),
        ));
        let counting = runs
            .iter()
            .all(|r| r.zero_visits.iter().sum::<u64>() == t && r.all_pairs_n_ij() <= 2 * n as u64 * t);
        sink.checks.push(check(format!("counting_identity_n{n}"), counting, "every run"));
        let corr = if cfg.replicas >= MIN_CORRELATION_REPLICAS {
            let rep = correlation_from_runs(n, cfg.i, cfg.j, t, &runs, &stat);
            sink.checks.push(check(
                format!("pair_correlation_n{n}"),
                rep.bound_holds(k),
                format!("|{}| <= {} + {k} * {:e}", rep.correlation, rep.bound, rep.std_error),
            ));
            sink.checks.push(check(
                format!("independent_copies_n{n}"),
                rep.copies_match(k),
                format!("{} vs {} (se {:e})", rep.copies_correlation, rep.copies_predicted, rep.copies_std_error),
            ));
            Some(rep)
        } else {
            None
        };
        sink.write(&format!("couple_n{n}.csv"), |w| write_coupling_csv(w, &runs, &stat))?;
        summary.push(json!({"n": n, "t": t, "unglue": unglue, "correlation": corr}));
    }
    sink.summary.insert("couple".into(), json!(summary));
    Ok(())
}

const CHI_SQUARED_MAX_N: usize = 6;

fn run_uniform_time(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<()> {
    let tol = cfg.tolerances;
    let mut summary = vec![];
    for &n in &cfg.n {
        let cap = cfg.cap.eval(n).expect("validated");
        let rule = cfg.rule_for(n)?;
        let runs = run_uniform_time_batch(n, &rule, cfg.runs, cfg.seed, cap)?;
        let epochs = runs.iter().map(|r| epoch_stats(&r.trace)).collect::<Result<Vec<_>>>()?;
        let reached: Vec<u64> = runs.iter().filter_map(|r| r.outcome.time()).collect();
        let nf = n as f64;
        let tail_t = 8.0 * nf * nf.ln();
        let tail = runs.iter().filter(|r| r.outcome.time().map_or(true, |t| t as f64 > tail_t)).count() as f64
            / runs.len() as f64;
        let counting = runs.iter().all(|r| r.trace.zero_visits.iter().sum::<u64>() == r.trace.steps);
        sink.checks.push(check(format!("counting_identity_n{n}"), counting, "every run"));
        let ec = epoch_check(n, &epochs);
        sink.checks.push(check(
            format!("epoch_increment_n{n}"),
            ec.increment_violations == 0,
            format!("{} violations", ec.increment_violations),
        ));
        sink.checks.push(check(
            format!("epoch_drift_n{n}"),
            ec.drift_holds(tol.sigmas),
            format!("{} bins", ec.drift_bins.len()),
        ));
        if ec.big_d_epochs > 0 {
            sink.checks.push(check(
                format!("epoch_big_d_n{n}"),
                ec.big_d_holds(tol.sigmas),
                format!("{} >= {} - {} * {:e}", ec.big_d_frequency, ec.theta * ec.theta / 8.0, tol.sigmas, ec.big_d_std_error),
            ));
        }
        if rule.kind() == RuleKind::Cyclic {
            sink.checks.push(check(
                format!("tail_n{n}"),
                tail <= tol.tail_fraction,
                format!("P(T > 8 n ln n) = {tail} <= {}", tol.tail_fraction),
            ));
        }
        let chi = if n <= CHI_SQUARED_MAX_N {
            let t = chi_squared_uniform(&final_deck_counts(n, &runs))?;
            sink.checks.push(check(
                format!("uniformity_n{n}"),
                t.p_value > tol.p_value,
                format!("chi2 = {}, dof = {}, p = {:e}", t.statistic, t.dof, t.p_value),
            ));
            Some(t)
        } else {
            None
        };
        sink.write(&format!("uniform_time_n{n}.csv"), |w| write_uniform_time_csv(w, &runs))?;
        sink.write(&format!("epochs_n{n}.csv"), |w| write_epoch_csv(w, &epochs))?;
        let mean_t = reached.iter().sum::<u64>() as f64 / reached.len().max(1) as f64;
        let (theta, c0) = theta_constants();
        summary.push(json!({
            "n": n,
            "rule": rule.kind().name(),
            "runs": runs.len(),
            "reached": reached.len(),
            "mean_T": mean_t,
            "mean_T_over_n_ln_n": mean_t / (nf * nf.ln()),
            "tail_fraction_8_n_ln_n": tail,
            "theta": theta,
            "c0": c0,
            "chi_squared": chi,
            "big_d_frequency": ec.big_d_frequency,
        }));
    }
    sink.summary.insert("uniform_time".into(), json!(summary));
    Ok(())
}

fn run_exact_tv(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<()> {
    let mut summary = vec![];
    for &n in &cfg.n {
        let rule = cfg.rule_for(n)?;
        let horizon = cfg.horizon.eval(n).expect("validated");
        let dumps: Vec<u64> = cfg.dump_times.iter().map(|t| t.eval(n).expect("validated")).collect();
        // the statistic bound is stated for the cyclic rule
        let stat = if rule.kind() == RuleKind::Cyclic && n >= 3 {
            Some(TestStatistic::slowest_exact(n)?)
        } else {
            None
        };
        let mut curve: Vec<(u64, f64)> = Vec::new();
        let mut snapshots: Vec<(u64, ExactDistribution)> = Vec::new();
        let mut max_mass_err = 0.0f64;
        exact_evolution(n, &rule, horizon, |t, mu| {
            curve.push((t, mu.tv_to_uniform()));
            max_mass_err = max_mass_err.max((mu.total_mass() - 1.0).abs());
            if dumps.contains(&t) {
                snapshots.push((t, mu.clone()));
            }
            Ok(())
        })?;
        let tau = curve.iter().find(|(_, tv)| *tv <= cfg.threshold).map(|(t, _)| *t);
        sink.checks.push(check(
            format!("mass_n{n}"),
            max_mass_err <= 1e-12,
            format!("max |mass - 1| = {max_mass_err:e}"),
        ));
        if let Some(stat) = &stat {
            let worst = curve
                .iter()
                .map(|&(t, tv)| tv - tv_lower_bound(stat, t))
                .fold(f64::INFINITY, f64::min);
            sink.checks.push(check(
                format!("tv_lower_bound_n{n}"),
                worst >= 0.0,
                format!("min (tv - bound) = {worst:e}"),
            ));
        }
        sink.write(&format!("exact_tv_n{n}.csv"), |w| {
            let mut cw = csv::Writer::from_writer(w);
            cw.write_record(["t", "tv", "tv_lb"])?;
            for &(t, tv) in &curve {
                let lb = stat.as_ref().map(|s| format!("{:.17e}", tv_lower_bound(s, t))).unwrap_or_default();
                cw.write_record([t.to_string(), format!("{tv:.17e}"), lb])?;
            }
            cw.flush()?;
            Ok(())
        })?;
        for (t, mu) in &snapshots {
            sink.write(&format!("distribution_n{n}_t{t}.csv"), |w| mu.write_csv(w))?;
        }
        summary.push(json!({
            "n": n,
            "rule": rule.kind().name(),
            "threshold": cfg.threshold,
            "horizon": horizon,
            "tau_mix": tau,
        }));
    }
    sink.summary.insert("exact_tv".into(), json!(summary));
    Ok(())
}

/// Column headers of every CSV artifact, keyed by file stem.
pub fn csv_schemas() -> Vec<(&'static str, Vec<&'static str>)> {
    vec![
        ("eigenfunction", vec!["state", "f_re", "f_im"]),
        ("moment", MOMENT_CSV_HEADER.to_vec()),
        ("lowerbound", LOWERBOUND_CSV_HEADER.to_vec()),
        ("couple", COUPLING_CSV_HEADER.to_vec()),
        ("uniform_time", UNIFORM_TIME_CSV_HEADER.to_vec()),
        ("epochs", EPOCH_CSV_HEADER.to_vec()),
        ("exact_tv", vec!["t", "tv", "tv_lb"]),
        ("distribution", vec!["rank", "prob"]),
    ]
}

/// Reads the manifest written by [`run_experiment`].
pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(dir.join("manifest.json"))?;
    Ok(serde_json::from_str(&text)?)
}
