//! Acceptance suite. Each test checks one criterion and prints a single
//! `PASS`/`FAIL` line with the measured quantities, written straight to
//! stdout so it shows up without `--nocapture`.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use shuffle_spectra::coupling::{
    coupled_step, run_coupling_batch, CoupledState, UnglueReport,
};
use shuffle_spectra::exact::{
    exact_mixing_time, default_threshold, factorial, perm_rank, perm_unrank, ExactDistribution,
    ExactKernel,
};
use shuffle_spectra::experiment::{run_experiment, ConfigFile, ExperimentKind};
use shuffle_spectra::marking::{
    chi_squared_uniform, epoch_check, epoch_stats, final_deck_counts, run_uniform_time_batch,
};
use shuffle_spectra::shuffle::{from_renewal_frame, to_renewal_frame};
use shuffle_spectra::spectral::{all_gamma_roots, renewal_row, solve_zeta, RenewalMatrix};
use shuffle_spectra::statistic::{
    distinguisher_advantage, moment_experiment_with, sample_statistic, sample_uniform,
    tv_lower_bound, uniform_control, TestStatistic,
};
use shuffle_spectra::{Permutation, ShuffleRule};

const SEED: u64 = 20_240_101;
const SIGMAS: f64 = 4.0;

fn report(name: &str, passed: bool, detail: &str) {
    let line = format!("[{}] {name}: {detail}\n", if passed { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(passed, "{name}: {detail}");
}

fn within_budget(start: Instant, budget: Duration) -> (bool, String) {
    let e = start.elapsed();
    (e <= budget, format!("{:.2?} (budget {:?})", e, budget))
}

fn trunc3(x: f64) -> f64 {
    (x * 1000.0).floor() / 1000.0
}

#[test]
fn criterion_01_root_of_psi() {
    let start = Instant::now();
    let z = solve_zeta(1, 1e-12).unwrap();
    let (ok_t, time) = within_budget(start, Duration::from_secs(1));
    let residual = (z.exp() - z - 1.0).norm();
    let mag = (z + 1.0).norm();
    let passed = trunc3(z.re) == 2.088
        && trunc3(z.im) == 7.461
        && trunc3(mag) == 8.075
        && residual <= 1e-12
        && ok_t;
    report(
        "root of e^z - z - 1",
        passed,
        &format!("zeta = {z:.12}, |1+zeta| = {mag:.9}, residual = {residual:.2e}, time {time}"),
    );
}

#[test]
fn criterion_02_small_n_spectrum() {
    let mut worst: f64 = 0.0;
    let mut detail = String::new();
    let mut passed = true;
    for n in 3..=12usize {
        let nf = n as f64;
        let mut expected: Vec<Complex64> = all_gamma_roots(n)
            .unwrap()
            .into_iter()
            .filter(|g| (g - 1.0).norm() > 1e-9)
            .map(|g| g * (1.0 - 1.0 / nf))
            .collect();
        expected.push(Complex64::new(1.0, 0.0));
        expected.push(Complex64::new(0.0, 0.0));
        let mut dense = RenewalMatrix::new(n).unwrap().dense_eigenvalues().unwrap();
        if dense.len() != expected.len() {
            passed = false;
            detail += &format!("n={n}: {} vs {} eigenvalues; ", dense.len(), expected.len());
            continue;
        }
        for e in &expected {
            let (k, d) = dense
                .iter()
                .enumerate()
                .map(|(k, x)| (k, (x - e).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            worst = worst.max(d);
            dense.swap_remove(k);
        }
    }
    passed &= worst <= 1e-8;
    let l3 = all_gamma_roots(3)
        .unwrap()
        .into_iter()
        .find(|g| (g - 1.0).norm() > 1e-9)
        .unwrap()
        * (2.0 / 3.0);
    let err3 = (l3 + 1.0 / 3.0).norm();
    passed &= err3 <= 1e-12;
    report(
        "small-n spectrum against dense eigensolve (n = 3..12)",
        passed,
        &format!("max matching distance {worst:.2e}; n=3 lambda error {err3:.2e}; {detail}"),
    );
}

#[test]
fn criterion_03_eigenfunction_identities() {
    let mut passed = true;
    let mut detail = vec![];
    for n in [8usize, 64, 1024, 100_000] {
        let s = TestStatistic::branch(n, 1).unwrap();
        let ef = s.eigenfunction();
        let f0 = ef.values[0].norm();
        let f1 = (ef.values[1] - 1.0).norm();
        let sum = ef.sum().norm() / (n as f64 * ef.norm_inf);
        let res = ef.residual() / ef.norm_inf;
        let ok = f0 == 0.0 && f1 == 0.0 && sum <= 1e-10 && res <= 1e-10;
        passed &= ok;
        detail.push(format!("n={n}: |sum f|/(n|f|inf) {sum:.1e}, residual/|f|inf {res:.1e}"));
    }
    report("eigenfunction identities", passed, &detail.join("; "));
}

#[test]
fn criterion_04_moment_formulas() {
    let start = Instant::now();
    let n = 64;
    let s = TestStatistic::branch(n, 1).unwrap();
    let times = [0, n as u64, 2 * n as u64, 4 * n as u64];
    let rows = moment_experiment_with(&s, &times, 100_000, SEED).unwrap();
    let ctl = uniform_control(&s, 100_000, SEED).unwrap();
    let (ok_t, time) = within_budget(start, Duration::from_secs(120));
    let mut passed = ok_t;
    let mut detail = vec![];
    for r in &rows {
        let z = (r.empirical_mean - r.predicted_mean).norm() / r.std_error.max(f64::MIN_POSITIVE);
        passed &= r.mean_within(SIGMAS) && r.second_moment_within(SIGMAS);
        detail.push(format!(
            "t={}: mean dev {:.2} se, m2 {:.3e} <= {:.3e}",
            r.t,
            if r.std_error == 0.0 { 0.0 } else { z },
            r.empirical_second_moment,
            r.second_moment_bound
        ));
    }
    passed &= rows[0].empirical_mean == rows[0].predicted_mean;
    let dev = (ctl.empirical_second_moment - ctl.stationary_second_moment).abs();
    passed &= dev <= SIGMAS * ctl.second_moment_std_error;
    passed &= ctl.empirical_mean.norm() <= SIGMAS * ctl.std_error;
    detail.push(format!(
        "stationary m2 {:.5e} vs {:.5e} ({:.2} se)",
        ctl.empirical_second_moment,
        ctl.stationary_second_moment,
        dev / ctl.second_moment_std_error
    ));
    report(
        "moment formulas at n=64",
        passed,
        &format!("{}; time {time}", detail.join("; ")),
    );
}

#[test]
fn criterion_05_exact_tv_inequality() {
    let mut passed = true;
    let mut detail = vec![];
    for n in [5usize, 6, 7] {
        let start = Instant::now();
        let s = TestStatistic::slowest_exact(n).unwrap();
        let horizon = (4.0 * n as f64 * (n as f64).ln()).floor() as u64;
        let res = exact_mixing_time(n, &ShuffleRule::cyclic(n), default_threshold(), horizon).unwrap();
        let violations: Vec<u64> = res
            .tv_curve
            .iter()
            .filter(|&&(t, tv)| tv_lower_bound(&s, t) > tv)
            .map(|&(t, _)| t)
            .collect();
        let slack = res
            .tv_curve
            .iter()
            .map(|&(t, tv)| tv - tv_lower_bound(&s, t))
            .fold(f64::INFINITY, f64::min);
        let (ok_t, time) = within_budget(start, Duration::from_secs(300));
        passed &= violations.is_empty() && ok_t;
        detail.push(format!(
            "n={n}: t<={horizon}, violations {violations:?}, min slack {slack:.2e}, time {time}"
        ));
    }
    report("exact total variation dominates the lower bound", passed, &detail.join("; "));
}

#[test]
fn criterion_06_lower_bound_separation() {
    let start = Instant::now();
    let n = 1024usize;
    let nl = n as f64 * (n as f64).ln();
    let (t_early, t_late) = ((0.05 * nl).floor() as u64, (3.0 * nl).floor() as u64);
    let s = TestStatistic::branch(n, 1).unwrap();
    let (times, samples) = sample_statistic(&s, &[t_early, t_late], 10_000, SEED).unwrap();
    let uniform = sample_uniform(&s, 10_000, SEED).unwrap();
    let adv: Vec<f64> = times
        .iter()
        .zip(&samples)
        .map(|(&t, x)| distinguisher_advantage(x, &uniform, s.predicted_mean(t).arg()).unwrap().value)
        .collect();
    let (ok_t, time) = within_budget(start, Duration::from_secs(600));
    let passed = adv[0] >= 0.2 && adv[1] <= 0.05 && ok_t;
    report(
        "distinguisher separation at n=1024",
        passed,
        &format!(
            "advantage {:.4} at t={t_early} (>= 0.2), {:.4} at t={t_late} (<= 0.05); time {time}",
            adv[0], adv[1]
        ),
    );
}

/// Exact one-step law of the shuffle from the renewal configuration
/// `sigma` at time 0, computed by the raw-frame kernel and mapped back.
fn kernel_law(kernel: &ExactKernel, sigma: &Permutation) -> BTreeMap<u64, f64> {
    let n = sigma.n();
    let raw = from_renewal_frame(sigma, 0);
    let mu = ExactDistribution::point_mass(&raw).unwrap();
    let next = kernel.step(&mu, 1 % n).unwrap();
    next.probs()
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(k, &p)| {
            let q = to_renewal_frame(&perm_unrank(n, k as u64).unwrap(), 1);
            (perm_rank(&q), p)
        })
        .collect()
}

/// `n * M[x][y]` as integers, from the matrix rows.
fn scaled_row(n: usize, x: usize) -> BTreeMap<usize, u64> {
    renewal_row(n, x)
        .unwrap()
        .into_iter()
        .map(|(y, p)| {
            let k = (p * n as f64).round();
            assert!((p * n as f64 - k).abs() < 1e-9);
            (y, k as u64)
        })
        .collect()
}

/// Checks every coupled state of a deck of size `n` by enumerating all
/// draws. Returns the number of states checked.
fn coupling_marginals_exact(n: usize) -> Result<u64, String> {
    let kernel = ExactKernel::new(n).unwrap();
    let mut checked = 0;
    for rank in 0..factorial(n) {
        let sigma = perm_unrank(n, rank).unwrap();
        // kernel probabilities are multiples of 1/n
        let law: BTreeMap<u64, u64> = kernel_law(&kernel, &sigma)
            .into_iter()
            .map(|(k, p)| {
                let c = (p * n as f64).round();
                assert!((p * n as f64 - c).abs() < 1e-9);
                (k, c as u64)
            })
            .collect();
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                for eta_i in 0..n {
                    for eta_j in 0..n {
                        let state = CoupledState::with_copies(&sigma, i, j, eta_i, eta_j).unwrap();
                        // glued states draw (r, v); unglued draw (r, r1, r2)
                        let draws: Vec<[usize; 3]> = if state.glued {
                            (0..n * n).map(|k| [k / n, k % n, 0]).collect()
                        } else {
                            (0..n * n * n).map(|k| [k / (n * n), (k / n) % n, k % n]).collect()
                        };
                        let weight = (draws.len() / n) as u64;
                        let mut sig: BTreeMap<u64, u64> = BTreeMap::new();
                        let mut cop: BTreeMap<(usize, usize), u64> = BTreeMap::new();
                        for d in &draws {
                            let mut s = state.clone();
                            if s.glued {
                                s.step_with(d[0], d[1], 0, 0);
                            } else {
                                s.step_with(d[0], 0, d[1], d[2]);
                            }
                            *sig.entry(perm_rank(&s.sigma.permutation())).or_default() += 1;
                            *cop.entry((s.eta_i, s.etatilde_j)).or_default() += 1;
                        }
                        // sigma marginal: counts / |draws| == law / n
                        let want: BTreeMap<u64, u64> = law.iter().map(|(&k, &c)| (k, c * weight)).collect();
                        if sig != want {
                            return Err(format!("sigma marginal differs at rank {rank}, i={i}, j={j}"));
                        }
                        let (ra, rb) = (scaled_row(n, eta_i), scaled_row(n, eta_j));
                        let scale = draws.len() as u64 / (n * n) as u64;
                        let mut prod = BTreeMap::new();
                        for (&x, &p) in &ra {
                            for (&y, &q) in &rb {
                                prod.insert((x, y), p * q * scale);
                            }
                        }
                        if cop != prod {
                            return Err(format!("copies marginal differs at rank {rank}, i={i}, j={j}"));
                        }
                        checked += 1;
                    }
                }
            }
        }
    }
    Ok(checked)
}

#[test]
fn criterion_07_coupling() {
    let mut passed = true;
    let mut detail = vec![];
    for n in [4usize, 5] {
        match coupling_marginals_exact(n) {
            Ok(c) => detail.push(format!("n={n}: {c} coupled states exact")),
            Err(e) => {
                passed = false;
                detail.push(format!("n={n}: {e}"));
            }
        }
    }
    let (n, t) = (64usize, 256u64);
    let runs = run_coupling_batch(n, 1, 2, t, 100_000, SEED).unwrap();
    let rep = UnglueReport::from_runs(n, t, &runs).unwrap();
    passed &= rep.holds(SIGMAS);
    detail.push(format!(
        "n=64 t=256: P(unglue) {:.5} <= bound {:.5} + 4 * {:.1e}",
        rep.unglue_prob, rep.bound, rep.std_error
    ));
    // a sampled step goes through the same table
    let mut s = CoupledState::new(6, 0, 3).unwrap();
    let mut rng = shuffle_spectra::rng::stream(SEED, shuffle_spectra::rng::Domain::Coupling, 0);
    for _ in 0..100 {
        coupled_step(&mut s, &mut rng).unwrap();
    }
    passed &= s.check().is_ok();
    report("coupling marginals and unglue bound", passed, &detail.join("; "));
}

#[test]
fn criterion_08_strong_uniform_time() {
    let n = 5;
    let mut passed = true;
    let mut detail = vec![];
    for rule in [ShuffleRule::cyclic(n), ShuffleRule::star(n)] {
        let runs = run_uniform_time_batch(n, &rule, 100_000, SEED, 1_000_000).unwrap();
        let reached = runs.iter().filter(|r| r.outcome.time().is_some()).count();
        let test = chi_squared_uniform(&final_deck_counts(n, &runs)).unwrap();
        let counting = runs.iter().all(|r| r.trace.zero_visits.iter().sum::<u64>() == r.trace.steps);
        passed &= reached == runs.len() && test.p_value > 1e-3 && counting;
        detail.push(format!(
            "{}: chi2 {:.1} on {} dof, p = {:.3}, counting identity {}",
            rule.kind(),
            test.statistic,
            test.dof,
            test.p_value,
            if counting { "exact" } else { "broken" }
        ));
    }
    // the renewal-frame version on coupled runs
    let runs = run_coupling_batch(16, 1, 2, 300, 2_000, SEED).unwrap();
    let counting = runs.iter().all(|r| r.zero_visits.iter().sum::<u64>() == 300);
    passed &= counting;
    detail.push(format!("state-0 visits sum to t in all {} coupled runs: {counting}", runs.len()));
    report("strong uniform time at n=5", passed, &detail.join("; "));
}

#[test]
fn criterion_09_epoch_machinery() {
    let n = 256usize;
    let nf = n as f64;
    let runs = run_uniform_time_batch(n, &ShuffleRule::cyclic(n), 10_000, SEED, 1_000_000).unwrap();
    let stats: Vec<_> = runs.iter().map(|r| epoch_stats(&r.trace).unwrap()).collect();
    let check = epoch_check(n, &stats);
    let tail = runs
        .iter()
        .filter(|r| r.outcome.time().map_or(true, |t| t as f64 > 8.0 * nf * nf.ln()))
        .count() as f64
        / runs.len() as f64;
    let worst = check
        .drift_bins
        .iter()
        .map(|b| if b.std_error > 0.0 { b.mean_excess / b.std_error } else if b.mean_excess > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY })
        .fold(f64::NEG_INFINITY, f64::max);
    let passed = check.increment_violations == 0
        && check.drift_holds(SIGMAS)
        && check.big_d_holds(SIGMAS)
        && tail <= 0.05;
    report(
        "epoch machinery at n=256",
        passed,
        &format!(
            "increment violations {}, {} drift bins (worst {:.2} se), P(D_k >= theta n m_k/2 | m_k < 1/2) = {:.4} over {} epochs (>= {:.2e}), P(T > 8 n ln n) = {tail}",
            check.increment_violations,
            check.drift_bins.len(),
            worst,
            check.big_d_frequency,
            check.big_d_epochs,
            check.theta * check.theta / 8.0
        ),
    );
}

fn csv_outputs(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn criterion_10_determinism() {
    let configs = [
        (ExperimentKind::ExactTv, r#"{"n": 5, "rule": "cyclic"}"#),
        (ExperimentKind::Spectra, r#"{"n": [7, 64, 1000]}"#),
        (ExperimentKind::Moment, r#"{"n": 32, "replicas": 2000, "seed": 3}"#),
        (ExperimentKind::Lowerbound, r#"{"n": 64, "replicas": 1000, "seed": 4}"#),
        (ExperimentKind::Couple, r#"{"n": 16, "t": "4n", "replicas": 10000, "seed": 5}"#),
        (ExperimentKind::UniformTime, r#"{"n": [5, 32], "rule": "pak", "runs": 2000, "seed": 6}"#),
    ];
    let root = tempfile::tempdir().unwrap();
    let mut passed = true;
    let mut detail = vec![];
    for (kind, json) in configs {
        let mut outputs = vec![];
        for (run, threads) in [(0, 1usize), (1, 8), (2, 1)] {
            let mut cfg = ConfigFile::from_json(json).unwrap().resolve(kind).unwrap();
            cfg.out = root.path().join(format!("{kind}-{run}"));
            let m = run_experiment(&cfg, threads).unwrap();
            assert!(m.complete);
            outputs.push(csv_outputs(&cfg.out));
        }
        let same = outputs.windows(2).all(|w| w[0] == w[1]) && !outputs[0].is_empty();
        passed &= same;
        detail.push(format!("{kind}: {} files {}", outputs[0].len(), if same { "identical" } else { "DIFFER" }));
    }
    report("byte-identical outputs at 1 and 8 threads", passed, &detail.join("; "));
}
