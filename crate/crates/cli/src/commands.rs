//! The five subcommands.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smfft_core::lattice::{dense_grid_samples, dense_md_coefficients};
use smfft_core::numtheory::mod_inverse;
use smfft_core::selftest::{self, Hooks, SuiteResult};
use smfft_core::signal::{make_noise, DENSE_LIMIT};
use smfft_core::{md_sfft, Error, MdOutput, MdSpectrum, NoiseModel, RankOneLattice, SupportParams};

use crate::config::{Format, RunConfig};
use crate::error::CliError;
use crate::report::{rows_to_csv, rows_to_json, RunReport, SweepRow};
use crate::signal_file::read_signal;

/// Sparsity levels swept by `bench-r`.
pub const R_SWEEP: [usize; 6] = [8, 16, 32, 64, 128, 256];
/// Smallest and largest `log₂ N` visited by `bench-n`.
pub const N_SWEEP_LOG2: (u32, u32) = (15, 45);

/// A ground-truth spectrum, how its samples are corrupted, and the
/// parameters to recover it with.
#[derive(Debug, Clone)]
pub struct Problem {
    pub truth: MdSpectrum,
    pub noise: NoiseModel,
    pub params: SupportParams,
}

/// Random `r`-sparse spectrum on `lattice` with amplitudes uniform in `[μ, μΔ]`.
pub fn synthetic_spectrum<R: Rng + ?Sized>(
    lattice: &RankOneLattice,
    r: usize,
    params: &SupportParams,
    rng: &mut R,
) -> MdSpectrum {
    let total = lattice.total();
    let r = (r as u64).min(total) as usize;
    let (lo, hi) = (params.mu, params.mu * params.delta_ratio);
    let mut entries = std::collections::BTreeMap::new();
    while entries.len() < r {
        let j = rng.random_range(0..total);
        let v = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        entries.entry(lattice.unflatten_index(j).expect("in range")).or_insert(v);
    }
    MdSpectrum::new(lattice.clone(), entries).expect("valid by construction")
}

/// Seed of the noise stream for a synthetic signal, decorrelated from the
/// algorithm's own stream.
pub fn noise_seed(seed: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0x6E6F_6973_6521
}

fn signal_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Synthetic problem on `M^d` with the configured sparsity and noise.
pub fn synthetic_problem(lattice: &RankOneLattice, params: &SupportParams, seed: u64) -> Problem {
    let truth = synthetic_spectrum(lattice, params.r_bound, params, &mut signal_rng(seed));
    let noise = if params.eta > 0.0 { NoiseModel::gaussian(params.eta, noise_seed(seed)) } else { NoiseModel::NONE };
    Problem { truth, noise, params: *params }
}

/// The problem a single-run command works on: the `--signal` file, or a
/// synthetic signal from `--m`, `--d`, `--r`.
pub fn load_problem(cfg: &RunConfig) -> Result<Problem, CliError> {
    match &cfg.signal_path {
        Some(path) => {
            let signal = read_signal(path)?;
            let mut params = cfg.params;
            if !cfg.r_given {
                params.r_bound = signal.spectrum.len().max(1);
            }
            if !cfg.eta_given {
                params.eta = signal.noise.eta;
            }
            params.validate()?;
            Ok(Problem { truth: signal.spectrum, noise: signal.noise, params })
        }
        None => {
            let lattice = RankOneLattice::new(cfg.dims, cfg.axis_size)?;
            Ok(synthetic_problem(&lattice, &cfg.params, cfg.seed))
        }
    }
}

/// Runs the transform on `problem` with the algorithm seeded by `seed`.
pub fn solve(problem: &Problem, seed: u64) -> Result<MdOutput, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = make_noise(&problem.noise)?;
    let flat = problem.truth.flatten();
    Ok(md_sfft(&flat, noise, problem.truth.lattice(), &problem.params, &mut rng)?)
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn report(problem: &Problem, out: &MdOutput, rel_l2_error: Option<f64>, seed: u64) -> RunReport {
    let lattice = problem.truth.lattice();
    RunReport {
        dims: lattice.dims(),
        axis_size: lattice.axis_size(),
        recovered: RunReport::entries(&out.spectrum),
        rel_l2_error,
        unique_samples: out.unique_samples,
        wall_time_ms: ms(out.elapsed),
        solver_time_ms: ms(out.solver_time()),
        ladder_steps: out.ladder_steps,
        redraws_used: out.draws.saturating_sub(1),
        seed,
    }
}

/// Relative ℓ₂ error against the known spectrum; 0 when both are empty.
pub fn relative_error(recovered: &MdSpectrum, truth: &MdSpectrum) -> f64 {
    let (rec, tru) = (recovered.flatten(), truth.flatten());
    if tru.is_empty() {
        rec.l2_norm()
    } else {
        rec.relative_error(&tru)
    }
}

pub fn cmd_transform(cfg: &RunConfig) -> Result<RunReport, CliError> {
    let problem = load_problem(cfg)?;
    let out = solve(&problem, cfg.seed)?;
    let err = relative_error(&out.spectrum, &problem.truth);
    Ok(report(&problem, &out, Some(err), cfg.seed))
}

/// Relative ℓ₂ distance between `recovered` and the dense transform of the
/// noiseless grid samples of `truth`.
pub fn dense_relative_error(recovered: &MdSpectrum, truth: &MdSpectrum) -> Result<f64, CliError> {
    let lattice = truth.lattice();
    let dense = dense_md_coefficients(&dense_grid_samples(truth)?, lattice)?;
    let (mut err, mut norm) = (0.0, 0.0);
    for (k, c) in dense.iter().enumerate() {
        let idx = lattice.unflatten_index(k as u64)?;
        let got = recovered.entries().get(&idx).copied().unwrap_or(0.0);
        err += (c - Complex64::new(got, 0.0)).norm_sqr();
        norm += c.norm_sqr();
    }
    Ok(if norm > 0.0 { (err / norm).sqrt() } else { err.sqrt() })
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<RunReport, CliError> {
    let problem = load_problem(cfg)?;
    let total = problem.truth.lattice().total();
    if total > DENSE_LIMIT {
        return Err(Error::OracleTooLarge { size: total, limit: DENSE_LIMIT }.into());
    }
    let out = solve(&problem, cfg.seed)?;
    let err = dense_relative_error(&out.spectrum, &problem.truth)?;
    Ok(report(&problem, &out, Some(err), cfg.seed))
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// Error tolerance that counts a trial as a success.
pub fn success_tolerance(eta: f64) -> f64 {
    if eta > 0.0 {
        3.0 * eta
    } else {
        1e-8
    }
}

/// Runs `trials` seeded problems (plus one discarded warm-up) at one sweep point.
pub fn sweep_point(lattice: &RankOneLattice, params: &SupportParams, seed: u64, trials: usize) -> SweepRow {
    let _ = solve(&synthetic_problem(lattice, params, seed), seed);
    let mut solver = Vec::with_capacity(trials);
    let mut wall = Vec::with_capacity(trials);
    let mut samples = 0.0;
    let mut worst = 0.0f64;
    let mut successes = 0usize;
    for t in 0..trials as u64 {
        let trial_seed = seed.wrapping_add(t);
        let problem = synthetic_problem(lattice, params, trial_seed);
        match solve(&problem, trial_seed) {
            Ok(out) => {
                solver.push(ms(out.solver_time()));
                wall.push(ms(out.elapsed));
                samples += out.unique_samples as f64;
                let err = relative_error(&out.spectrum, &problem.truth);
                worst = worst.max(err);
                let exact = out.spectrum.entries().keys().eq(problem.truth.entries().keys());
                successes += usize::from(exact && err <= success_tolerance(params.eta));
            }
            Err(_) => worst = f64::INFINITY,
        }
    }
    let completed = solver.len().max(1) as f64;
    let dense_ms = (lattice.total() <= 1 << 20).then(|| dense_baseline_ms(lattice, params, seed, trials));
    SweepRow {
        n: lattice.total(),
        r: params.r_bound,
        d: lattice.dims(),
        eta: params.eta,
        seed,
        time_ms: median(&mut solver),
        samples: samples / completed,
        rel_l2_error: worst,
        success: successes as f64 / trials as f64,
        wall_ms: median(&mut wall),
        dense_ms,
    }
}

fn dense_baseline_ms(lattice: &RankOneLattice, params: &SupportParams, seed: u64, trials: usize) -> f64 {
    let problem = synthetic_problem(lattice, params, seed);
    let grid = dense_grid_samples(&problem.truth).expect("size checked by caller");
    let _ = dense_md_coefficients(&grid, lattice);
    let mut times: Vec<f64> = (0..trials.clamp(1, 5))
        .map(|_| {
            let start = Instant::now();
            let _ = dense_md_coefficients(&grid, lattice);
            ms(start.elapsed())
        })
        .collect();
    median(&mut times)
}

/// Lattices visited by `bench-n`: power-of-two axes with `N` between 2^15
/// and 2^45, capped at `M ≤ max_axis`.
pub fn n_sweep_lattices(dims: usize, max_axis: u64) -> Result<Vec<RankOneLattice>, CliError> {
    if dims == 0 {
        return Err(CliError::Config("--d must be at least 1".into()));
    }
    let d = dims as u32;
    let (lo, hi) = N_SWEEP_LOG2;
    let mut out = Vec::new();
    for k in lo.div_ceil(d)..=hi / d {
        let m = 1u64 << k;
        if m > max_axis {
            break;
        }
        out.push(RankOneLattice::new(dims, m)?);
    }
    if out.is_empty() {
        return Err(CliError::Config(format!("no grid with 2^{lo} <= N <= 2^{hi} and M <= {max_axis}")));
    }
    Ok(out)
}

pub fn cmd_bench_n(cfg: &RunConfig, max_axis: u64) -> Result<Vec<SweepRow>, CliError> {
    let lattices = n_sweep_lattices(cfg.dims, max_axis)?;
    Ok(lattices.iter().map(|lat| sweep_point(lat, &cfg.params, cfg.seed, cfg.trials)).collect())
}

pub fn cmd_bench_r(cfg: &RunConfig) -> Result<Vec<SweepRow>, CliError> {
    let lattice = RankOneLattice::new(cfg.dims, cfg.axis_size)?;
    R_SWEEP
        .iter()
        .map(|&r| {
            let params = SupportParams { r_bound: r, ..cfg.params };
            params.validate()?;
            Ok(sweep_point(&lattice, &params, cfg.seed, cfg.trials))
        })
        .collect()
}

fn broken_mod_inverse(q: u64, m: u64) -> smfft_core::Result<u64> {
    mod_inverse(q, m).map(|inv| if m > 100 { (inv + 1) % m } else { inv })
}

pub fn cmd_selftest(cfg: &RunConfig) -> Vec<SuiteResult> {
    let hooks = if cfg.break_mod_inverse { Hooks { mod_inverse: broken_mod_inverse } } else { Hooks::default() };
    selftest::run_all(&hooks, cfg.seed)
}

fn emit(cfg: &RunConfig, text: &str) -> Result<(), CliError> {
    match &cfg.output {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io { path: path.clone(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn single_run_csv(cfg: &RunConfig, report: &RunReport) -> String {
    let success = report.rel_l2_error.is_some_and(|e| e <= success_tolerance(cfg.params.eta));
    let row = SweepRow {
        n: report.axis_size.pow(report.dims as u32),
        r: cfg.params.r_bound,
        d: report.dims,
        eta: cfg.params.eta,
        seed: report.seed,
        time_ms: report.solver_time_ms,
        samples: report.unique_samples as f64,
        rel_l2_error: report.rel_l2_error.unwrap_or(f64::NAN),
        success: f64::from(u8::from(success)),
        wall_ms: report.wall_time_ms,
        dense_ms: None,
    };
    rows_to_csv(&[row])
}

/// Executes the configured command and writes its output.
pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    use crate::config::CommandKind as C;
    match cfg.command {
        C::Transform | C::Verify => {
            let report = if cfg.command == C::Transform { cmd_transform(cfg)? } else { cmd_verify(cfg)? };
            let text = match cfg.format {
                Format::Json => report.to_json(),
                Format::Csv => single_run_csv(cfg, &report),
            };
            emit(cfg, &text)
        }
        C::BenchN | C::BenchR => {
            let rows = if cfg.command == C::BenchN { cmd_bench_n(cfg, cfg.axis_size)? } else { cmd_bench_r(cfg)? };
            let text = match cfg.format {
                Format::Csv => rows_to_csv(&rows),
                Format::Json => rows_to_json(&rows),
            };
            emit(cfg, &text)
        }
        C::Selftest => {
            let results = cmd_selftest(cfg);
            let failed = results.iter().filter(|r| !r.passed).count();
            let mut text = String::new();
            for r in &results {
                let verdict = if r.passed { "PASS" } else { "FAIL" };
                text.push_str(&format!("{verdict} {:<20} {:>8.1} ms  {}\n", r.name, ms(r.elapsed), r.detail));
            }
            text.push_str(&format!("{} of {} suites passed\n", results.len() - failed, results.len()));
            if cfg.format == Format::Json && cfg.output.is_some() {
                let mut json = serde_json::to_string_pretty(&results).expect("results serialize");
                json.push('\n');
                emit(cfg, &json)?;
                print!("{text}");
            } else {
                emit(cfg, &text)?;
            }
            if failed == 0 {
                Ok(())
            } else {
                Err(CliError::SelftestFailed { failed })
            }
        }
    }
}
