//! Experiment orchestration: parallel trajectory ensembles, population
//! traces, master-equation cross-checks, and CSV emission.
//!
//! CSV contents are a pure function of the configuration (worker count and
//! wall-clock never enter), so identical configs give byte-identical files.

use crate::analysis::{
    aggregate, population, population_rho, success_probability_rho, Estimator, IterationStats,
};
use crate::config::{resolve, ExperimentConfig, ResolvedExperiment};
use crate::error::{Error, Result};
use crate::hilbert::{initial_state, Level, Site};
use crate::linalg::{norm_sqr, CVec};
use crate::mcwf::{compile_schedule, run_trajectory, IntegratorSettings, TrajectoryResult};
use crate::mesolve::{evolve_me, pure_density};
use crate::model::ModelContext;
use crate::schedule::{compile_algorithm, Schedule};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

/// 17-significant-digit float formatting for reproducibility diffs.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn config_header(cfg: &ExperimentConfig, kind: &str) -> String {
    let mut h = String::new();
    let _ = writeln!(h, "# rydgrover {kind}");
    let _ = writeln!(h, "# rng = chacha8, per-trajectory stream = set_stream(trajectory_id)");
    let _ = writeln!(h, "# master_seed = {}", cfg.seed.unwrap_or_default());
    let scheme = match cfg.scheme {
        crate::hilbert::Scheme::DirectBlockade => "direct",
        crate::hilbert::Scheme::AncillaBlockade => "ancilla",
    };
    let _ = writeln!(h, "# k = {}, scheme = {}, marked = {}", cfg.k, scheme, cfg.marked);
    let _ = writeln!(
        h,
        "# preset = {}, iterations = {}, trajectories = {}",
        cfg.preset.as_deref().unwrap_or("-"),
        cfg.iterations,
        cfg.trajectories
    );
    let estimator = match cfg.estimator {
        Estimator::Expectation => "expectation",
        Estimator::Sampling => "sampling",
    };
    let _ = writeln!(
        h,
        "# estimator = {}, count_rydberg_as_nonzero = {}",
        estimator, cfg.count_rydberg_as_nonzero
    );
    h
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        Ok(f())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        Ok(pool.install(f))
    }
}

/// Run the trajectory ensemble for a resolved experiment and aggregate
/// per-iteration statistics.
pub fn run_trajectories(
    resolved: &ResolvedExperiment,
    settings: &IntegratorSettings,
) -> Result<(Vec<TrajectoryResult>, Vec<IterationStats>)> {
    let schedule = compile_algorithm(&resolved.register, &resolved.params, resolved.iterations)?;
    let cs = compile_schedule(&schedule, &resolved.model, settings)?;
    let init = initial_state(&resolved.register);
    let seed = resolved.seed;
    let results: Vec<TrajectoryResult> = in_pool(resolved.threads, || {
        (0..resolved.trajectories as u64)
            .into_par_iter()
            .map(|id| run_trajectory(&cs, &init, id, seed, settings, None))
            .collect::<Result<Vec<_>>>()
    })??;
    let stats = aggregate(
        &results,
        &resolved.register,
        resolved.register.marked(),
        &resolved.policy,
        resolved.estimator,
    )?;
    Ok((results, stats))
}

pub struct EnsembleOutput {
    pub stats: Vec<IterationStats>,
    pub csv: String,
    pub runtime: Duration,
    pub schedule_duration: f64,
}

/// `run` subcommand: execute the ensemble, write the per-iteration CSV.
pub fn run_ensemble(cfg: &ExperimentConfig) -> Result<EnsembleOutput> {
    let resolved = resolve(cfg)?;
    let settings = IntegratorSettings::default();
    let started = Instant::now();
    let (_, stats) = run_trajectories(&resolved, &settings)?;
    let runtime = started.elapsed();

    let mut csv = config_header(cfg, "ensemble");
    csv.push_str("iteration,success_prob,std_err,n_traj\n");
    for s in &stats {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            s.iteration,
            fmt_f64(s.p_hat),
            fmt_f64(s.std_err),
            s.n_traj
        );
    }
    if let Some(path) = &resolved.out {
        std::fs::write(path, &csv)?;
    }
    let schedule = compile_algorithm(&resolved.register, &resolved.params, resolved.iterations)?;
    Ok(EnsembleOutput {
        stats,
        csv,
        runtime,
        schedule_duration: schedule.total_duration(),
    })
}

pub struct TraceOutput {
    pub csv: String,
    pub rows: usize,
}

/// Upper bound on emitted trace rows; sampling is uniform and deterministic.
const TRACE_MAX_ROWS: usize = 5000;

/// `trace` subcommand: time series of level populations for one trajectory
/// (`me = false`) or the master equation (`me = true`).
pub fn run_trace(cfg: &ExperimentConfig, me: bool) -> Result<TraceOutput> {
    let resolved = resolve(cfg)?;
    if me && resolved.register.k() > 3 {
        return Err(Error::MeTooLarge(resolved.register.k()));
    }
    let schedule = compile_algorithm(&resolved.register, &resolved.params, resolved.iterations)?;
    let settings = IntegratorSettings {
        force_substeps: true,
        ..Default::default()
    };

    let k = resolved.register.k();
    let mut rows: Vec<(f64, Vec<f64>)> = Vec::new();
    let cfg_reg = resolved.register.clone();
    if me {
        let rho0 = pure_density(&initial_state(&cfg_reg));
        let mut obs = |t: f64, rho: &crate::linalg::CMat| {
            let mut pops = Vec::with_capacity(k * 4 + 2);
            for j in 0..k {
                for l in 0..4 {
                    pops.push(population_rho(rho, &cfg_reg, Site::Register(j), l));
                }
            }
            if cfg_reg.has_ancilla() {
                for l in 0..2 {
                    pops.push(population_rho(rho, &cfg_reg, Site::Ancilla, l));
                }
            }
            rows.push((t, pops));
        };
        evolve_me(&rho0, &schedule, &resolved.model, &settings, Some(&mut obs))?;
    } else {
        let cs = compile_schedule(&schedule, &resolved.model, &settings)?;
        let init = initial_state(&cfg_reg);
        let mut obs = |t: f64, state: &CVec| {
            let n2 = norm_sqr(state);
            let mut pops = Vec::with_capacity(k * 4 + 2);
            for j in 0..k {
                for l in 0..4 {
                    pops.push(population(state, &cfg_reg, Site::Register(j), l) / n2);
                }
            }
            if cfg_reg.has_ancilla() {
                for l in 0..2 {
                    pops.push(population(state, &cfg_reg, Site::Ancilla, l) / n2);
                }
            }
            rows.push((t, pops));
        };
        run_trajectory(&cs, &init, 0, resolved.seed, &settings, Some(&mut obs))?;
    }

    // deterministic uniform thinning
    let stride = rows.len().div_ceil(TRACE_MAX_ROWS).max(1);
    let kept: Vec<&(f64, Vec<f64>)> = rows.iter().step_by(stride).collect();

    // drive amplitudes looked up from the segment active at each time
    let mut bounds = Vec::new();
    let mut t0 = 0.0;
    for seg in &schedule.segments {
        let t1 = t0 + seg.duration;
        bounds.push((t0, t1, seg.drive.clone()));
        t0 = t1;
    }
    let drive_at = |t: f64| {
        bounds
            .iter()
            .find(|(a, b, _)| t <= *b && t >= *a && *b > *a)
            .map(|(_, _, d)| d.clone())
            .unwrap_or_else(|| crate::model::DriveSettings::off(k))
    };

    let mut csv = config_header(cfg, if me { "trace (me)" } else { "trace (mcwf)" });
    csv.push_str("time_s");
    for j in 0..k {
        for l in Level::ALL {
            let _ = write!(csv, ",pop_a{}_{}", j, l.tag());
        }
    }
    if cfg_reg.has_ancilla() {
        csv.push_str(",pop_anc_g,pop_anc_R");
    }
    csv.push_str(",mw_amp_rad_s");
    for j in 0..k {
        let _ = write!(csv, ",laser_amp_a{j}_rad_s");
    }
    if cfg_reg.has_ancilla() {
        csv.push_str(",laser_amp_anc_rad_s");
    }
    csv.push('\n');
    for (t, pops) in &kept {
        let _ = write!(csv, "{}", fmt_f64(*t));
        for p in pops {
            let _ = write!(csv, ",{}", fmt_f64(*p));
        }
        let d = drive_at(*t);
        let _ = write!(csv, ",{}", fmt_f64(d.mw_amp));
        for j in 0..k {
            let _ = write!(csv, ",{}", fmt_f64(d.laser_amp[j]));
        }
        if cfg_reg.has_ancilla() {
            let _ = write!(csv, ",{}", fmt_f64(d.ancilla_laser_amp));
        }
        csv.push('\n');
    }
    if let Some(path) = &resolved.out {
        std::fs::write(path, &csv)?;
    }
    Ok(TraceOutput {
        csv,
        rows: kept.len(),
    })
}

/// One row of the master-equation cross-check.
#[derive(Debug, Clone)]
pub struct MecheckRow {
    pub iteration: usize,
    pub p_mcwf: f64,
    pub std_err: f64,
    pub p_me: f64,
    pub z: f64,
}

pub struct MecheckReport {
    pub rows: Vec<MecheckRow>,
    pub max_success_z: f64,
    pub max_population_z: f64,
    pub pass: bool,
    pub text: String,
}

/// Zero-noise comparisons degenerate to an absolute 1e−6 bound: the standard
/// error is floored so that z = 3 corresponds to |Δp| = 1e−6 when SE = 0.
const SIGMA_FLOOR: f64 = 1e-6 / 3.0;

/// `mecheck` subcommand: run the master equation and the trajectory ensemble
/// side by side, compare per-iteration success probabilities (and level
/// populations) in standard-error units.
pub fn run_mecheck(cfg: &ExperimentConfig) -> Result<MecheckReport> {
    let resolved = resolve(cfg)?;
    mecheck_with_models(cfg, &resolved, &resolved.model)
}

/// Inner comparison with an independently supplied trajectory-side model, so
/// tests can deliberately corrupt one side.
pub fn mecheck_with_models(
    cfg: &ExperimentConfig,
    resolved: &ResolvedExperiment,
    mcwf_model: &ModelContext,
) -> Result<MecheckReport> {
    let k = resolved.register.k();
    if k > 3 {
        return Err(Error::MeTooLarge(k));
    }
    let settings = IntegratorSettings::default();
    let schedule = compile_algorithm(&resolved.register, &resolved.params, resolved.iterations)?;

    // trajectory side
    let cs = compile_schedule(&schedule, mcwf_model, &settings)?;
    let init = initial_state(&resolved.register);
    let seed = resolved.seed;
    let results: Vec<TrajectoryResult> = in_pool(resolved.threads, || {
        (0..resolved.trajectories as u64)
            .into_par_iter()
            .map(|id| run_trajectory(&cs, &init, id, seed, &settings, None))
            .collect::<Result<Vec<_>>>()
    })??;
    let stats = aggregate(
        &results,
        &resolved.register,
        resolved.register.marked(),
        &resolved.policy,
        Estimator::Expectation,
    )?;

    // master-equation side
    let me = evolve_me(
        &pure_density(&init),
        &schedule,
        &resolved.model,
        &settings,
        None,
    )?;

    let n = results.len() as f64;
    let mut rows = Vec::new();
    let mut max_success_z = 0.0f64;
    for (s, rho) in stats.iter().zip(me.marker_rhos.iter()) {
        let p_me = success_probability_rho(
            rho,
            &resolved.register,
            resolved.register.marked(),
            &resolved.policy,
        )?;
        let z = (s.p_hat - p_me).abs() / s.std_err.max(SIGMA_FLOOR);
        max_success_z = max_success_z.max(z);
        rows.push(MecheckRow {
            iteration: s.iteration,
            p_mcwf: s.p_hat,
            std_err: s.std_err,
            p_me,
            z,
        });
    }

    // level populations, binomial standard errors around the ME value
    let mut max_population_z = 0.0f64;
    let sites: Vec<Site> = (0..k)
        .map(Site::Register)
        .chain(resolved.register.has_ancilla().then_some(Site::Ancilla))
        .collect();
    for (m, rho) in me.marker_rhos.iter().enumerate() {
        for &site in &sites {
            let levels = match site {
                Site::Register(_) => 4,
                Site::Ancilla => 2,
            };
            for l in 0..levels {
                let p_me = population_rho(rho, &resolved.register, site, l).clamp(0.0, 1.0);
                let p_hat = results
                    .iter()
                    .map(|r| population(&r.marker_states[m], &resolved.register, site, l))
                    .sum::<f64>()
                    / n;
                let sigma = (p_me * (1.0 - p_me) / n).sqrt().max(SIGMA_FLOOR);
                max_population_z = max_population_z.max((p_hat - p_me).abs() / sigma);
            }
        }
    }

    let pass = max_success_z <= 3.0;
    let mut text = config_header(cfg, "mecheck");
    let _ = writeln!(text, "iteration  p_mcwf        std_err       p_me          |z|");
    for r in &rows {
        let _ = writeln!(
            text,
            "{:9}  {:.6e}  {:.6e}  {:.6e}  {:.3}",
            r.iteration, r.p_mcwf, r.std_err, r.p_me, r.z
        );
    }
    let _ = writeln!(text, "max success |z| = {max_success_z:.3} (threshold 3)");
    let _ = writeln!(text, "max population |z| = {max_population_z:.3}");
    let _ = writeln!(text, "result: {}", if pass { "PASS" } else { "FAIL" });
    if let Some(path) = &resolved.out {
        std::fs::write(path, &text)?;
    }
    Ok(MecheckReport {
        rows,
        max_success_z,
        max_population_z,
        pass,
        text,
    })
}

/// `schedule` subcommand: the compiled pulse table.
pub fn dump_schedule(cfg: &ExperimentConfig) -> Result<String> {
    let resolved = resolve(cfg)?;
    let schedule: Schedule =
        compile_algorithm(&resolved.register, &resolved.params, resolved.iterations)?;
    let table = schedule.dump_table();
    if let Some(path) = &resolved.out {
        std::fs::write(path, &table)?;
    }
    Ok(table)
}
