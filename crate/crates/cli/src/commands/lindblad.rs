//! `lindblad`: integrates dρ/dt for a configured model and initial state.
//!
//! Config keys: dim, h (dim² re,im pairs, row-major), l0 l1 … (Lindblad
//! operators, same layout), one of psi0 (dim pairs) or rho0 (dim² pairs),
//! t_max, points, dt_max.
//!
//! CSV artifact: `t,S,rho_re_00,rho_im_00,…` row-major over all entries.

use std::time::Instant;

use entrodyn::dynamics::{evolve_lindblad, LindbladModel};
use entrodyn::{CMatrix, DensityMatrix, PureState, Trajectory};
use serde::Serialize;

use crate::config::FlatConfig;
use crate::output::{fmt_f64, matrix_pairs, write_artifact, RunSummary};
use crate::{CliError, Format, RunArgs};

const KEYS: &[&str] = &["dim", "h", "psi0", "rho0", "t_max", "points", "dt_max"];

fn matrix_from_pairs(
    pairs: &[num_complex::Complex64],
    dim: usize,
    key: &str,
) -> Result<CMatrix, CliError> {
    if pairs.len() != dim * dim {
        return Err(entrodyn::Error::Dimension(format!(
            "key `{key}`: expected {} complex entries, got {}",
            dim * dim,
            pairs.len()
        ))
        .into());
    }
    Ok(CMatrix::from_fn(dim, dim, |i, j| pairs[i * dim + j]))
}

pub struct LindbladJob {
    pub model: LindbladModel,
    pub rho0: DensityMatrix,
    pub t_grid: Vec<f64>,
    pub dt_max: f64,
}

pub fn load(cfg: &FlatConfig) -> Result<LindbladJob, CliError> {
    cfg.reject_unknown_with_prefixes(KEYS, &["l"])?;
    let dim = cfg.usize("dim")?;
    if dim == 0 {
        return Err(entrodyn::Error::Validation("dim must be ≥ 1".into()).into());
    }
    let h = matrix_from_pairs(&cfg.complex_list("h")?, dim, "h")?;
    let mut ops = Vec::new();
    for k in 0.. {
        let key = format!("l{k}");
        if !cfg.has(&key) {
            break;
        }
        ops.push(matrix_from_pairs(&cfg.complex_list(&key)?, dim, &key)?);
    }
    let model = LindbladModel::new(h, ops)?;

    let rho0 = match (cfg.has("psi0"), cfg.has("rho0")) {
        (true, false) => {
            let amps = cfg.complex_list("psi0")?;
            if amps.len() != dim {
                return Err(entrodyn::Error::Dimension(format!(
                    "psi0 must have {dim} entries"
                ))
                .into());
            }
            DensityMatrix::from_pure(&PureState::new(amps)?)
        }
        (false, true) => {
            DensityMatrix::new(matrix_from_pairs(&cfg.complex_list("rho0")?, dim, "rho0")?)?
        }
        _ => {
            return Err(entrodyn::Error::Validation(
                "exactly one of psi0 or rho0 must be given".into(),
            )
            .into())
        }
    };

    let t_max = cfg.f64("t_max")?;
    if !(t_max > 0.0) {
        return Err(entrodyn::Error::Validation("t_max must be positive".into()).into());
    }
    let points = cfg.usize_or("points", 101)?;
    if points < 2 {
        return Err(entrodyn::Error::Validation("points must be ≥ 2".into()).into());
    }
    let dt_max = cfg.f64_or("dt_max", 1e-3)?;
    let t_grid: Vec<f64> = (0..points)
        .map(|k| t_max * k as f64 / (points - 1) as f64)
        .collect();
    Ok(LindbladJob {
        model,
        rho0,
        t_grid,
        dt_max,
    })
}

fn csv_artifact(traj: &Trajectory) -> String {
    let dim = traj.states[0].dim();
    let mut csv = String::from("t,S");
    for i in 0..dim {
        for j in 0..dim {
            csv.push_str(&format!(",rho_re_{i}{j},rho_im_{i}{j}"));
        }
    }
    csv.push('\n');
    for (k, &t) in traj.times.iter().enumerate() {
        csv.push_str(&fmt_f64(t));
        csv.push(',');
        csv.push_str(&fmt_f64(traj.entropies[k]));
        let m = traj.states[k].matrix();
        for i in 0..dim {
            for j in 0..dim {
                let z = m[(i, j)];
                csv.push_str(&format!(",{},{}", fmt_f64(z.re), fmt_f64(z.im)));
            }
        }
        csv.push('\n');
    }
    csv
}

#[derive(Serialize)]
struct TrajectoryJson {
    times: Vec<f64>,
    entropies: Vec<f64>,
    states: Vec<Vec<[f64; 2]>>,
}

pub fn run(args: &RunArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let cfg = FlatConfig::load(&args.config)?;
    let job = load(&cfg)?;
    let traj = evolve_lindblad(&job.model, &job.rho0, &job.t_grid, job.dt_max)?;

    let artifact = match args.format {
        Format::Csv => csv_artifact(&traj),
        Format::Json => {
            let json = TrajectoryJson {
                times: traj.times.clone(),
                entropies: traj.entropies.clone(),
                states: traj.states.iter().map(|s| matrix_pairs(s.matrix())).collect(),
            };
            let mut text = serde_json::to_string_pretty(&json)
                .map_err(|e| entrodyn::Error::Validation(format!("serialization: {e}")))?;
            text.push('\n');
            text
        }
    };
    write_artifact(&args.out, &artifact)?;

    let final_state = traj.final_state();
    let mut summary = RunSummary::new("lindblad", args.seed);
    summary
        .metric("final_entropy", *traj.entropies.last().expect("nonempty"))
        .metric(
            "trace_error",
            (final_state.matrix().trace().re - 1.0).abs(),
        )
        .metric("points", traj.len() as f64);
    summary.wall_time = start.elapsed().as_secs_f64();
    summary.emit()
}
