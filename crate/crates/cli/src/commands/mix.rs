//! `mix`: baker-map runs with optional coarse-graining.
//!
//! Config keys: n (power of two), steps, b (0 disables coarsening),
//! coarsen_every, mode (mixing | retrodiction), start_x, start_y, and
//! for retrodiction start2_x, start2_y.
//!
//! CSV artifact: `step,entropy,support` for mixing runs and
//! `step,entropy,support,tv_distance` for retrodiction runs.

use std::time::Instant;

use entrodyn::phasemix::{lsq_slope, retrodiction_demo, run_mixing, PhaseGrid};
use serde::Serialize;

use crate::config::FlatConfig;
use crate::output::{fmt_f64, write_artifact, RunSummary};
use crate::{CliError, Format, RunArgs};

const KEYS: &[&str] = &[
    "n",
    "steps",
    "b",
    "coarsen_every",
    "mode",
    "start_x",
    "start_y",
    "start2_x",
    "start2_y",
];

enum Mode {
    Mixing,
    Retrodiction,
}

struct MixJob {
    mode: Mode,
    grid_a: PhaseGrid,
    grid_b: Option<PhaseGrid>,
    steps: usize,
    b: usize,
    coarsen_every: usize,
}

fn load(cfg: &FlatConfig) -> Result<MixJob, CliError> {
    cfg.reject_unknown(KEYS)?;
    let n = cfg.usize("n")?;
    let steps = cfg.usize("steps")?;
    let b = cfg.usize_or("b", 0)?;
    let coarsen_every = cfg.usize_or("coarsen_every", 1)?;
    let mode = match cfg.string("mode").unwrap_or_else(|_| "mixing".into()).as_str() {
        "mixing" => Mode::Mixing,
        "retrodiction" => Mode::Retrodiction,
        other => {
            return Err(entrodyn::Error::Validation(format!(
                "mode must be mixing or retrodiction, got `{other}`"
            ))
            .into())
        }
    };
    let grid_a = PhaseGrid::single_cell(n, cfg.usize_or("start_x", 0)?, cfg.usize_or("start_y", 0)?)?;
    let grid_b = match mode {
        Mode::Mixing => None,
        Mode::Retrodiction => Some(PhaseGrid::single_cell(
            n,
            cfg.usize("start2_x")?,
            cfg.usize("start2_y")?,
        )?),
    };
    Ok(MixJob {
        mode,
        grid_a,
        grid_b,
        steps,
        b,
        coarsen_every,
    })
}

#[derive(Serialize)]
struct MixJson {
    steps: Vec<usize>,
    entropies: Vec<f64>,
    supports: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tv_distances: Option<Vec<f64>>,
}

pub fn run(args: &RunArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let cfg = FlatConfig::load(&args.config)?;
    let job = load(&cfg)?;

    let mut summary = RunSummary::new("mix", args.seed);
    let artifact = match job.mode {
        Mode::Mixing => {
            let run = run_mixing(&job.grid_a, job.steps, job.b, job.coarsen_every)?;
            summary
                .metric("final_entropy", *run.entropy_series.last().expect("nonempty"))
                .metric("final_support", *run.support_series.last().expect("nonempty") as f64);
            if run.entropy_series.len() >= 6 {
                summary.metric("early_slope", lsq_slope(&run.entropy_series, 6));
            }
            match args.format {
                Format::Csv => {
                    let mut csv = String::from("step,entropy,support\n");
                    for k in 0..=run.steps {
                        csv.push_str(&format!(
                            "{k},{},{}\n",
                            fmt_f64(run.entropy_series[k]),
                            run.support_series[k]
                        ));
                    }
                    csv
                }
                Format::Json => {
                    let json = MixJson {
                        steps: (0..=run.steps).collect(),
                        entropies: run.entropy_series.clone(),
                        supports: run.support_series.clone(),
                        tv_distances: None,
                    };
                    to_pretty(&json)?
                }
            }
        }
        Mode::Retrodiction => {
            let other = job.grid_b.as_ref().expect("retrodiction has two grids");
            let rep = retrodiction_demo(&job.grid_a, other, job.steps, job.b)?;
            // entropy/support series of the first grid under the same dynamics
            let run = run_mixing(&job.grid_a, job.steps, job.b, 1)?;
            summary
                .metric("initial_tv", rep.initial_tv_distance)
                .metric("final_tv", rep.final_tv_distance);
            match args.format {
                Format::Csv => {
                    let mut csv = String::from("step,entropy,support,tv_distance\n");
                    for k in 0..=rep.steps {
                        csv.push_str(&format!(
                            "{k},{},{},{}\n",
                            fmt_f64(run.entropy_series[k]),
                            run.support_series[k],
                            fmt_f64(rep.tv_series[k])
                        ));
                    }
                    csv
                }
                Format::Json => {
                    let json = MixJson {
                        steps: (0..=rep.steps).collect(),
                        entropies: run.entropy_series.clone(),
                        supports: run.support_series.clone(),
                        tv_distances: Some(rep.tv_series.clone()),
                    };
                    to_pretty(&json)?
                }
            }
        }
    };
    write_artifact(&args.out, &artifact)?;
    summary.wall_time = start.elapsed().as_secs_f64();
    summary.emit()
}

fn to_pretty<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| entrodyn::Error::Validation(format!("serialization: {e}")))?;
    text.push('\n');
    Ok(text)
}
