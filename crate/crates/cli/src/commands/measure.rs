//! `measure`: runs the five-stage pipeline, optionally repeated.
//!
//! Config keys: c_up, c_up_im, c_down, c_down_im, temperature, delta_e1,
//! delta_e2, phase_mode (analytic | monte_carlo), mc_samples,
//! detect_ratio, runs.
//!
//! CSV artifact: `run_id,outcome,S2`. JSON artifact: the full record
//! {config, stages: [{stage, entropy, rho, outcome?}], frequencies?}.

use std::time::Instant;

use entrodyn::measurement::{energy_budget_check, run_repeated, MeasurementConfig, PhaseMode};
use num_complex::Complex64;
use serde::Serialize;

use crate::config::FlatConfig;
use crate::output::{fmt_f64, matrix_pairs, write_artifact, RunSummary};
use crate::{CliError, Format, RunArgs};

const KEYS: &[&str] = &[
    "c_up",
    "c_up_im",
    "c_down",
    "c_down_im",
    "temperature",
    "delta_e1",
    "delta_e2",
    "phase_mode",
    "mc_samples",
    "detect_ratio",
    "runs",
];

pub fn load(cfg: &FlatConfig, seed: u64) -> Result<(MeasurementConfig, usize), CliError> {
    cfg.reject_unknown(KEYS)?;
    let c_up = Complex64::new(cfg.f64("c_up")?, cfg.f64_or("c_up_im", 0.0)?);
    let c_down = Complex64::new(cfg.f64("c_down")?, cfg.f64_or("c_down_im", 0.0)?);
    let mut config = MeasurementConfig::new(c_up, c_down, cfg.f64_or("temperature", 1.0)?)?;
    config.delta_e1 = cfg.f64_or("delta_e1", 10.0)?;
    config.delta_e2 = cfg.f64_or("delta_e2", 100.0)?;
    config.detect_ratio = cfg.f64_or("detect_ratio", 10.0)?;
    config.mc_samples = cfg.usize_or("mc_samples", 1000)?;
    config.phase_mode = if cfg.has("phase_mode") {
        match cfg.string("phase_mode")?.as_str() {
            "analytic" => PhaseMode::Analytic,
            "monte_carlo" => PhaseMode::MonteCarlo,
            other => {
                return Err(entrodyn::Error::Validation(format!(
                    "phase_mode must be analytic or monte_carlo, got `{other}`"
                ))
                .into())
            }
        }
    } else {
        PhaseMode::Analytic
    };
    config.seed = seed;
    config.validate()?;
    let runs = cfg.usize_or("runs", 1)?;
    if runs == 0 {
        return Err(entrodyn::Error::Validation("runs must be ≥ 1".into()).into());
    }
    Ok((config, runs))
}

#[derive(Serialize)]
struct ConfigJson {
    c_up: [f64; 2],
    c_down: [f64; 2],
    temperature: f64,
    delta_e1: f64,
    delta_e2: f64,
    phase_mode: &'static str,
    mc_samples: usize,
    seed: u64,
    detect_ratio: f64,
}

#[derive(Serialize)]
struct StageJson {
    stage: u8,
    entropy: f64,
    rho: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    outcome: Option<&'static str>,
}

#[derive(Serialize)]
struct FrequenciesJson {
    up: f64,
    down: f64,
    runs: usize,
}

#[derive(Serialize)]
struct RecordJson {
    config: ConfigJson,
    stages: Vec<StageJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    frequencies: Option<FrequenciesJson>,
}

pub fn run(args: &RunArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let cfg = FlatConfig::load(&args.config)?;
    let (config, runs) = load(&cfg, args.seed)?;
    let (record, outcomes) = run_repeated(&config, runs)?;
    let budget = energy_budget_check(&config)?;

    let artifact = match args.format {
        Format::Csv => {
            let mut csv = String::from("run_id,outcome,S2\n");
            for (i, (outcome, s2)) in outcomes.iter().enumerate() {
                csv.push_str(&format!("{i},{},{}\n", outcome.as_str(), fmt_f64(*s2)));
            }
            csv
        }
        Format::Json => {
            let json = RecordJson {
                config: ConfigJson {
                    c_up: [config.c_up.re, config.c_up.im],
                    c_down: [config.c_down.re, config.c_down.im],
                    temperature: config.temperature,
                    delta_e1: config.delta_e1,
                    delta_e2: config.delta_e2,
                    phase_mode: match config.phase_mode {
                        PhaseMode::Analytic => "analytic",
                        PhaseMode::MonteCarlo => "monte_carlo",
                    },
                    mc_samples: config.mc_samples,
                    seed: config.seed,
                    detect_ratio: config.detect_ratio,
                },
                stages: record
                    .stages
                    .iter()
                    .map(|s| StageJson {
                        stage: s.stage,
                        entropy: s.entropy,
                        rho: matrix_pairs(s.rho.matrix()),
                        outcome: s.outcome.map(|o| o.as_str()),
                    })
                    .collect(),
                frequencies: record.born_frequencies.map(|(up, down, n)| FrequenciesJson {
                    up,
                    down,
                    runs: n,
                }),
            };
            let mut text = serde_json::to_string_pretty(&json)
                .map_err(|e| entrodyn::Error::Validation(format!("serialization: {e}")))?;
            text.push('\n');
            text
        }
    };
    write_artifact(&args.out, &artifact)?;

    let mut summary = RunSummary::new("measure", args.seed);
    summary
        .metric("s2", record.stages[2].entropy)
        .metric("p_up", config.p_up())
        .metric("required_energy", budget.required_energy)
        .metric("detectable", if budget.detectable { 1.0 } else { 0.0 });
    if let Some((up, _, _)) = record.born_frequencies {
        summary.metric("freq_up", up);
    }
    summary.wall_time = start.elapsed().as_secs_f64();
    summary.emit()
}
