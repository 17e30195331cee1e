//! `kaon`: apparent-CPT-violation scan over (β, ε).
//!
//! Config keys: n_f, n_e, m0, e_f (n_f reals), g (n_f re,im pairs, the
//! K→f coupling; its modulus is the magnitude, the CP phase comes from
//! phi_f), phi_f (n_f reals), h_int (n_f·n_e re,im pairs, f-major),
//! h_env (optional n_f·n_e reals), e_env (optional n_e reals), epsilon
//! in (0, 0.2], delta (optional), betas (optional index list), epsilons
//! (optional list).
//!
//! CSV artifact: `beta,epsilon,re_lambda_pert,im_lambda_pert,
//! re_lambda_oracle,im_lambda_oracle,ratio` with ratio the normalized
//! cubic defect |Λ_oracle − Λ_pert|/ε³.

use std::time::Instant;

use entrodyn::cptest::{violation_scan, KaonModel, ViolationReport};
use serde::Serialize;

use crate::config::FlatConfig;
use crate::output::{fmt_f64, write_artifact, RunSummary};
use crate::{CliError, Format, RunArgs};

const KEYS: &[&str] = &[
    "n_f", "n_e", "m0", "e_f", "g", "phi_f", "h_int", "h_env", "e_env", "epsilon", "delta",
    "betas", "epsilons",
];

pub struct KaonJob {
    pub model: KaonModel,
    pub betas: Vec<usize>,
    pub epsilons: Vec<f64>,
}

pub fn load(cfg: &FlatConfig) -> Result<KaonJob, CliError> {
    cfg.reject_unknown(KEYS)?;
    let n_f = cfg.usize("n_f")?;
    let n_e = cfg.usize("n_e")?;
    let m0 = cfg.f64("m0")?;
    let e_f = cfg.f64_list("e_f")?;
    if e_f.len() != n_f {
        return Err(entrodyn::Error::Dimension(format!("e_f must have {n_f} entries")).into());
    }
    let g = cfg.complex_list("g")?;
    if g.len() != n_f {
        return Err(entrodyn::Error::Dimension(format!("g must have {n_f} pairs")).into());
    }
    let magnitudes: Vec<f64> = g.iter().map(|z| z.norm()).collect();
    let phases = cfg.f64_list("phi_f")?;
    if phases.len() != n_f {
        return Err(entrodyn::Error::Dimension(format!("phi_f must have {n_f} entries")).into());
    }

    let h_int_flat = cfg.complex_list("h_int")?;
    if h_int_flat.len() != n_f * n_e {
        return Err(entrodyn::Error::Dimension(format!(
            "h_int must have {} pairs (f-major)",
            n_f * n_e
        ))
        .into());
    }
    let h_int: Vec<Vec<num_complex::Complex64>> =
        h_int_flat.chunks(n_e).map(|c| c.to_vec()).collect();

    let h_env: Vec<Vec<f64>> = if cfg.has("h_env") {
        let flat = cfg.f64_list("h_env")?;
        if flat.len() != n_f * n_e {
            return Err(entrodyn::Error::Dimension(format!(
                "h_env must have {} entries (f-major)",
                n_f * n_e
            ))
            .into());
        }
        flat.chunks(n_e).map(|c| c.to_vec()).collect()
    } else {
        vec![vec![0.0; n_e]; n_f]
    };

    let e_env = if cfg.has("e_env") {
        Some(cfg.f64_list("e_env")?)
    } else {
        None
    };

    let epsilon = cfg.f64("epsilon")?;
    if !(epsilon > 0.0 && epsilon <= 0.2) {
        return Err(entrodyn::Error::Validation(format!(
            "epsilon = {epsilon} outside (0, 0.2]"
        ))
        .into());
    }
    let delta = if cfg.has("delta") {
        Some(cfg.f64("delta")?)
    } else {
        None
    };

    let model = KaonModel::new(
        n_e, m0, e_f, magnitudes, phases, h_int, h_env, e_env, epsilon, delta,
    )?;

    let betas = if cfg.has("betas") {
        let betas = cfg.usize_list("betas")?;
        for &b in &betas {
            if b >= n_e {
                return Err(
                    entrodyn::Error::Validation(format!("beta {b} out of range")).into(),
                );
            }
        }
        betas
    } else {
        (0..n_e).collect()
    };
    let epsilons = if cfg.has("epsilons") {
        let eps = cfg.f64_list("epsilons")?;
        for &e in &eps {
            if !(e > 0.0 && e <= 0.2) {
                return Err(entrodyn::Error::Validation(format!(
                    "scan epsilon = {e} outside (0, 0.2]"
                ))
                .into());
            }
        }
        eps
    } else {
        vec![epsilon]
    };

    Ok(KaonJob {
        model,
        betas,
        epsilons,
    })
}

#[derive(Serialize)]
struct ReportJson {
    beta: usize,
    epsilon: f64,
    lambda_pert: [f64; 2],
    lambda_oracle: [f64; 2],
    ratio: f64,
}

fn csv_artifact(reports: &[ViolationReport]) -> String {
    let mut csv = String::from(
        "beta,epsilon,re_lambda_pert,im_lambda_pert,re_lambda_oracle,im_lambda_oracle,ratio\n",
    );
    for r in reports {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.beta,
            fmt_f64(r.epsilon),
            fmt_f64(r.lambda_perturbative.re),
            fmt_f64(r.lambda_perturbative.im),
            fmt_f64(r.lambda_oracle.re),
            fmt_f64(r.lambda_oracle.im),
            fmt_f64(r.epsilon_order_check),
        ));
    }
    csv
}

pub fn run(args: &RunArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let cfg = FlatConfig::load(&args.config)?;
    let job = load(&cfg)?;
    let reports = violation_scan(&job.model, &job.betas, &job.epsilons)?;

    let artifact = match args.format {
        Format::Csv => csv_artifact(&reports),
        Format::Json => {
            let json: Vec<ReportJson> = reports
                .iter()
                .map(|r| ReportJson {
                    beta: r.beta,
                    epsilon: r.epsilon,
                    lambda_pert: [r.lambda_perturbative.re, r.lambda_perturbative.im],
                    lambda_oracle: [r.lambda_oracle.re, r.lambda_oracle.im],
                    ratio: r.epsilon_order_check,
                })
                .collect();
            let mut text = serde_json::to_string_pretty(&json)
                .map_err(|e| entrodyn::Error::Validation(format!("serialization: {e}")))?;
            text.push('\n');
            text
        }
    };
    write_artifact(&args.out, &artifact)?;

    let max_oracle = reports
        .iter()
        .map(|r| r.lambda_oracle.norm())
        .fold(0.0, f64::max);
    let max_pert = reports
        .iter()
        .map(|r| r.lambda_perturbative.norm())
        .fold(0.0, f64::max);
    let mut summary = RunSummary::new("kaon", args.seed);
    summary
        .metric("max_abs_lambda_oracle", max_oracle)
        .metric("max_abs_lambda_pert", max_pert)
        .metric("points", reports.len() as f64);
    summary.wall_time = start.elapsed().as_secs_f64();
    summary.emit()
}
