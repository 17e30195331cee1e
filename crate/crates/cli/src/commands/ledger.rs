//! `ledger`: executes a world-ledger script (the config file is the
//! script itself: one `prepare`/`evolve`/`decohere`/`split`/`merge`/
//! `stats` command per line).
//!
//! JSON artifact: the event log with final worlds and stats snapshots.
//! CSV artifact: one row per event plus one `world` row per surviving
//! world.

use std::time::Instant;

use entrodyn::worldledger::{
    parse_script, run_script, LedgerEvent, LedgerStats, WorldLedger, DEFAULT_MERGE_TOL,
};
use serde::Serialize;

use crate::config::FlatConfig;
use crate::output::{fmt_f64, write_artifact, RunSummary};
use crate::{CliError, Format, RunArgs};

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum EventJson {
    Split {
        parent: u64,
        children: Vec<u64>,
        probs: Vec<f64>,
    },
    Merge {
        parents: Vec<u64>,
        child: u64,
    },
}

#[derive(Serialize)]
struct WorldJson {
    id: u64,
    weight: f64,
    entropy: f64,
}

#[derive(Serialize)]
struct StatsJson {
    n_worlds: usize,
    n_splits: usize,
    n_merges: usize,
    ensemble_entropy: f64,
}

#[derive(Serialize)]
struct LedgerJson {
    merge_tol: f64,
    events: Vec<EventJson>,
    worlds: Vec<WorldJson>,
    snapshots: Vec<StatsJson>,
    stats: StatsJson,
}

fn stats_json(s: &LedgerStats) -> StatsJson {
    StatsJson {
        n_worlds: s.n_worlds,
        n_splits: s.n_splits,
        n_merges: s.n_merges,
        ensemble_entropy: s.ensemble_entropy,
    }
}

fn csv_artifact(ledger: &WorldLedger, stats: &LedgerStats) -> String {
    let join = |ids: &[u64]| {
        ids.iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(";")
    };
    let mut csv = String::from("row,kind,ids,detail\n");
    for (k, ev) in ledger.events().iter().enumerate() {
        match ev {
            LedgerEvent::Split {
                parent,
                children,
                probs,
            } => {
                let probs = probs
                    .iter()
                    .map(|p| fmt_f64(*p))
                    .collect::<Vec<_>>()
                    .join(";");
                csv.push_str(&format!("{k},split,{}>{},{}\n", parent, join(children), probs));
            }
            LedgerEvent::Merge { parents, child } => {
                csv.push_str(&format!("{k},merge,{}>{},\n", join(parents), child));
            }
        }
    }
    for w in ledger.worlds() {
        csv.push_str(&format!(
            "{},world,{},{}\n",
            ledger.events().len(),
            w.id,
            fmt_f64(w.weight)
        ));
    }
    csv.push_str(&format!(
        "{},stats,{};{};{},{}\n",
        ledger.events().len() + ledger.worlds().len(),
        stats.n_worlds,
        stats.n_splits,
        stats.n_merges,
        fmt_f64(stats.ensemble_entropy)
    ));
    csv
}

pub fn run(args: &RunArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        entrodyn::Error::Validation(format!("cannot read script {}: {e}", args.config.display()))
    })?;
    // a key = value file here almost certainly means the wrong config was passed
    if FlatConfig::parse(&text).map(|c| c.has("c_up")).unwrap_or(false) {
        return Err(entrodyn::Error::Validation(
            "ledger expects a script file, not a measurement config".into(),
        )
        .into());
    }
    let commands = parse_script(&text)?;
    let (ledger, snapshots) = run_script(&commands, DEFAULT_MERGE_TOL)?;
    let stats = ledger.stats()?;

    let artifact = match args.format {
        Format::Csv => csv_artifact(&ledger, &stats),
        Format::Json => {
            let json = LedgerJson {
                merge_tol: ledger.merge_tol(),
                events: ledger
                    .events()
                    .iter()
                    .map(|ev| match ev {
                        LedgerEvent::Split {
                            parent,
                            children,
                            probs,
                        } => EventJson::Split {
                            parent: *parent,
                            children: children.clone(),
                            probs: probs.clone(),
                        },
                        LedgerEvent::Merge { parents, child } => EventJson::Merge {
                            parents: parents.clone(),
                            child: *child,
                        },
                    })
                    .collect(),
                worlds: ledger
                    .worlds()
                    .iter()
                    .map(|w| WorldJson {
                        id: w.id,
                        weight: w.weight,
                        entropy: w.state.vn_entropy(),
                    })
                    .collect(),
                snapshots: snapshots.iter().map(stats_json).collect(),
                stats: stats_json(&stats),
            };
            let mut text = serde_json::to_string_pretty(&json)
                .map_err(|e| entrodyn::Error::Validation(format!("serialization: {e}")))?;
            text.push('\n');
            text
        }
    };
    write_artifact(&args.out, &artifact)?;

    let mut summary = RunSummary::new("ledger", args.seed);
    summary
        .metric("n_worlds", stats.n_worlds as f64)
        .metric("n_splits", stats.n_splits as f64)
        .metric("n_merges", stats.n_merges as f64)
        .metric("ensemble_entropy", stats.ensemble_entropy);
    summary.wall_time = start.elapsed().as_secs_f64();
    summary.emit()
}
