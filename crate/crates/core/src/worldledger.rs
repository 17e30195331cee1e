//! Weighted ledger of branching worlds.
//!
//! Worlds split on observable collapse (children weighted by the Born
//! probabilities) and merge when decoherence has made their states
//! indistinguishable — distinct pasts collapsing onto one present. Under
//! the default weak semantics a split must produce macroscopically
//! different children (pairwise trace distance above `merge_tol`); the
//! strong variant drops that requirement. The ensemble state Σ w·ρ is
//! invariant under both kinds of event; only per-world entropies jump.

use crate::error::{Error, Result};
use crate::measurement::{decohere_branches, premeasure_unitary};
use crate::qdm::DensityMatrix;

/// Default indistinguishability threshold (trace distance).
pub const DEFAULT_MERGE_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct World {
    pub id: u64,
    pub state: DensityMatrix,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LedgerEvent {
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

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerStats {
    pub n_worlds: usize,
    pub n_splits: usize,
    pub n_merges: usize,
    pub ensemble_entropy: f64,
}

#[derive(Debug, Clone)]
pub struct WorldLedger {
    worlds: Vec<World>,
    events: Vec<LedgerEvent>,
    merge_tol: f64,
    /// Strong semantics: permit splits whose children are within
    /// merge_tol of each other (latent-collapse splits).
    strong_splits: bool,
    next_id: u64,
}

impl WorldLedger {
    /// Ledger holding a single world of weight 1.
    pub fn new(state: DensityMatrix, merge_tol: f64) -> Result<Self> {
        if !(merge_tol >= 0.0) {
            return Err(Error::Validation("merge_tol must be ≥ 0".into()));
        }
        Ok(Self {
            worlds: vec![World {
                id: 0,
                state,
                weight: 1.0,
            }],
            events: Vec::new(),
            merge_tol,
            strong_splits: false,
            next_id: 1,
        })
    }

    /// Ledger over several initial worlds; weights must sum to 1.
    pub fn from_worlds(parts: Vec<(f64, DensityMatrix)>, merge_tol: f64) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Validation("ledger needs at least one world".into()));
        }
        if !(merge_tol >= 0.0) {
            return Err(Error::Validation("merge_tol must be ≥ 0".into()));
        }
        let worlds: Vec<World> = parts
            .into_iter()
            .enumerate()
            .map(|(i, (weight, state))| World {
                id: i as u64,
                state,
                weight,
            })
            .collect();
        let ledger = Self {
            next_id: worlds.len() as u64,
            worlds,
            events: Vec::new(),
            merge_tol,
            strong_splits: false,
        };
        ledger.check_invariants()?;
        Ok(ledger)
    }

    pub fn set_strong_splits(&mut self, strong: bool) {
        self.strong_splits = strong;
    }

    pub fn worlds(&self) -> &[World] {
        &self.worlds
    }

    pub fn events(&self) -> &[LedgerEvent] {
        &self.events
    }

    pub fn merge_tol(&self) -> f64 {
        self.merge_tol
    }

    fn check_invariants(&self) -> Result<()> {
        let total: f64 = self.worlds.iter().map(|w| w.weight).sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::Invariant(format!(
                "world weights sum to {total}, must be 1 within 1e-10"
            )));
        }
        if self.worlds.iter().any(|w| !(w.weight > 0.0)) {
            return Err(Error::Invariant("world with nonpositive weight".into()));
        }
        Ok(())
    }

    fn fresh_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    /// Replaces a world by children with weights weight·prob. Probs must
    /// be strictly positive and sum to 1 within 1e-12; under weak
    /// semantics the children must be pairwise distinguishable.
    pub fn split(&mut self, world_id: u64, outcomes: &[(f64, DensityMatrix)]) -> Result<()> {
        if outcomes.len() < 2 {
            return Err(Error::Validation("split needs at least two outcomes".into()));
        }
        let psum: f64 = outcomes.iter().map(|(p, _)| p).sum();
        if (psum - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!(
                "split probabilities sum to {psum}, not 1"
            )));
        }
        if outcomes.iter().any(|(p, _)| !(*p > 0.0)) {
            return Err(Error::Validation(
                "degenerate split: probabilities must be strictly positive".into(),
            ));
        }
        if !self.strong_splits {
            for i in 0..outcomes.len() {
                for j in (i + 1)..outcomes.len() {
                    let dist = outcomes[i].1.trace_distance(&outcomes[j].1);
                    if dist <= self.merge_tol {
                        return Err(Error::Validation(format!(
                            "children {i} and {j} indistinguishable (trace distance {dist:.3e} ≤ merge_tol)"
                        )));
                    }
                }
            }
        }
        let pos = self
            .worlds
            .iter()
            .position(|w| w.id == world_id)
            .ok_or_else(|| Error::Validation(format!("no world with id {world_id}")))?;
        let parent = self.worlds.remove(pos);
        let mut children_ids = Vec::with_capacity(outcomes.len());
        let mut probs = Vec::with_capacity(outcomes.len());
        for (k, (p, state)) in outcomes.iter().enumerate() {
            let id = self.fresh_id();
            children_ids.push(id);
            probs.push(*p);
            self.worlds.insert(
                pos + k,
                World {
                    id,
                    state: state.clone(),
                    weight: parent.weight * p,
                },
            );
        }
        self.events.push(LedgerEvent::Split {
            parent: parent.id,
            children: children_ids,
            probs,
        });
        self.check_invariants()
    }

    /// Combines every group of mutually indistinguishable worlds (trace
    /// distance ≤ merge_tol from the group's first member) into one world
    /// with summed weight and the weight-averaged state. Idempotent.
    pub fn merge(&mut self) -> Result<()> {
        let n = self.worlds.len();
        let mut assigned = vec![false; n];
        let mut new_worlds: Vec<World> = Vec::with_capacity(n);
        let mut merges: Vec<LedgerEvent> = Vec::new();
        let mut pending_ids: Vec<u64> = Vec::new();

        for i in 0..n {
            if assigned[i] {
                continue;
            }
            assigned[i] = true;
            let mut group = vec![i];
            for j in (i + 1)..n {
                if assigned[j] {
                    continue;
                }
                if self.worlds[i].state.dim() != self.worlds[j].state.dim() {
                    continue;
                }
                if self.worlds[i].state.trace_distance(&self.worlds[j].state) <= self.merge_tol {
                    assigned[j] = true;
                    group.push(j);
                }
            }
            if group.len() == 1 {
                new_worlds.push(self.worlds[i].clone());
                continue;
            }
            let total: f64 = group.iter().map(|&k| self.worlds[k].weight).sum();
            let states: Vec<(f64, DensityMatrix)> = group
                .iter()
                .map(|&k| (self.worlds[k].weight / total, self.worlds[k].state.clone()))
                .collect();
            let avg = DensityMatrix::mix(&states)?;
            pending_ids.push(0); // placeholder, id assigned below
            let slot = pending_ids.len() - 1;
            merges.push(LedgerEvent::Merge {
                parents: group.iter().map(|&k| self.worlds[k].id).collect(),
                child: slot as u64, // rewritten below
            });
            new_worlds.push(World {
                id: u64::MAX - slot as u64, // rewritten below
                state: avg,
                weight: total,
            });
        }
        // assign fresh ids in event order
        for (slot, ev) in merges.iter_mut().enumerate() {
            let id = self.fresh_id();
            if let LedgerEvent::Merge { child, .. } = ev {
                *child = id;
            }
            for w in new_worlds.iter_mut() {
                if w.id == u64::MAX - slot as u64 {
                    w.id = id;
                }
            }
        }
        self.worlds = new_worlds;
        self.events.extend(merges);
        self.check_invariants()
    }

    /// Σ w·ρ over all worlds.
    pub fn ensemble_state(&self) -> Result<DensityMatrix> {
        let parts: Vec<(f64, DensityMatrix)> = self
            .worlds
            .iter()
            .map(|w| (w.weight, w.state.clone()))
            .collect();
        DensityMatrix::mix(&parts)
    }

    pub fn stats(&self) -> Result<LedgerStats> {
        let n_splits = self
            .events
            .iter()
            .filter(|e| matches!(e, LedgerEvent::Split { .. }))
            .count();
        let n_merges = self
            .events
            .iter()
            .filter(|e| matches!(e, LedgerEvent::Merge { .. }))
            .count();
        Ok(LedgerStats {
            n_worlds: self.worlds.len(),
            n_splits,
            n_merges,
            ensemble_entropy: self.ensemble_state()?.vn_entropy(),
        })
    }
}

// --- scripted runs ----------------------------------------------------

/// A parsed script command.
#[derive(Debug, Clone, PartialEq)]
pub enum ScriptCommand {
    /// weight, c_up, c_down — adds an initial world prepared as
    /// c↑|↑a0⟩ + c↓|↓a0⟩ on the 6-dim measurement space.
    Prepare(f64, num_complex::Complex64, num_complex::Complex64),
    /// Applies the premeasurement unitary to every world.
    Evolve,
    /// Applies branch decoherence to every world.
    Decohere,
    /// Splits the unique current world into the ↑/↓ branch projections;
    /// explicit probabilities, if given, must match the Born weights.
    Split(Vec<f64>),
    Merge,
    /// Requests a stats snapshot.
    Stats,
}

/// Parses the one-command-per-line script format. Complex amplitudes use
/// "re,im" pairs; blank lines and `#` comments are skipped.
pub fn parse_script(text: &str) -> Result<Vec<ScriptCommand>> {
    let mut commands = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = idx + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let head = tokens.next().expect("nonempty line");
        let rest: Vec<&str> = tokens.collect();
        let cmd = match head {
            "prepare" => {
                if rest.len() != 3 {
                    return Err(Error::parse(
                        lineno,
                        "prepare takes: weight c_up(re,im) c_down(re,im)",
                    ));
                }
                let weight: f64 = rest[0]
                    .parse()
                    .map_err(|_| Error::parse(lineno, "bad weight"))?;
                let c_up = parse_pair(rest[1], lineno)?;
                let c_down = parse_pair(rest[2], lineno)?;
                ScriptCommand::Prepare(weight, c_up, c_down)
            }
            "evolve" => ScriptCommand::Evolve,
            "decohere" => ScriptCommand::Decohere,
            "split" => {
                let probs = rest
                    .iter()
                    .map(|t| t.parse::<f64>().map_err(|_| Error::parse(lineno, "bad probability")))
                    .collect::<Result<Vec<f64>>>()?;
                ScriptCommand::Split(probs)
            }
            "merge" => ScriptCommand::Merge,
            "stats" => ScriptCommand::Stats,
            other => {
                return Err(Error::parse(lineno, format!("unknown command `{other}`")));
            }
        };
        commands.push(cmd);
    }
    Ok(commands)
}

fn parse_pair(token: &str, lineno: usize) -> Result<num_complex::Complex64> {
    let (re, im) = token
        .split_once(',')
        .ok_or_else(|| Error::parse(lineno, format!("expected re,im pair, got `{token}`")))?;
    let re: f64 = re
        .parse()
        .map_err(|_| Error::parse(lineno, "bad real part"))?;
    let im: f64 = im
        .parse()
        .map_err(|_| Error::parse(lineno, "bad imaginary part"))?;
    Ok(num_complex::Complex64::new(re, im))
}

/// Executes a script. Leading `prepare` commands build the initial
/// ledger (their weights must sum to 1); every later command maintains
/// the ledger invariants or aborts with the offending command index.
/// No command draws randomness, so runs are deterministic by
/// construction. Returns the final ledger and the snapshots taken at
/// each `stats` command.
pub fn run_script(
    commands: &[ScriptCommand],
    merge_tol: f64,
) -> Result<(WorldLedger, Vec<LedgerStats>)> {
    use crate::measurement::PIPELINE_DIM;
    use crate::qdm::CVector;

    let mut initial: Vec<(f64, DensityMatrix)> = Vec::new();
    let mut ledger: Option<WorldLedger> = None;
    let mut snapshots = Vec::new();

    let at = |i: usize, e: Error| Error::Invariant(format!("command {i}: {e}"));

    for (i, cmd) in commands.iter().enumerate() {
        match cmd {
            ScriptCommand::Prepare(weight, c_up, c_down) => {
                if ledger.is_some() {
                    return Err(Error::Sequencing(format!(
                        "command {i}: prepare must precede all other commands"
                    )));
                }
                let mut amps = CVector::zeros(PIPELINE_DIM);
                amps[0] = *c_up; // |↑ a0⟩
                amps[3] = *c_down; // |↓ a0⟩
                let rho = DensityMatrix::new(&amps * amps.adjoint())
                    .map_err(|e| at(i, e))?;
                initial.push((*weight, rho));
            }
            other => {
                let ledger = match ledger.as_mut() {
                    Some(l) => l,
                    None => {
                        if initial.is_empty() {
                            return Err(Error::Sequencing(format!(
                                "command {i}: no worlds prepared"
                            )));
                        }
                        ledger = Some(
                            WorldLedger::from_worlds(std::mem::take(&mut initial), merge_tol)
                                .map_err(|e| at(i, e))?,
                        );
                        ledger.as_mut().expect("just set")
                    }
                };
                match other {
                    ScriptCommand::Prepare(..) => unreachable!("handled above"),
                    ScriptCommand::Evolve => {
                        let u = premeasure_unitary();
                        for w in ledger.worlds.iter_mut() {
                            let m = &u * w.state.matrix() * u.adjoint();
                            w.state = DensityMatrix::new(m).map_err(|e| at(i, e))?;
                        }
                    }
                    ScriptCommand::Decohere => {
                        for w in ledger.worlds.iter_mut() {
                            w.state = decohere_branches(&w.state).map_err(|e| at(i, e))?;
                        }
                    }
                    ScriptCommand::Split(probs) => {
                        if ledger.worlds.len() != 1 {
                            return Err(Error::Invariant(format!(
                                "command {i}: script split requires a unique world, found {}",
                                ledger.worlds.len()
                            )));
                        }
                        let world_id = ledger.worlds[0].id;
                        let state = ledger.worlds[0].state.clone();
                        let outcomes =
                            branch_outcomes(&state).map_err(|e| at(i, e))?;
                        if !probs.is_empty() {
                            if probs.len() != outcomes.len() {
                                return Err(Error::Invariant(format!(
                                    "command {i}: expected {} probabilities",
                                    outcomes.len()
                                )));
                            }
                            for (given, (born, _)) in probs.iter().zip(&outcomes) {
                                if (given - born).abs() > 1e-9 {
                                    return Err(Error::Invariant(format!(
                                        "command {i}: split probability {given} disagrees with Born weight {born}"
                                    )));
                                }
                            }
                        }
                        ledger.split(world_id, &outcomes).map_err(|e| at(i, e))?;
                    }
                    ScriptCommand::Merge => {
                        ledger.merge().map_err(|e| at(i, e))?;
                    }
                    ScriptCommand::Stats => {
                        snapshots.push(ledger.stats().map_err(|e| at(i, e))?);
                    }
                }
            }
        }
    }

    let ledger = match ledger {
        Some(l) => l,
        None => WorldLedger::from_worlds(initial, merge_tol)?,
    };
    ledger.check_invariants()?;
    Ok((ledger, snapshots))
}

/// Born weights and normalized branch projections of a 6-dim pipeline
/// state: the ↑ block spans indices 0..3, the ↓ block 3..6.
fn branch_outcomes(state: &DensityMatrix) -> Result<Vec<(f64, DensityMatrix)>> {
    use crate::measurement::PIPELINE_DIM;
    use crate::qdm::CMatrix;

    if state.dim() != PIPELINE_DIM {
        return Err(Error::Dimension(format!(
            "script split expects dim {PIPELINE_DIM}, got {}",
            state.dim()
        )));
    }
    let half = PIPELINE_DIM / 2;
    let mut outcomes = Vec::with_capacity(2);
    for block in 0..2 {
        let lo = block * half;
        let mut proj = CMatrix::zeros(PIPELINE_DIM, PIPELINE_DIM);
        let mut p = 0.0;
        for a in lo..lo + half {
            p += state.matrix()[(a, a)].re;
            for b in lo..lo + half {
                proj[(a, b)] = state.matrix()[(a, b)];
            }
        }
        if !(p > 1e-12) {
            return Err(Error::Validation(
                "branch has vanishing Born weight; cannot split".into(),
            ));
        }
        outcomes.push((p, DensityMatrix::new(proj.scale(1.0 / p))?));
    }
    Ok(outcomes)
}
