//! Staged quantum-measurement pipeline with entropy accounting.
//!
//! A two-level system (amplitudes c↑, c↓) is measured by an apparatus
//! modeled with three pointer states a0 (ready), a↑, a↓ on a combined
//! 6-dimensional space, basis ordered |s⟩⊗|a⟩ with s ∈ {↑, ↓} and
//! a ∈ {a0, a↑, a↓}:
//!
//!   stage 0  preparation        ρ = |Ψ⟩⟨Ψ|, Ψ = c↑|↑a0⟩ + c↓|↓a0⟩   S = 0
//!   stage 1  unitary co-evolution  Ψ → c↑|↑a↑⟩ + c↓|↓a↓⟩            S = 0
//!   stage 2  decoherence        cross-branch coherence killed        S = −Σ p ln p
//!   stage 3  latent collapse    ρ unchanged, outcome still hidden    S unchanged
//!   stage 4  observable collapse sampled outcome, pure projector     S = 0
//!
//! The entropy dump ΔS_a ≥ S2 that the apparatus must absorb to close
//! stage 4, and the resulting energy bar ΔE1 ≫ k_B·T_a/2, are checked by
//! [`energy_budget_check`].

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::qdm::{CMatrix, CVector, DensityMatrix};

/// Combined system ⊗ pointer dimension.
pub const PIPELINE_DIM: usize = 6;

const POINTER_DIM: usize = 3;
const IDX_UP_A0: usize = 0;
const IDX_UP_AUP: usize = 1;
const IDX_DOWN_A0: usize = 3;
const IDX_DOWN_ADOWN: usize = 5;

/// How stage 2 removes cross-branch coherence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMode {
    /// Off-diagonal blocks between the ↑ and ↓ branches set exactly to zero
    /// (the average over random phases, taken in closed form).
    Analytic,
    /// Average of M random-phase samples Θ_k = e^{iθ_k}, θ_k uniform on
    /// [0, 2π); the residual coherence shrinks as M^{−1/2}.
    MonteCarlo,
}

/// Sampled measurement outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Up,
    Down,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Up => "up",
            Outcome::Down => "down",
        }
    }
}

/// Amplitudes, apparatus thermodynamics, and sampling controls for a run.
#[derive(Debug, Clone)]
pub struct MeasurementConfig {
    pub c_up: Complex64,
    pub c_down: Complex64,
    /// Apparatus temperature, k_B = 1 units.
    pub temperature: f64,
    /// Energy transferred to the apparatus by the measurement.
    pub delta_e1: f64,
    /// Amplified macroscopic energy effect; only ΔE2 > ΔE1 is checked.
    pub delta_e2: f64,
    pub phase_mode: PhaseMode,
    /// Monte-Carlo sample count M (ignored in analytic mode).
    pub mc_samples: usize,
    pub seed: u64,
    /// Detectability ratio R in ΔE1 ≥ R·T_a/2; default 10.
    pub detect_ratio: f64,
}

impl MeasurementConfig {
    pub fn new(c_up: Complex64, c_down: Complex64, temperature: f64) -> Result<Self> {
        let cfg = Self {
            c_up,
            c_down,
            temperature,
            delta_e1: 10.0,
            delta_e2: 100.0,
            phase_mode: PhaseMode::Analytic,
            mc_samples: 1,
            seed: 0,
            detect_ratio: 10.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let norm = self.c_up.norm_sqr() + self.c_down.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!(
                "|c_up|² + |c_down|² = {norm}, must be 1 within 1e-12"
            )));
        }
        if self.c_up.norm() == 0.0 || self.c_down.norm() == 0.0 {
            return Err(Error::Validation(
                "trivial amplitudes: c_up and c_down must both be nonzero".into(),
            ));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::Validation(format!(
                "apparatus temperature must be positive, got {}",
                self.temperature
            )));
        }
        if self.phase_mode == PhaseMode::MonteCarlo && self.mc_samples < 1 {
            return Err(Error::Validation("mc_samples must be ≥ 1".into()));
        }
        if !(self.detect_ratio > 0.0) {
            return Err(Error::Validation("detect_ratio must be positive".into()));
        }
        Ok(())
    }

    pub fn p_up(&self) -> f64 {
        self.c_up.norm_sqr()
    }

    pub fn p_down(&self) -> f64 {
        self.c_down.norm_sqr()
    }

    /// S2 in analytic mode: −(p↑ ln p↑ + p↓ ln p↓).
    pub fn branch_entropy(&self) -> f64 {
        let (p, q) = (self.p_up(), self.p_down());
        -(p * p.ln() + q * q.ln())
    }
}

/// One stage of the pipeline: label, state, entropy, sampled outcome
/// (present only at stage 4).
#[derive(Debug, Clone)]
pub struct StageState {
    pub stage: u8,
    pub rho: DensityMatrix,
    pub entropy: f64,
    pub outcome: Option<Outcome>,
}

impl StageState {
    fn checked(stage: u8, rho: DensityMatrix, outcome: Option<Outcome>) -> Self {
        debug_assert!(outcome.is_some() == (stage == 4));
        let entropy = rho.vn_entropy();
        Self {
            stage,
            rho,
            entropy,
            outcome,
        }
    }
}

/// Full trajectory of one measurement plus optional repeated-run
/// frequencies.
#[derive(Debug, Clone)]
pub struct MeasurementRecord {
    pub config: MeasurementConfig,
    pub stages: Vec<StageState>,
    /// (observed up-frequency, observed down-frequency, run count)
    pub born_frequencies: Option<(f64, f64, usize)>,
}

fn expect_stage(state: &StageState, want: u8) -> Result<()> {
    if state.stage != want {
        return Err(Error::Sequencing(format!(
            "expected a stage-{want} state, got stage {}",
            state.stage
        )));
    }
    Ok(())
}

/// ρ0 = |Ψ0⟩⟨Ψ0| with Ψ0 = c↑|↑a0⟩ + c↓|↓a0⟩.
pub fn stage0_prepare(config: &MeasurementConfig) -> Result<StageState> {
    config.validate()?;
    let mut amps = CVector::zeros(PIPELINE_DIM);
    amps[IDX_UP_A0] = config.c_up;
    amps[IDX_DOWN_A0] = config.c_down;
    let rho = DensityMatrix::new(&amps * amps.adjoint())?;
    Ok(StageState::checked(0, rho, None))
}

/// The premeasurement unitary: conditioned on the system, the pointer is
/// swapped a0↔a↑ (for ↑) or a0↔a↓ (for ↓); the remaining pointer state is
/// fixed. An involution, so applying it twice restores the input.
pub fn premeasure_unitary() -> CMatrix {
    let mut u = CMatrix::zeros(PIPELINE_DIM, PIPELINE_DIM);
    let one = Complex64::new(1.0, 0.0);
    // ↑ branch: a0 ↔ a↑, a↓ fixed
    u[(IDX_UP_AUP, IDX_UP_A0)] = one;
    u[(IDX_UP_A0, IDX_UP_AUP)] = one;
    u[(2, 2)] = one;
    // ↓ branch: a0 ↔ a↓, a↑ fixed
    u[(IDX_DOWN_ADOWN, IDX_DOWN_A0)] = one;
    u[(IDX_DOWN_A0, IDX_DOWN_ADOWN)] = one;
    u[(4, 4)] = one;
    u
}

/// Ψ1 = c↑|↑a↑⟩ + c↓|↓a↓⟩ by the explicit pointer permutation; entropy
/// unchanged.
pub fn stage1_premeasure(state: &StageState) -> Result<StageState> {
    expect_stage(state, 0)?;
    let u = premeasure_unitary();
    let rho = DensityMatrix::new(&u * state.rho.matrix() * u.adjoint())?;
    Ok(StageState::checked(1, rho, None))
}

/// Zeroes every matrix element connecting the ↑ block (rows 0..3) to the
/// ↓ block (rows 3..6).
pub fn decohere_branches(rho: &DensityMatrix) -> Result<DensityMatrix> {
    let mut m = rho.matrix().clone();
    for i in 0..PIPELINE_DIM {
        for j in 0..PIPELINE_DIM {
            if (i < POINTER_DIM) != (j < POINTER_DIM) {
                m[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
    }
    DensityMatrix::new(m)
}

/// Decoherence of the branch superposition. In analytic mode the
/// cross-branch blocks vanish exactly; in Monte-Carlo mode the returned
/// state is the average of `mc_samples` random-phase pure states, drawn
/// from `rng` as (θ↑, θ↓) pairs per sample.
pub fn stage2_decohere(
    state: &StageState,
    config: &MeasurementConfig,
    rng: &mut impl Rng,
) -> Result<StageState> {
    expect_stage(state, 1)?;
    let rho = match config.phase_mode {
        PhaseMode::Analytic => decohere_branches(&state.rho)?,
        PhaseMode::MonteCarlo => {
            if config.mc_samples < 1 {
                return Err(Error::Validation("mc_samples must be ≥ 1".into()));
            }
            let mut amps = CVector::zeros(PIPELINE_DIM);
            amps[IDX_UP_AUP] = config.c_up;
            amps[IDX_DOWN_ADOWN] = config.c_down;
            let mut acc = CMatrix::zeros(PIPELINE_DIM, PIPELINE_DIM);
            for _ in 0..config.mc_samples {
                let theta_up: f64 = rng.random::<f64>() * TAU;
                let theta_down: f64 = rng.random::<f64>() * TAU;
                let mut sample = amps.clone();
                sample[IDX_UP_AUP] *= Complex64::new(0.0, theta_up).exp();
                sample[IDX_DOWN_ADOWN] *= Complex64::new(0.0, theta_down).exp();
                acc += &sample * sample.adjoint();
            }
            DensityMatrix::new(acc.scale(1.0 / config.mc_samples as f64))?
        }
    };
    Ok(StageState::checked(2, rho, None))
}

/// Latent collapse: the density matrix is reproduced bit-for-bit and no
/// outcome is revealed; no observable can distinguish this stage from
/// stage 2.
pub fn stage3_latent(state: &StageState) -> Result<StageState> {
    expect_stage(state, 2)?;
    Ok(StageState {
        stage: 3,
        rho: state.rho.clone(),
        entropy: state.entropy,
        outcome: None,
    })
}

/// Observable collapse: Born-samples the outcome and projects onto the
/// corresponding pure pointer state.
pub fn stage4_observe(
    state: &StageState,
    config: &MeasurementConfig,
    rng: &mut impl Rng,
) -> Result<StageState> {
    expect_stage(state, 3)?;
    let outcome = if rng.random::<f64>() < config.p_up() {
        Outcome::Up
    } else {
        Outcome::Down
    };
    let idx = match outcome {
        Outcome::Up => IDX_UP_AUP,
        Outcome::Down => IDX_DOWN_ADOWN,
    };
    let mut amps = CVector::zeros(PIPELINE_DIM);
    amps[idx] = Complex64::new(1.0, 0.0);
    let rho = DensityMatrix::new(&amps * amps.adjoint())?;
    Ok(StageState::checked(4, rho, Some(outcome)))
}

/// Thermodynamic budget of the observable collapse.
#[derive(Debug, Clone, Copy)]
pub struct EnergyBudget {
    /// Entropy the apparatus must absorb, ΔS_a ≥ S3; reported as S2.
    pub required_entropy_dump: f64,
    /// T_a · ΔS_a.
    pub required_energy: f64,
    /// ΔE1 ≥ R · T_a/2 with the config's detectability ratio R.
    pub detectable: bool,
    /// ΔE2 > ΔE1 (the effect was amplified to macroscopic scale).
    pub amplified: bool,
}

pub fn energy_budget_check(config: &MeasurementConfig) -> Result<EnergyBudget> {
    if !(config.temperature > 0.0) {
        return Err(Error::Validation("apparatus temperature must be positive".into()));
    }
    config.validate()?;
    let ds = config.branch_entropy();
    Ok(EnergyBudget {
        required_entropy_dump: ds,
        required_energy: config.temperature * ds,
        detectable: config.delta_e1 >= config.detect_ratio * config.temperature / 2.0,
        amplified: config.delta_e2 > config.delta_e1,
    })
}

/// Runs stages 0–4 on a caller-supplied stream. Draw order per run:
/// Monte-Carlo phase pairs (if any), then the Born sample.
pub fn run_pipeline_with_rng(
    config: &MeasurementConfig,
    rng: &mut impl Rng,
) -> Result<MeasurementRecord> {
    let s0 = stage0_prepare(config)?;
    let s1 = stage1_premeasure(&s0)?;
    let s2 = stage2_decohere(&s1, config, rng)?;
    let s3 = stage3_latent(&s2)?;
    let s4 = stage4_observe(&s3, config, rng)?;
    Ok(MeasurementRecord {
        config: config.clone(),
        stages: vec![s0, s1, s2, s3, s4],
        born_frequencies: None,
    })
}

/// One full measurement, deterministically seeded from the config.
pub fn run_pipeline(config: &MeasurementConfig) -> Result<MeasurementRecord> {
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    run_pipeline_with_rng(config, &mut rng)
}

/// `runs` measurements off a single seeded stream; the record holds the
/// first run's stages plus the observed outcome frequencies, and each
/// run's (outcome, stage-2 entropy) is returned alongside.
///
/// In analytic mode stages 0–3 do not consume randomness, so runs after
/// the first reduce to a single Born draw each; the stream consumed is
/// bit-identical to running every pipeline in full.
pub fn run_repeated(
    config: &MeasurementConfig,
    runs: usize,
) -> Result<(MeasurementRecord, Vec<(Outcome, f64)>)> {
    if runs == 0 {
        return Err(Error::Validation("runs must be ≥ 1".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut outcomes = Vec::with_capacity(runs);
    let mut first: Option<MeasurementRecord> = None;
    for _ in 0..runs {
        if let Some(rec) = first.as_ref().filter(|_| config.phase_mode == PhaseMode::Analytic) {
            let outcome = if rng.random::<f64>() < config.p_up() {
                Outcome::Up
            } else {
                Outcome::Down
            };
            outcomes.push((outcome, rec.stages[2].entropy));
            continue;
        }
        let rec = run_pipeline_with_rng(config, &mut rng)?;
        outcomes.push((
            rec.stages[4].outcome.expect("stage 4 has an outcome"),
            rec.stages[2].entropy,
        ));
        if first.is_none() {
            first = Some(rec);
        }
    }
    let ups = outcomes.iter().filter(|(o, _)| *o == Outcome::Up).count();
    let mut record = first.expect("runs ≥ 1");
    record.born_frequencies = Some((
        ups as f64 / runs as f64,
        (runs - ups) as f64 / runs as f64,
        runs,
    ));
    Ok((record, outcomes))
}
