//! Simulation toolkit for entropy bookkeeping in open quantum systems and
//! coarse-grained classical dynamics: density-matrix algebra, von Neumann
//! and Lindblad evolution, a staged quantum-measurement pipeline, an
//! apparent-CPT-violation scan for environment-dressed two-state decays,
//! a reversible baker-map mixing demo, and a weighted ledger of branching
//! and merging worlds.

pub mod cptest;
pub mod dynamics;
pub mod error;
pub mod measurement;
pub mod phasemix;
pub mod qdm;
pub mod worldledger;

pub use cptest::{KaonModel, SymmetryMaps, ViolationReport};
pub use dynamics::{LindbladModel, Trajectory};
pub use error::{Error, Result};
pub use measurement::{MeasurementConfig, MeasurementRecord, Outcome, PhaseMode, StageState};
pub use phasemix::{MixingRun, PhaseGrid};
pub use qdm::{CMatrix, CVector, DensityMatrix, PureState, SpaceLayout};
pub use worldledger::{LedgerEvent, LedgerStats, World, WorldLedger};
