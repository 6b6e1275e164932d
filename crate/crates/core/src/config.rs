//! Run configuration: a sectioned TOML document describing grid, solver,
//! initial data, forcing, observers, partition, and norm parameters, plus the
//! built-in presets used by the validation suites.
//!
//! A run is fully determined by its configuration and seed; identical inputs
//! reproduce identical outputs byte for byte.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::besov::BesovParams;
use crate::diagnostics::{
    besov_apriori_check, gronwall_bound_check, BesovAprioriReport, BoundReport, DiagnosticsError,
};
use crate::dyadic::{build_partition, PartitionMode, PartitionProfile};
use crate::field::PhysicalField;
use crate::fourier::forward_transform;
use crate::grid::{GridError, PeriodicGrid};
use crate::io::BfldError;
use crate::solver::{
    self, fmt_param, presets, Dealias, FlowState, Forcing, Modulation, ObserverKind, ObserverSet,
    Scheme, SolverConfig, SolverError, TrajectoryRecord,
};
use crate::synth::random_div_free;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Field(#[from] BfldError),
}

fn tau() -> f64 {
    std::f64::consts::TAU
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub n: usize,
    #[serde(default = "tau")]
    pub length: f64,
}

fn default_scheme() -> String {
    "ifrk4".into()
}

fn default_dealias() -> String {
    "two-thirds".into()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub nu: f64,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_dealias")]
    pub dealias: String,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    /// Galerkin cutoff; defaults to `n/3` (the dealiased band).
    #[serde(default)]
    pub truncation: Option<usize>,
}

fn one() -> f64 {
    1.0
}

fn one_i64() -> i64 {
    1
}

fn default_k0() -> f64 {
    4.0
}

fn default_max_speed() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    /// One of: zero, taylor-green, shear-mode, random-div-free, files.
    pub kind: String,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "one_i64")]
    pub k: i64,
    /// Spectral envelope width for random-div-free.
    #[serde(default = "default_k0")]
    pub k0: f64,
    /// Target maximum speed for random-div-free.
    #[serde(default = "default_max_speed")]
    pub max_speed: f64,
    /// One BFLD file per velocity component (kind = files).
    #[serde(default)]
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ForcingSection {
    /// One of: none, steady-shear, modulated-shear, files.
    pub kind: String,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "one_i64")]
    pub k: i64,
    #[serde(default = "one")]
    pub omega: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub files: Vec<String>,
}

impl Default for ForcingSection {
    fn default() -> Self {
        Self {
            kind: "none".into(),
            amplitude: 1.0,
            k: 1,
            omega: 1.0,
            phase: 0.0,
            files: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ObserversSection {
    pub cadence: f64,
    /// Named observers; `sobolev` and `besov` expand over the `norms` list.
    pub list: Vec<String>,
}

fn default_c1() -> f64 {
    0.5
}

fn default_c2() -> f64 {
    2.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PartitionSection {
    /// "reconstruction" or "energy".
    pub mode: String,
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default = "default_c2")]
    pub c2: f64,
}

impl Default for PartitionSection {
    fn default() -> Self {
        Self {
            mode: "energy".into(),
            c1: 0.5,
            c2: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NormTriple {
    pub s: f64,
    pub p: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub grid: GridSection,
    pub solver: SolverSection,
    pub initial: InitialSection,
    #[serde(default)]
    pub forcing: ForcingSection,
    pub observers: ObserversSection,
    #[serde(default)]
    pub partition: PartitionSection,
    #[serde(default)]
    pub norms: Vec<NormTriple>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));
        match self.initial.kind.as_str() {
            "zero" | "taylor-green" | "shear-mode" | "random-div-free" | "files" => {}
            other => return invalid(format!("unknown initial kind '{other}'")),
        }
        match self.forcing.kind.as_str() {
            "none" | "steady-shear" | "modulated-shear" | "files" => {}
            other => return invalid(format!("unknown forcing kind '{other}'")),
        }
        match self.partition.mode.as_str() {
            "reconstruction" | "energy" => {}
            other => return invalid(format!("unknown partition mode '{other}'")),
        }
        match self.solver.dealias.as_str() {
            "two-thirds" | "none" => {}
            other => return invalid(format!("unknown dealias rule '{other}'")),
        }
        if self.solver.scheme != "ifrk4" {
            return invalid(format!("unknown scheme '{}'", self.solver.scheme));
        }
        for name in &self.observers.list {
            let known = ObserverKind::by_name(name).is_some()
                || name == "sobolev"
                || name == "besov";
            if !known {
                return invalid(format!("unknown observer '{name}'"));
            }
        }
        if (self.observers.list.iter().any(|n| n == "sobolev" || n == "besov"))
            && self.norms.is_empty()
        {
            return invalid("sobolev/besov observers need a non-empty [[norms]] list".into());
        }
        if self.initial.kind == "taylor-green" && self.grid.dim != 2 {
            return invalid("taylor-green initial data is two-dimensional".into());
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<PeriodicGrid, ConfigError> {
        Ok(PeriodicGrid::new(
            self.grid.dim,
            self.grid.n,
            self.grid.length,
        )?)
    }

    pub fn truncation(&self) -> usize {
        self.solver.truncation.unwrap_or(self.grid.n / 3)
    }

    pub fn dealias(&self) -> Dealias {
        match self.solver.dealias.as_str() {
            "none" => Dealias::None,
            _ => Dealias::TwoThirds,
        }
    }

    pub fn solver_config(&self) -> Result<SolverConfig, SolverError> {
        let mut cfg = SolverConfig::new(self.solver.dt, self.dealias())?;
        cfg.scheme = Scheme::IfRk4;
        Ok(cfg)
    }

    pub fn partition_profile(&self) -> Result<PartitionProfile, RunError> {
        let mode = match self.partition.mode.as_str() {
            "reconstruction" => PartitionMode::Reconstruction,
            _ => PartitionMode::Energy,
        };
        PartitionProfile::new(mode, self.partition.c1, self.partition.c2)
            .map_err(|e| RunError::Solver(SolverError::Partition(e)))
    }

    pub fn build_initial_state(&self, grid: PeriodicGrid) -> Result<FlowState, RunError> {
        let truncation = self.truncation();
        let nu = self.solver.nu;
        let state = match self.initial.kind.as_str() {
            "zero" => FlowState::new(
                grid,
                vec![crate::SpectralField::zero(grid); grid.dim()],
                0.0,
                nu,
                truncation,
            )?,
            "taylor-green" => FlowState::from_physical(
                grid,
                &presets::taylor_green_velocity(grid, self.initial.amplitude),
                0.0,
                nu,
                truncation,
            )?,
            "shear-mode" => FlowState::from_physical(
                grid,
                &presets::shear_mode_velocity(grid, self.initial.amplitude, self.initial.k),
                0.0,
                nu,
                truncation,
            )?,
            "random-div-free" => {
                let comps = random_div_free(
                    grid,
                    self.seed,
                    self.initial.k0,
                    truncation,
                    self.initial.max_speed,
                );
                FlowState::new(grid, comps, 0.0, nu, truncation)?
            }
            "files" => {
                let comps = self.read_component_files(&self.initial.files, grid)?;
                FlowState::from_physical(grid, &comps, 0.0, nu, truncation)?
            }
            _ => unreachable!("validated kind"),
        };
        Ok(state)
    }

    fn read_component_files(
        &self,
        files: &[String],
        grid: PeriodicGrid,
    ) -> Result<Vec<PhysicalField>, RunError> {
        if files.len() != grid.dim() {
            return Err(RunError::Config(ConfigError::Invalid(format!(
                "need {} component files, got {}",
                grid.dim(),
                files.len()
            ))));
        }
        let mut comps = Vec::with_capacity(files.len());
        for f in files {
            let field = crate::io::read_bfld(Path::new(f))?;
            if field.grid() != &grid {
                return Err(RunError::Config(ConfigError::Invalid(format!(
                    "field file {f} does not match the configured grid"
                ))));
            }
            comps.push(field);
        }
        Ok(comps)
    }

    pub fn build_forcing(&self, grid: PeriodicGrid) -> Result<Forcing, RunError> {
        let section = &self.forcing;
        let forcing = match section.kind.as_str() {
            "none" => Forcing::None,
            "steady-shear" => {
                let base = presets::shear_mode_velocity(grid, section.amplitude, section.k);
                Forcing::steady(&grid, base.iter().map(forward_transform).collect())?
            }
            "modulated-shear" => {
                let base = presets::shear_mode_velocity(grid, section.amplitude, section.k);
                Forcing::time_modulated(
                    &grid,
                    base.iter().map(forward_transform).collect(),
                    Modulation::Sine {
                        amplitude: 1.0,
                        omega: section.omega,
                        phase: section.phase,
                    },
                )?
            }
            "files" => {
                let comps = self.read_component_files(&section.files, grid)?;
                Forcing::steady(&grid, comps.iter().map(forward_transform).collect())?
            }
            _ => unreachable!("validated kind"),
        };
        Ok(forcing)
    }

    pub fn observer_set(&self) -> Result<ObserverSet, RunError> {
        let mut kinds = Vec::new();
        for name in &self.observers.list {
            if let Some(kind) = ObserverKind::by_name(name) {
                kinds.push(kind);
            } else if name == "sobolev" {
                for t in &self.norms {
                    kinds.push(ObserverKind::Sobolev(t.s));
                }
            } else if name == "besov" {
                for t in &self.norms {
                    kinds.push(ObserverKind::Besov {
                        s: t.s,
                        p: t.p,
                        q: t.q,
                    });
                }
            }
        }
        let mut set = ObserverSet::new(self.observers.cadence, kinds);
        set.partition_profile = self.partition_profile().map_err(|e| match e {
            RunError::Solver(s) => s,
            _ => SolverError::BadParameter("partition profile".into()),
        })?;
        Ok(set)
    }
}

/// Trajectory plus the a-priori bound reports computed after the run.
pub struct RunOutput {
    pub record: TrajectoryRecord,
    pub gronwall: Vec<BoundReport>,
    pub besov_apriori: Vec<(String, BesovAprioriReport)>,
}

/// Runs a configuration end to end: build, integrate, and evaluate the bound
/// checks for which the required observers were recorded.
pub fn execute_run(config: &RunConfig) -> Result<RunOutput, RunError> {
    config.validate()?;
    let grid = config.build_grid()?;
    let state = config.build_initial_state(grid)?;
    let forcing = config.build_forcing(grid)?;
    let solver_config = config.solver_config()?;
    let observers = config.observer_set()?;
    let record = solver::run(
        &state,
        &forcing,
        &solver_config,
        config.solver.t_end,
        &observers,
    )?;

    let mut gronwall = Vec::new();
    if record.series("l2_norm").is_some() && !record.samples.is_empty() {
        let f_norms: Vec<f64> = record
            .times()
            .iter()
            .map(|&t| forcing.l2_norm_at(t))
            .collect();
        gronwall = gronwall_bound_check(&record, state.l2_norm(), &f_norms)?;
    }

    let mut besov_apriori = Vec::new();
    if !record.samples.is_empty() {
        let partition = build_partition(grid, observers.partition_profile)
            .map_err(SolverError::Partition)?;
        for t in &config.norms {
            let column = format!(
                "besov_{}_{}_{}",
                fmt_param(t.s),
                fmt_param(t.p),
                fmt_param(t.q)
            );
            if record.series(&column).is_none() {
                continue;
            }
            let params = BesovParams::new(t.s, t.p, t.q).map_err(SolverError::Besov)?;
            let u0_besov = solver::vector_besov_norm(&state, &partition, &params)?;
            // The shear-mode forcing base is a single mode: its Besov norm
            // scales linearly with the modulation level.
            let f_besov: Vec<f64> = match &forcing {
                Forcing::None => vec![0.0; record.samples.len()],
                f => {
                    let base_state = FlowState::new(
                        grid,
                        match f {
                            Forcing::Steady(base) | Forcing::TimeModulated { base, .. } => {
                                base.clone()
                            }
                            Forcing::None => unreachable!(),
                        },
                        0.0,
                        config.solver.nu,
                        config.truncation(),
                    )?;
                    let base_norm =
                        solver::vector_besov_norm(&base_state, &partition, &params)?;
                    record
                        .times()
                        .iter()
                        .map(|&t| f.level(t).abs() * base_norm)
                        .collect()
                }
            };
            let report = besov_apriori_check(&record, &column, u0_besov, &f_besov)?;
            besov_apriori.push((column, report));
        }
    }

    Ok(RunOutput {
        record,
        gronwall,
        besov_apriori,
    })
}

/// Built-in scenarios; every validation suite runs on these.
pub const PRESET_NAMES: [&str; 4] = [
    "taylor-green-2d",
    "stokes-mode",
    "forced-single-mode",
    "random-div-free",
];

/// Returns the named preset configuration, or `None` for an unknown name.
pub fn preset(name: &str) -> Option<RunConfig> {
    let observers = |cadence: f64| ObserversSection {
        cadence,
        list: vec![
            "energy".into(),
            "dissipation".into(),
            "forcing_power".into(),
            "l2_norm".into(),
            "forcing_l2".into(),
            "shell_energy".into(),
            "shell_dissipation".into(),
            "sobolev".into(),
            "besov".into(),
        ],
    };
    let norms = vec![NormTriple {
        s: 1.5,
        p: 2.0,
        q: 2.0,
    }];
    let config = match name {
        "taylor-green-2d" => RunConfig {
            seed: 0,
            grid: GridSection {
                dim: 2,
                n: 64,
                length: tau(),
            },
            solver: SolverSection {
                nu: 0.1,
                dt: 1e-3,
                t_end: 1.0,
                dealias: default_dealias(),
                scheme: default_scheme(),
                truncation: None,
            },
            initial: InitialSection {
                kind: "taylor-green".into(),
                amplitude: 1.0,
                k: 1,
                k0: default_k0(),
                max_speed: default_max_speed(),
                files: Vec::new(),
            },
            forcing: ForcingSection::default(),
            observers: observers(1e-2),
            partition: PartitionSection::default(),
            norms: norms.clone(),
        },
        "stokes-mode" => RunConfig {
            seed: 0,
            grid: GridSection {
                dim: 2,
                n: 64,
                length: tau(),
            },
            solver: SolverSection {
                nu: 0.1,
                dt: 1e-3,
                t_end: 0.25,
                dealias: default_dealias(),
                scheme: default_scheme(),
                truncation: None,
            },
            initial: InitialSection {
                kind: "shear-mode".into(),
                amplitude: 1.0,
                k: 1,
                k0: default_k0(),
                max_speed: default_max_speed(),
                files: Vec::new(),
            },
            forcing: ForcingSection::default(),
            observers: observers(1e-3),
            partition: PartitionSection::default(),
            norms: norms.clone(),
        },
        "forced-single-mode" => RunConfig {
            seed: 0,
            grid: GridSection {
                dim: 2,
                n: 32,
                length: tau(),
            },
            solver: SolverSection {
                nu: 0.1,
                dt: 1e-2,
                t_end: 50.0,
                dealias: default_dealias(),
                scheme: default_scheme(),
                truncation: None,
            },
            initial: InitialSection {
                kind: "zero".into(),
                amplitude: 0.0,
                k: 1,
                k0: default_k0(),
                max_speed: default_max_speed(),
                files: Vec::new(),
            },
            // Amplitude 0.5: strong enough that the exponential factor in the
            // energy-form bound dominates the whole trajectory (see the
            // gronwall_bound_check docs for the weak-forcing caveat).
            forcing: ForcingSection {
                kind: "steady-shear".into(),
                amplitude: 0.5,
                k: 1,
                omega: 1.0,
                phase: 0.0,
                files: Vec::new(),
            },
            observers: observers(0.1),
            partition: PartitionSection::default(),
            norms: norms.clone(),
        },
        "random-div-free" => RunConfig {
            seed: 7,
            grid: GridSection {
                dim: 2,
                n: 64,
                length: tau(),
            },
            solver: SolverSection {
                nu: 0.05,
                dt: 1e-3,
                t_end: 0.5,
                dealias: default_dealias(),
                scheme: default_scheme(),
                truncation: None,
            },
            initial: InitialSection {
                kind: "random-div-free".into(),
                amplitude: 1.0,
                k: 1,
                k0: 4.0,
                max_speed: 0.5,
                files: Vec::new(),
            },
            forcing: ForcingSection::default(),
            observers: observers(5e-3),
            partition: PartitionSection::default(),
            norms,
        },
        _ => return None,
    };
    Some(config)
}
