//! Run configuration: one JSON document, versioned, unknown keys rejected.
//! Every physical quantity carries its SI unit in the key name.

// field names are the JSON keys, and unit symbols keep their case
#![allow(non_snake_case)]

use serde::Deserialize;

use nmrqc_core::lattice::{ChainLattice, DEFAULT_REL_TOL};
use nmrqc_core::magnet::{self, PrismMagnet};
use nmrqc_core::mrfm::{CAIParams, CantileverModel, Polarization, ScalabilityParams};
use nmrqc_core::spinsys::Mode;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub magnet: MagnetConfig,
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub sequence: SequenceConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub scalability: ScalabilityConfig,
    #[serde(default)]
    pub readout: ReadoutConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            lattice: LatticeConfig::default(),
            magnet: MagnetConfig::default(),
            system: SystemConfig::default(),
            sequence: SequenceConfig::default(),
            simulate: SimulateConfig::default(),
            scalability: ScalabilityConfig::default(),
            readout: ReadoutConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeConfig {
    pub preset: String,
    pub a_m: Option<f64>,
    /// Replaces the preset's transverse chain lattice (two vectors, m).
    pub transverse_basis_m: Option<[[f64; 2]; 2]>,
    /// Scales the preset's transverse chain lattice.
    pub transverse_scale: Option<f64>,
    pub phi_rad: Option<f64>,
    pub gamma_rad_per_s_per_T: Option<f64>,
    pub rel_tol: f64,
    pub max_separation: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_count: usize,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        LatticeConfig {
            preset: "fluorapatite".into(),
            a_m: None,
            transverse_basis_m: None,
            transverse_scale: None,
            phi_rad: None,
            gamma_rad_per_s_per_T: None,
            rel_tol: DEFAULT_REL_TOL,
            max_separation: 10,
            lambda_min: 0.5,
            lambda_max: 5.0,
            lambda_count: 46,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Prism,
    Linear,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MagnetConfig {
    pub field: FieldKind,
    pub width_m: f64,
    pub height_m: f64,
    pub depth_m: f64,
    pub center_m: [f64; 3],
    pub polarization_T: f64,
    pub external_field_T: f64,
    /// Evaluation point; defaults to `standoff_m` above the top-face centre.
    pub eval_point_m: Option<[f64; 3]>,
    pub standoff_m: f64,
    /// B_z gradient of the synthetic linear field.
    pub linear_gradient_T_per_m: [f64; 3],
    /// Replaces the computed gradient in the splitting profile.
    pub grad_override_T_per_m: Option<f64>,
    pub planes: usize,
    pub patch_x_m: f64,
    pub patch_y_m: f64,
    pub homogeneity_samples: usize,
    /// Field-map grid: [start, stop, count] per axis.
    pub map_x_m: (f64, f64, usize),
    pub map_y_m: (f64, f64, usize),
    pub map_z_m: (f64, f64, usize),
}

impl Default for MagnetConfig {
    fn default() -> Self {
        let top = 0.0;
        MagnetConfig {
            field: FieldKind::Prism,
            width_m: magnet::DESIGN_WIDTH,
            height_m: magnet::DESIGN_HEIGHT,
            depth_m: magnet::DESIGN_DEPTH,
            center_m: [0.0, 0.0, top - 0.5 * magnet::DESIGN_HEIGHT],
            polarization_T: magnet::DY_POLARIZATION,
            external_field_T: magnet::DEFAULT_EXTERNAL_FIELD,
            eval_point_m: None,
            standoff_m: magnet::DESIGN_STANDOFF,
            linear_gradient_T_per_m: [0.0, 0.0, magnet::DESIGN_GRADIENT_REPORTED],
            grad_override_T_per_m: None,
            planes: 10,
            patch_x_m: 1e-6,
            patch_y_m: 10e-6,
            homogeneity_samples: 11,
            map_x_m: (0.0, 0.0, 1),
            map_y_m: (0.0, 0.0, 1),
            map_z_m: (0.5e-6, 10e-6, 20),
        }
    }
}

impl MagnetConfig {
    pub fn prism(&self) -> Result<PrismMagnet, CliError> {
        PrismMagnet::from_polarization(
            "magnet",
            self.width_m,
            self.height_m,
            self.depth_m,
            self.center_m,
            self.polarization_T,
        )
        .map_err(CliError::from)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub planes: usize,
    /// Transverse chain coordinates in units of the chain spacing a.
    pub chain_positions_a: Vec<[f64; 2]>,
    pub grad_T_per_m: f64,
    pub same_plane_couplings: bool,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            planes: 3,
            chain_positions_a: vec![[0.0, 0.0]],
            grad_T_per_m: magnet::DESIGN_GRADIENT_REPORTED,
            same_plane_couplings: true,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SequenceConfig {
    /// WAHUHA spacing τ.
    pub tau_s: f64,
    pub broadband_width_s: f64,
    /// Selective π width; defaults to 1/Δω.
    pub pi_width_s: Option<f64>,
    /// Hadamard slot; defaults to one WAHUHA cycle.
    pub slot_s: Option<f64>,
    pub block_length: f64,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        SequenceConfig { tau_s: 1e-5, broadband_width_s: 1e-6, pi_width_s: None, slot_s: None, block_length: 16.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Decoupling,
    Wahuha,
    Cnot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    AllUp,
    AllX,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub schedule: ScheduleKind,
    pub mode: ModeConfig,
    pub control_plane: usize,
    pub target_plane: usize,
    pub initial_state: InitialState,
    /// Decoupling slot for simulation; defaults to π/(4|δω|).
    pub slot_s: Option<f64>,
    /// Selective π width for the decoupling schedule (0 = ideal).
    pub pi_width_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeConfig {
    Ideal,
    Sampled,
}

impl From<ModeConfig> for Mode {
    fn from(m: ModeConfig) -> Mode {
        match m {
            ModeConfig::Ideal => Mode::Ideal,
            ModeConfig::Sampled => Mode::Sampled,
        }
    }
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            schedule: ScheduleKind::Decoupling,
            mode: ModeConfig::Ideal,
            control_plane: 0,
            target_plane: 1,
            initial_state: InitialState::AllX,
            slot_s: None,
            pi_width_s: 0.0,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalabilityConfig {
    pub B0_T: f64,
    pub temperature_K: f64,
    pub copies: f64,
    pub qubits: usize,
    pub grad_T_per_m: f64,
    pub gamma_rad_per_s_per_T: f64,
    pub T2_0_s: f64,
    pub block_length: f64,
    pub delta_omega_rad_per_s: f64,
    pub force_threshold_N_per_sqrtHz: f64,
    pub bandwidth_Hz: f64,
    pub n_values: Vec<usize>,
    /// Second operating point reported alongside the design point.
    pub extreme_B0_T: f64,
    pub extreme_temperature_K: f64,
}

impl Default for ScalabilityConfig {
    fn default() -> Self {
        let p = ScalabilityParams::default();
        let mut n_values: Vec<usize> = (1..=20).collect();
        n_values.extend((25..=500).step_by(25));
        ScalabilityConfig {
            B0_T: p.b0,
            temperature_K: p.temperature,
            copies: p.copies,
            qubits: p.qubits,
            grad_T_per_m: p.grad,
            gamma_rad_per_s_per_T: p.gamma,
            T2_0_s: p.t2_0,
            block_length: p.block_length,
            delta_omega_rad_per_s: p.delta_omega,
            force_threshold_N_per_sqrtHz: p.force_threshold,
            bandwidth_Hz: p.bandwidth,
            n_values,
            extreme_B0_T: 20.0,
            extreme_temperature_K: 0.01,
        }
    }
}

impl ScalabilityConfig {
    pub fn params(&self) -> ScalabilityParams {
        ScalabilityParams {
            b0: self.B0_T,
            temperature: self.temperature_K,
            copies: self.copies,
            qubits: self.qubits,
            grad: self.grad_T_per_m,
            gamma: self.gamma_rad_per_s_per_T,
            t2_0: self.T2_0_s,
            block_length: self.block_length,
            delta_omega: self.delta_omega_rad_per_s,
            force_threshold: self.force_threshold_N_per_sqrtHz,
            bandwidth: self.bandwidth_Hz,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReadoutConfig {
    pub B1_T: f64,
    pub omega_m_rad_per_s: f64,
    pub excursion_rad_per_s: f64,
    pub periods: u32,
    pub gamma_rad_per_s_per_T: f64,
    pub delta_omega_rad_per_s: f64,
    pub initial: Polarization,
    pub cantilever: CantileverConfig,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        let c = CAIParams::default();
        ReadoutConfig {
            B1_T: c.b1,
            omega_m_rad_per_s: c.omega_m,
            excursion_rad_per_s: c.excursion,
            periods: 4,
            gamma_rad_per_s_per_T: c.gamma,
            delta_omega_rad_per_s: c.delta_omega,
            initial: Polarization::Up,
            cantilever: CantileverConfig::default(),
        }
    }
}

impl ReadoutConfig {
    pub fn params(&self) -> CAIParams {
        CAIParams {
            b1: self.B1_T,
            omega_m: self.omega_m_rad_per_s,
            excursion: self.excursion_rad_per_s,
            duration: self.periods as f64 * 2.0 * std::f64::consts::PI / self.omega_m_rad_per_s,
            gamma: self.gamma_rad_per_s_per_T,
            delta_omega: self.delta_omega_rad_per_s,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CantileverConfig {
    pub spring_constant_N_per_m: f64,
    pub resonance_freq_Hz: f64,
    pub quality: f64,
    pub temperature_K: f64,
    pub bandwidth_Hz: f64,
}

impl Default for CantileverConfig {
    fn default() -> Self {
        let c = CantileverModel::default();
        CantileverConfig {
            spring_constant_N_per_m: c.spring_constant,
            resonance_freq_Hz: c.resonance_freq,
            quality: c.quality,
            temperature_K: c.temperature,
            bandwidth_Hz: c.bandwidth,
        }
    }
}

impl CantileverConfig {
    pub fn model(&self) -> CantileverModel {
        CantileverModel {
            spring_constant: self.spring_constant_N_per_m,
            resonance_freq: self.resonance_freq_Hz,
            quality: self.quality,
            temperature: self.temperature_K,
            bandwidth: self.bandwidth_Hz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
    pub format: Format,
    pub threads: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: "out".into(), format: Format::Csv, threads: 1 }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::config(format!("config: {e}")))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(format!(
                "config schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn lattice(&self) -> Result<ChainLattice, CliError> {
        let l = &self.lattice;
        let mut lat = ChainLattice::preset(&l.preset)?;
        if l.a_m.is_some() || l.transverse_basis_m.is_some() || l.phi_rad.is_some() || l.gamma_rad_per_s_per_T.is_some()
        {
            lat = ChainLattice::new(
                lat.name.clone(),
                l.a_m.unwrap_or(lat.a),
                l.transverse_basis_m.unwrap_or(lat.transverse_basis),
                l.gamma_rad_per_s_per_T.unwrap_or(lat.gamma),
                l.phi_rad.unwrap_or(lat.phi),
            )?;
        }
        if let Some(s) = l.transverse_scale {
            lat = lat.with_transverse_scale(s)?;
        }
        Ok(lat)
    }
}
