//! Scenario files.
//!
//! A scenario is a TOML document. Required tables are `plan`, `modulator`,
//! `filters`, `channel`, `noise`, `receiver`, `keyrate` and at least one
//! `[[users]]` entry; `run`, `events`, `qkd`, `sensing` and `sweep` are
//! optional. Unknown keys anywhere are rejected. Every other problem found
//! while validating is reported in one [`Error::Validation`].

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{ChannelSpec, NoiseSpec, PhaseTier, VibrationEvent, VibrationWaveform};
use crate::chain::ReceiverSettings;
use crate::dsp::{DetectorSpec, FilterPurpose, LoSpec};
use crate::encoder::{IqModulatorModel, SidemodePlan};
use crate::error::{Error, Result};
use crate::filternet::{self, FilterSpec};
use crate::keyrate::{KeyRateMethod, KeyRateParams};

pub const REQUIRED_SECTIONS: [&str; 8] = ["plan", "modulator", "filters", "channel", "noise", "receiver", "keyrate", "users"];

macro_rules! defaults {
    ($($name:ident: $t:ty = $v:expr;)*) => {
        $(fn $name() -> $t { $v })*
    };
}

defaults! {
    d_seed: u64 = 1;
    d_base: f64 = 100e6;
    d_spacing: f64 = 200e6;
    d_baud: f64 = 50e6;
    d_bandwidth: f64 = 100e6;
    d_pilot_offset: f64 = 75e6;
    d_pilot_amplitude: f64 = 10.0;
    d_rolloff: f64 = 0.3;
    d_span: usize = 8;
    d_rate: f64 = 4e9;
    d_guard: usize = 8;
    d_depth: f64 = 0.1;
    d_suppression: f64 = 35.0;
    d_linewidth: f64 = 100e6;
    d_fsr: f64 = 2e9;
    d_reflectivity: f64 = 0.227;
    d_index: f64 = 1.468;
    d_loss: f64 = 0.2;
    d_lo_offset: f64 = 60e6;
    d_det_bandwidth: f64 = 2e9;
    d_pilot_search: f64 = 20e6;
    d_stopband: f64 = 70.0;
    d_repetition: f64 = 50e6;
    d_beta: f64 = 0.95;
    d_one: f64 = 1.0;
    d_cutoff: usize = 12;
    d_gap: f64 = 1e-5;
    d_iterations: usize = 500;
    d_slots: usize = 100_000;
    d_loopback_slots: usize = 512;
    d_brightness: f64 = 1e10;
    d_phase_rate: f64 = 1e6;
    d_phase_duration: f64 = 1.0;
    d_residual: f64 = 3.0;
    d_snr: f64 = 40.0;
    d_probe_slots: usize = 1_000_000;
    d_probe_dbm: f64 = -43.0;
}

fn d_methods() -> Vec<KeyRateMethod> {
    vec![KeyRateMethod::Gaussian, KeyRateMethod::DmSdp, KeyRateMethod::Plob]
}

fn d_bands() -> Vec<String> {
    vec!["100Hz".into(), "1kHz".into(), "10kHz".into()]
}

fn d_eps_table() -> Vec<[f64; 2]> {
    vec![[10.0, 0.0069], [30.0, 0.0075], [50.0, 0.013], [80.0, 0.019]]
}

fn d_probe_distances() -> Vec<f64> {
    vec![10.0, 30.0, 50.0, 80.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "d_seed")]
    pub seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { seed: d_seed() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    /// Optional cross-check against the number of `[[users]]` entries.
    #[serde(default)]
    pub n_users: Option<usize>,
    #[serde(default = "d_base")]
    pub base_freq_hz: f64,
    #[serde(default = "d_spacing")]
    pub spacing_hz: f64,
    #[serde(default = "d_baud")]
    pub baud: f64,
    #[serde(default = "d_bandwidth")]
    pub signal_bandwidth_hz: f64,
    #[serde(default = "d_pilot_offset")]
    pub pilot_offset_hz: f64,
    #[serde(default = "d_pilot_amplitude")]
    pub pilot_amplitude: f64,
    #[serde(default = "d_rolloff")]
    pub rolloff: f64,
    #[serde(default = "d_span")]
    pub pulse_span: usize,
    #[serde(default = "d_rate")]
    pub sample_rate_hz: f64,
    #[serde(default = "d_guard")]
    pub guard_slots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulatorSection {
    #[serde(default = "d_depth")]
    pub mean_depth: f64,
    #[serde(default = "d_suppression")]
    pub suppression_db: f64,
    #[serde(default)]
    pub bias_error_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    #[serde(default = "d_linewidth")]
    pub linewidth_hz: f64,
    #[serde(default = "d_fsr")]
    pub fsr_hz: f64,
    #[serde(default = "d_reflectivity")]
    pub residual_reflectivity: f64,
    #[serde(default = "d_index")]
    pub core_index: f64,
    /// Integration band per sidemode; the plan's signal bandwidth if absent.
    #[serde(default)]
    pub band_hz: Option<f64>,
    /// One centre per user; the plan's sidemode frequencies if absent.
    #[serde(default)]
    pub centers_hz: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub length_km: f64,
    #[serde(default = "d_loss")]
    pub loss_db_per_km: f64,
    #[serde(default = "d_index")]
    pub core_index: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default)]
    pub server_linewidth_hz: f64,
    #[serde(default)]
    pub user_linewidth_hz: f64,
    #[serde(default)]
    pub system_phase_psd: f64,
    #[serde(default)]
    pub frequency_crosstalk_noise: f64,
    #[serde(default)]
    pub filter_crosstalk_noise: f64,
    #[serde(default)]
    pub probe_power_dbm: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Sinusoid,
    TapBurst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSection {
    pub position_km: f64,
    pub kind: EventKind,
    pub frequency_hz: f64,
    pub amplitude_rad: f64,
    /// Ring-down time, tap bursts only.
    #[serde(default)]
    pub decay_s: Option<f64>,
    pub start_s: f64,
    pub duration_s: f64,
}

impl EventSection {
    pub fn to_event(&self) -> VibrationEvent {
        let waveform = match self.kind {
            EventKind::Sinusoid => VibrationWaveform::Sinusoid { frequency_hz: self.frequency_hz, amplitude_rad: self.amplitude_rad },
            EventKind::TapBurst => VibrationWaveform::TapBurst {
                ring_frequency_hz: self.frequency_hz,
                decay_s: self.decay_s.unwrap_or(f64::NAN),
                amplitude_rad: self.amplitude_rad,
            },
        };
        VibrationEvent { position_km: self.position_km, waveform, start_s: self.start_s, duration_s: self.duration_s }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverSection {
    #[serde(default = "d_lo_offset")]
    pub lo_offset_hz: f64,
    #[serde(default)]
    pub lo_linewidth_hz: f64,
    #[serde(default = "d_det_bandwidth")]
    pub detector_bandwidth_hz: f64,
    #[serde(default = "d_pilot_search")]
    pub pilot_search_hz: f64,
    #[serde(default = "d_stopband")]
    pub stopband_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserSection {
    pub modulation_variance: f64,
    pub electronic_noise: f64,
    pub efficiency: f64,
    /// Input-referred excess noise from the user's own link (SNU).
    pub excess_noise: f64,
    /// Overrides the channel transmittance for this user.
    #[serde(default)]
    pub transmittance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateSource {
    /// Rates from the configured channel parameters.
    Model,
    /// Rates from the simulated estimate.
    Estimate,
}

fn d_source() -> RateSource {
    RateSource::Model
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyrateSection {
    #[serde(default = "d_repetition")]
    pub repetition_rate: f64,
    #[serde(default = "d_beta")]
    pub reconciliation_efficiency: f64,
    #[serde(default = "d_one")]
    pub sifting_probability: f64,
    #[serde(default)]
    pub leakage: Option<f64>,
    #[serde(default = "d_cutoff")]
    pub fock_cutoff: usize,
    #[serde(default = "d_gap")]
    pub gap_tolerance: f64,
    #[serde(default = "d_iterations")]
    pub max_iterations: usize,
    #[serde(default = "d_methods")]
    pub methods: Vec<KeyRateMethod>,
    #[serde(default = "d_source")]
    pub source: RateSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QkdSection {
    /// Symbol-tier slots per user for channel estimation.
    #[serde(default = "d_slots")]
    pub slots: usize,
    /// Slots of the bright full-band loopback; 0 skips it.
    #[serde(default = "d_loopback_slots")]
    pub loopback_slots: usize,
    #[serde(default = "d_brightness")]
    pub loopback_brightness: f64,
    /// Slots per shot-noise calibration record; 0 skips calibration.
    #[serde(default)]
    pub snu_slots: usize,
}

impl Default for QkdSection {
    fn default() -> Self {
        QkdSection {
            slots: d_slots(),
            loopback_slots: d_loopback_slots(),
            loopback_brightness: d_brightness(),
            snu_slots: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensingSection {
    #[serde(default = "d_bands")]
    pub bands: Vec<String>,
    #[serde(default = "d_phase_rate")]
    pub rate: f64,
    #[serde(default = "d_phase_duration")]
    pub duration_s: f64,
    #[serde(default = "d_residual")]
    pub residual_offset_hz: f64,
    /// Monte Carlo trials per band; 0 runs only the configured events.
    #[serde(default)]
    pub trials: usize,
    #[serde(default = "d_snr")]
    pub snr_db: f64,
}

impl Default for SensingSection {
    fn default() -> Self {
        SensingSection {
            bands: d_bands(),
            rate: d_phase_rate(),
            duration_s: d_phase_duration(),
            residual_offset_hz: d_residual(),
            trials: 0,
            snr_db: d_snr(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// `(L_km, ε)` pairs interpolated linearly for distance sweeps.
    #[serde(default = "d_eps_table")]
    pub excess_noise_table: Vec<[f64; 2]>,
    #[serde(default = "d_probe_distances")]
    pub probe_distances_km: Vec<f64>,
    #[serde(default = "d_probe_slots")]
    pub probe_slots: usize,
    #[serde(default = "d_probe_dbm")]
    pub probe_power_dbm: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            excess_noise_table: d_eps_table(),
            probe_distances_km: d_probe_distances(),
            probe_slots: d_probe_slots(),
            probe_power_dbm: d_probe_dbm(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub run: RunSection,
    pub plan: PlanSection,
    pub modulator: ModulatorSection,
    pub filters: FilterSection,
    pub channel: ChannelSection,
    pub noise: NoiseSection,
    #[serde(default)]
    pub events: Vec<EventSection>,
    pub receiver: ReceiverSection,
    pub users: Vec<UserSection>,
    pub keyrate: KeyrateSection,
    #[serde(default)]
    pub qkd: QkdSection,
    #[serde(default)]
    pub sensing: SensingSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

/// Reads and validates a scenario file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Parses and validates scenario text.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    let missing: Vec<String> = REQUIRED_SECTIONS
        .iter()
        .filter(|s| !table.contains_key(**s))
        .map(|s| format!("missing required section [{s}]"))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Validation(missing));
    }
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

impl ScenarioConfig {
    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn sidemode_plan(&self) -> SidemodePlan {
        let p = &self.plan;
        SidemodePlan {
            n_users: self.users.len(),
            base_freq_hz: p.base_freq_hz,
            spacing_hz: p.spacing_hz,
            baud: p.baud,
            signal_bandwidth_hz: p.signal_bandwidth_hz,
            amplitudes: self.users.iter().map(|u| (u.modulation_variance.max(0.0) / 2.0).sqrt()).collect(),
            pilot_offset_hz: p.pilot_offset_hz,
            pilot_amplitude: p.pilot_amplitude,
            rolloff: p.rolloff,
            pulse_span: p.pulse_span,
            sample_rate_hz: p.sample_rate_hz,
            guard_slots: p.guard_slots,
        }
    }

    pub fn modulator(&self) -> IqModulatorModel {
        let mut m = IqModulatorModel::from_suppression(self.modulator.mean_depth, self.modulator.suppression_db);
        m.bias_error = self.modulator.bias_error_rad;
        m
    }

    pub fn filter_bank(&self) -> Vec<FilterSpec> {
        let plan = self.sidemode_plan();
        let f = &self.filters;
        let band = f.band_hz.unwrap_or(self.plan.signal_bandwidth_hz);
        let centers: Vec<f64> = match &f.centers_hz {
            Some(c) => c.clone(),
            None => (0..plan.n_users).map(|j| plan.center_frequency(j)).collect(),
        };
        centers
            .into_iter()
            .map(|c| FilterSpec::with_fsr(c, f.linewidth_hz, f.fsr_hz, f.core_index, f.residual_reflectivity, band))
            .collect()
    }

    pub fn channel_spec(&self) -> ChannelSpec {
        ChannelSpec {
            length_km: self.channel.length_km,
            loss_db_per_km: self.channel.loss_db_per_km,
            core_index: self.channel.core_index,
        }
    }

    pub fn noise_spec(&self) -> NoiseSpec {
        let n = &self.noise;
        NoiseSpec {
            server_linewidth_hz: n.server_linewidth_hz,
            user_linewidth_hz: n.user_linewidth_hz,
            system_phase_psd: n.system_phase_psd,
            frequency_crosstalk_noise: n.frequency_crosstalk_noise,
            filter_crosstalk_noise: n.filter_crosstalk_noise,
            probe_power_dbm: n.probe_power_dbm,
        }
    }

    pub fn events(&self) -> Vec<VibrationEvent> {
        self.events.iter().map(EventSection::to_event).collect()
    }

    pub fn receiver(&self, user: usize) -> ReceiverSettings {
        let r = &self.receiver;
        let u = &self.users[user];
        let lo = LoSpec { offset_hz: r.lo_offset_hz, linewidth_hz: r.lo_linewidth_hz, power_adequate: true };
        let det = DetectorSpec { efficiency: u.efficiency, electronic_noise: u.electronic_noise, bandwidth_hz: r.detector_bandwidth_hz };
        ReceiverSettings { lo, detector: det, pilot_search_hz: r.pilot_search_hz, stopband_db: r.stopband_db }
    }

    pub fn keyrate_params(&self, user: usize) -> KeyRateParams {
        let k = &self.keyrate;
        let u = &self.users[user];
        KeyRateParams {
            repetition_rate: k.repetition_rate,
            reconciliation_efficiency: k.reconciliation_efficiency,
            detector_efficiency: u.efficiency,
            electronic_noise: u.electronic_noise,
            sifting_probability: k.sifting_probability,
            leakage: k.leakage,
            fock_cutoff: k.fock_cutoff,
            gap_tolerance: k.gap_tolerance,
            max_iterations: k.max_iterations,
        }
    }

    /// Transmittance seen by `user`: the override if given, else the link's.
    pub fn transmittance(&self, user: usize) -> f64 {
        self.users[user].transmittance.unwrap_or_else(|| self.channel_spec().transmittance())
    }

    pub fn phase_tier(&self) -> PhaseTier {
        PhaseTier { rate: self.sensing.rate, duration_s: self.sensing.duration_s, residual_offset_hz: self.sensing.residual_offset_hz }
    }

    pub fn sensing_bands(&self) -> Result<Vec<FilterPurpose>> {
        self.sensing
            .bands
            .iter()
            .map(|b| FilterPurpose::parse(b).ok_or_else(|| Error::Config(format!("sensing: unknown band {b:?}"))))
            .collect()
    }

    /// Every invariant violation in the scenario, empty when valid.
    pub fn problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        let n = self.users.len();
        if n == 0 {
            p.push("users: at least one [[users]] entry is required".into());
        }
        if let Some(k) = self.plan.n_users {
            if k != n {
                p.push(format!("plan: n_users = {k} but {n} [[users]] entries are given"));
            }
        }
        let plan = self.sidemode_plan();
        if n > 0 {
            p.extend(plan.problems());
        }
        if let Err(e) = self.modulator().validate() {
            p.push(format!("modulator: {e}"));
        }
        if !(self.modulator.suppression_db >= 0.0) {
            p.push("modulator: suppression must be non-negative".into());
        }
        if let Some(c) = &self.filters.centers_hz {
            if c.len() != n {
                p.push(format!("filters: {} centres given for {n} users", c.len()));
            }
        }
        let bank = self.filter_bank();
        if let Some(f) = bank.first() {
            p.extend(f.problems());
            if n > 0 && f.problems().is_empty() {
                p.extend(filternet::validate_design(f, &plan).failures().into_iter().map(|s| format!("filters: {s}")));
            }
        }
        let ch = self.channel_spec();
        p.extend(ch.problems());
        p.extend(self.noise_spec().problems());
        for (i, e) in self.events.iter().enumerate() {
            if e.kind == EventKind::TapBurst && e.decay_s.is_none() {
                p.push(format!("events[{i}]: tap_burst needs decay_s"));
            }
            if e.kind == EventKind::Sinusoid && e.decay_s.is_some() {
                p.push(format!("events[{i}]: decay_s only applies to tap_burst"));
            }
            p.extend(e.to_event().problems(&ch).into_iter().map(|s| format!("events[{i}]: {s}")));
            if e.frequency_hz >= self.sensing.rate / 2.0 {
                p.push(format!("events[{i}]: frequency {} Hz above the phase-trace Nyquist", e.frequency_hz));
            }
        }
        let r = &self.receiver;
        if !(r.pilot_search_hz > 0.0 && r.stopband_db > 0.0) {
            p.push("receiver: pilot search width and stop-band attenuation must be positive".into());
        }
        if n > 0 {
            let top_if = plan.pilot_frequency(n - 1) + r.pilot_search_hz + r.lo_offset_hz;
            if top_if > r.detector_bandwidth_hz || top_if >= plan.sample_rate_hz / 2.0 {
                p.push(format!("receiver: highest pilot IF {top_if:.4e} Hz exceeds the detector bandwidth or Nyquist"));
            }
            if r.lo_offset_hz - 0.5 * (1.0 + plan.rolloff) * plan.baud + plan.base_freq_hz <= 0.0 {
                p.push("receiver: LO offset puts the lowest band below zero IF".into());
            }
        }
        for (j, u) in self.users.iter().enumerate() {
            if !(u.modulation_variance > 0.0) {
                p.push(format!("users[{j}]: modulation variance must be positive"));
            }
            if !(u.excess_noise >= 0.0) {
                p.push(format!("users[{j}]: excess noise must be non-negative"));
            }
            if let Some(t) = u.transmittance {
                if !(t > 0.0 && t <= 1.0) {
                    p.push(format!("users[{j}]: transmittance {t} outside (0, 1]"));
                }
            }
            let det = DetectorSpec { efficiency: u.efficiency, electronic_noise: u.electronic_noise, bandwidth_hz: r.detector_bandwidth_hz };
            p.extend(det.problems().into_iter().map(|s| format!("users[{j}]: {s}")));
        }
        if n > 0 {
            p.extend(self.keyrate_params(0).problems().into_iter().filter(|s| !s.contains("detector") && !s.contains("electronic")).map(|s| format!("keyrate: {s}")));
        }
        if self.keyrate.methods.is_empty() {
            p.push("keyrate: methods must not be empty".into());
        }
        if self.qkd.slots < crate::keyrate::MIN_ESTIMATION_SLOTS {
            p.push(format!("qkd: slots must be at least {}", crate::keyrate::MIN_ESTIMATION_SLOTS));
        }
        if self.qkd.snu_slots > 0 && self.qkd.snu_slots < 50_000 {
            p.push("qkd: snu_slots must be 0 or at least 50000".into());
        }
        if !(self.qkd.loopback_brightness > 0.0) {
            p.push("qkd: loopback brightness must be positive".into());
        }
        if let Err(e) = self.sensing_bands() {
            p.push(e.to_string());
        }
        if !(self.sensing.rate > 0.0 && self.sensing.duration_s > 0.0) {
            p.push("sensing: rate and duration must be positive".into());
        }
        let tbl = &self.sweep.excess_noise_table;
        if tbl.is_empty() || tbl.windows(2).any(|w| !(w[1][0] > w[0][0])) {
            p.push("sweep: excess_noise_table needs strictly increasing distances".into());
        }
        if tbl.iter().any(|r| !(r[1] >= 0.0)) {
            p.push("sweep: excess noise entries must be non-negative".into());
        }
        p
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(p))
        }
    }

    /// The effective configuration, defaults filled in, as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// SHA-256 of the effective configuration, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serialises");
        hex(&Sha256::digest(json))
    }

    /// Mean of a per-user quantity.
    pub fn user_mean(&self, f: impl Fn(&UserSection) -> f64) -> f64 {
        self.users.iter().map(f).sum::<f64>() / self.users.len().max(1) as f64
    }

    /// Linear interpolation in the sweep ε table, flat beyond its ends.
    pub fn sweep_excess_noise(&self, length_km: f64) -> f64 {
        interpolate(&self.sweep.excess_noise_table, length_km)
    }
}

pub fn interpolate(table: &[[f64; 2]], x: f64) -> f64 {
    match table {
        [] => f64::NAN,
        [only] => only[1],
        _ => {
            if x <= table[0][0] {
                return table[0][1];
            }
            for w in table.windows(2) {
                let ([x0, y0], [x1, y1]) = (w[0], w[1]);
                if x <= x1 {
                    return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
                }
            }
            table[table.len() - 1][1]
        }
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = r#"
[plan]
[modulator]
[filters]
[channel]
length_km = 20
[noise]
[receiver]
[keyrate]
[[users]]
modulation_variance = 1.2
electronic_noise = 0.1
efficiency = 0.6
excess_noise = 0.01
"#;

    #[test]
    fn minimal_file_fills_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.n_users(), 1);
        assert_eq!(c.plan.baud, 50e6);
        assert_eq!(c.receiver.lo_offset_hz, 60e6);
        assert_eq!(c.keyrate.methods.len(), 3);
        assert_eq!(c.run.seed, 1);
        // echoed text parses back to the same scenario
        let again = parse_config(&c.to_toml()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.hash(), c.hash());
    }

    #[test]
    fn empty_file_names_every_missing_section() {
        match parse_config("") {
            Err(Error::Validation(v)) => {
                assert_eq!(v.len(), REQUIRED_SECTIONS.len());
                for s in REQUIRED_SECTIONS {
                    assert!(v.iter().any(|m| m.contains(&format!("[{s}]"))), "{s}");
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = MINIMAL.replace("length_km = 20", "length_km = 20\nlenght = 3");
        let e = parse_config(&text).unwrap_err();
        assert!(matches!(e, Error::Config(ref m) if m.contains("lenght")), "{e}");
    }

    #[test]
    fn wide_filter_breaks_design_rule() {
        let text = MINIMAL.replace("[filters]", "[filters]\nlinewidth_hz = 300e6");
        match parse_config(&text) {
            Err(Error::Validation(v)) => assert!(v.iter().any(|m| m.contains("linewidth")), "{v:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn problems_are_listed_together() {
        let text = MINIMAL
            .replace("length_km = 20", "length_km = -1")
            .replace("efficiency = 0.6", "efficiency = 1.6")
            .replace("[plan]", "[plan]\nn_users = 3");
        match parse_config(&text) {
            Err(Error::Validation(v)) => assert!(v.len() >= 3, "{v:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn table_interpolation() {
        let t = d_eps_table();
        assert_eq!(interpolate(&t, 5.0), 0.0069);
        assert_eq!(interpolate(&t, 30.0), 0.0075);
        assert!((interpolate(&t, 65.0) - 0.016).abs() < 1e-12);
        assert_eq!(interpolate(&t, 100.0), 0.019);
    }

    #[test]
    fn user_override_of_transmittance() {
        let text = MINIMAL.replace("excess_noise = 0.01", "excess_noise = 0.01\ntransmittance = 0.5");
        let c = parse_config(&text).unwrap();
        assert_eq!(c.transmittance(0), 0.5);
    }
}
