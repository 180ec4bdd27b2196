use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{self, SnuCheck, UserLoopback};
use crate::channel::{self, simulate_phase_traces, ExcessNoiseBudget};
use crate::dsp::{design_filter, simulate_symbol_tier, FilterPurpose};
use crate::encoder::{self, sideband_ratio};
use crate::error::{Error, Result};
use crate::filternet::{self, DesignCriterion};
use crate::keyrate::{
    self, ChannelEstimate, CorrectionInputs, KeyRateMethod, KeyRateParams, KeyRateReport,
};
use crate::scenario::config::{RateSource, ScenarioConfig};
use crate::seed;
use crate::sensing::{self, LocalizationResult, ResolutionReport, ResolutionScenario, TrialRecord};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Qkd,
    Sensing,
    Both,
}

impl RunMode {
    pub fn parse(s: &str) -> Option<RunMode> {
        match s {
            "qkd" => Some(RunMode::Qkd),
            "sensing" => Some(RunMode::Sensing),
            "both" => Some(RunMode::Both),
            _ => None,
        }
    }

    fn qkd(self) -> bool {
        matches!(self, RunMode::Qkd | RunMode::Both)
    }

    fn sensing(self) -> bool {
        matches!(self, RunMode::Sensing | RunMode::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserDesign {
    pub user: usize,
    pub s_lower: f64,
    pub s_upper: f64,
    pub correction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSummary {
    pub criteria: Vec<DesignCriterion>,
    pub suppression_db: f64,
    pub g1: f64,
    pub users: Vec<UserDesign>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserQkd {
    pub user: usize,
    pub modulation_variance: f64,
    pub transmittance: f64,
    /// Total input-referred excess noise used by the simulation.
    pub excess_noise: f64,
    pub budget: ExcessNoiseBudget,
    pub estimate: ChannelEstimate,
    pub rate_source: RateSource,
    pub rates: Vec<KeyRateReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodAverage {
    pub method: KeyRateMethod,
    pub bits_per_second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QkdSummary {
    pub slots: usize,
    pub users: Vec<UserQkd>,
    pub averages: Vec<MethodAverage>,
    pub loopback: Vec<UserLoopback>,
    pub snu: Vec<SnuCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandLocalization {
    pub band: String,
    pub detected: bool,
    pub peak: f64,
    pub result: Option<LocalizationResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensingSummary {
    pub length_km: f64,
    pub localizations: Vec<BandLocalization>,
    /// Monte Carlo summaries; per-trial records go to CSV.
    pub resolution: Vec<ResolutionReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub crate_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub mode: RunMode,
    pub design: DesignSummary,
    pub qkd: Option<QkdSummary>,
    pub sensing: Option<SensingSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTime {
    pub stage: String,
    pub seconds: f64,
}

/// Everything a run produces; nothing touches the disk until
/// [`RunOutput::write`](crate::scenario::RunOutput::write).
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub timing: Vec<StageTime>,
    /// Monte Carlo records per band label.
    pub trials: Vec<(String, Vec<TrialRecord>)>,
}

struct Clock(Vec<StageTime>);

impl Clock {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f().map_err(|e| e.at(stage));
        self.0.push(StageTime { stage: stage.into(), seconds: t.elapsed().as_secs_f64() });
        out
    }
}

/// Filter design checks and per-user correction factors.
pub fn design_summary(cfg: &ScenarioConfig) -> Result<DesignSummary> {
    let plan = cfg.sidemode_plan();
    let bank = cfg.filter_bank();
    let modulator = cfg.modulator();
    let g1 = sideband_ratio(&modulator);
    let criteria = filternet::validate_design(&bank[0], &plan).criteria;
    let users = (0..plan.n_users)
        .map(|j| {
            let x = filternet::crosstalk_fractions(&bank[j], &plan, j)?;
            let corr = CorrectionInputs { g1, s_lower: x.lower, s_upper: x.upper };
            Ok(UserDesign { user: j, s_lower: x.lower, s_upper: x.upper, correction: keyrate::correction_factor(&corr)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DesignSummary { criteria, suppression_db: modulator.suppression_db(), g1, users })
}

impl DesignSummary {
    pub fn correction_inputs(&self, user: usize) -> CorrectionInputs {
        let u = &self.users[user];
        CorrectionInputs { g1: self.g1, s_lower: u.s_lower, s_upper: u.s_upper }
    }

    /// The user with the largest correction, i.e. the most pessimistic one.
    pub fn worst_user(&self) -> usize {
        self.users.iter().max_by(|a, b| a.correction.total_cmp(&b.correction)).map(|u| u.user).unwrap_or(0)
    }
}

/// Key rates for one parameter set with the configured methods.
pub fn rates_for(
    methods: &[KeyRateMethod],
    basis: &ChannelEstimate,
    params: &KeyRateParams,
    corr: &CorrectionInputs,
) -> Result<Vec<KeyRateReport>> {
    methods
        .iter()
        .map(|m| match m {
            KeyRateMethod::Gaussian => keyrate::gaussian_keyrate(basis, params, corr),
            KeyRateMethod::DmSdp => keyrate::dm_keyrate_sdp(basis, params, corr),
            KeyRateMethod::Plob => Ok(keyrate::plob_report(basis.user, basis.transmittance, params)),
        })
        .collect()
}

fn qkd_user(cfg: &ScenarioConfig, design: &DesignSummary, j: usize, sent: &[Complex64], seed_value: u64) -> Result<UserQkd> {
    let u = &cfg.users[j];
    let t = cfg.transmittance(j);
    let budget = channel::excess_noise_budget(&cfg.noise_spec(), u.excess_noise);
    let eps = budget.total();
    let params = cfg.keyrate_params(j);
    let received = simulate_symbol_tier(sent, t, eps, u.efficiency, u.electronic_noise, j, seed::derive(seed_value, "qkd", 0));
    let estimate = keyrate::estimate_channel_params(sent, &received, &params).map_err(|e| e.at(format!("estimation, user {j}")))?;
    let basis = match cfg.keyrate.source {
        RateSource::Model => ChannelEstimate::exact(j, u.modulation_variance, t, eps),
        RateSource::Estimate => estimate.clone(),
    };
    let rates = rates_for(&cfg.keyrate.methods, &basis, &params, &design.correction_inputs(j))
        .map_err(|e| e.at(format!("key rate, user {j}")))?;
    Ok(UserQkd {
        user: j,
        modulation_variance: u.modulation_variance,
        transmittance: t,
        excess_noise: eps,
        budget,
        estimate,
        rate_source: cfg.keyrate.source,
        rates,
    })
}

fn qkd_summary(cfg: &ScenarioConfig, design: &DesignSummary, seed_value: u64, clock: &mut Clock) -> Result<QkdSummary> {
    let plan = cfg.sidemode_plan();
    let slots = cfg.qkd.slots;
    let frame = encoder::generate_symbols(&plan, slots, seed::derive(seed_value, "qkd-symbols", 0))?;
    let users = clock.time("qkd", || {
        (0..plan.n_users)
            .into_par_iter()
            .map(|j| qkd_user(cfg, design, j, &frame.amplitudes(&plan, j), seed_value))
            .collect::<Result<Vec<_>>>()
    })?;
    let averages = cfg
        .keyrate
        .methods
        .iter()
        .map(|&m| {
            let v: Vec<f64> = users.iter().flat_map(|u| u.rates.iter().filter(|r| r.method == m).map(|r| r.bits_per_second)).collect();
            MethodAverage { method: m, bits_per_second: v.iter().sum::<f64>() / v.len().max(1) as f64 }
        })
        .collect();
    let loopback = if cfg.qkd.loopback_slots > 0 {
        clock.time("loopback", || {
            chain::loopback(
                &plan,
                &cfg.modulator(),
                &cfg.receiver(0),
                cfg.qkd.loopback_slots,
                cfg.qkd.loopback_brightness,
                seed::derive(seed_value, "loopback", 0),
            )
        })?
    } else {
        Vec::new()
    };
    let snu = if cfg.qkd.snu_slots > 0 {
        clock.time("snu", || {
            (0..plan.n_users)
                .into_par_iter()
                .map(|j| chain::snu_check(&plan, j, &cfg.receiver(j), cfg.qkd.snu_slots, seed_value))
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        Vec::new()
    };
    Ok(QkdSummary { slots, users, averages, loopback, snu })
}

/// Pass band (Hz) of a sensing filter.
fn band_edges(band: FilterPurpose, rate: f64) -> Result<(f64, f64)> {
    Ok(design_filter(band, rate)?.band_hz)
}

/// Localizes the configured events in every band; undetected bands are
/// reported, not fatal.
pub fn localize_events(cfg: &ScenarioConfig, seed_value: u64) -> Result<Vec<BandLocalization>> {
    let ch = cfg.channel_spec();
    let events = cfg.events();
    let tier = cfg.phase_tier();
    let traces = simulate_phase_traces(&ch, &cfg.noise_spec(), &events, &tier, seed::derive(seed_value, "sensing", 0))?;
    cfg.sensing_bands()?
        .into_par_iter()
        .map(|band| {
            let (lo, hi) = band_edges(band, tier.rate)?;
            let truth = events.iter().find(|e| (lo..=hi).contains(&e.frequency())).map(|e| e.position_km);
            match sensing::localize(&traces.server, &traces.user, band, &ch) {
                Ok(loc) => {
                    let loc = match truth {
                        Some(t) => loc.with_truth(t),
                        None => loc,
                    };
                    Ok(BandLocalization { band: band.label().into(), detected: true, peak: loc.peak, result: Some(loc) })
                }
                Err(Error::NoDetection { peak }) => Ok(BandLocalization { band: band.label().into(), detected: false, peak, result: None }),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Monte Carlo scenario for `band` built from the configured link, tier and
/// noise.
pub fn resolution_scenario(cfg: &ScenarioConfig, band: FilterPurpose, snr_db: f64) -> ResolutionScenario {
    let mut s = ResolutionScenario::new(band, cfg.channel.length_km, snr_db);
    s.channel = cfg.channel_spec();
    s.tier.rate = cfg.sensing.rate;
    s.tier.residual_offset_hz = cfg.sensing.residual_offset_hz;
    s.tier.duration_s = cfg.sensing.duration_s;
    s.server_linewidth_hz = cfg.noise.server_linewidth_hz;
    s.user_linewidth_hz = cfg.noise.user_linewidth_hz;
    s
}

fn sensing_summary(
    cfg: &ScenarioConfig,
    seed_value: u64,
    clock: &mut Clock,
) -> Result<(SensingSummary, Vec<(String, Vec<TrialRecord>)>)> {
    let localizations = clock.time("sensing", || localize_events(cfg, seed_value))?;
    let mut resolution = Vec::new();
    let mut trials = Vec::new();
    if cfg.sensing.trials > 0 {
        for band in cfg.sensing_bands()? {
            let scenario = resolution_scenario(cfg, band, cfg.sensing.snr_db);
            let mut r = clock.time(&format!("resolution {}", band.label()), || {
                sensing::resolution_trial(&scenario, cfg.sensing.trials, seed::derive(seed_value, "resolution", 0))
            })?;
            trials.push((r.band.clone(), std::mem::take(&mut r.records)));
            resolution.push(r);
        }
    }
    Ok((SensingSummary { length_km: cfg.channel.length_km, localizations, resolution }, trials))
}

/// Runs the scenario in `mode` with master seed `seed_value`.
pub fn run_scenario(cfg: &ScenarioConfig, mode: RunMode, seed_value: u64) -> Result<RunOutput> {
    cfg.validate()?;
    let mut clock = Clock(Vec::new());
    let design = clock.time("design", || design_summary(cfg))?;
    let qkd = if mode.qkd() { Some(qkd_summary(cfg, &design, seed_value, &mut clock)?) } else { None };
    let (sensing, trials) = if mode.sensing() {
        let (s, t) = sensing_summary(cfg, seed_value, &mut clock)?;
        (Some(s), t)
    } else {
        (None, Vec::new())
    };
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        crate_version: env!("CARGO_PKG_VERSION").into(),
        config_hash: cfg.hash(),
        seed: seed_value,
        mode,
        design,
        qkd,
        sensing,
    };
    Ok(RunOutput { report, timing: clock.0, trials })
}
