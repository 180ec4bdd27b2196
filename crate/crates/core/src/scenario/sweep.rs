use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{self, ChannelSpec, NoiseSpec};
use crate::dsp::simulate_symbol_tier;
use crate::encoder;
use crate::error::{Error, Result};
use crate::keyrate::{self, ChannelEstimate, KeyRateMethod, KeyRateParams};
use crate::scenario::config::ScenarioConfig;
use crate::scenario::run::{design_summary, localize_events, rates_for, resolution_scenario, SCHEMA_VERSION};
use crate::seed;
use crate::sensing;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    Distance,
    ProbePower,
    Linewidth,
    Snr,
}

impl SweepVar {
    pub fn parse(s: &str) -> Option<SweepVar> {
        match s {
            "distance" => Some(SweepVar::Distance),
            "probe_power" | "probe-power" => Some(SweepVar::ProbePower),
            "linewidth" => Some(SweepVar::Linewidth),
            "snr" => Some(SweepVar::Snr),
            _ => None,
        }
    }
}

/// One key-rate point of a distance sweep. Rates are `None` when that
/// method failed at this point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow {
    pub length_km: f64,
    pub transmittance: f64,
    pub excess_noise: f64,
    pub gaussian_bps: Option<f64>,
    pub dm_bps: Option<f64>,
    pub plob_bps: f64,
    pub dm_iterations: Option<usize>,
}

/// Paired excess-noise estimates with the backward probe off and on, drawn
/// from common random numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub probe_dbm: f64,
    pub length_km: f64,
    pub raman_snu: f64,
    pub eps_off: f64,
    pub eps_off_se: f64,
    pub eps_on: f64,
    pub eps_on_se: f64,
    pub delta_eps: f64,
}

impl ProbeRow {
    /// The two 95 % confidence intervals overlap.
    pub fn overlapping(&self) -> bool {
        let half = |se: f64| 1.96 * se;
        (self.eps_on - self.eps_off).abs() <= half(self.eps_on_se) + half(self.eps_off_se)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinewidthRow {
    pub linewidth_hz: f64,
    pub band: String,
    pub detected: bool,
    pub est_km: Option<f64>,
    pub err_m: Option<f64>,
    pub peak: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrRow {
    pub snr_db: f64,
    pub band: String,
    pub trials: usize,
    pub detected: usize,
    pub rms_error_m: f64,
    pub p95_abs_error_m: f64,
    pub fwhm_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "var", content = "rows", rename_all = "snake_case")]
pub enum SweepRows {
    Distance(Vec<DistanceRow>),
    ProbePower(Vec<ProbeRow>),
    Linewidth(Vec<LinewidthRow>),
    Snr(Vec<SnrRow>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    pub value: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub crate_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub grid: Vec<f64>,
    pub rows: SweepRows,
    pub failures: Vec<PointFailure>,
}

/// Key rates at `length_km` with the ε table and the user-averaged
/// modulation and detector figures.
pub fn distance_point(cfg: &ScenarioConfig, length_km: f64) -> Result<(DistanceRow, Vec<String>)> {
    let design = design_summary(cfg)?;
    let ch = ChannelSpec { length_km, ..cfg.channel_spec() };
    let p = ch.problems();
    if !p.is_empty() {
        return Err(Error::Validation(p));
    }
    let t = ch.transmittance();
    let eps = channel::excess_noise_budget(&cfg.noise_spec(), cfg.sweep_excess_noise(length_km)).total();
    let va = cfg.user_mean(|u| u.modulation_variance);
    let mut params: KeyRateParams = cfg.keyrate_params(0);
    params.detector_efficiency = cfg.user_mean(|u| u.efficiency);
    params.electronic_noise = cfg.user_mean(|u| u.electronic_noise);
    let basis = ChannelEstimate::exact(0, va, t, eps);
    let corr = design.correction_inputs(design.worst_user());
    let mut notes = Vec::new();
    let mut one = |m: KeyRateMethod| match rates_for(&[m], &basis, &params, &corr) {
        Ok(r) => Some(r[0].clone()),
        Err(e) => {
            notes.push(format!("{m:?}: {e}"));
            None
        }
    };
    let gauss = one(KeyRateMethod::Gaussian);
    let dm = one(KeyRateMethod::DmSdp);
    let plob = keyrate::plob_report(0, t, &params);
    Ok((
        DistanceRow {
            length_km,
            transmittance: t,
            excess_noise: eps,
            gaussian_bps: gauss.map(|r| r.bits_per_second),
            dm_bps: dm.as_ref().map(|r| r.bits_per_second),
            plob_bps: plob.bits_per_second,
            dm_iterations: dm.and_then(|r| r.iterations),
        },
        notes,
    ))
}

/// Probe off/on excess-noise estimates for `user` at `length_km`.
pub fn probe_point(cfg: &ScenarioConfig, user: usize, length_km: f64, probe_dbm: f64, slots: usize, seed_value: u64) -> Result<ProbeRow> {
    if user >= cfg.n_users() {
        return Err(Error::Input(format!("user {user} out of range")));
    }
    let ch = ChannelSpec { length_km, ..cfg.channel_spec() };
    let t = ch.transmittance();
    let u = &cfg.users[user];
    let base = cfg.sweep_excess_noise(length_km);
    let plan = cfg.sidemode_plan();
    let frame = encoder::generate_symbols(&plan, slots, seed::derive(seed_value, "probe-symbols", 0))?;
    let sent = frame.amplitudes(&plan, user);
    let params = cfg.keyrate_params(user);
    let estimate = |noise: &NoiseSpec| -> Result<ChannelEstimate> {
        let eps = channel::excess_noise_budget(noise, base).total();
        // the same seed on both arms: only the noise level differs
        let rx = simulate_symbol_tier(&sent, t, eps, u.efficiency, u.electronic_noise, user, seed::derive(seed_value, "probe", 0));
        keyrate::estimate_channel_params(&sent, &rx, &params)
    };
    let off_noise = NoiseSpec { probe_power_dbm: None, ..cfg.noise_spec() };
    let on_noise = NoiseSpec { probe_power_dbm: Some(probe_dbm), ..cfg.noise_spec() };
    let off = estimate(&off_noise)?;
    let on = estimate(&on_noise)?;
    Ok(ProbeRow {
        probe_dbm,
        length_km,
        raman_snu: channel::raman_noise(probe_dbm),
        eps_off: off.excess_noise,
        eps_off_se: off.excess_noise_se,
        eps_on: on.excess_noise,
        eps_on_se: on.excess_noise_se,
        delta_eps: on.excess_noise - off.excess_noise,
    })
}

/// The paired probe comparison at every configured distance.
pub fn probe_impact(cfg: &ScenarioConfig, user: usize, seed_value: u64) -> Result<Vec<ProbeRow>> {
    cfg.sweep
        .probe_distances_km
        .par_iter()
        .map(|&l| probe_point(cfg, user, l, cfg.sweep.probe_power_dbm, cfg.sweep.probe_slots, seed_value))
        .collect()
}

/// Runs the scenario at each grid value of `var`. Failed points are
/// recorded and the sweep carries on.
pub fn sweep(cfg: &ScenarioConfig, var: SweepVar, grid: &[f64], seed_value: u64) -> Result<SweepReport> {
    cfg.validate()?;
    if grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("sweep grid values must be finite".into()));
    }
    let mut failures = Vec::new();
    let mut record = |v: f64, e: String| failures.push(PointFailure { value: v, error: e });
    let rows = match var {
        SweepVar::Distance => {
            let pts: Vec<_> = grid.par_iter().map(|&l| distance_point(cfg, l)).collect();
            let mut rows = Vec::new();
            for (&l, p) in grid.iter().zip(pts) {
                match p {
                    Ok((row, notes)) => {
                        notes.into_iter().for_each(|n| record(l, n));
                        rows.push(row);
                    }
                    Err(e) => record(l, e.to_string()),
                }
            }
            SweepRows::Distance(rows)
        }
        SweepVar::ProbePower => {
            let slots = cfg.sweep.probe_slots;
            let pts: Vec<_> = grid.par_iter().map(|&p| probe_point(cfg, 0, cfg.channel.length_km, p, slots, seed_value)).collect();
            let mut rows = Vec::new();
            for (&p, r) in grid.iter().zip(pts) {
                match r {
                    Ok(row) => rows.push(row),
                    Err(e) => record(p, e.to_string()),
                }
            }
            SweepRows::ProbePower(rows)
        }
        SweepVar::Linewidth => {
            let pts: Vec<_> = grid
                .par_iter()
                .map(|&lw| {
                    let mut c = cfg.clone();
                    c.noise.server_linewidth_hz = lw;
                    c.noise.user_linewidth_hz = lw;
                    c.validate()?;
                    localize_events(&c, seed_value)
                })
                .collect();
            let mut rows = Vec::new();
            for (&lw, r) in grid.iter().zip(pts) {
                match r {
                    Ok(locs) => rows.extend(locs.into_iter().map(|b| LinewidthRow {
                        linewidth_hz: lw,
                        band: b.band,
                        detected: b.detected,
                        est_km: b.result.map(|r| r.estimated_km),
                        err_m: b.result.and_then(|r| r.error_m),
                        peak: b.peak,
                    })),
                    Err(e) => record(lw, e.to_string()),
                }
            }
            SweepRows::Linewidth(rows)
        }
        SweepVar::Snr => {
            let bands = cfg.sensing_bands()?;
            let trials = cfg.sensing.trials.max(1);
            let pts: Vec<_> = grid
                .par_iter()
                .map(|&snr| {
                    bands
                        .iter()
                        .map(|&b| {
                            let s = resolution_scenario(cfg, b, snr);
                            let r = sensing::resolution_trial(&s, trials, seed::derive(seed_value, "resolution", 0))?;
                            Ok(SnrRow {
                                snr_db: snr,
                                band: r.band,
                                trials: r.trials,
                                detected: r.detected,
                                rms_error_m: r.rms_error_m,
                                p95_abs_error_m: r.p95_abs_error_m,
                                fwhm_m: r.fwhm_m,
                            })
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect();
            let mut rows = Vec::new();
            for (&snr, r) in grid.iter().zip(pts) {
                match r {
                    Ok(v) => rows.extend(v),
                    Err(e) => record(snr, e.to_string()),
                }
            }
            SweepRows::Snr(rows)
        }
    };
    Ok(SweepReport {
        schema_version: SCHEMA_VERSION,
        crate_version: env!("CARGO_PKG_VERSION").into(),
        config_hash: cfg.hash(),
        seed: seed_value,
        grid: grid.to_vec(),
        rows,
        failures,
    })
}
