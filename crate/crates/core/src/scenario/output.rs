use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scenario::config::hex;
use crate::scenario::run::{RunOutput, RunReport, StageTime};
use crate::scenario::sweep::{SweepReport, SweepRows};

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

fn json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serialises");
    s.push('\n');
    s
}

fn put(dir: &Path, name: &str, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, text).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display()))))?;
    written.push(p);
    Ok(())
}

fn prepare(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.display()))))
}

/// SHA-256 of a report's canonical JSON text.
pub fn report_hash(report: &RunReport) -> String {
    hex(&Sha256::digest(json(report).as_bytes()))
}

impl RunOutput {
    pub fn report_json(&self) -> String {
        json(&self.report)
    }

    /// Writes the report, timing and CSV artifacts into `dir`, returning the
    /// paths written.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        prepare(dir)?;
        let mut out = Vec::new();
        let r = &self.report;
        put(dir, "report.json", &self.report_json(), &mut out)?;
        put(dir, "timing.json", &json(&self.timing), &mut out)?;
        put(
            dir,
            "design.csv",
            &csv(
                "user,s_lower,s_upper,correction",
                r.design.users.iter().map(|u| format!("{},{},{},{}", u.user, u.s_lower, u.s_upper, u.correction)),
            ),
            &mut out,
        )?;
        if let Some(q) = &r.qkd {
            put(
                dir,
                "keyrates.csv",
                &csv(
                    "user,method,bits_per_symbol,bits_per_second,clamped,correction",
                    q.users.iter().flat_map(|u| {
                        u.rates.iter().map(|k| {
                            let m = serde_json::to_value(k.method).expect("method").as_str().unwrap_or_default().to_string();
                            format!("{},{m},{},{},{},{}", k.user, k.bits_per_symbol, k.bits_per_second, k.clamped, k.correction)
                        })
                    }),
                ),
                &mut out,
            )?;
            put(
                dir,
                "estimates.csv",
                &csv(
                    "user,T,T_hat,T_se,eps,eps_hat,eps_se,clamped,slots",
                    q.users.iter().map(|u| {
                        let e = &u.estimate;
                        format!(
                            "{},{},{},{},{},{},{},{},{}",
                            u.user, u.transmittance, e.transmittance, e.transmittance_se, u.excess_noise, e.excess_noise, e.excess_noise_se, e.clamped, e.slots
                        )
                    }),
                ),
                &mut out,
            )?;
            if !q.loopback.is_empty() {
                put(
                    dir,
                    "loopback.csv",
                    &csv(
                        "user,evm,pilot_if_hz,phase_slips",
                        q.loopback.iter().map(|l| format!("{},{},{},{}", l.user, l.evm, l.pilot_if_hz, l.phase_slips)),
                    ),
                    &mut out,
                )?;
            }
        }
        if let Some(s) = &r.sensing {
            put(
                dir,
                "localizations.csv",
                &csv(
                    "band,detected,truth_km,est_km,err_m,peak,clamped",
                    s.localizations.iter().map(|b| {
                        let res = b.result.as_ref();
                        format!(
                            "{},{},{},{},{},{},{}",
                            b.band,
                            b.detected,
                            opt(res.and_then(|r| r.truth_km)),
                            opt(res.map(|r| r.estimated_km)),
                            opt(res.and_then(|r| r.error_m)),
                            b.peak,
                            res.map(|r| r.clamped).unwrap_or(false)
                        )
                    }),
                ),
                &mut out,
            )?;
        }
        for (band, records) in &self.trials {
            put(
                dir,
                &format!("trials_{band}.csv"),
                &csv(
                    "trial,truth_km,est_km,err_m,peak",
                    records.iter().map(|t| format!("{},{},{},{},{}", t.trial, t.truth_km, opt(t.est_km), opt(t.err_m), t.peak)),
                ),
                &mut out,
            )?;
        }
        Ok(out)
    }
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        match &self.rows {
            SweepRows::Distance(rows) => csv(
                "L_km,T,eps,K_gauss_bps,K_dm_bps,K_plob_bps",
                rows.iter().map(|r| {
                    format!("{},{},{},{},{},{}", r.length_km, r.transmittance, r.excess_noise, opt(r.gaussian_bps), opt(r.dm_bps), r.plob_bps)
                }),
            ),
            SweepRows::ProbePower(rows) => csv(
                "probe_dbm,L_km,raman_snu,eps_off,eps_off_se,eps_on,eps_on_se,delta_eps",
                rows.iter().map(|r| {
                    format!(
                        "{},{},{},{},{},{},{},{}",
                        r.probe_dbm, r.length_km, r.raman_snu, r.eps_off, r.eps_off_se, r.eps_on, r.eps_on_se, r.delta_eps
                    )
                }),
            ),
            SweepRows::Linewidth(rows) => csv(
                "linewidth_hz,band,detected,est_km,err_m,peak",
                rows.iter().map(|r| format!("{},{},{},{},{},{}", r.linewidth_hz, r.band, r.detected, opt(r.est_km), opt(r.err_m), r.peak)),
            ),
            SweepRows::Snr(rows) => csv(
                "snr_db,band,trials,detected,rms_error_m,p95_abs_error_m,fwhm_m",
                rows.iter().map(|r| {
                    format!("{},{},{},{},{},{},{}", r.snr_db, r.band, r.trials, r.detected, r.rms_error_m, r.p95_abs_error_m, r.fwhm_m)
                }),
            ),
        }
    }

    /// Writes `sweep.csv`, `sweep.json` and `timing.json` into `dir`.
    pub fn write(&self, dir: &Path, seconds: f64) -> Result<Vec<PathBuf>> {
        prepare(dir)?;
        let mut out = Vec::new();
        put(dir, "sweep.csv", &self.to_csv(), &mut out)?;
        put(dir, "sweep.json", &json(self), &mut out)?;
        let timing = vec![StageTime { stage: "sweep".into(), seconds }];
        put(dir, "timing.json", &json(&timing), &mut out)?;
        Ok(out)
    }
}

/// One-line human summary of a run, for the CLI.
pub fn summary(report: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "config {} seed {}", &report.config_hash[..12], report.seed);
    let _ = writeln!(s, "g1 = {:.5}", report.design.g1);
    if let Some(q) = &report.qkd {
        for a in &q.averages {
            let _ = writeln!(s, "average {:?}: {:.4e} bit/s", a.method, a.bits_per_second);
        }
        if let Some(worst) = q.loopback.iter().map(|l| l.evm).reduce(f64::max) {
            let _ = writeln!(s, "loopback worst EVM {:.3} %", 100.0 * worst);
        }
    }
    if let Some(se) = &report.sensing {
        for b in &se.localizations {
            match &b.result {
                Some(r) => {
                    let _ = writeln!(s, "{}: {:.3} km (peak {:.3})", b.band, r.estimated_km, b.peak);
                }
                None => {
                    let _ = writeln!(s, "{}: no detection (peak {:.3})", b.band, b.peak);
                }
            }
        }
        for r in &se.resolution {
            let _ = writeln!(s, "{}: rms {:.1} m over {} detections", r.band, r.rms_error_m, r.detected);
        }
    }
    s
}
