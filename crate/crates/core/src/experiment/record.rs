//! Reports: JSON document, flat CSV row, and plot series.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{Engine, Estimates};
use crate::experiment::config::{Correction, OutputFormat, Scenario, Shots, SCHEMA_VERSION};
use crate::metrics::{beats_classical, classical_limit};
use crate::noise::NoiseSpec;
use crate::protocol::TeleportMode;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeleportValues {
    pub f_raw: f64,
    pub f_cs: f64,
    pub p_cs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_active: Option<f64>,
}

/// Standard deviations matching the reported values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordErrors {
    pub f_raw: f64,
    pub f_cs: f64,
    pub p_cs: f64,
    pub chsh_raw: f64,
    pub chsh_cs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_active: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chsh_active: Option<f64>,
    pub teleport: BTreeMap<String, TeleportValues>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub teleport_average: Option<TeleportValues>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub noise: NoiseSpec,
    pub shots: Shots,
    pub engine: Engine,
    /// Trajectory count when the trajectory engine was used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<usize>,
    pub mode: TeleportMode,
    pub correction: Correction,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub schema_version: u32,
    pub scenario: Scenario,
    pub f_raw: f64,
    pub f_cs: f64,
    pub p_cs: f64,
    pub chsh_raw: f64,
    pub chsh_cs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_active: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chsh_active: Option<f64>,
    /// Per input name.
    pub teleport: BTreeMap<String, TeleportValues>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub teleport_average: Option<TeleportValues>,
    /// Whether the corrected teleport average exceeds the classical 2/3 bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beats_classical: Option<bool>,
    pub errors: RecordErrors,
    pub metadata: Metadata,
}

struct Pick<'a> {
    est: &'a Estimates,
    stderr: bool,
}

impl Pick<'_> {
    fn req(&self, name: &str) -> Result<f64> {
        let e = self.est.get(name).ok_or_else(|| Error::domain(format!("missing estimate {name}")))?;
        Ok(if self.stderr { e.stderr } else { e.value })
    }

    fn opt(&self, name: &str) -> Option<f64> {
        self.est.get(name).map(|e| if self.stderr { e.stderr } else { e.value })
    }

    fn teleport(&self, prefix: &str) -> Result<TeleportValues> {
        Ok(TeleportValues {
            f_raw: self.req(&format!("{prefix}.f_raw"))?,
            f_cs: self.req(&format!("{prefix}.f_cs"))?,
            p_cs: self.req(&format!("{prefix}.p_cs"))?,
            f_active: self.opt(&format!("{prefix}.f_active")),
        })
    }
}

impl ExperimentRecord {
    /// Assembles a record; `names` lists the teleported inputs (empty for characterization).
    pub fn from_estimates(scenario: Scenario, est: &Estimates, names: &[String], metadata: Metadata) -> Result<Self> {
        est.check_defined()?;
        let v = Pick { est, stderr: false };
        let e = Pick { est, stderr: true };
        let mut teleport = BTreeMap::new();
        let mut teleport_err = BTreeMap::new();
        for n in names {
            teleport.insert(n.clone(), v.teleport(&format!("teleport.{n}"))?);
            teleport_err.insert(n.clone(), e.teleport(&format!("teleport.{n}"))?);
        }
        let (avg, avg_err) = if names.is_empty() {
            (None, None)
        } else {
            (Some(v.teleport("teleport_average")?), Some(e.teleport("teleport_average")?))
        };
        Ok(ExperimentRecord {
            schema_version: SCHEMA_VERSION,
            scenario,
            f_raw: v.req("f_raw")?,
            f_cs: v.req("f_cs")?,
            p_cs: v.req("p_cs")?,
            chsh_raw: v.req("chsh_raw")?,
            chsh_cs: v.req("chsh_cs")?,
            f_active: v.opt("f_active"),
            chsh_active: v.opt("chsh_active"),
            beats_classical: avg.map(|a| beats_classical(a.f_cs)),
            teleport,
            teleport_average: avg,
            errors: RecordErrors {
                f_raw: e.req("f_raw")?,
                f_cs: e.req("f_cs")?,
                p_cs: e.req("p_cs")?,
                chsh_raw: e.req("chsh_raw")?,
                chsh_cs: e.req("chsh_cs")?,
                f_active: e.opt("f_active"),
                chsh_active: e.opt("chsh_active"),
                teleport: teleport_err,
                teleport_average: avg_err,
            },
            metadata,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Flat `(column, value)` pairs: values, then errors (`_err` suffix), then metadata.
    pub fn flat_fields(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut num = |k: String, v: f64| out.push((k, fmt(v)));
        let teleport_cols = |values: &BTreeMap<String, TeleportValues>, avg: &Option<TeleportValues>, suffix: &str| {
            let mut cols = Vec::new();
            let all = values
                .iter()
                .map(|(k, v)| (format!("teleport.{k}"), v))
                .chain(avg.iter().map(|a| ("teleport_average".to_string(), a)));
            for (prefix, t) in all {
                cols.push((format!("{prefix}.f_raw{suffix}"), t.f_raw));
                cols.push((format!("{prefix}.f_cs{suffix}"), t.f_cs));
                cols.push((format!("{prefix}.p_cs{suffix}"), t.p_cs));
                if let Some(a) = t.f_active {
                    cols.push((format!("{prefix}.f_active{suffix}"), a));
                }
            }
            cols
        };
        for (k, v) in [
            ("f_raw", self.f_raw),
            ("f_cs", self.f_cs),
            ("p_cs", self.p_cs),
            ("chsh_raw", self.chsh_raw),
            ("chsh_cs", self.chsh_cs),
        ] {
            num(k.into(), v);
        }
        if let Some(v) = self.f_active {
            num("f_active".into(), v);
        }
        if let Some(v) = self.chsh_active {
            num("chsh_active".into(), v);
        }
        for (k, v) in teleport_cols(&self.teleport, &self.teleport_average, "") {
            num(k, v);
        }
        for (k, v) in [
            ("f_raw_err", self.errors.f_raw),
            ("f_cs_err", self.errors.f_cs),
            ("p_cs_err", self.errors.p_cs),
            ("chsh_raw_err", self.errors.chsh_raw),
            ("chsh_cs_err", self.errors.chsh_cs),
        ] {
            num(k.into(), v);
        }
        if let Some(v) = self.errors.f_active {
            num("f_active_err".into(), v);
        }
        if let Some(v) = self.errors.chsh_active {
            num("chsh_active_err".into(), v);
        }
        for (k, v) in teleport_cols(&self.errors.teleport, &self.errors.teleport_average, "_err") {
            num(k, v);
        }
        let m = &self.metadata;
        let (rs, ts) = match m.shots {
            Shots::Exact => ("exact".to_string(), "exact".to_string()),
            Shots::Sampled { resource, teleport } => (resource.to_string(), teleport.to_string()),
        };
        out.extend([
            ("scenario".into(), self.scenario.as_str().into()),
            ("beats_classical".into(), self.beats_classical.map(|b| b.to_string()).unwrap_or_default()),
            ("noise.p_phys.px".into(), fmt(m.noise.p_phys.px)),
            ("noise.p_phys.py".into(), fmt(m.noise.p_phys.py)),
            ("noise.p_phys.pz".into(), fmt(m.noise.p_phys.pz)),
            ("noise.p_input.px".into(), fmt(m.noise.p_input.px)),
            ("noise.p_input.py".into(), fmt(m.noise.p_input.py)),
            ("noise.p_input.pz".into(), fmt(m.noise.p_input.pz)),
            ("noise.q_logical".into(), fmt(m.noise.q_logical)),
            ("shots.resource".into(), rs),
            ("shots.teleport".into(), ts),
            ("engine".into(), enum_text(&m.engine)),
            ("trajectories".into(), m.trajectories.map(|t| t.to_string()).unwrap_or_default()),
            ("mode".into(), enum_text(&m.mode)),
            ("correction".into(), enum_text(&m.correction)),
            ("seed".into(), m.seed.to_string()),
        ]);
        out
    }

    /// Header plus one data row.
    pub fn to_csv(&self) -> Result<String> {
        let fields = self.flat_fields();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(fields.iter().map(|f| f.0.as_str()))?;
        w.write_record(fields.iter().map(|f| f.1.as_str()))?;
        finish_csv(w)
    }

    /// Plot series `(file name, CSV text)` for the characterization bars and,
    /// when present, the per-input teleportation bars.
    pub fn plot_series(&self) -> Result<Vec<(String, String)>> {
        let e = &self.errors;
        let mut fid = vec![
            ("raw", "fidelity", self.f_raw, e.f_raw),
            ("corrected", "fidelity", self.f_cs, e.f_cs),
            ("projection", "p_cs", self.p_cs, e.p_cs),
        ];
        if let (Some(v), Some(s)) = (self.f_active, e.f_active) {
            fid.push(("active", "fidelity", v, s));
        }
        let mut chsh = vec![
            ("raw", "chsh", self.chsh_raw, e.chsh_raw),
            ("corrected", "chsh", self.chsh_cs, e.chsh_cs),
            ("classical_bound", "chsh", 2.0, 0.0),
        ];
        if let (Some(v), Some(s)) = (self.chsh_active, e.chsh_active) {
            chsh.push(("active", "chsh", v, s));
        }
        let mut out =
            vec![("fig3_fidelity.csv".to_string(), series_csv(&fid)?), ("fig3_chsh.csv".to_string(), series_csv(&chsh)?)];
        if let (Some(avg), Some(avg_err)) = (&self.teleport_average, &e.teleport_average) {
            let mut rows = Vec::new();
            let all = self.teleport.iter().map(|(k, v)| (k.as_str(), v, &e.teleport[k])).chain([("average", avg, avg_err)]);
            for (name, v, s) in all {
                rows.push(("raw", name, v.f_raw, s.f_raw));
                rows.push(("corrected", name, v.f_cs, s.f_cs));
                rows.push(("projection", name, v.p_cs, s.p_cs));
                if let (Some(a), Some(sa)) = (v.f_active, s.f_active) {
                    rows.push(("active", name, a, sa));
                }
            }
            rows.push(("classical_limit", "average", classical_limit(), 0.0));
            out.push(("fig4_teleport.csv".to_string(), series_csv(&rows)?));
        }
        Ok(out)
    }

    /// Writes `record.json`, `record.csv` and the plot series into `dir`.
    pub fn write(&self, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
        let mut files = Vec::new();
        if format.json() {
            files.push(("record.json".to_string(), self.to_json()?));
        }
        if format.csv() {
            files.push(("record.csv".to_string(), self.to_csv()?));
            files.extend(self.plot_series()?);
        }
        write_files(dir, &files)
    }
}

pub(crate) fn write_files(dir: &Path, files: &[(String, String)]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    files
        .iter()
        .map(|(name, text)| {
            let p = dir.join(name);
            std::fs::write(&p, text)?;
            Ok(p)
        })
        .collect()
}

fn series_csv(rows: &[(&str, &str, f64, f64)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["series", "x", "y", "yerr"])?;
    for (s, x, y, e) in rows {
        w.write_record([s.to_string(), x.to_string(), fmt(*y), fmt(*e)])?;
    }
    finish_csv(w)
}

pub(crate) fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

fn enum_text<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

/// Shortest text that parses back to the same `f64`, matching the JSON output.
pub fn fmt(v: f64) -> String {
    serde_json::to_string(&v).unwrap_or_else(|_| "NaN".into())
}
