//! Finite-count measurement records.
//!
//! Characterization uses seven settings, each measuring one physical-qubit
//! observable `A` and one logical observable `B` together with the code-space
//! check. A shot lands in `(a, b)` with probability `¼(T_II + a⟨AΠ⟩ + b⟨BΠ⟩ +
//! ab⟨ABΠ⟩)` or outside the code space with `1 − T_II`. The code-space
//! probability is pooled over all settings. Teleportation measures each output
//! along its target Bloch vector.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{Estimate, Estimates, Layout, Observables};
use crate::metrics::{poisson_resample, CountTable, ResourceTerms, TeleportTerms, DEGENERATE_FLOOR};

pub const RESOURCE_OUTCOMES: [&str; 5] = ["++", "+-", "-+", "--", "out"];
pub const TELEPORT_OUTCOMES: [&str; 3] = ["+", "-", "out"];

/// Physical observable as weights on (I, X, Y, Z).
const PHYS_X: [f64; 4] = [0.0, 1.0, 0.0, 0.0];
const PHYS_Y: [f64; 4] = [0.0, 0.0, 1.0, 0.0];
const PHYS_Z: [f64; 4] = [0.0, 0.0, 0.0, 1.0];
const PHYS_E1: [f64; 4] = [0.0, FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2];
const PHYS_E2: [f64; 4] = [0.0, -FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2];

/// (label, physical observable, logical letter index)
const SETTINGS: [(&str, [f64; 4], usize); 7] = [
    ("XX", PHYS_X, 1),
    ("YY", PHYS_Y, 2),
    ("ZZ", PHYS_Z, 3),
    ("E1X", PHYS_E1, 1),
    ("E2X", PHYS_E2, 1),
    ("E1Z", PHYS_E1, 3),
    ("E2Z", PHYS_E2, 3),
];

/// Shots per setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShotPlan {
    pub resource_shots: u64,
    pub teleport_shots: u64,
    pub resamples: usize,
}

impl Default for ShotPlan {
    fn default() -> Self {
        ShotPlan { resource_shots: 1500, teleport_shots: 60, resamples: 400 }
    }
}

/// Simulated count tables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotData {
    pub resource: CountTable,
    pub active: Option<CountTable>,
    pub teleport: CountTable,
    pub teleport_active: Option<CountTable>,
}

fn setting_probs(t: &ResourceTerms, a: &[f64; 4], b: usize) -> Vec<f64> {
    let mix = |tau: usize| -> f64 { (0..4).map(|s| a[s] * t.t[s][tau]).sum() };
    let (ea, eb, eab) = (mix(0), t.t[0][b], mix(b));
    let mut p: Vec<f64> = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
        .iter()
        .map(|(x, y)| 0.25 * (t.t[0][0] + x * ea + y * eb + x * y * eab))
        .collect();
    p.push(1.0 - t.t[0][0]);
    p
}

fn teleport_probs(t: &TeleportTerms, target: &[f64; 3]) -> Vec<f64> {
    let proj: f64 = target.iter().zip(&t.bloch[1..]).map(|(r, b)| r * b).sum();
    vec![0.5 * (t.bloch[0] + proj), 0.5 * (t.bloch[0] - proj), 1.0 - t.bloch[0]]
}

/// Multinomial draw by sequential binomials. Rounding residue is clipped.
pub fn multinomial<R: Rng + ?Sized>(n: u64, probs: &[f64], rng: &mut R) -> Result<Vec<u64>> {
    let clean: Vec<f64> = probs.iter().map(|p| if p.abs() < 1e-12 { 0.0 } else { *p }).collect();
    if clean.iter().any(|p| *p < 0.0 || !p.is_finite()) {
        return Err(Error::InvalidProbability(format!("{probs:?}")));
    }
    let total: f64 = clean.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidProbability(format!("outcome probabilities sum to {total}")));
    }
    let mut left = n;
    let mut mass = 1.0;
    let mut out = Vec::with_capacity(clean.len());
    for (i, p) in clean.iter().enumerate() {
        let k = if i + 1 == clean.len() || left == 0 {
            left
        } else {
            let q = (p / mass).clamp(0.0, 1.0);
            Binomial::new(left, q).map_err(|e| Error::InvalidProbability(e.to_string()))?.sample(rng)
        };
        out.push(k);
        left -= k;
        mass -= p;
    }
    Ok(out)
}

fn resource_table<R: Rng + ?Sized>(t: &ResourceTerms, shots: u64, rng: &mut R) -> Result<CountTable> {
    let mut table = CountTable::new(&RESOURCE_OUTCOMES);
    for (label, a, b) in SETTINGS {
        table.push(label, multinomial(shots, &setting_probs(t, &a, b), rng)?)?;
    }
    Ok(table)
}

fn teleport_table<R: Rng + ?Sized>(terms: &[TeleportTerms], layout: &Layout, shots: u64, rng: &mut R) -> Result<CountTable> {
    let mut table = CountTable::new(&TELEPORT_OUTCOMES);
    for ((t, name), target) in terms.iter().zip(&layout.names).zip(&layout.targets) {
        table.push(name, multinomial(shots, &teleport_probs(t, target), rng)?)?;
    }
    Ok(table)
}

/// Draws every count table from exact expectations.
pub fn simulate<R: Rng + ?Sized>(obs: &Observables, layout: &Layout, plan: &ShotPlan, rng: &mut R) -> Result<ShotData> {
    if plan.resource_shots == 0 || plan.teleport_shots == 0 {
        return Err(Error::domain("shot counts must be positive"));
    }
    let resource = resource_table(&obs.resource, plan.resource_shots, rng)?;
    let active = match (&obs.active, layout.active) {
        (Some(a), true) => Some(resource_table(a, plan.resource_shots, rng)?),
        _ => None,
    };
    let teleport = teleport_table(&obs.teleport, layout, plan.teleport_shots, rng)?;
    let teleport_active = match (&obs.teleport_active, layout.active) {
        (Some(t), true) => Some(teleport_table(t, layout, plan.teleport_shots, rng)?),
        _ => None,
    };
    Ok(ShotData { resource, active, teleport, teleport_active })
}

fn correlator(table: &CountTable, label: &str) -> f64 {
    match table.get(label) {
        Some(c) => {
            let n: u64 = c.iter().sum();
            (c[0] as f64 - c[1] as f64 - c[2] as f64 + c[3] as f64) / n as f64
        }
        None => f64::NAN,
    }
}

/// Pooled code-space fraction.
fn pooled_p(table: &CountTable) -> f64 {
    let inside: u64 = table.settings.iter().map(|s| s.counts[..4].iter().sum::<u64>()).sum();
    inside as f64 / table.grand_total() as f64
}

fn ratio(num: f64, den: f64) -> f64 {
    if den < DEGENERATE_FLOOR {
        f64::NAN
    } else {
        num / den
    }
}

pub fn est_f_raw(table: &CountTable) -> f64 {
    0.25 * (pooled_p(table) + correlator(table, "XX") - correlator(table, "YY") + correlator(table, "ZZ"))
}

pub fn est_chsh_raw(table: &CountTable) -> f64 {
    correlator(table, "E1X") - correlator(table, "E2X") + correlator(table, "E1Z") + correlator(table, "E2Z")
}

pub fn est_p_cs(table: &CountTable) -> f64 {
    pooled_p(table)
}

fn tele_counts(table: &CountTable, name: &str) -> (f64, f64, f64) {
    match table.get(name) {
        Some(c) => (c[0] as f64, c[1] as f64, c.iter().sum::<u64>() as f64),
        None => (f64::NAN, f64::NAN, f64::NAN),
    }
}

pub fn est_tele_raw(table: &CountTable, name: &str) -> f64 {
    let (plus, _, n) = tele_counts(table, name);
    plus / n
}

pub fn est_tele_cs(table: &CountTable, name: &str) -> f64 {
    let (plus, minus, _) = tele_counts(table, name);
    ratio(plus, plus + minus)
}

pub fn est_tele_p(table: &CountTable, name: &str) -> f64 {
    let (plus, minus, n) = tele_counts(table, name);
    (plus + minus) / n
}

type TableFn = Box<dyn Fn(&CountTable) -> f64>;

enum Source {
    Resource,
    Active,
    Teleport,
    TeleportActive,
}

fn metric_table(layout: &Layout) -> Vec<(String, Source, TableFn)> {
    let mut out: Vec<(String, Source, TableFn)> = vec![
        ("f_raw".into(), Source::Resource, Box::new(est_f_raw)),
        ("f_cs".into(), Source::Resource, Box::new(|t: &CountTable| ratio(est_f_raw(t), est_p_cs(t)))),
        ("p_cs".into(), Source::Resource, Box::new(est_p_cs)),
        ("chsh_raw".into(), Source::Resource, Box::new(est_chsh_raw)),
        ("chsh_cs".into(), Source::Resource, Box::new(|t: &CountTable| ratio(est_chsh_raw(t), est_p_cs(t)))),
    ];
    if layout.active {
        out.push(("f_active".into(), Source::Active, Box::new(est_f_raw)));
        out.push(("chsh_active".into(), Source::Active, Box::new(est_chsh_raw)));
    }
    for name in &layout.names {
        let n = name.clone();
        out.push((format!("teleport.{name}.f_raw"), Source::Teleport, Box::new(move |t: &CountTable| est_tele_raw(t, &n))));
        let n = name.clone();
        out.push((format!("teleport.{name}.f_cs"), Source::Teleport, Box::new(move |t: &CountTable| est_tele_cs(t, &n))));
        let n = name.clone();
        out.push((format!("teleport.{name}.p_cs"), Source::Teleport, Box::new(move |t: &CountTable| est_tele_p(t, &n))));
        if layout.active {
            let n = name.clone();
            out.push((
                format!("teleport.{name}.f_active"),
                Source::TeleportActive,
                Box::new(move |t: &CountTable| est_tele_raw(t, &n)),
            ));
        }
    }
    if !layout.names.is_empty() {
        let avg = |names: Vec<String>, f: fn(&CountTable, &str) -> f64| -> TableFn {
            Box::new(move |t: &CountTable| names.iter().map(|n| f(t, n)).sum::<f64>() / names.len() as f64)
        };
        let names = layout.names.clone();
        out.push(("teleport_average.f_raw".into(), Source::Teleport, avg(names.clone(), est_tele_raw)));
        out.push(("teleport_average.f_cs".into(), Source::Teleport, avg(names.clone(), est_tele_cs)));
        out.push(("teleport_average.p_cs".into(), Source::Teleport, avg(names.clone(), est_tele_p)));
        if layout.active {
            out.push(("teleport_average.f_active".into(), Source::TeleportActive, avg(names, est_tele_raw)));
        }
    }
    out
}

/// Point estimates from counts with Poisson-resampled standard errors.
pub fn estimate<R: Rng + ?Sized>(data: &ShotData, layout: &Layout, resamples: usize, rng: &mut R) -> Result<Estimates> {
    let mut entries = Vec::new();
    for (name, source, f) in metric_table(layout) {
        let table = match source {
            Source::Resource => Some(&data.resource),
            Source::Active => data.active.as_ref(),
            Source::Teleport => Some(&data.teleport),
            Source::TeleportActive => data.teleport_active.as_ref(),
        }
        .ok_or_else(|| Error::domain(format!("no counts recorded for {name}")))?;
        let value = f(table);
        let stderr = poisson_resample(table, |t| Ok(f(t)), resamples, rng)?;
        entries.push(Estimate { name, value, stderr });
    }
    Ok(Estimates { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::{analytic, Problem};
    use crate::noise::NoiseSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn setting_probabilities_are_valid() {
        let t = analytic::resource_terms(&NoiseSpec::depolarizing(0.1, 0.0, 0.1).unwrap());
        for (_, a, b) in SETTINGS {
            let p = setting_probs(&t, &a, b);
            assert!(p.iter().all(|x| *x >= -1e-12));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn multinomial_preserves_total() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = multinomial(1000, &[0.2, 0.0, 0.5, 0.3], &mut rng).unwrap();
        assert_eq!(c.iter().sum::<u64>(), 1000);
        assert_eq!(c[1], 0);
        assert!(multinomial(10, &[0.5, 0.6], &mut rng).is_err());
    }

    #[test]
    fn large_samples_converge() {
        let problem = Problem::new(NoiseSpec::depolarizing(0.03, 0.02, 0.05).unwrap());
        let layout = problem.layout();
        let obs = analytic::observables(&problem).unwrap();
        let exact = Estimates::exact(&obs, &layout);
        let plan = ShotPlan { resource_shots: 200_000, teleport_shots: 200_000, resamples: 100 };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let data = simulate(&obs, &layout, &plan, &mut rng).unwrap();
        let est = estimate(&data, &layout, 100, &mut rng).unwrap();
        for (e, x) in est.entries.iter().zip(&exact.entries) {
            assert_eq!(e.name, x.name);
            assert!((e.value - x.value).abs() < 5.0 * e.stderr + 1e-9, "{}: {} vs {}", e.name, e.value, x.value);
        }
    }
}
