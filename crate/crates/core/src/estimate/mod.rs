//! Routes from a noise model to the headline observables.
//!
//! * [`analytic`] evaluates the Pauli-transfer closed form (fast, used by the fit).
//! * [`oracle`] evolves the full ten-qubit density operator.
//! * [`trajectory`] samples Pauli errors on pure states.
//! * [`shots`] turns exact expectations into finite-count data with Poisson error bars.
//!
//! All routes produce [`Observables`]; trajectory samples are flattened with
//! [`Layout`] so every headline value is a function of a mean vector.

pub mod analytic;
pub mod oracle;
pub mod shots;
pub mod trajectory;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{ResourceTerms, TeleportTerms};
use crate::noise::NoiseSpec;
use crate::protocol::{InputState, TeleportMode};

/// Backend used for expectation values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Analytic,
    Density,
    Trajectory,
}

/// What to compute.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub noise: NoiseSpec,
    pub inputs: Vec<InputState>,
    pub mode: TeleportMode,
    /// Also compute actively corrected values.
    pub active: bool,
}

impl Problem {
    pub fn new(noise: NoiseSpec) -> Self {
        Problem { noise, inputs: InputState::benchmark(), mode: TeleportMode::PostselectPhiPlus, active: false }
    }

    pub fn with_inputs(mut self, inputs: Vec<InputState>) -> Self {
        self.inputs = inputs;
        self
    }

    pub fn with_mode(mut self, mode: TeleportMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_active(mut self, active: bool) -> Self {
        self.active = active;
        self
    }

    pub fn layout(&self) -> Layout {
        Layout {
            names: self.inputs.iter().map(|i| i.name.clone()).collect(),
            targets: self.inputs.iter().map(|i| i.bloch()).collect(),
            active: self.active,
        }
    }
}

/// Exact (or averaged) expectation tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Observables {
    pub resource: ResourceTerms,
    pub active: Option<ResourceTerms>,
    pub teleport: Vec<TeleportTerms>,
    pub teleport_active: Option<Vec<TeleportTerms>>,
}

impl Observables {
    /// Flat vector in [`Layout`] order, weights folded into the Bloch terms.
    pub fn to_flat(&self, layout: &Layout) -> Vec<f64> {
        let mut v = Vec::with_capacity(layout.len());
        v.extend(self.resource.flat());
        if layout.active {
            v.extend(self.active.unwrap_or_else(ResourceTerms::zero).flat());
        }
        for k in 0..layout.targets.len() {
            push_teleport(&mut v, &self.teleport[k]);
            if layout.active {
                let t = self.teleport_active.as_ref().map(|t| t[k]).unwrap_or(TeleportTerms { weight: 0.0, bloch: [0.0; 4] });
                push_teleport(&mut v, &t);
            }
        }
        v
    }
}

fn push_teleport(v: &mut Vec<f64>, t: &TeleportTerms) {
    v.push(t.weight);
    v.extend(t.bloch.iter().map(|b| b * t.weight));
}

/// Position of every quantity inside a flat sample vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub names: Vec<String>,
    pub targets: Vec<[f64; 3]>,
    pub active: bool,
}

impl Layout {
    fn resource_len(&self) -> usize {
        if self.active {
            32
        } else {
            16
        }
    }

    fn stride(&self) -> usize {
        if self.active {
            10
        } else {
            5
        }
    }

    pub fn len(&self) -> usize {
        self.resource_len() + self.stride() * self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn resource(&self, v: &[f64]) -> ResourceTerms {
        ResourceTerms::from_flat(&v[..16])
    }

    pub fn active_resource(&self, v: &[f64]) -> Option<ResourceTerms> {
        self.active.then(|| ResourceTerms::from_flat(&v[16..32]))
    }

    /// Weighted teleport terms normalized by their weight.
    pub fn teleport(&self, v: &[f64], k: usize, active: bool) -> TeleportTerms {
        let base = self.resource_len() + k * self.stride() + if active { 5 } else { 0 };
        let w = v[base];
        let mut bloch = [0.0; 4];
        for (i, b) in bloch.iter_mut().enumerate() {
            *b = if w > 0.0 { v[base + 1 + i] / w } else { 0.0 };
        }
        TeleportTerms { weight: w, bloch }
    }

    /// Named headline metrics as functions of a flat mean vector. Undefined
    /// ratios evaluate to NaN.
    pub fn metrics(&self) -> Vec<(String, MetricFn)> {
        let mut out: Vec<(String, MetricFn)> = Vec::new();
        let l = self.clone();
        macro_rules! push {
            ($name:expr, $f:expr) => {{
                let l = l.clone();
                let f = $f;
                out.push(($name.to_string(), Box::new(move |v: &[f64]| f(&l, v))));
            }};
        }
        push!("f_raw", |l: &Layout, v: &[f64]| l.resource(v).f_raw());
        push!("f_cs", |l: &Layout, v: &[f64]| l.resource(v).f_cs().unwrap_or(f64::NAN));
        push!("p_cs", |l: &Layout, v: &[f64]| l.resource(v).p_cs());
        push!("chsh_raw", |l: &Layout, v: &[f64]| l.resource(v).chsh_raw());
        push!("chsh_cs", |l: &Layout, v: &[f64]| l.resource(v).chsh_cs().unwrap_or(f64::NAN));
        if self.active {
            push!("f_active", |l: &Layout, v: &[f64]| l.active_resource(v).expect("active").f_raw());
            push!("chsh_active", |l: &Layout, v: &[f64]| l.active_resource(v).expect("active").chsh_raw());
        }
        let n = self.targets.len();
        for k in 0..n {
            let name = &self.names[k];
            push!(format!("teleport.{name}.f_raw"), move |l: &Layout, v: &[f64]| l.tele_raw(v, k, false));
            push!(format!("teleport.{name}.f_cs"), move |l: &Layout, v: &[f64]| l.tele_cs(v, k));
            push!(format!("teleport.{name}.p_cs"), move |l: &Layout, v: &[f64]| l.teleport(v, k, false).p_cs());
            if self.active {
                push!(format!("teleport.{name}.f_active"), move |l: &Layout, v: &[f64]| l.tele_raw(v, k, true));
            }
        }
        if n > 0 {
            let avg = move |f: &dyn Fn(usize) -> f64| (0..n).map(f).sum::<f64>() / n as f64;
            push!("teleport_average.f_raw", move |l: &Layout, v: &[f64]| avg(&|k| l.tele_raw(v, k, false)));
            push!("teleport_average.f_cs", move |l: &Layout, v: &[f64]| avg(&|k| l.tele_cs(v, k)));
            push!("teleport_average.p_cs", move |l: &Layout, v: &[f64]| avg(&|k| l.teleport(v, k, false).p_cs()));
            if self.active {
                push!("teleport_average.f_active", move |l: &Layout, v: &[f64]| avg(&|k| l.tele_raw(v, k, true)));
            }
        }
        out
    }

    fn tele_raw(&self, v: &[f64], k: usize, active: bool) -> f64 {
        self.teleport(v, k, active).overlap(&self.targets[k])
    }

    fn tele_cs(&self, v: &[f64], k: usize) -> f64 {
        let t = self.teleport(v, k, false);
        if t.p_cs() < crate::metrics::DEGENERATE_FLOOR {
            return f64::NAN;
        }
        t.overlap(&self.targets[k]) / t.p_cs()
    }
}

pub type MetricFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// One named value with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    pub stderr: f64,
}

/// Headline values in [`Layout::metrics`] order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Estimates {
    pub entries: Vec<Estimate>,
}

impl Estimates {
    pub fn get(&self, name: &str) -> Option<&Estimate> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn value(&self, name: &str) -> Result<f64> {
        self.get(name).map(|e| e.value).ok_or_else(|| Error::domain(format!("no estimate named {name}")))
    }

    /// Exact values (zero error) from expectation tables.
    pub fn exact(obs: &Observables, layout: &Layout) -> Self {
        let v = obs.to_flat(layout);
        Estimates {
            entries: layout.metrics().into_iter().map(|(name, f)| Estimate { value: f(&v), name, stderr: 0.0 }).collect(),
        }
    }

    /// Fails on the first undefined value.
    pub fn check_defined(&self) -> Result<()> {
        match self.entries.iter().find(|e| !e.value.is_finite()) {
            Some(e) => Err(Error::Domain(format!("{} is undefined: code-space projection vanished", e.name))),
            None => Ok(()),
        }
    }
}

/// Exact expectation tables from the analytic or density route.
pub fn exact_observables(engine: Engine, problem: &Problem) -> Result<Observables> {
    problem.noise.validate()?;
    match engine {
        Engine::Analytic => analytic::observables(problem),
        Engine::Density => oracle::observables(problem),
        Engine::Trajectory => Err(Error::domain("the trajectory engine has no exact mode")),
    }
}
