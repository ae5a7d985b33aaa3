//! JSON run configuration: schema-validated before any computation,
//! unknown keys rejected.

use serde::Deserialize;

use curvlab_core::dynamics::{IntegratorSpec, Method};
use curvlab_core::hamiltonians::{
    build_classical, build_deformed, ms_extra_integral, Chart, ClassicalSystem, DeformedFamily,
    FKind, Potential, UKind,
};
use curvlab_core::observable::universal_integral_observables;
use curvlab_core::state::{ModelParams, PhaseState, StateSampler};
use curvlab_core::Observable;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    #[serde(default)]
    pub params: ParamsCfg,
    #[serde(default)]
    pub system: SystemCfg,
    #[serde(default)]
    pub initial_state: Option<StateCfg>,
    #[serde(default)]
    pub sample_seed: Option<u64>,
    #[serde(default)]
    pub integrator: IntegratorCfg,
    #[serde(default = "default_monitors")]
    pub monitors: Vec<String>,
    #[serde(default)]
    pub verify: VerifyCfg,
    #[serde(default)]
    pub grid: Option<GridCfg>,
    #[serde(default)]
    pub sweep: Option<SweepCfg>,
    #[serde(default)]
    pub transform: TransformCfg,
    #[serde(default)]
    pub outputs: OutputsCfg,
}

fn default_monitors() -> Vec<String> {
    vec!["universal".to_string()]
}

impl RunConfig {
    /// Built-in default: three sites, mild deformation, free flow.
    pub fn default_verify() -> Self {
        RunConfig {
            n: 3,
            params: ParamsCfg {
                z: 0.2,
                ..ParamsCfg::default()
            },
            system: SystemCfg::default(),
            initial_state: None,
            sample_seed: None,
            integrator: IntegratorCfg::default(),
            monitors: default_monitors(),
            verify: VerifyCfg::default(),
            grid: None,
            sweep: None,
            transform: TransformCfg::default(),
            outputs: OutputsCfg::default(),
        }
    }

    pub fn model_params(&self) -> Result<ModelParams, String> {
        let b = match &self.params.b {
            Some(b) => {
                if b.len() != self.n {
                    return Err(format!(
                        "params.b has {} entries, expected n = {}",
                        b.len(),
                        self.n
                    ));
                }
                b.clone()
            }
            None => vec![0.0; self.n],
        };
        if self.params.kappa2 == 0.0 {
            return Err("params.kappa2 must be nonzero".into());
        }
        Ok(ModelParams {
            z: self.params.z,
            b,
            kappa2: self.params.kappa2,
            omega: self.params.omega,
            k: self.params.k,
        })
    }

    /// Initial state from the config: explicit, or sampled with the seed.
    pub fn initial_state(&self, seed_override: Option<u64>) -> Result<PhaseState, String> {
        if let Some(sc) = &self.initial_state {
            if sc.q.len() != self.n || sc.p.len() != self.n {
                return Err(format!(
                    "initial_state has {}/{} entries, expected n = {}",
                    sc.q.len(),
                    sc.p.len(),
                    self.n
                ));
            }
            return PhaseState::new(sc.q.clone(), sc.p.clone()).map_err(|e| e.to_string());
        }
        let seed = seed_override.or(self.sample_seed).unwrap_or(0);
        Ok(StateSampler::new(self.n, seed).next_state())
    }

    pub fn integrator_spec(&self, guard_b: &[f64]) -> Result<IntegratorSpec, String> {
        let c = &self.integrator;
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(c.dt) || !positive(c.t_end) {
            return Err("integrator.dt and integrator.t_end must be positive".into());
        }
        let mut spec = IntegratorSpec {
            method: match c.method {
                MethodCfg::ImplicitMidpoint => Method::ImplicitMidpoint,
                MethodCfg::RkAdaptive => Method::RkAdaptive,
            },
            dt: c.dt,
            t_end: c.t_end,
            max_steps: c.max_steps,
            newton_tol: c.newton_tol,
            max_newton_iters: c.max_newton_iters,
            rtol: c.rtol,
            atol: c.atol,
            guarded_sites: Vec::new(),
        };
        spec = spec.with_guard_from(guard_b);
        Ok(spec)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsCfg {
    #[serde(default)]
    pub z: f64,
    #[serde(default = "one")]
    pub kappa2: f64,
    #[serde(default)]
    pub b: Option<Vec<f64>>,
    #[serde(default)]
    pub omega: f64,
    #[serde(default)]
    pub k: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for ParamsCfg {
    fn default() -> Self {
        ParamsCfg {
            z: 0.0,
            kappa2: 1.0,
            b: None,
            omega: 0.0,
            k: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemCfg {
    Deformed {
        #[serde(default)]
        f: FCfg,
        #[serde(default)]
        u: UCfg,
    },
    Classical {
        chart: ChartCfg,
        kappa: f64,
        potential: PotentialCfg,
    },
}

impl Default for SystemCfg {
    fn default() -> Self {
        SystemCfg::Deformed {
            f: FCfg::One,
            u: UCfg::None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FCfg {
    #[default]
    One,
    ExpPlus,
    ExpMinus,
}

impl FCfg {
    pub fn to_core(self) -> FKind {
        match self {
            FCfg::One => FKind::One,
            FCfg::ExpPlus => FKind::ExpPlus,
            FCfg::ExpMinus => FKind::ExpMinus,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum UCfg {
    #[default]
    None,
    Oscillator,
    MsOscillator,
    Kepler,
}

impl UCfg {
    fn to_core(self) -> UKind {
        match self {
            UCfg::None => UKind::None,
            UCfg::Oscillator => UKind::Oscillator,
            UCfg::MsOscillator => UKind::MsOscillator,
            UCfg::Kepler => UKind::Kepler,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ChartCfg {
    Poincare,
    Beltrami,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PotentialCfg {
    Free,
    Oscillator,
    Kepler,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateCfg {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum MethodCfg {
    ImplicitMidpoint,
    RkAdaptive,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorCfg {
    #[serde(default = "default_method")]
    pub method: MethodCfg,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_iters")]
    pub max_newton_iters: usize,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
}

fn default_method() -> MethodCfg {
    MethodCfg::ImplicitMidpoint
}
fn default_dt() -> f64 {
    1e-3
}
fn default_t_end() -> f64 {
    10.0
}
fn default_max_steps() -> usize {
    10_000_000
}
fn default_newton_tol() -> f64 {
    1e-12
}
fn default_newton_iters() -> usize {
    25
}
fn default_rtol() -> f64 {
    1e-10
}
fn default_atol() -> f64 {
    1e-12
}

impl Default for IntegratorCfg {
    fn default() -> Self {
        IntegratorCfg {
            method: default_method(),
            dt: default_dt(),
            t_end: default_t_end(),
            max_steps: default_max_steps(),
            newton_tol: default_newton_tol(),
            max_newton_iters: default_newton_iters(),
            rtol: default_rtol(),
            atol: default_atol(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyCfg {
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    200
}

impl Default for VerifyCfg {
    fn default() -> Self {
        VerifyCfg {
            samples: default_samples(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCfg {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub points: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepCfg {
    #[serde(default)]
    pub z: Option<Vec<f64>>,
    #[serde(default)]
    pub kappa2: Option<Vec<f64>>,
    #[serde(default)]
    pub omega: Option<Vec<f64>>,
    #[serde(default)]
    pub k: Option<Vec<f64>>,
    #[serde(default)]
    pub b: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub states: Option<Vec<StateCfg>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformCfg {
    #[serde(default = "default_transform_samples")]
    pub samples: usize,
}

fn default_transform_samples() -> usize {
    20
}

impl Default for TransformCfg {
    fn default() -> Self {
        TransformCfg {
            samples: default_transform_samples(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsCfg {
    #[serde(default = "default_trajectory")]
    pub trajectory: String,
    #[serde(default = "default_drift")]
    pub drift: String,
    #[serde(default = "default_report")]
    pub report: String,
    #[serde(default = "default_curvature")]
    pub curvature: String,
    #[serde(default = "default_sweep")]
    pub sweep: String,
    #[serde(default = "default_transform_out")]
    pub transform: String,
}

fn default_trajectory() -> String {
    "trajectory.csv".into()
}
fn default_drift() -> String {
    "drift.json".into()
}
fn default_report() -> String {
    "report.json".into()
}
fn default_curvature() -> String {
    "curvature.csv".into()
}
fn default_sweep() -> String {
    "sweep.json".into()
}
fn default_transform_out() -> String {
    "transform.json".into()
}

impl Default for OutputsCfg {
    fn default() -> Self {
        OutputsCfg {
            trajectory: default_trajectory(),
            drift: default_drift(),
            report: default_report(),
            curvature: default_curvature(),
            sweep: default_sweep(),
            transform: default_transform_out(),
        }
    }
}

/// A fully built system: Hamiltonian, monitored integrals, and the
/// coefficients that drive the singularity guard.
pub struct BuiltSystem {
    pub hamiltonian: Observable,
    pub monitors: Vec<Observable>,
    pub guard_b: Vec<f64>,
}

/// Construct the Hamiltonian and monitor set a config describes.
pub fn build_system(cfg: &RunConfig, params: &ModelParams) -> Result<BuiltSystem, String> {
    let n = cfg.n;
    if n == 0 {
        return Err("n must be at least 1".into());
    }
    let (hamiltonian, extras) = match &cfg.system {
        SystemCfg::Deformed { f, u } => {
            let family = DeformedFamily::new(n, f.to_core(), u.to_core(), params.clone());
            let h = build_deformed(&family).map_err(|e| e.to_string())?;
            let extras = if matches!(f, FCfg::ExpPlus) {
                let with_osc = matches!(u, UCfg::MsOscillator);
                match ms_extra_integral(n, params, with_osc) {
                    Ok(i) => vec![i],
                    Err(e) => return Err(e.to_string()),
                }
            } else {
                Vec::new()
            };
            (h, extras)
        }
        SystemCfg::Classical {
            chart,
            kappa,
            potential,
        } => {
            let sys = ClassicalSystem {
                n,
                chart: match chart {
                    ChartCfg::Poincare => Chart::Poincare,
                    ChartCfg::Beltrami => Chart::Beltrami,
                },
                kappa: *kappa,
                potential: match potential {
                    PotentialCfg::Free => Potential::Free,
                    PotentialCfg::Oscillator => Potential::Oscillator(params.omega),
                    PotentialCfg::Kepler => Potential::Kepler(params.k),
                },
                b: params.b.clone(),
            };
            let built = build_classical(&sys).map_err(|e| e.to_string())?;
            (built.hamiltonian, built.extra_integrals)
        }
    };

    let mut monitors = Vec::new();
    for item in &cfg.monitors {
        match item.as_str() {
            "universal" => {
                // undeformed universal integrals for classical systems
                let p = effective_monitor_params(cfg, params);
                monitors.extend(
                    universal_integral_observables(n, &p).map_err(|e| e.to_string())?,
                );
            }
            "left" => {
                let p = effective_monitor_params(cfg, params);
                for m in 2..=n {
                    monitors.push(
                        curvlab_core::observable::left_integral(m, n, &p)
                            .map_err(|e| e.to_string())?,
                    );
                }
            }
            "right" => {
                let p = effective_monitor_params(cfg, params);
                for m in 2..=n {
                    monitors.push(
                        curvlab_core::observable::right_integral(m, n, &p)
                            .map_err(|e| e.to_string())?,
                    );
                }
            }
            "extra" => monitors.extend(extras.iter().cloned()),
            other => return Err(format!("unknown monitor selector '{other}'")),
        }
    }
    Ok(BuiltSystem {
        hamiltonian,
        monitors,
        guard_b: params.b.clone(),
    })
}

/// Universal integrals of a classical system live at z = 0 regardless of
/// the configured deformation.
fn effective_monitor_params(cfg: &RunConfig, params: &ModelParams) -> ModelParams {
    match cfg.system {
        SystemCfg::Deformed { .. } => params.clone(),
        SystemCfg::Classical { .. } => {
            let mut p = params.clone();
            p.z = 0.0;
            p
        }
    }
}

/// Parse a config file with location diagnostics on malformed JSON.
pub fn parse_config(text: &str) -> Result<RunConfig, String> {
    serde_json::from_str::<RunConfig>(text)
        .map_err(|e| format!("config error at line {}, column {}: {e}", e.line(), e.column()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses() {
        let cfg = parse_config(r#"{ "n": 2 }"#).unwrap();
        assert_eq!(cfg.n, 2);
        assert_eq!(cfg.params.kappa2, 1.0);
        let params = cfg.model_params().unwrap();
        assert_eq!(params.b, vec![0.0, 0.0]);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = parse_config(r#"{ "n": 2, "zz": 1 }"#).unwrap_err();
        assert!(err.contains("line"), "{err}");
        let err = parse_config(r#"{ "n": 2, "params": { "z": 0.1, "bogus": 3 } }"#).unwrap_err();
        assert!(err.contains("bogus"), "{err}");
    }

    #[test]
    fn malformed_json_reports_location() {
        let err = parse_config("{ \"n\": 2,, }").unwrap_err();
        assert!(err.contains("line 1"), "{err}");
    }

    #[test]
    fn system_variants_build() {
        let cfg = parse_config(
            r#"{
            "n": 2,
            "params": { "z": 0.3, "omega": 1.0 },
            "system": { "kind": "deformed", "f": "exp_plus", "u": "ms_oscillator" },
            "monitors": ["universal", "extra"]
        }"#,
        )
        .unwrap();
        let params = cfg.model_params().unwrap();
        let built = build_system(&cfg, &params).unwrap();
        assert_eq!(built.monitors.len(), 2 + 1); // C2, Cr2, I1

        let cfg = parse_config(
            r#"{
            "n": 2,
            "params": { "k": 1.0 },
            "system": { "kind": "classical", "chart": "beltrami", "kappa": -0.3, "potential": "kepler" },
            "monitors": ["universal", "extra"]
        }"#,
        )
        .unwrap();
        let params = cfg.model_params().unwrap();
        let built = build_system(&cfg, &params).unwrap();
        assert_eq!(built.monitors.len(), 2 + 2); // C2, Cr2, L1, L2
    }

    #[test]
    fn explicit_state_roundtrip() {
        let cfg = parse_config(
            r#"{ "n": 2, "initial_state": { "q": [0.5, 0.6], "p": [0.1, -0.2] } }"#,
        )
        .unwrap();
        let s = cfg.initial_state(None).unwrap();
        assert_eq!(s.q(), &[0.5, 0.6]);
        // sampling path is deterministic in the seed
        let cfg = parse_config(r#"{ "n": 3, "sample_seed": 9 }"#).unwrap();
        assert_eq!(cfg.initial_state(None).unwrap(), cfg.initial_state(None).unwrap());
        assert_ne!(
            cfg.initial_state(Some(10)).unwrap(),
            cfg.initial_state(None).unwrap()
        );
    }
}
