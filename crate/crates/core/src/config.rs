//! Run configuration: a named preset overridden by dotted keys from a TOML
//! file and from `key=value` pairs.
//!
//! ```toml
//! preset = "convection"
//!
//! [mesh]
//! mode = "adaptive"
//! n_v = 16
//! n_x = 16
//!
//! [adapt]
//! tolerance = 1000.0
//! ```

use std::path::Path;

use crate::adaptivity::AdaptOptions;
use crate::error::{Error, Result};
use crate::mesh::Diagonal;
use crate::model::{DMinusVariance, OptionKind};
use crate::pipeline::PricingProblem;
use crate::reference::McConfig;
use crate::timestepping::Scheme;

/// Uniform mesh or adaptive loop started from the uniform mesh.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeshSpec {
    Uniform,
    Adaptive(AdaptOptions<f64>),
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub preset: String,
    /// Parameters, domain, contract, mesh size, degree, time step and
    /// scheme. For adaptive runs the mesh size is the starting mesh.
    pub problem: PricingProblem<f64>,
    pub mesh: MeshSpec,
    pub mc: McConfig,
}

/// Keys accepted by [`RunConfig::set`].
pub const KEYS: &[&str] = &[
    "preset",
    "params.kappa",
    "params.theta",
    "params.sigma",
    "params.rho",
    "params.r_d",
    "params.r_f",
    "params.maturity",
    "params.strike",
    "params.spot",
    "params.v0",
    "domain.v_min",
    "domain.v_max",
    "domain.x_min",
    "domain.x_max",
    "option.k1",
    "option.k3",
    "mesh.mode",
    "mesh.n_v",
    "mesh.n_x",
    "mesh.diagonal",
    "adapt.tolerance",
    "adapt.theta_mark",
    "adapt.max_rounds",
    "adapt.max_elements",
    "solver.degree",
    "solver.dt",
    "solver.scheme",
    "boundary.d_minus",
    "mc.paths",
    "mc.seed",
    "mc.steps_per_year",
    "mc.antithetic",
];

impl RunConfig {
    /// Preset `table1`, `convection`, `butterfly` or `digital`.
    pub fn preset(name: &str) -> Result<Self> {
        let problem = PricingProblem::preset(name)?;
        let mc = McConfig {
            paths: 100_000,
            ..Default::default()
        };
        Ok(Self {
            preset: name.to_string(),
            problem,
            mesh: MeshSpec::Uniform,
            mc,
        })
    }

    /// Parses TOML text. A top-level `preset` is applied before any other key.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut flat = Vec::new();
        flatten("", &toml::Value::Table(table), &mut flat);
        let preset = match flat.iter().find(|(k, _)| k == "preset") {
            Some((_, toml::Value::String(s))) => s.clone(),
            Some((_, other)) => return Err(Error::Config(format!("preset must be a string, got {other}"))),
            None => "table1".to_string(),
        };
        let mut cfg = Self::preset(&preset)?;
        // The mesh mode decides whether `adapt.*` keys are accepted.
        flat.sort_by_key(|(k, _)| k != "mesh.mode");
        for (k, v) in flat.iter().filter(|(k, _)| k != "preset") {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Applies `key=value`; the value is read as TOML, falling back to a bare
    /// string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got `{assignment}`")))?;
        let (key, raw) = (key.trim(), raw.trim());
        let value = format!("v = {raw}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));
        if key == "preset" {
            let name = value.as_str().ok_or_else(|| Error::Config("preset must be a string".into()))?;
            let keep = self.mc;
            *self = Self::preset(name)?;
            self.mc = keep;
            return Ok(());
        }
        self.set(key, &value)
    }

    pub fn set(&mut self, key: &str, value: &toml::Value) -> Result<()> {
        let p = &mut self.problem;
        match key {
            "params.kappa" => p.params.kappa = float(key, value)?,
            "params.theta" => p.params.theta = float(key, value)?,
            "params.sigma" => p.params.sigma = float(key, value)?,
            "params.rho" => p.params.rho = float(key, value)?,
            "params.r_d" => p.params.r_d = float(key, value)?,
            "params.r_f" => p.params.r_f = float(key, value)?,
            "params.maturity" => p.params.maturity = float(key, value)?,
            "params.strike" => p.params.strike = float(key, value)?,
            "params.spot" => p.params.spot = float(key, value)?,
            "params.v0" => p.params.v0 = float(key, value)?,
            "domain.v_min" => p.domain.v_min = float(key, value)?,
            "domain.v_max" => p.domain.v_max = float(key, value)?,
            "domain.x_min" => p.domain.x_min = float(key, value)?,
            "domain.x_max" => p.domain.x_max = float(key, value)?,
            "option.k1" | "option.k3" => {
                let OptionKind::Butterfly { k1, k3, .. } = p.kind else {
                    return Err(Error::Config(format!("{key} only applies to the butterfly preset")));
                };
                let x = float(key, value)?;
                let (k1, k3) = if key == "option.k1" { (x, k3) } else { (k1, x) };
                p.kind = OptionKind::butterfly(k1, k3)?;
                if let OptionKind::Butterfly { k2, .. } = p.kind {
                    p.params.strike = k2;
                }
            }
            "mesh.mode" => match string(key, value)?.as_str() {
                "uniform" => self.mesh = MeshSpec::Uniform,
                "adaptive" => {
                    if self.mesh == MeshSpec::Uniform {
                        self.mesh = MeshSpec::Adaptive(AdaptOptions::default());
                    }
                }
                other => return Err(Error::Config(format!("mesh.mode must be uniform or adaptive, got `{other}`"))),
            },
            "mesh.n_v" => p.n_v = count(key, value)?,
            "mesh.n_x" => p.n_x = count(key, value)?,
            "mesh.diagonal" => {
                p.diagonal = match string(key, value)?.as_str() {
                    "rising" => Diagonal::Rising,
                    "falling" => Diagonal::Falling,
                    other => return Err(Error::Config(format!("mesh.diagonal must be rising or falling, got `{other}`"))),
                }
            }
            "adapt.tolerance" | "adapt.theta_mark" | "adapt.max_rounds" | "adapt.max_elements" => {
                let MeshSpec::Adaptive(opts) = &mut self.mesh else {
                    return Err(Error::Config(format!("{key} needs mesh.mode = \"adaptive\"")));
                };
                match key {
                    "adapt.tolerance" => opts.tolerance = float(key, value)?,
                    "adapt.theta_mark" => opts.theta_mark = float(key, value)?,
                    "adapt.max_rounds" => opts.max_rounds = count(key, value)?,
                    _ => opts.max_elements = count(key, value)?,
                }
            }
            "solver.degree" => p.degree = count(key, value)?,
            "solver.dt" => p.dt = float(key, value)?,
            "solver.scheme" => p.scheme = Scheme::parse(&string(key, value)?)?,
            "boundary.d_minus" => {
                p.boundary.d_minus_variance = match string(key, value)?.as_str() {
                    "vmin" | "v_min" => DMinusVariance::VMin,
                    "vmax" | "v_max" => DMinusVariance::VMax,
                    other => return Err(Error::Config(format!("boundary.d_minus must be vmin or vmax, got `{other}`"))),
                }
            }
            "mc.paths" => self.mc.paths = count(key, value)?,
            "mc.seed" => self.mc.seed = count(key, value)? as u64,
            "mc.steps_per_year" => self.mc.steps_per_year = count(key, value)?,
            "mc.antithetic" => {
                self.mc.antithetic = value
                    .as_bool()
                    .ok_or_else(|| Error::Config(format!("{key} must be true or false")))?
            }
            "preset" => return Err(Error::Config("preset must be given first".into())),
            other => {
                return Err(Error::Config(format!(
                    "unknown key `{other}`; known keys: {}",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.problem.validate()?;
        if let MeshSpec::Adaptive(o) = self.mesh {
            if !(o.tolerance > 0.0) {
                return Err(Error::Config(format!("adapt.tolerance must be > 0, got {}", o.tolerance)));
            }
            if !(o.theta_mark > 0.0 && o.theta_mark < 1.0) {
                return Err(Error::Config(format!("adapt.theta_mark must lie in (0, 1), got {}", o.theta_mark)));
            }
        }
        self.mc.validate()
    }
}

fn flatten(prefix: &str, value: &toml::Value, out: &mut Vec<(String, toml::Value)>) {
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        other => out.push((prefix.to_string(), other.clone())),
    }
}

fn float(key: &str, v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Float(x) => Ok(*x),
        toml::Value::Integer(i) => Ok(*i as f64),
        other => Err(Error::Config(format!("{key} must be a number, got {other}"))),
    }
}

fn count(key: &str, v: &toml::Value) -> Result<usize> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        other => Err(Error::Config(format!("{key} must be a non-negative integer, got {other}"))),
    }
}

fn string(key: &str, v: &toml::Value) -> Result<String> {
    v.as_str()
        .map(str::to_string)
        .ok_or_else(|| Error::Config(format!("{key} must be a string, got {v}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_load_and_validate() {
        for name in ["table1", "convection", "butterfly", "digital"] {
            RunConfig::preset(name).unwrap().validate().unwrap();
        }
        assert!(RunConfig::preset("bogus").is_err());
    }

    #[test]
    fn toml_and_overrides() {
        let text = r#"
            preset = "convection"
            [mesh]
            mode = "adaptive"
            n_v = 8
            [adapt]
            tolerance = 5
            theta_mark = 0.6
            [solver]
            scheme = "cn"
        "#;
        let mut cfg = RunConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.problem.n_v, 8);
        assert_eq!(cfg.problem.scheme, Scheme::CrankNicolson);
        let MeshSpec::Adaptive(o) = cfg.mesh else { panic!() };
        assert_eq!((o.tolerance, o.theta_mark), (5.0, 0.6));
        cfg.apply_override("params.kappa=2.5").unwrap();
        cfg.apply_override("solver.scheme=rannacher").unwrap();
        cfg.apply_override("boundary.d_minus = vmin").unwrap();
        assert_eq!(cfg.problem.params.kappa, 2.5);
        assert_eq!(cfg.problem.scheme, Scheme::RannacherCN);
        assert_eq!(cfg.problem.boundary.d_minus_variance, DMinusVariance::VMin);
        cfg.validate().unwrap();
    }

    #[test]
    fn bad_input_is_reported() {
        let mut cfg = RunConfig::preset("table1").unwrap();
        assert!(cfg.apply_override("params.kappa").is_err());
        assert!(cfg.apply_override("nope=1").is_err());
        assert!(cfg.apply_override("mesh.n_v=1.5").is_err());
        assert!(cfg.apply_override("adapt.tolerance=1").is_err());
        assert!(cfg.apply_override("option.k1=0.2").is_err());
        assert!(RunConfig::from_toml_str("preset = 3").is_err());
        assert!(RunConfig::from_toml_str("[[").is_err());
        cfg.apply_override("params.sigma=0").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn butterfly_strikes_stay_centred() {
        let mut cfg = RunConfig::preset("butterfly").unwrap();
        cfg.apply_override("option.k3=1.1").unwrap();
        let OptionKind::Butterfly { k1, k2, k3 } = cfg.problem.kind else { panic!() };
        assert_eq!((k1, k3), (0.1, 1.1));
        assert!((k2 - 0.6).abs() < 1e-15);
        assert_eq!(cfg.problem.params.strike, k2);
    }
}
