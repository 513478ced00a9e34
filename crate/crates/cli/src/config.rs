//! Suite configuration files (TOML).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use kahler_toric::families::ExponentialFamily;
use kahler_toric::lifts::{parse_lift, LiftMap};
use kahler_toric::potential::{ExpSum, Quadratic, SharedPotential};
use kahler_toric::torification::{make_factorization, TargetGeometry};
use serde::{Deserialize, Serialize};

/// Base seed when neither the file nor the command line sets one.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckName {
    DualFlatness,
    KahlerClosed,
    Factorization,
    Momentum,
    Lift,
    LegendreInvolution,
    FisherCrosscheck,
    ConvexityScan,
    KahlerFunction,
}

impl CheckName {
    pub const ALL: [CheckName; 9] = [
        CheckName::DualFlatness,
        CheckName::KahlerClosed,
        CheckName::Factorization,
        CheckName::Momentum,
        CheckName::Lift,
        CheckName::LegendreInvolution,
        CheckName::FisherCrosscheck,
        CheckName::ConvexityScan,
        CheckName::KahlerFunction,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::DualFlatness => "dual-flatness",
            CheckName::KahlerClosed => "kahler-closed",
            CheckName::Factorization => "factorization",
            CheckName::Momentum => "momentum",
            CheckName::Lift => "lift",
            CheckName::LegendreInvolution => "legendre-involution",
            CheckName::FisherCrosscheck => "fisher-crosscheck",
            CheckName::ConvexityScan => "convexity-scan",
            CheckName::KahlerFunction => "kahler-function",
        }
    }

    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        Self::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| err(format!("unknown check `{s}`")))
    }

    pub fn default_samples(self) -> usize {
        match self {
            CheckName::DualFlatness | CheckName::FisherCrosscheck | CheckName::KahlerFunction => 20,
            CheckName::KahlerClosed | CheckName::LegendreInvolution => 50,
            CheckName::Factorization | CheckName::Lift => 100,
            CheckName::Momentum => 10,
            CheckName::ConvexityScan => 1000,
        }
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One `[[check]]` table.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub check: CheckName,
    /// Family, potential, target geometry or lift identifier, e.g. `binomial:3`.
    pub family: String,
    #[serde(default)]
    pub params: BTreeMap<String, toml::Value>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub seed: Option<u64>,
    #[serde(rename = "check", default)]
    pub checks: Vec<CheckSpec>,
}

impl SuiteConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let suite: SuiteConfig = toml::from_str(text).map_err(|e| err(format!("invalid suite file: {e}")))?;
        for (i, c) in suite.checks.iter().enumerate() {
            if let Some(tol) = c.tol {
                if !(tol >= 0.0) || !tol.is_finite() {
                    return Err(err(format!("check {} ({}): tol must be finite and non-negative", i + 1, c.check)));
                }
            }
            if c.samples == Some(0) && c.check != CheckName::ConvexityScan {
                return Err(err(format!("check {} ({}): samples must be positive", i + 1, c.check)));
            }
        }
        Ok(suite)
    }
}

/// Order in which `params` entries are appended to an identifier.
fn param_order(name: &str) -> &'static [&'static str] {
    match name {
        "categorical" => &["dim"],
        "binomial" => &["n"],
        "multinomial" => &["m", "n"],
        "negative-binomial" => &["r"],
        "flat" | "quadratic" => &["n"],
        "projective" => &["n", "c"],
        "disk" => &["c"],
        "veronese" | "veronese-printed" => &["n"],
        "veronese-multinomial" => &["m", "n"],
        "segre" => &["n", "m"],
        _ => &[],
    }
}

/// Joins `family` and `params` into a colon separated identifier.
pub fn identifier(family: &str, params: &BTreeMap<String, toml::Value>) -> Result<String, ConfigError> {
    if params.is_empty() {
        return Ok(family.trim().to_string());
    }
    let name = family.trim();
    if name.contains(':') {
        return Err(err(format!("`{family}` already has inline parameters; drop [params]")));
    }
    let order = param_order(name);
    if let Some(k) = params.keys().find(|k| !order.contains(&k.as_str())) {
        return Err(err(format!("unknown parameter `{k}` for `{name}` (expected {order:?})")));
    }
    let mut out = name.to_string();
    for key in order {
        match params.get(*key) {
            Some(toml::Value::Integer(v)) => out += &format!(":{v}"),
            Some(toml::Value::Float(v)) => out += &format!(":{v}"),
            Some(other) => return Err(err(format!("parameter `{key}` must be a number, got {other}"))),
            None => break,
        }
    }
    Ok(out)
}

/// What a check runs on.
#[derive(Debug, Clone)]
pub enum Subject {
    Family(ExponentialFamily),
    Potential { label: String, potential: SharedPotential, spread: f64 },
    Target(TargetGeometry),
    Lift(Box<LiftMap>),
}

impl Subject {
    pub fn parameters(&self) -> BTreeMap<String, serde_json::Value> {
        match self {
            Subject::Family(f) => f.parameters().into_iter().map(|(k, v)| (k, v.into())).collect(),
            Subject::Potential { potential, .. } => BTreeMap::from([("dim".to_string(), potential.dim().into())]),
            Subject::Target(t) => match t {
                TargetGeometry::FlatCn { n } => BTreeMap::from([("n".to_string(), (*n).into())]),
                TargetGeometry::Projective { n, c } => {
                    BTreeMap::from([("n".to_string(), (*n).into()), ("c".to_string(), (*c).into())])
                }
                TargetGeometry::Disk { c } => BTreeMap::from([("c".to_string(), (*c).into())]),
                TargetGeometry::Product { .. } => BTreeMap::new(),
            },
            Subject::Lift(l) => BTreeMap::from([
                ("source_dim".to_string(), l.source.dim().into()),
                ("target_dim".to_string(), l.target.dim().into()),
            ]),
        }
    }
}

fn potential_subject(id: &str) -> Result<Subject, ConfigError> {
    let parts: Vec<&str> = id.split(':').collect();
    let (potential, spread): (SharedPotential, f64) = match parts.as_slice() {
        ["quadratic", n] => {
            let n: usize = n.parse().map_err(|_| err(format!("bad dimension in `{id}`")))?;
            if n == 0 {
                return Err(err("quadratic needs n >= 1"));
            }
            (Arc::new(Quadratic { dim: n }), 2.0)
        }
        ["exp"] => (Arc::new(ExpSum::exp()), 2.0),
        _ => {
            let t = TargetGeometry::parse(id).map_err(|e| err(e.to_string()))?;
            (t.compatible_potential().map_err(|e| err(e.to_string()))?, 0.4)
        }
    };
    Ok(Subject::Potential { label: id.to_string(), potential, spread })
}

fn is_family(id: &str) -> bool {
    let name = id.split(':').next().unwrap_or("");
    ["poisson", "categorical", "binomial", "multinomial", "negative-binomial", "normal-known-var"].contains(&name)
}

fn family(id: &str) -> Result<ExponentialFamily, ConfigError> {
    ExponentialFamily::parse(id).map_err(|e| err(e.to_string()))
}

fn toric_family(id: &str) -> Result<ExponentialFamily, ConfigError> {
    let f = family(id)?;
    make_factorization(&f).map_err(|e| err(e.to_string()))?;
    Ok(f)
}

/// Resolves the identifier of a check, rejecting subjects the check does not apply to.
pub fn resolve(check: CheckName, id: &str) -> Result<Subject, ConfigError> {
    let wrong = |what: &str| err(format!("check `{check}` expects {what}, got `{id}`"));
    match check {
        CheckName::FisherCrosscheck => Ok(Subject::Family(family(id)?)),
        CheckName::DualFlatness | CheckName::KahlerClosed | CheckName::LegendreInvolution => {
            if is_family(id) {
                Ok(Subject::Family(family(id)?))
            } else {
                potential_subject(id)
            }
        }
        CheckName::Factorization => Ok(Subject::Family(toric_family(id)?)),
        CheckName::Momentum | CheckName::ConvexityScan => {
            if is_family(id) {
                let f = toric_family(id)?;
                let fact = make_factorization(&f).map_err(|e| err(e.to_string()))?;
                fact.target.momentum_image().map_err(|e| err(e.to_string()))?;
                Ok(Subject::Family(f))
            } else if check == CheckName::Momentum {
                let t = TargetGeometry::parse(id).map_err(|e| err(e.to_string()))?;
                t.compatible_potential().map_err(|e| err(e.to_string()))?;
                Ok(Subject::Target(t))
            } else {
                Err(wrong("a toric family"))
            }
        }
        CheckName::Lift => Ok(Subject::Lift(Box::new(parse_lift(id).map_err(|e| err(e.to_string()))?))),
        CheckName::KahlerFunction => match family(id)? {
            f @ ExponentialFamily::Poisson => Ok(Subject::Family(f)),
            _ => Err(wrong("the poisson family")),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_check_names_are_rejected() {
        let e = SuiteConfig::parse("[[check]]\ncheck = \"flatness\"\nfamily = \"poisson\"\n").unwrap_err();
        assert!(e.0.contains("flatness"), "{e}");
        assert!(SuiteConfig::parse("[[check]]\ncheck = \"lift\"\nfamily = \"segre:1:1\"\ncolour = 1\n").is_err());
    }

    #[test]
    fn params_are_appended_in_order() {
        let s = SuiteConfig::parse("[[check]]\ncheck = \"lift\"\nfamily = \"segre\"\nparams = { m = 2, n = 1 }\n").unwrap();
        assert_eq!(identifier(&s.checks[0].family, &s.checks[0].params).unwrap(), "segre:1:2");
        let p = BTreeMap::from([("n".to_string(), toml::Value::Integer(2)), ("c".to_string(), toml::Value::Float(0.5))]);
        assert_eq!(identifier("projective", &p).unwrap(), "projective:2:0.5");
        assert!(identifier("binomial:3", &BTreeMap::from([("n".to_string(), toml::Value::Integer(2))])).is_err());
        assert!(identifier("binomial", &BTreeMap::from([("k".to_string(), toml::Value::Integer(2))])).is_err());
    }

    #[test]
    fn subjects_are_checked_against_the_check() {
        assert!(resolve(CheckName::Factorization, "normal-known-var").is_err());
        assert!(resolve(CheckName::ConvexityScan, "negative-binomial").is_err());
        assert!(resolve(CheckName::KahlerFunction, "binomial").is_err());
        assert!(matches!(resolve(CheckName::Momentum, "projective:1:1").unwrap(), Subject::Target(_)));
        assert!(matches!(resolve(CheckName::LegendreInvolution, "flat:2").unwrap(), Subject::Potential { .. }));
        assert!(resolve(CheckName::Lift, "veronese:0").is_err());
    }

    #[test]
    fn bad_tolerances_are_rejected() {
        assert!(SuiteConfig::parse("[[check]]\ncheck = \"lift\"\nfamily = \"segre:1:1\"\ntol = -1.0\n").is_err());
    }
}
