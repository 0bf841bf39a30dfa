use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qop::OperatorSpec;
use crate::sfun::FunctionSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Algebra,
    Resolvent,
    Independence,
    Product,
    Rational,
    Hinf,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Algebra,
        Suite::Resolvent,
        Suite::Independence,
        Suite::Product,
        Suite::Rational,
        Suite::Hinf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Algebra => "algebra",
            Self::Resolvent => "resolvent",
            Self::Independence => "independence",
            Self::Product => "product",
            Self::Rational => "rational",
            Self::Hinf => "hinf",
        }
    }

    /// Parses a comma-separated list; `all` selects every suite.
    pub fn parse_list(s: &str) -> Result<Vec<Suite>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part == "all" {
                out.extend(Self::ALL);
            } else {
                out.push(part.parse()?);
            }
        }
        out.sort();
        out.dedup();
        if out.is_empty() {
            return Err(Error::Config("no suite selected".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite '{s}'")))
    }
}

/// Tolerances for the three error sources, largest first.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceLadder {
    pub finite_difference: f64,
    pub quadrature: f64,
    pub linear_algebra: f64,
}

impl Default for ToleranceLadder {
    fn default() -> Self {
        Self {
            finite_difference: 1e-5,
            quadrature: 1e-7,
            linear_algebra: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub seed: u64,
    pub suites: Vec<Suite>,
    /// Extra operators added to the built-in catalog.
    pub operators: Vec<OperatorSpec>,
    pub operator_files: Vec<PathBuf>,
    /// Extra functions used by the rational and independence checks (PsiQ members only).
    pub functions: Vec<FunctionSpec>,
    pub function_files: Vec<PathBuf>,
    pub tolerances: ToleranceLadder,
    pub phi_samples: usize,
    pub unit_samples: usize,
    /// Random `(T, s, p)` triples for the resolvent equation.
    pub resolvent_cases: usize,
    /// Random `(T, f)` pairs for angle and unit independence.
    pub independence_cases: usize,
    /// Random operators for the product-rule and commutation checks.
    pub random_operators: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            suites: Suite::ALL.to_vec(),
            operators: Vec::new(),
            operator_files: Vec::new(),
            functions: Vec::new(),
            function_files: Vec::new(),
            tolerances: ToleranceLadder::default(),
            phi_samples: 3,
            unit_samples: 3,
            resolvent_cases: 200,
            independence_cases: 20,
            random_operators: 10,
        }
    }
}

impl SuiteConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Checks tolerances and loads the referenced files.
    pub fn resolve(&self) -> Result<ResolvedInputs> {
        let t = self.tolerances;
        let ladder = [t.finite_difference, t.quadrature, t.linear_algebra];
        if ladder.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if !(ladder[0] > ladder[1] && ladder[1] > ladder[2]) {
            return Err(Error::Config(
                "tolerances must descend: finite_difference > quadrature > linear_algebra".into(),
            ));
        }
        if self.suites.is_empty() {
            return Err(Error::Config("no suite selected".into()));
        }
        if self.phi_samples < 2 || self.unit_samples < 2 {
            return Err(Error::Config("need at least two angles and two units".into()));
        }
        let mut operators = self.operators.clone();
        for path in &self.operator_files {
            operators.push(load_json(path)?);
        }
        let mut functions = self.functions.clone();
        for path in &self.function_files {
            functions.push(load_json(path)?);
        }
        for op in &operators {
            op.build().map_err(|e| Error::Config(format!("operator: {e}")))?;
        }
        for f in &functions {
            f.build().map_err(|e| Error::Config(format!("function: {e}")))?;
        }
        Ok(ResolvedInputs { operators, functions })
    }
}

/// Operators and functions from the config, inline and from files.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedInputs {
    pub operators: Vec<OperatorSpec>,
    pub functions: Vec<FunctionSpec>,
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}
