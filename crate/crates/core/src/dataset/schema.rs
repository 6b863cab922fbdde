use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CovariateRole {
    Response,
    Sensitive,
    Legitimate,
    Suspect,
    BlackBoxEstimate,
    Ignore,
}

impl CovariateRole {
    pub fn keyword(self) -> &'static str {
        match self {
            CovariateRole::Response => "response",
            CovariateRole::Sensitive => "sensitive",
            CovariateRole::Legitimate => "legitimate",
            CovariateRole::Suspect => "suspect",
            CovariateRole::BlackBoxEstimate => "blackbox",
            CovariateRole::Ignore => "ignore",
        }
    }

    /// Role of an interaction column built from parents of roles `a` and `b`.
    ///
    /// Within one group the product keeps that group; anything touching a
    /// suspect or black-box column is suspect; sensitive x legitimate is
    /// legitimate.
    pub fn interaction(a: CovariateRole, b: CovariateRole) -> Result<CovariateRole> {
        use CovariateRole::*;
        for r in [a, b] {
            if matches!(r, Response | Ignore) {
                return Err(Error::Schema(format!(
                    "interaction cannot involve a {} column",
                    r.keyword()
                )));
            }
        }
        Ok(match (a, b) {
            _ if a == b && a != BlackBoxEstimate => a,
            (Suspect | BlackBoxEstimate, _) | (_, Suspect | BlackBoxEstimate) => Suspect,
            _ => Legitimate,
        })
    }
}

impl FromStr for CovariateRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "response" => CovariateRole::Response,
            "sensitive" => CovariateRole::Sensitive,
            "legitimate" => CovariateRole::Legitimate,
            "suspect" => CovariateRole::Suspect,
            "blackbox" => CovariateRole::BlackBoxEstimate,
            "ignore" => CovariateRole::Ignore,
            other => return Err(Error::Schema(format!("unknown role '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSpec {
    pub name: String,
    pub role: CovariateRole,
    pub kind: ColumnKind,
}

/// Column roles plus declared interactions.
///
/// Text form, one entry per line:
///
/// ```text
/// # comment
/// default = response
/// edu     = legitimate, categorical
/// group   = sensitive, categorical
/// interact = edu * group
/// ```
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Schema {
    pub columns: Vec<ColumnSpec>,
    pub interactions: Vec<(String, String)>,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>, interactions: Vec<(String, String)>) -> Result<Self> {
        let s = Schema {
            columns,
            interactions,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut columns = Vec::new();
        let mut interactions = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Schema(format!("line {}: expected 'name = role'", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            if key == "interact" {
                let (a, b) = value.split_once('*').ok_or_else(|| {
                    Error::Schema(format!(
                        "line {}: expected 'interact = a * b'",
                        lineno + 1
                    ))
                })?;
                interactions.push((a.trim().to_string(), b.trim().to_string()));
                continue;
            }
            let mut parts = value.split(',').map(str::trim);
            let role: CovariateRole = parts.next().unwrap_or("").parse()?;
            let mut kind = ColumnKind::Numeric;
            for flag in parts {
                match flag {
                    "categorical" => kind = ColumnKind::Categorical,
                    "numeric" => kind = ColumnKind::Numeric,
                    "" => {}
                    other => {
                        return Err(Error::Schema(format!(
                            "line {}: unknown column flag '{other}'",
                            lineno + 1
                        )))
                    }
                }
            }
            columns.push(ColumnSpec {
                name: key.to_string(),
                role,
                kind,
            });
        }
        Schema::new(columns, interactions)
    }

    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Schema::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let responses = self
            .columns
            .iter()
            .filter(|c| c.role == CovariateRole::Response)
            .count();
        if responses != 1 {
            return Err(Error::Schema(format!(
                "exactly one response column required, found {responses}"
            )));
        }
        for (i, c) in self.columns.iter().enumerate() {
            if self.columns[..i].iter().any(|o| o.name == c.name) {
                return Err(Error::Schema(format!("duplicate column '{}'", c.name)));
            }
        }
        if self.response().kind == ColumnKind::Categorical {
            return Err(Error::Schema("response column must be numeric".into()));
        }
        for (a, b) in &self.interactions {
            let ra = self.spec(a).map(|c| c.role);
            let rb = self.spec(b).map(|c| c.role);
            match (ra, rb) {
                (Some(ra), Some(rb)) => {
                    CovariateRole::interaction(ra, rb).map_err(|_| {
                        Error::Schema(format!(
                            "interaction {a} * {b} references a response or ignored column"
                        ))
                    })?;
                }
                _ => {
                    let missing = if ra.is_none() { a } else { b };
                    return Err(Error::Schema(format!(
                        "interaction references unknown column '{missing}'"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn spec(&self, name: &str) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn response(&self) -> &ColumnSpec {
        self.columns
            .iter()
            .find(|c| c.role == CovariateRole::Response)
            .expect("validated schema has a response")
    }

    pub fn names_with_role(&self, role: CovariateRole) -> Vec<&str> {
        self.columns
            .iter()
            .filter(|c| c.role == role)
            .map(|c| c.name.as_str())
            .collect()
    }

    /// Copy with one column re-declared (e.g. a legitimate column treated as suspect).
    pub fn with_role(&self, name: &str, role: CovariateRole) -> Result<Schema> {
        let mut s = self.clone();
        match s.columns.iter_mut().find(|c| c.name == name) {
            Some(c) => c.role = role,
            None => return Err(Error::Schema(format!("unknown column '{name}'"))),
        }
        s.validate()?;
        Ok(s)
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.columns {
            write!(f, "{} = {}", c.name, c.role.keyword())?;
            if c.kind == ColumnKind::Categorical {
                write!(f, ",categorical")?;
            }
            writeln!(f)?;
        }
        for (a, b) in &self.interactions {
            writeln!(f, "interact = {a} * {b}")?;
        }
        Ok(())
    }
}
