//! Model-matrix schemas: which columns to read and how to encode them.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Encoding {
    /// `k - 1` indicators per categorical against its first level.
    #[default]
    #[serde(alias = "treatment")]
    TreatmentContrast,
    /// One indicator per level.
    OneHot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

/// Level labels may be written as strings or integers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Level {
    Int(i64),
    Text(String),
}

impl Level {
    pub fn label(&self) -> String {
        match self {
            Level::Int(v) => v.to_string(),
            Level::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    /// Ordered levels of a categorical; the first is the contrast reference.
    /// When omitted, levels are collected from the data and sorted.
    #[serde(default)]
    pub levels: Option<Vec<Level>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseRule {
    /// 1 when the source value is at least the threshold, else 0.
    #[default]
    Threshold,
    /// The source value itself.
    Identity,
}

fn default_threshold() -> f64 {
    30.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseSpec {
    pub source: String,
    #[serde(default)]
    pub rule: ResponseRule,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_delimiter() -> char {
    ','
}

fn default_missing() -> Vec<String> {
    vec![String::new(), "NA".into()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaSpec {
    #[serde(default)]
    pub encoding: Encoding,
    #[serde(default)]
    pub intercept: bool,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    /// Field values treated as missing (after trimming).
    #[serde(default = "default_missing")]
    pub missing: Vec<String>,
    pub columns: Vec<ColumnSpec>,
    #[serde(default)]
    pub response: Option<ResponseSpec>,
}

impl SchemaSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: SchemaSpec = toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Schema(m) => Error::Schema(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.columns.is_empty() && !self.intercept {
            return Err(Error::Schema("schema has no columns and no intercept".into()));
        }
        if !self.delimiter.is_ascii() {
            return Err(Error::Schema(format!("delimiter {:?} is not ASCII", self.delimiter)));
        }
        let mut seen = BTreeSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("column {} listed twice", c.name)));
            }
            match (c.kind, &c.levels) {
                (ColumnKind::Numeric, Some(_)) => {
                    return Err(Error::Schema(format!("numeric column {} declares levels", c.name)));
                }
                (ColumnKind::Categorical, Some(levels)) => {
                    if levels.is_empty() {
                        return Err(Error::Schema(format!("categorical column {} has no levels", c.name)));
                    }
                    let mut labels = BTreeSet::new();
                    for l in levels {
                        if !labels.insert(l.label()) {
                            return Err(Error::Schema(format!(
                                "categorical column {} repeats level {}",
                                c.name,
                                l.label()
                            )));
                        }
                    }
                }
                _ => {}
            }
        }
        let categoricals = self.columns.iter().any(|c| c.kind == ColumnKind::Categorical);
        if self.intercept && self.encoding == Encoding::OneHot && categoricals {
            return Err(Error::Schema(
                "one-hot encoding with an intercept gives collinear columns".into(),
            ));
        }
        if let Some(r) = &self.response {
            if !r.threshold.is_finite() {
                return Err(Error::Schema("response threshold must be finite".into()));
            }
        }
        Ok(())
    }

    /// Expanded design width; needs every categorical's levels declared.
    pub fn width(&self) -> Result<usize> {
        let counts = self
            .columns
            .iter()
            .map(|c| match (c.kind, &c.levels) {
                (ColumnKind::Numeric, _) => Ok(None),
                (ColumnKind::Categorical, Some(l)) => Ok(Some(l.len())),
                (ColumnKind::Categorical, None) => Err(Error::Schema(format!(
                    "width of column {} depends on the data (no declared levels)",
                    c.name
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.layout(&counts).iter().map(|&(_, w)| w).sum::<usize>() + usize::from(self.intercept))
    }

    /// `(first dropped level, width)` of each column given categorical level
    /// counts. Without an intercept, the first categorical under treatment
    /// contrasts keeps all its levels so that the constant is representable.
    pub(crate) fn layout(&self, level_counts: &[Option<usize>]) -> Vec<(bool, usize)> {
        let mut full_rank_used = self.intercept;
        level_counts
            .iter()
            .map(|k| match *k {
                None => (false, 1),
                Some(k) => match self.encoding {
                    Encoding::OneHot => (false, k),
                    Encoding::TreatmentContrast if !full_rank_used => {
                        full_rank_used = true;
                        (false, k)
                    }
                    Encoding::TreatmentContrast => (true, k - 1),
                },
            })
            .collect()
    }

    pub fn is_missing(&self, field: &str) -> bool {
        let f = field.trim();
        self.missing.iter().any(|m| m == f)
    }
}

/// Applies a response rule to one raw field. Missing fields give `None`
/// (the row is dropped); other unparseable fields are errors.
pub fn derive_response(field: &str, spec: &ResponseSpec, missing: &[String]) -> std::result::Result<Option<f64>, String> {
    let f = field.trim();
    if missing.iter().any(|m| m == f) {
        return Ok(None);
    }
    let v: f64 = f
        .parse()
        .map_err(|_| format!("response column {}: cannot parse {f:?} as a number", spec.source))?;
    if !v.is_finite() {
        return Err(format!("response column {}: non-finite value {f:?}", spec.source));
    }
    Ok(Some(match spec.rule {
        ResponseRule::Threshold => f64::from(u8::from(v >= spec.threshold)),
        ResponseRule::Identity => v,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    const AIRLINE: &str = include_str!("../../schemas/airline.toml");

    #[test]
    fn airline_schema_is_43_wide() {
        let s = SchemaSpec::from_toml_str(AIRLINE).unwrap();
        assert_eq!(s.width().unwrap(), 43);
        let mut contrast = s.clone();
        contrast.encoding = Encoding::TreatmentContrast;
        contrast.intercept = true;
        assert_eq!(contrast.width().unwrap(), 41);
        let r = s.response.unwrap();
        assert_eq!((r.source.as_str(), r.rule, r.threshold), ("ArrDelay", ResponseRule::Threshold, 30.0));
    }

    #[test]
    fn treatment_without_intercept_keeps_first_factor_whole() {
        let s = SchemaSpec::from_toml_str(
            r#"
            encoding = "treatment-contrast"
            [[columns]]
            name = "a"
            kind = "categorical"
            levels = ["x", "y", "z"]
            [[columns]]
            name = "b"
            kind = "categorical"
            levels = [1, 2]
            "#,
        )
        .unwrap();
        assert_eq!(s.width().unwrap(), 3 + 1);
    }

    #[test]
    fn rejects_bad_schemas() {
        let one_hot_intercept = r#"
            encoding = "one-hot"
            intercept = true
            [[columns]]
            name = "a"
            kind = "categorical"
            levels = ["x", "y"]
        "#;
        assert!(SchemaSpec::from_toml_str(one_hot_intercept).is_err());
        let dup = r#"
            [[columns]]
            name = "a"
            kind = "numeric"
            [[columns]]
            name = "a"
            kind = "numeric"
        "#;
        assert!(SchemaSpec::from_toml_str(dup).is_err());
        let numeric_levels = r#"
            [[columns]]
            name = "a"
            kind = "numeric"
            levels = [1]
        "#;
        assert!(SchemaSpec::from_toml_str(numeric_levels).is_err());
        assert!(SchemaSpec::from_toml_str("columns = []").is_err());
        assert!(SchemaSpec::from_toml_str("bogus = 1\ncolumns = []").is_err());
    }

    #[test]
    fn undeclared_levels_have_no_static_width() {
        let s = SchemaSpec::from_toml_str("[[columns]]\nname = \"a\"\nkind = \"categorical\"").unwrap();
        assert!(s.width().is_err());
    }

    #[test]
    fn response_rule() {
        let spec = ResponseSpec {
            source: "ArrDelay".into(),
            rule: ResponseRule::Threshold,
            threshold: 30.0,
        };
        let missing = default_missing();
        assert_eq!(derive_response("30", &spec, &missing), Ok(Some(1.0)));
        assert_eq!(derive_response("29", &spec, &missing), Ok(Some(0.0)));
        assert_eq!(derive_response("-5", &spec, &missing), Ok(Some(0.0)));
        assert_eq!(derive_response("NA", &spec, &missing), Ok(None));
        assert_eq!(derive_response(" ", &spec, &missing), Ok(None));
        assert!(derive_response("late", &spec, &missing).is_err());
        let id = ResponseSpec {
            rule: ResponseRule::Identity,
            ..spec
        };
        assert_eq!(derive_response("2.5", &id, &missing), Ok(Some(2.5)));
    }

    #[test]
    fn round_trips_through_toml() {
        let s = SchemaSpec::from_toml_str(AIRLINE).unwrap();
        let again = SchemaSpec::from_toml_str(&s.to_toml_string().unwrap()).unwrap();
        assert_eq!(s, again);
    }
}
