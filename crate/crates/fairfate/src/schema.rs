//! Declarative dataset description loaded from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSchema {
    pub name: String,
    /// CSV path, relative to the schema file unless absolute.
    pub data: PathBuf,
    /// Column names for files without a header row.
    #[serde(default)]
    pub header: Option<Vec<String>>,
    /// Append the binary sensitive attribute as a model input.
    #[serde(default = "yes")]
    pub include_sensitive_feature: bool,
    /// Cell values treated as missing (compared after trimming).
    #[serde(default = "default_missing")]
    pub missing: Vec<String>,
    pub target: TargetColumn,
    pub default_sensitive: String,
    pub sensitive: Vec<SensitiveColumn>,
    pub features: Vec<FeatureColumn>,
    #[serde(default)]
    pub filters: Vec<RowFilter>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetColumn {
    pub column: String,
    /// Values mapped to Y = 1; everything else is Y = 0.
    #[serde(deserialize_with = "one_or_many")]
    pub positive: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitiveColumn {
    pub name: String,
    pub column: String,
    /// Values mapped to S = 1.
    #[serde(deserialize_with = "one_or_many")]
    pub privileged: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureColumn {
    pub column: String,
    pub kind: FeatureKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    In,
    NotIn,
    Present,
}

/// Keeps rows for which `column op value` holds. Ordering operators compare
/// numerically; `eq`/`ne`/`in`/`not_in` compare text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowFilter {
    pub column: String,
    pub op: FilterOp,
    #[serde(default)]
    pub value: Option<String>,
    #[serde(default)]
    pub values: Vec<String>,
}

fn yes() -> bool {
    true
}

fn default_missing() -> Vec<String> {
    vec![String::new(), "?".into(), "NA".into()]
}

fn one_or_many<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(String),
        Many(Vec<String>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(s) => vec![s],
        OneOrMany::Many(v) => v,
    })
}

impl DatasetSchema {
    /// Reads a schema and resolves `data` against the schema's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut schema = Self::parse(&text).map_err(|e| match e {
            Error::Schema(msg) => Error::Schema(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if schema.data.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            schema.data = base.join(&schema.data);
        }
        Ok(schema)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let schema: Self = toml::from_str(text).map_err(|e| Error::Schema(e.message().into()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::Schema("feature list is empty".into()));
        }
        if self.sensitive.is_empty() {
            return Err(Error::Schema("no sensitive attribute declared".into()));
        }
        self.sensitive_column(&self.default_sensitive)?;
        if self.features.iter().any(|f| f.column == self.target.column) {
            return Err(Error::Schema(format!(
                "target `{}` is also listed as a feature",
                self.target.column
            )));
        }
        for (i, f) in self.features.iter().enumerate() {
            if self.features[..i].iter().any(|g| g.column == f.column) {
                return Err(Error::Schema(format!(
                    "feature `{}` listed twice",
                    f.column
                )));
            }
        }
        for filter in &self.filters {
            let needs_value = matches!(
                filter.op,
                FilterOp::Eq
                    | FilterOp::Ne
                    | FilterOp::Lt
                    | FilterOp::Le
                    | FilterOp::Gt
                    | FilterOp::Ge
            );
            if needs_value && filter.value.is_none() {
                return Err(Error::Schema(format!(
                    "filter on `{}` needs a `value`",
                    filter.column
                )));
            }
            if needs_value && filter.op != FilterOp::Eq && filter.op != FilterOp::Ne {
                let v = filter.value.as_deref().unwrap_or_default();
                if v.trim().parse::<f64>().is_err() {
                    return Err(Error::Schema(format!(
                        "filter on `{}` compares against non-numeric `{v}`",
                        filter.column
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn sensitive_column(&self, name: &str) -> Result<&SensitiveColumn> {
        self.sensitive
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::UnknownSensitive(name.into()))
    }

    /// Looks up a sensitive attribute by name; `None` picks the default.
    pub fn resolve_sensitive(&self, name: Option<&str>) -> Result<&SensitiveColumn> {
        self.sensitive_column(name.unwrap_or(&self.default_sensitive))
    }

    /// Every column the pipeline reads, in first-use order, without repeats.
    pub fn used_columns(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        let all = self
            .features
            .iter()
            .map(|f| f.column.as_str())
            .chain(std::iter::once(self.target.column.as_str()))
            .chain(self.sensitive.iter().map(|s| s.column.as_str()));
        for c in all {
            if !out.contains(&c) {
                out.push(c);
            }
        }
        out
    }

    pub fn is_missing(&self, cell: &str) -> bool {
        self.missing.iter().any(|m| m == cell)
    }
}

impl RowFilter {
    /// `cell` is already trimmed. Missing cells fail every operator except
    /// `not_in` and `ne`.
    pub fn keeps(&self, cell: &str, missing: bool) -> bool {
        let value = self.value.as_deref().unwrap_or_default();
        let number = |s: &str| s.trim().parse::<f64>().ok();
        let ordered = |f: fn(f64, f64) -> bool| match (number(cell), number(value)) {
            (Some(a), Some(b)) if !missing => f(a, b),
            _ => false,
        };
        match self.op {
            FilterOp::Present => !missing,
            FilterOp::Eq => !missing && cell == value,
            FilterOp::Ne => missing || cell != value,
            FilterOp::In => !missing && self.values.iter().any(|v| v == cell),
            FilterOp::NotIn => missing || !self.values.iter().any(|v| v == cell),
            FilterOp::Lt => ordered(|a, b| a < b),
            FilterOp::Le => ordered(|a, b| a <= b),
            FilterOp::Gt => ordered(|a, b| a > b),
            FilterOp::Ge => ordered(|a, b| a >= b),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "toy"
data = "toy.csv"
default_sensitive = "sex"

[target]
column = "income"
positive = ">50K"

[[sensitive]]
name = "sex"
column = "sex"
privileged = "Male"

[[features]]
column = "age"
kind = "numeric"
"#;

    #[test]
    fn defaults_fill_in() {
        let s = DatasetSchema::parse(MINIMAL).unwrap();
        assert!(s.include_sensitive_feature);
        assert!(s.is_missing(""));
        assert!(s.is_missing("?"));
        assert_eq!(s.target.positive, vec![">50K".to_string()]);
        assert_eq!(s.used_columns(), vec!["age", "income", "sex"]);
    }

    #[test]
    fn unknown_default_sensitive_is_rejected() {
        let text = MINIMAL.replace(
            "default_sensitive = \"sex\"",
            "default_sensitive = \"race\"",
        );
        assert!(matches!(
            DatasetSchema::parse(&text),
            Err(Error::UnknownSensitive(_))
        ));
    }

    #[test]
    fn filter_ops() {
        let f = |op, value: Option<&str>, values: &[&str]| RowFilter {
            column: "c".into(),
            op,
            value: value.map(Into::into),
            values: values.iter().map(|v| v.to_string()).collect(),
        };
        assert!(f(FilterOp::Le, Some("30"), &[]).keeps("30", false));
        assert!(!f(FilterOp::Le, Some("30"), &[]).keeps("31", false));
        assert!(f(FilterOp::Ge, Some("-30"), &[]).keeps("-30", false));
        assert!(!f(FilterOp::Ge, Some("-30"), &[]).keeps("", true));
        assert!(f(FilterOp::Ne, Some("O"), &[]).keeps("F", false));
        assert!(!f(FilterOp::Ne, Some("O"), &[]).keeps("O", false));
        assert!(f(FilterOp::In, None, &["a", "b"]).keeps("b", false));
        assert!(f(FilterOp::NotIn, None, &["a", "b"]).keeps("c", false));
        assert!(!f(FilterOp::Present, None, &[]).keeps("", true));
        assert!(!f(FilterOp::Gt, Some("1"), &[]).keeps("abc", false));
    }
}
