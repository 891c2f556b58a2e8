//! Encoding, scaling and the train/validation/test split.

use fairfate_core::seed::{self, derive_seed};
use fairfate_core::{Matrix, TabularDataset};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::RawTable;
use crate::schema::{DatasetSchema, FeatureKind, SensitiveColumn};

/// Fractions of the shuffled table held out for validation and for test.
pub const VALIDATION_FRACTION: f64 = 0.2;
pub const TEST_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerStat {
    pub column: String,
    pub min: f64,
    pub max: f64,
}

impl ScalerStat {
    /// Min-max transform; a constant column maps to 0. Values outside the
    /// fitted range are left outside [0, 1].
    pub fn apply(&self, v: f64) -> f64 {
        let span = self.max - self.min;
        if span > 0.0 {
            (v - self.min) / span
        } else {
            0.0
        }
    }
}

/// Original table rows assigned to each split, in split order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitBundle {
    pub train: TabularDataset,
    pub validation: TabularDataset,
    pub test: TabularDataset,
    pub scaler_stats: Vec<ScalerStat>,
    pub feature_names: Vec<String>,
    pub origin: SplitIndices,
}

/// (train, validation, test) sizes for `n` rows.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let val = (n as f64 * VALIDATION_FRACTION).round() as usize;
    let test = (n as f64 * TEST_FRACTION).round() as usize;
    (n.saturating_sub(val + test), val, test)
}

/// Binary labels and sensitive flags for every row of `raw`.
pub fn encode_targets(
    raw: &RawTable,
    schema: &DatasetSchema,
    sensitive: &SensitiveColumn,
) -> Result<(Vec<bool>, Vec<bool>)> {
    let map = |column: &str, hits: &[String]| -> Result<Vec<bool>> {
        let col = raw.column(column)?;
        let out: Vec<bool> = col.text.iter().map(|v| hits.contains(v)).collect();
        if out.iter().all(|&b| b) || out.iter().all(|&b| !b) {
            return Err(Error::SingleValued(column.into()));
        }
        Ok(out)
    };
    Ok((
        map(&schema.target.column, &schema.target.positive)?,
        map(&sensitive.column, &sensitive.privileged)?,
    ))
}

enum Encoded<'a> {
    Numeric(&'a [f64]),
    OneHot(&'a [String], Vec<String>),
}

/// Shuffles with a stream derived from `seed`, splits 60/20/20, one-hot
/// encodes categoricals (categories taken from the whole table) and min-max
/// scales numerics with train-only statistics.
pub fn preprocess_and_split(
    raw: &RawTable,
    schema: &DatasetSchema,
    sensitive: Option<&str>,
    seed: u64,
) -> Result<SplitBundle> {
    let sensitive = schema.resolve_sensitive(sensitive)?;
    let (labels, groups) = encode_targets(raw, schema, sensitive)?;

    let mut order: Vec<usize> = (0..raw.rows).collect();
    order.shuffle(&mut seed::stream(derive_seed(seed, &[seed::SPLIT])));
    let (n_train, n_val, _) = split_sizes(raw.rows);
    let origin = SplitIndices {
        train: order[..n_train].to_vec(),
        validation: order[n_train..n_train + n_val].to_vec(),
        test: order[n_train + n_val..].to_vec(),
    };

    let mut encoders = Vec::new();
    let mut feature_names = Vec::new();
    let mut scaler_stats = Vec::new();
    for feature in schema
        .features
        .iter()
        .filter(|f| f.column != sensitive.column)
    {
        let col = raw.column(&feature.column)?;
        match (feature.kind, &col.numeric) {
            (FeatureKind::Numeric, Some(values)) => {
                let (min, max) = origin
                    .train
                    .iter()
                    .map(|&i| values[i])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                        (lo.min(v), hi.max(v))
                    });
                scaler_stats.push(ScalerStat {
                    column: feature.column.clone(),
                    min,
                    max,
                });
                feature_names.push(feature.column.clone());
                encoders.push(Encoded::Numeric(values));
            }
            _ => {
                let mut categories = col.text.clone();
                categories.sort();
                categories.dedup();
                feature_names.extend(categories.iter().map(|c| format!("{}={c}", feature.column)));
                encoders.push(Encoded::OneHot(&col.text, categories));
            }
        }
    }
    if schema.include_sensitive_feature {
        feature_names.push(sensitive.name.clone());
    }
    let dim = feature_names.len();

    let build = |rows: &[usize]| -> Result<TabularDataset> {
        let mut data = Vec::with_capacity(rows.len() * dim);
        for &r in rows {
            let mut stats = scaler_stats.iter();
            for enc in &encoders {
                match enc {
                    Encoded::Numeric(values) => {
                        let stat = stats.next().expect("one stat per numeric column");
                        data.push(stat.apply(values[r]));
                    }
                    Encoded::OneHot(text, categories) => {
                        data.extend(
                            categories
                                .iter()
                                .map(|c| f64::from(u8::from(*c == text[r]))),
                        );
                    }
                }
            }
            if schema.include_sensitive_feature {
                data.push(f64::from(u8::from(groups[r])));
            }
        }
        Ok(TabularDataset::new(
            Matrix::new(rows.len(), dim, data)?,
            rows.iter().map(|&r| labels[r]).collect(),
            rows.iter().map(|&r| groups[r]).collect(),
        )?)
    };

    Ok(SplitBundle {
        train: build(&origin.train)?,
        validation: build(&origin.validation)?,
        test: build(&origin.test)?,
        scaler_stats,
        feature_names,
        origin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::ingest_reader;

    fn schema(include_s: bool) -> DatasetSchema {
        let mut s = DatasetSchema::parse(
            r#"
name = "toy"
data = "toy.csv"
default_sensitive = "sex"
[target]
column = "y"
positive = "yes"
[[sensitive]]
name = "sex"
column = "sex"
privileged = "Male"
[[features]]
column = "age"
kind = "numeric"
[[features]]
column = "job"
kind = "categorical"
[[features]]
column = "sex"
kind = "categorical"
"#,
        )
        .unwrap();
        s.include_sensitive_feature = include_s;
        s
    }

    fn table() -> RawTable {
        let mut csv = String::from("age,job,sex,y\n");
        for i in 0..10 {
            let job = ["a", "b", "c"][i % 3];
            let sex = if i % 2 == 0 { "Male" } else { "Female" };
            let y = if i % 4 < 2 { "yes" } else { "no" };
            csv.push_str(&format!("{},{job},{sex},{y}\n", 20 + 3 * i));
        }
        ingest_reader(csv.as_bytes(), &schema(true)).unwrap()
    }

    #[test]
    fn ten_rows_split_six_two_two() {
        assert_eq!(split_sizes(10), (6, 2, 2));
        assert_eq!(split_sizes(6167), (3701, 1233, 1233));
        let b = preprocess_and_split(&table(), &schema(true), None, 5).unwrap();
        assert_eq!((b.train.len(), b.validation.len(), b.test.len()), (6, 2, 2));
        let mut all: Vec<usize> = [&b.origin.train, &b.origin.validation, &b.origin.test]
            .into_iter()
            .flatten()
            .copied()
            .collect();
        all.sort();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn sensitive_maps_privileged_value_to_one() {
        let raw = table();
        let b = preprocess_and_split(&raw, &schema(true), None, 1).unwrap();
        let sex = &raw.column("sex").unwrap().text;
        for (pos, &r) in b.origin.train.iter().enumerate() {
            assert_eq!(b.train.sensitive()[pos], sex[r] == "Male");
        }
        // sex is dropped as a categorical and re-added once as a binary input
        assert_eq!(b.feature_names, ["age", "job=a", "job=b", "job=c", "sex"]);
        let last = b.train.dim() - 1;
        for i in 0..b.train.len() {
            assert_eq!(
                b.train.features().row(i)[last] == 1.0,
                b.train.sensitive()[i]
            );
        }
        let without = preprocess_and_split(&raw, &schema(false), None, 1).unwrap();
        assert_eq!(without.train.dim(), 4);
    }

    #[test]
    fn one_hot_rows_have_a_single_one() {
        let b = preprocess_and_split(&table(), &schema(true), None, 2).unwrap();
        for ds in [&b.train, &b.validation, &b.test] {
            for i in 0..ds.len() {
                let ones: f64 = ds.features().row(i)[1..4].iter().sum();
                assert_eq!(ones, 1.0);
            }
        }
    }

    #[test]
    fn scaling_uses_train_statistics_without_clipping() {
        let b = preprocess_and_split(&table(), &schema(true), None, 3).unwrap();
        let stat = &b.scaler_stats[0];
        let train_ages: Vec<f64> = b.train_column(0);
        assert!(train_ages.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(train_ages.contains(&0.0) && train_ages.contains(&1.0));
        assert_eq!(stat.apply(stat.max + (stat.max - stat.min)), 2.0);
        let constant = ScalerStat {
            column: "c".into(),
            min: 4.0,
            max: 4.0,
        };
        assert_eq!(constant.apply(7.0), 0.0);
    }

    #[test]
    fn single_valued_target_is_rejected() {
        let csv = "age,job,sex,y\n1,a,Male,yes\n2,b,Female,yes\n3,a,Male,yes\n";
        let raw = ingest_reader(csv.as_bytes(), &schema(true)).unwrap();
        let err = preprocess_and_split(&raw, &schema(true), None, 0).unwrap_err();
        assert!(matches!(err, Error::SingleValued(c) if c == "y"));
    }

    #[test]
    fn same_seed_same_bundle() {
        let raw = table();
        let a = preprocess_and_split(&raw, &schema(true), None, 9).unwrap();
        let b = preprocess_and_split(&raw, &schema(true), None, 9).unwrap();
        assert_eq!(a, b);
        let c = preprocess_and_split(&raw, &schema(true), None, 10).unwrap();
        assert_ne!(a.origin, c.origin);
    }

    impl SplitBundle {
        fn train_column(&self, j: usize) -> Vec<f64> {
            (0..self.train.len())
                .map(|i| self.train.features().row(i)[j])
                .collect()
        }
    }
}
