//! CSV ingestion and the built-in synthetic classification generator.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

const MISSING: [&str; 5] = ["", "?", "na", "nan", "null"];

fn is_missing(field: &str) -> bool {
    let f = field.trim();
    MISSING.iter().any(|m| f.eq_ignore_ascii_case(m))
}

/// Column roles for [`ingest_csv`]. Columns are referenced by header name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvSchema {
    /// Label column; the last column when `None`.
    pub label: Option<String>,
    /// Columns to one-hot encode. Columns with no parseable numeric value are
    /// treated as categorical even when not listed.
    pub categorical: Vec<String>,
    pub ignore: Vec<String>,
}

enum ColumnKind {
    Numeric,
    Categorical(Vec<String>),
}

/// Reads a headed CSV into a [`Dataset`]: rows with a missing value in any
/// used column are dropped, categorical columns are one-hot encoded, labels
/// are mapped to `0..k` in sorted order, and every feature column is
/// min-max normalized onto [0, 1].
pub fn ingest_csv(path: &Path, schema: &CsvSchema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if headers.len() < 2 {
        return Err(Error::Data {
            row: 0,
            message: "need at least one feature column and a label column".into(),
        });
    }
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Data {
            row: 0,
            message: format!("column '{name}' not found in header"),
        })
    };
    let label_col = match &schema.label {
        Some(name) => find(name)?,
        None => headers.len() - 1,
    };
    let ignored: BTreeSet<usize> = schema.ignore.iter().map(|n| find(n)).collect::<Result<_>>()?;
    let declared: BTreeSet<usize> = schema.categorical.iter().map(|n| find(n)).collect::<Result<_>>()?;
    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|c| *c != label_col && !ignored.contains(c))
        .collect();
    if feature_cols.is_empty() {
        return Err(Error::Data {
            row: 0,
            message: "no feature columns left after applying the schema".into(),
        });
    }

    // Row numbers in errors are 1-based file lines, counting the header as line 1.
    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::Data {
                row: line,
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        let used = feature_cols.iter().chain(std::iter::once(&label_col));
        if used.clone().any(|&c| is_missing(&record[c])) {
            continue;
        }
        rows.push((line, record.iter().map(str::to_string).collect()));
    }
    if rows.is_empty() {
        return Err(Error::Data {
            row: 0,
            message: "no complete rows in file".into(),
        });
    }

    let mut kinds = Vec::with_capacity(feature_cols.len());
    for &c in &feature_cols {
        let parses = rows.iter().filter(|(_, r)| r[c].parse::<f64>().is_ok()).count();
        if declared.contains(&c) || parses == 0 {
            let levels: BTreeSet<&str> = rows.iter().map(|(_, r)| r[c].as_str()).collect();
            kinds.push(ColumnKind::Categorical(
                levels.into_iter().map(str::to_string).collect(),
            ));
        } else if parses < rows.len() {
            let (line, bad) = rows.iter().find(|(_, r)| r[c].parse::<f64>().is_err()).unwrap();
            return Err(Error::Data {
                row: *line,
                message: format!("non-numeric value '{}' in numeric column '{}'", bad[c], headers[c]),
            });
        } else {
            kinds.push(ColumnKind::Numeric);
        }
    }

    let mut names = Vec::new();
    for (&c, kind) in feature_cols.iter().zip(&kinds) {
        match kind {
            ColumnKind::Numeric => names.push(headers[c].clone()),
            ColumnKind::Categorical(levels) => {
                names.extend(levels.iter().map(|l| format!("{}={}", headers[c], l)));
            }
        }
    }

    let label_map = label_index(rows.iter().map(|(_, r)| r[label_col].as_str()));
    let n_classes = label_map.len().max(2);
    let mut features = Vec::with_capacity(rows.len() * names.len());
    let mut labels = Vec::with_capacity(rows.len());
    for (_, r) in &rows {
        for (&c, kind) in feature_cols.iter().zip(&kinds) {
            match kind {
                ColumnKind::Numeric => features.push(r[c].parse::<f64>().expect("checked above")),
                ColumnKind::Categorical(levels) => {
                    features.extend(levels.iter().map(|l| if *l == r[c] { 1.0 } else { 0.0 }))
                }
            }
        }
        labels.push(label_map[r[label_col].as_str()]);
    }
    let mut data = Dataset::new(features, labels, names.len(), n_classes, names)?;
    data.normalize_unit_interval();
    Ok(data)
}

/// Maps label strings to `0..k`, ordering numerically when every label parses
/// as a number and lexicographically otherwise.
fn label_index<'a>(values: impl Iterator<Item = &'a str>) -> BTreeMap<&'a str, usize> {
    let distinct: BTreeSet<&str> = values.collect();
    let mut ordered: Vec<&str> = distinct.into_iter().collect();
    if ordered.iter().all(|v| v.parse::<f64>().is_ok()) {
        ordered.sort_by(|a, b| a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap()));
    }
    ordered.into_iter().enumerate().map(|(i, v)| (v, i)).collect()
}

/// Gaussian class-conditional features with sparse heavy-tailed contamination.
///
/// Each class gets a mean drawn from `N(0, sep²)` per feature; an example is
/// its class mean plus unit Gaussian noise, and each feature entry is, with
/// probability `contam`, further perturbed by a Student-t(`df`) draw. Features
/// are min-max normalized afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub contam: f64,
    pub sep: f64,
    pub df: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n: 10_000,
            k: 3,
            d: 8,
            contam: 0.02,
            sep: 2.0,
            df: 2.5,
            seed: 0,
        }
    }
}

impl FromStr for SyntheticSpec {
    type Err = Error;

    /// Parses `synthetic:n=…,k=…,d=…,contam=…,sep=…,df=…,seed=…`; every key is
    /// optional and the `synthetic:` prefix may be omitted.
    fn from_str(s: &str) -> Result<Self> {
        let body = s.strip_prefix("synthetic").unwrap_or(s);
        let body = body.strip_prefix(':').unwrap_or(body);
        let mut spec = Self::default();
        for pair in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = pair.split_once('=').ok_or_else(|| {
                Error::InvalidParameter(format!("expected key=value in synthetic spec, got '{pair}'"))
            })?;
            let bad = || Error::InvalidParameter(format!("invalid value '{value}' for '{key}'"));
            match key.trim() {
                "n" => spec.n = value.parse().map_err(|_| bad())?,
                "k" => spec.k = value.parse().map_err(|_| bad())?,
                "d" => spec.d = value.parse().map_err(|_| bad())?,
                "contam" => spec.contam = value.parse().map_err(|_| bad())?,
                "sep" => spec.sep = value.parse().map_err(|_| bad())?,
                "df" => spec.df = value.parse().map_err(|_| bad())?,
                "seed" => spec.seed = value.parse().map_err(|_| bad())?,
                other => return Err(Error::InvalidParameter(format!("unknown synthetic key '{other}'"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl std::fmt::Display for SyntheticSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "synthetic:n={},k={},d={},contam={},sep={},df={},seed={}",
            self.n, self.k, self.d, self.contam, self.sep, self.df, self.seed
        )
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.k < 2 || self.d < 1 {
            return Err(Error::InvalidParameter(format!(
                "synthetic data needs n >= 2, k >= 2, d >= 1; got n={}, k={}, d={}",
                self.n, self.k, self.d
            )));
        }
        if !(0.0..=1.0).contains(&self.contam) {
            return Err(Error::InvalidParameter(format!(
                "contam must lie in [0, 1], got {}",
                self.contam
            )));
        }
        if !(self.sep >= 0.0 && self.sep.is_finite()) || !(self.df > 0.0) {
            return Err(Error::InvalidParameter("sep must be >= 0 and df > 0".into()));
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<Dataset> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let tails = StudentT::new(self.df).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let means: Vec<f64> = (0..self.k * self.d)
            .map(|_| self.sep * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let mut features = Vec::with_capacity(self.n * self.d);
        let mut labels = Vec::with_capacity(self.n);
        for _ in 0..self.n {
            let y = rng.random_range(0..self.k);
            for j in 0..self.d {
                let mut x = means[y * self.d + j] + rng.sample::<f64, _>(StandardNormal);
                if rng.random::<f64>() < self.contam {
                    x += tails.sample(&mut rng);
                }
                features.push(x);
            }
            labels.push(y);
        }
        let names = (0..self.d).map(|j| format!("x{j}")).collect();
        let mut data = Dataset::new(features, labels, self.d, self.k, names)?;
        data.normalize_unit_interval();
        Ok(data)
    }
}

/// Where benchmark data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    Csv { path: String, schema: CsvSchema },
    Synthetic(SyntheticSpec),
}

impl DataSource {
    /// `synthetic:…` selects the generator; anything else is a CSV path.
    pub fn parse(arg: &str) -> Result<Self> {
        if arg.starts_with("synthetic") {
            Ok(Self::Synthetic(arg.parse()?))
        } else {
            Ok(Self::Csv {
                path: arg.to_string(),
                schema: CsvSchema::default(),
            })
        }
    }

    pub fn load(&self) -> Result<Dataset> {
        match self {
            Self::Csv { path, schema } => ingest_csv(Path::new(path), schema),
            Self::Synthetic(spec) => spec.generate(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn toy_numeric_csv() {
        let f = write_csv("a,b,y\n2,1,0\n4,3,1\n6,5,0\n");
        let data = ingest_csv(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!((data.len(), data.n_features(), data.n_classes()), (3, 2, 2));
        assert_eq!(data.labels(), &[0, 1, 0]);
        assert_eq!(data.row(1), &[0.5, 0.5]);
        assert_eq!(data.row(2), &[1.0, 1.0]);
    }

    #[test]
    fn categorical_column_expands() {
        let f = write_csv("color,size,label\nred,1,yes\ngreen,2,no\nblue,3,yes\nred,4,no\n");
        let data = ingest_csv(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(data.n_features(), 4);
        assert_eq!(data.feature_names()[..3], ["color=blue", "color=green", "color=red"]);
        assert_eq!(data.row(0), &[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(data.labels(), &[1, 0, 1, 0]);
    }

    #[test]
    fn declared_categorical_and_ignore() {
        let f = write_csv("id,code,x,y\n1,10,0.5,a\n2,20,0.7,b\n3,10,0.9,a\n");
        let schema = CsvSchema {
            label: Some("y".into()),
            categorical: vec!["code".into()],
            ignore: vec!["id".into()],
        };
        let data = ingest_csv(f.path(), &schema).unwrap();
        assert_eq!(data.feature_names(), &["code=10", "code=20", "x"]);
    }

    #[test]
    fn missing_rows_dropped() {
        let f = write_csv("a,b,y\n1,?,0\n2,3,1\n,4,0\n5,6,0\n");
        let data = ingest_csv(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(data.len(), 2);
    }

    #[test]
    fn parse_errors_carry_row_numbers() {
        let f = write_csv("a,b,y\n1,2,0\n3,oops,1\n4,5,0\n");
        match ingest_csv(f.path(), &CsvSchema::default()) {
            Err(Error::Data { row: 3, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let f = write_csv("a,b,y\n1,2,0\n3,1\n");
        assert!(ingest_csv(f.path(), &CsvSchema::default()).is_err());
    }

    #[test]
    fn numeric_labels_sorted_numerically() {
        let f = write_csv("a,y\n1,10\n2,9\n3,100\n");
        let data = ingest_csv(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(data.labels(), &[1, 0, 2]);
    }

    #[test]
    fn synthetic_spec_round_trip() {
        let spec: SyntheticSpec = "synthetic:n=500,k=4,d=3,contam=0.1,sep=1.5,df=3,seed=7"
            .parse()
            .unwrap();
        assert_eq!((spec.n, spec.k, spec.d, spec.seed), (500, 4, 3, 7));
        assert_eq!(spec.to_string().parse::<SyntheticSpec>().unwrap(), spec);
        assert_eq!("synthetic".parse::<SyntheticSpec>().unwrap(), SyntheticSpec::default());
        assert!("synthetic:n=ten".parse::<SyntheticSpec>().is_err());
        assert!("synthetic:bogus=1".parse::<SyntheticSpec>().is_err());
    }

    #[test]
    fn synthetic_data_is_normalized_and_reproducible() {
        let spec = SyntheticSpec {
            n: 300,
            ..SyntheticSpec::default()
        };
        let a = spec.generate().unwrap();
        assert_eq!(a, spec.generate().unwrap());
        assert_eq!(a.len(), 300);
        for i in 0..a.len() {
            assert!(a.row(i).iter().all(|x| (0.0..=1.0).contains(x)));
        }
    }
}
