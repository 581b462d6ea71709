//! Column-major numeric tables, z-score standardization, column permutation
//! and the synthetic Coulomb's-law generator.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vacuum permittivity used by the Coulomb generator.
pub const VACUUM_PERMITTIVITY: f64 = 8.854e-12;

/// Default smallest separation the Coulomb generator samples; F diverges at r = 0.
pub const DEFAULT_R_FLOOR: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

impl Column {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            values,
        }
    }
}

/// Mean and population standard deviation of one column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnScale {
    pub mean: f64,
    pub sd: f64,
}

impl ColumnScale {
    pub fn scale(&self, raw: f64) -> f64 {
        (raw - self.mean) / self.sd
    }

    pub fn unscale(&self, z: f64) -> f64 {
        z * self.sd + self.mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub columns: Vec<(String, ColumnScale)>,
}

impl ScalingParams {
    pub fn get(&self, name: &str) -> Option<&ColumnScale> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    /// Applies `self` to the output of an earlier scaling `first`, giving the
    /// parameters that map the original raw units straight to the final ones.
    fn compose_after(&self, first: &ScalingParams) -> ScalingParams {
        let columns = self
            .columns
            .iter()
            .map(|(name, outer)| {
                let composed = match first.get(name) {
                    Some(inner) => ColumnScale {
                        mean: inner.mean + inner.sd * outer.mean,
                        sd: inner.sd * outer.sd,
                    },
                    None => *outer,
                };
                (name.clone(), composed)
            })
            .collect();
        ScalingParams { columns }
    }
}

/// An immutable, column-major table of finite `f64` values.
///
/// The optional `scaling` records how the current values relate to the raw
/// units they were loaded in, so that ALE grids and slopes can be reported in
/// either unit system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataTable {
    columns: Vec<Column>,
    n_rows: usize,
    target: Option<String>,
    scaling: Option<ScalingParams>,
    notes: Vec<String>,
}

impl DataTable {
    pub fn new(columns: Vec<Column>, target: Option<&str>) -> Result<Self> {
        let n_rows = columns.first().map(|c| c.values.len()).unwrap_or(0);
        if columns.is_empty() || n_rows == 0 {
            return Err(Error::EmptyTable);
        }
        let mut seen = HashSet::new();
        for c in &columns {
            if c.name.is_empty() {
                return Err(Error::InvalidTable("empty column name".into()));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(Error::InvalidTable(format!(
                    "duplicate column name `{}`",
                    c.name
                )));
            }
            if c.values.len() != n_rows {
                return Err(Error::InvalidTable(format!(
                    "column `{}` has {} rows, expected {}",
                    c.name,
                    c.values.len(),
                    n_rows
                )));
            }
            if let Some(i) = c.values.iter().position(|v| !v.is_finite()) {
                return Err(Error::Parse {
                    row: i + 1,
                    column: c.name.clone(),
                    detail: "non-finite value".into(),
                });
            }
        }
        if let Some(t) = target {
            if !seen.contains(t) {
                return Err(Error::MissingTarget(t.to_string()));
            }
        }
        Ok(Self {
            columns,
            n_rows,
            target: target.map(str::to_string),
            scaling: None,
            notes: Vec::new(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn target_name(&self) -> Option<&str> {
        self.target.as_deref()
    }

    pub fn scaling(&self) -> Option<&ScalingParams> {
        self.scaling.as_ref()
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn target(&self) -> Result<&[f64]> {
        match &self.target {
            Some(t) => self.column(t),
            None => Err(Error::MissingTarget(String::new())),
        }
    }

    /// Every column except the target, in table order.
    pub fn feature_names(&self) -> Vec<String> {
        self.features().map(|c| c.name.clone()).collect()
    }

    pub fn features(&self) -> impl Iterator<Item = &Column> {
        self.columns
            .iter()
            .filter(move |c| Some(c.name.as_str()) != self.target.as_deref())
    }

    pub fn is_feature(&self, name: &str) -> bool {
        self.features().any(|c| c.name == name)
    }

    /// True when `name` was produced by [`standardize`], or is numerically
    /// zero-mean and unit population variance.
    pub fn is_standardized(&self, name: &str) -> bool {
        if self.scaling.as_ref().and_then(|s| s.get(name)).is_some() {
            return true;
        }
        match self.column(name) {
            Ok(values) => {
                let (mean, sd) = mean_and_population_sd(values);
                mean.abs() < 1e-6 && (sd - 1.0).abs() < 1e-6
            }
            Err(_) => false,
        }
    }

    /// Returns a copy with column `name` replaced by `values`.
    pub fn with_column(&self, name: &str, values: Vec<f64>) -> Result<Self> {
        let idx = self.column_index(name)?;
        if values.len() != self.n_rows {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: self.n_rows,
            });
        }
        let mut out = self.clone();
        out.columns[idx].values = values;
        Ok(out)
    }

    /// Rows at `indices`, in that order. Scaling state and notes carry over.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyTable);
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n_rows) {
            return Err(Error::InvalidTable(format!(
                "row index {bad} out of range for {} rows",
                self.n_rows
            )));
        }
        let columns = self
            .columns
            .iter()
            .map(|c| Column::new(&c.name, indices.iter().map(|&i| c.values[i]).collect()))
            .collect();
        Ok(Self {
            columns,
            n_rows: indices.len(),
            target: self.target.clone(),
            scaling: self.scaling.clone(),
            notes: self.notes.clone(),
        })
    }

    /// Values of `row` across the named columns.
    pub fn row(&self, row: usize, names: &[String]) -> Result<Vec<f64>> {
        names
            .iter()
            .map(|n| self.column(n).map(|c| c[row]))
            .collect()
    }

    pub fn to_csv_writer<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        let mut record = Vec::with_capacity(self.columns.len());
        for i in 0..self.n_rows {
            record.clear();
            record.extend(self.columns.iter().map(|c| format_f64(c.values[i])));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path.as_ref())?;
        self.to_csv_writer(std::io::BufWriter::new(file))
    }
}

/// Shortest representation that parses back to the same `f64`.
pub(crate) fn format_f64(v: f64) -> String {
    format!("{v:?}")
}

pub(crate) fn mean_and_population_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Reads a comma-separated file with a header row.
pub fn load_csv(path: impl AsRef<Path>, target: &str) -> Result<DataTable> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let file = std::fs::File::open(path)?;
    read_csv(file, target)
}

pub fn read_csv<R: std::io::Read>(reader: R, target: &str) -> Result<DataTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(Error::EmptyTable);
    }
    if !headers.iter().any(|h| h == target) {
        return Err(Error::MissingTarget(target.to_string()));
    }
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    let mut bad_cells = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row,
                column: String::new(),
                detail: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => values[j].push(v),
                _ => bad_cells.push((row, headers[j].clone(), cell.to_string())),
            }
        }
    }
    if let Some((row, column, _)) = bad_cells.first().cloned() {
        let listing = bad_cells
            .iter()
            .map(|(r, c, v)| format!("({r}, {c}: {v:?})"))
            .collect::<Vec<_>>()
            .join(", ");
        return Err(Error::Parse {
            row,
            column,
            detail: format!("unparseable or missing cells {listing}"),
        });
    }
    let columns = headers
        .into_iter()
        .zip(values)
        .map(|(name, values)| Column::new(name, values))
        .collect();
    DataTable::new(columns, Some(target))
}

/// Z-scores every column (target included) using the population standard
/// deviation.
pub fn standardize(table: &DataTable) -> Result<(DataTable, ScalingParams)> {
    let mut columns = Vec::with_capacity(table.columns.len());
    let mut params = Vec::with_capacity(table.columns.len());
    for c in &table.columns {
        let (mean, sd) = mean_and_population_sd(&c.values);
        // Relative test: a column of identical large values still has sd ~ 1 ulp.
        if sd <= 1e-12 * mean.abs().max(1.0) {
            return Err(Error::ConstantColumn(c.name.clone()));
        }
        let scale = ColumnScale { mean, sd };
        columns.push(Column::new(
            &c.name,
            c.values.iter().map(|&v| scale.scale(v)).collect(),
        ));
        params.push((c.name.clone(), scale));
    }
    let params = ScalingParams { columns: params };
    let carried = match &table.scaling {
        Some(prior) => params.compose_after(prior),
        None => params.clone(),
    };
    let out = DataTable {
        columns,
        n_rows: table.n_rows,
        target: table.target.clone(),
        scaling: Some(carried),
        notes: table.notes.clone(),
    };
    Ok((out, params))
}

/// Inverts [`standardize`] for the columns covered by `params`.
pub fn unscale(table: &DataTable, params: &ScalingParams) -> Result<DataTable> {
    let mut out = table.clone();
    for c in &mut out.columns {
        if let Some(s) = params.get(&c.name) {
            for v in &mut c.values {
                *v = s.unscale(*v);
            }
        }
    }
    out.scaling = None;
    Ok(out)
}

/// Standardizes with previously fitted parameters, e.g. those stored with a
/// trained model. Every column must be covered.
pub fn apply_scaling(table: &DataTable, params: &ScalingParams) -> Result<DataTable> {
    if table.scaling.is_some() {
        return Err(Error::InvalidTable("table is already scaled".into()));
    }
    let mut out = table.clone();
    for c in &mut out.columns {
        let s = params.get(&c.name).ok_or_else(|| Error::SchemaMismatch {
            expected: params.columns.iter().map(|(n, _)| n.clone()).collect(),
            found: table.column_names(),
        })?;
        for v in &mut c.values {
            *v = s.scale(*v);
        }
    }
    out.scaling = Some(params.clone());
    Ok(out)
}

/// Copy of `table` with column `var` shuffled by Fisher-Yates.
pub fn permute_column<R: Rng + ?Sized>(table: &DataTable, var: &str, rng: &mut R) -> Result<DataTable> {
    if !table.is_feature(var) {
        return Err(Error::UnknownColumn(var.to_string()));
    }
    let idx = table.column_index(var)?;
    let mut out = table.clone();
    out.columns[idx].values.shuffle(rng);
    Ok(out)
}

/// Shuffles every feature column independently, in column order, from one stream.
pub fn permute_all_columns<R: Rng + ?Sized>(table: &DataTable, rng: &mut R) -> DataTable {
    let mut out = table.clone();
    let target = out.target.clone();
    for c in out.columns.iter_mut() {
        if Some(&c.name) != target.as_ref() {
            c.values.shuffle(rng);
        }
    }
    out
}

/// `n` indices drawn uniformly without replacement, in draw order.
pub fn sample_indices<R: Rng + ?Sized>(n_rows: usize, n: usize, rng: &mut R) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n_rows).collect();
    let (chosen, _) = idx.partial_shuffle(rng, n.min(n_rows));
    chosen.to_vec()
}

/// Random train/test partition; `train_fraction` of rows go to the first set.
pub fn train_test_split<R: Rng + ?Sized>(
    table: &DataTable,
    train_fraction: f64,
    rng: &mut R,
) -> Result<(DataTable, DataTable)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let mut idx: Vec<usize> = (0..table.n_rows).collect();
    idx.shuffle(rng);
    let n_train = ((table.n_rows as f64) * train_fraction).round() as usize;
    let n_train = n_train.clamp(1, table.n_rows.saturating_sub(1).max(1));
    let (train, test) = idx.split_at(n_train);
    if test.is_empty() {
        return Err(Error::InvalidConfig("too few rows to split".into()));
    }
    Ok((table.select_rows(train)?, table.select_rows(test)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoulombConfig {
    pub n_tuples: usize,
    pub q_range: (f64, f64),
    pub r_range: (f64, f64),
    pub eps_range: (f64, f64),
    /// Lower bound imposed on `r_range` before sampling.
    pub r_floor: f64,
    pub seed: u64,
}

impl Default for CoulombConfig {
    fn default() -> Self {
        Self {
            n_tuples: 125_000,
            q_range: (0.0, 10.0),
            r_range: (0.0, 1.5),
            eps_range: (1.0, 80.0),
            r_floor: DEFAULT_R_FLOOR,
            seed: 0,
        }
    }
}

impl CoulombConfig {
    /// The separation range actually sampled, with the lower bound raised to
    /// `r_floor`.
    pub fn effective_r_range(&self) -> (f64, f64) {
        (self.r_range.0.max(self.r_floor), self.r_range.1)
    }

    fn validate(&self) -> Result<()> {
        if self.n_tuples == 0 {
            return Err(Error::InvalidConfig("n_tuples must be at least 1".into()));
        }
        if !(self.r_floor > 0.0 && self.r_floor.is_finite()) {
            return Err(Error::InvalidRange(format!("r floor {} must be positive", self.r_floor)));
        }
        let (r_lo, r_hi) = self.effective_r_range();
        for (name, (lo, hi)) in [
            ("q", self.q_range),
            ("r", (r_lo, r_hi)),
            ("eps", self.eps_range),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidRange(format!("{name}: [{lo}, {hi}]")));
            }
        }
        if self.eps_range.0 <= 0.0 {
            return Err(Error::InvalidRange(format!(
                "eps lower bound {} must be positive",
                self.eps_range.0
            )));
        }
        Ok(())
    }
}

/// Electrostatic force between charges `q1`, `q2` at separation `r` in a
/// medium of relative permittivity `eps`.
pub fn coulomb_force(q1: f64, q2: f64, r: f64, eps: f64) -> f64 {
    q1 * q2 / (4.0 * PI * eps * VACUUM_PERMITTIVITY * r * r)
}

/// Uniform unit draws per row (q1, q2, r, eps), scaled into the configured
/// ranges; target `F`.
pub fn generate_coulomb(config: &CoulombConfig) -> Result<DataTable> {
    config.validate()?;
    let mut rng = crate::rng::seeded(config.seed);
    let n = config.n_tuples;
    let (r_lo, r_hi) = config.effective_r_range();
    let lerp = |u: f64, (lo, hi): (f64, f64)| lo + u * (hi - lo);
    let mut q1 = Vec::with_capacity(n);
    let mut q2 = Vec::with_capacity(n);
    let mut r = Vec::with_capacity(n);
    let mut eps = Vec::with_capacity(n);
    let mut force = Vec::with_capacity(n);
    for _ in 0..n {
        let u: [f64; 4] = rng.random();
        let (a, b, c, d) = (
            lerp(u[0], config.q_range),
            lerp(u[1], config.q_range),
            lerp(u[2], (r_lo, r_hi)),
            lerp(u[3], config.eps_range),
        );
        q1.push(a);
        q2.push(b);
        r.push(c);
        eps.push(d);
        force.push(coulomb_force(a, b, c, d));
    }
    let table = DataTable::new(
        vec![
            Column::new("q1", q1),
            Column::new("q2", q2),
            Column::new("r", r),
            Column::new("eps", eps),
            Column::new("F", force),
        ],
        Some("F"),
    )?;
    let mut table = table;
    if r_lo > config.r_range.0 {
        table = table.with_note(format!(
            "separation r sampled on [{r_lo}, {r_hi}] instead of [{}, {r_hi}]",
            config.r_range.0
        ));
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;

    fn abc_table() -> DataTable {
        DataTable::new(
            vec![
                Column::new("a", vec![1.0, 2.0, 3.0, 4.0]),
                Column::new("b", vec![10.0, 20.0, 30.0, 40.0]),
                Column::new("y", vec![0.5, 0.1, 0.3, 0.2]),
            ],
            Some("y"),
        )
        .unwrap()
    }

    fn sorted(v: &[f64]) -> Vec<f64> {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        s
    }

    #[test]
    fn reads_three_row_csv() {
        let t = read_csv("a,b,y\n1,2,3\n4,5,6\n7,8,9\n".as_bytes(), "y").unwrap();
        assert_eq!(t.n_rows(), 3);
        assert_eq!(t.target_name(), Some("y"));
        assert_eq!(t.feature_names(), vec!["a", "b"]);
        assert_eq!(t.column("b").unwrap(), &[2.0, 5.0, 8.0]);
    }

    #[test]
    fn reports_bad_cell_location() {
        let err = read_csv("a,b,y\n1,2,3\n4,abc,6\n".as_bytes(), "y").unwrap_err();
        match err {
            Error::Parse { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "b");
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn missing_cells_are_rejected() {
        let err = read_csv("a,y\n1,\n,2\n".as_bytes(), "y").unwrap_err();
        let Error::Parse { row, column, detail } = err else {
            panic!()
        };
        assert_eq!((row, column.as_str()), (1, "y"));
        assert!(detail.contains("(2, a"));
    }

    #[test]
    fn empty_file_is_an_error() {
        assert!(read_csv("".as_bytes(), "y").is_err());
        assert!(matches!(
            read_csv("a,y\n".as_bytes(), "y"),
            Err(Error::EmptyTable)
        ));
    }

    #[test]
    fn missing_target_and_file() {
        assert!(matches!(
            read_csv("a,b\n1,2\n".as_bytes(), "y"),
            Err(Error::MissingTarget(_))
        ));
        assert!(matches!(
            load_csv("/nonexistent/file.csv", "y"),
            Err(Error::FileNotFound(_))
        ));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(DataTable::new(vec![], None).is_err());
        assert!(DataTable::new(
            vec![Column::new("a", vec![1.0]), Column::new("a", vec![2.0])],
            None
        )
        .is_err());
        assert!(DataTable::new(
            vec![Column::new("a", vec![1.0]), Column::new("b", vec![2.0, 3.0])],
            None
        )
        .is_err());
        assert!(DataTable::new(vec![Column::new("a", vec![f64::NAN])], None).is_err());
    }

    #[test]
    fn standardize_uses_population_sd() {
        let t = DataTable::new(vec![Column::new("x", vec![1.0, 2.0, 3.0])], None).unwrap();
        let (s, params) = standardize(&t).unwrap();
        let z = 1.0 / (2.0f64 / 3.0).sqrt();
        let got = s.column("x").unwrap();
        for (g, e) in got.iter().zip([-z, 0.0, z]) {
            assert!((g - e).abs() < 1e-12);
        }
        assert!((got[2] - 1.2247).abs() < 1e-4);
        assert!((params.get("x").unwrap().sd - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn standardize_is_idempotent() {
        let (once, _) = standardize(&abc_table()).unwrap();
        let (twice, _) = standardize(&once).unwrap();
        for (a, b) in once.columns().iter().zip(twice.columns()) {
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn constant_column_rejected() {
        let t = DataTable::new(vec![Column::new("c", vec![5.0, 5.0, 5.0])], None).unwrap();
        assert!(matches!(standardize(&t), Err(Error::ConstantColumn(n)) if n == "c"));
    }

    #[test]
    fn composed_scaling_maps_to_raw_units() {
        let raw = abc_table();
        let (once, _) = standardize(&raw).unwrap();
        let (twice, _) = standardize(&once).unwrap();
        let carried = twice.scaling().unwrap().get("b").unwrap();
        let back = twice.column("b").unwrap()[3];
        assert!((carried.unscale(back) - 40.0).abs() < 1e-9);
    }

    #[test]
    fn single_row_permutation_is_identity() {
        let t = DataTable::new(
            vec![Column::new("a", vec![3.0]), Column::new("y", vec![1.0])],
            Some("y"),
        )
        .unwrap();
        let p = permute_column(&t, "a", &mut seeded(1)).unwrap();
        assert_eq!(p, t);
    }

    #[test]
    fn permute_target_or_unknown_fails() {
        let t = abc_table();
        assert!(matches!(
            permute_column(&t, "y", &mut seeded(0)),
            Err(Error::UnknownColumn(_))
        ));
        assert!(permute_column(&t, "zz", &mut seeded(0)).is_err());
    }

    #[test]
    fn permutation_is_seed_deterministic() {
        let t = abc_table();
        let a = permute_column(&t, "a", &mut seeded(42)).unwrap();
        let b = permute_column(&t, "a", &mut seeded(42)).unwrap();
        assert_eq!(a, b);
        let x = permute_all_columns(&t, &mut seeded(9));
        let y = permute_all_columns(&t, &mut seeded(9));
        assert_eq!(x, y);
        assert_eq!(x.column("y").unwrap(), t.column("y").unwrap());
    }

    #[test]
    fn one_feature_permute_all_matches_permute_column() {
        let t = DataTable::new(
            vec![
                Column::new("a", (0..50).map(f64::from).collect()),
                Column::new("y", vec![0.0; 50]),
            ],
            Some("y"),
        )
        .unwrap();
        let one = permute_column(&t, "a", &mut seeded(5)).unwrap();
        let all = permute_all_columns(&t, &mut seeded(5));
        assert_eq!(one, all);
    }

    #[test]
    fn coulomb_basic_physics() {
        assert_eq!(coulomb_force(0.0, 3.0, 0.7, 20.0), 0.0);
        let f = coulomb_force(2.0, 3.0, 0.7, 20.0);
        assert!((coulomb_force(4.0, 3.0, 0.7, 20.0) - 2.0 * f).abs() <= 1e-12 * f);
        let k = coulomb_force(1.0, 1.0, 1.0, 1.0);
        assert!((k - 1.0 / (4.0 * PI * 8.854e-12)).abs() < 1e-3);
        assert!((k / 8.99e9 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn coulomb_generator_shape_and_ranges() {
        let cfg = CoulombConfig {
            n_tuples: 2000,
            seed: 3,
            ..Default::default()
        };
        let t = generate_coulomb(&cfg).unwrap();
        assert_eq!(t.column_names(), vec!["q1", "q2", "r", "eps", "F"]);
        assert_eq!(t.target_name(), Some("F"));
        assert_eq!(t.n_rows(), 2000);
        assert!(t.column("r").unwrap().iter().all(|&r| (0.5..=1.5).contains(&r)));
        assert!(t.column("eps").unwrap().iter().all(|&e| (1.0..=80.0).contains(&e)));
        assert_eq!(t.notes().len(), 1);
        assert_eq!(t, generate_coulomb(&cfg).unwrap());
    }

    #[test]
    fn coulomb_invalid_ranges() {
        let bad = CoulombConfig {
            q_range: (1.0, 1.0),
            ..Default::default()
        };
        assert!(matches!(generate_coulomb(&bad), Err(Error::InvalidRange(_))));
        let bad = CoulombConfig {
            eps_range: (f64::NAN, 2.0),
            ..Default::default()
        };
        assert!(generate_coulomb(&bad).is_err());
        let bad = CoulombConfig {
            r_range: (0.0, 0.01),
            ..Default::default()
        };
        assert!(generate_coulomb(&bad).is_err());
        let bad = CoulombConfig {
            r_floor: 0.0,
            ..Default::default()
        };
        assert!(generate_coulomb(&bad).is_err());
    }

    #[test]
    fn split_and_sample() {
        let t = abc_table();
        let (train, test) = train_test_split(&t, 0.5, &mut seeded(1)).unwrap();
        assert_eq!(train.n_rows() + test.n_rows(), 4);
        let idx = sample_indices(100, 10, &mut seeded(2));
        assert_eq!(idx.len(), 10);
        let uniq: HashSet<_> = idx.iter().collect();
        assert_eq!(uniq.len(), 10);
        assert_eq!(sample_indices(5, 10, &mut seeded(2)).len(), 5);
    }

    proptest! {
        #[test]
        fn standardize_round_trips(values in prop::collection::vec(-1e3f64..1e3, 2..40)) {
            prop_assume!(values.iter().any(|v| (v - values[0]).abs() > 1e-3));
            let t = DataTable::new(vec![Column::new("x", values.clone())], None).unwrap();
            let (s, params) = standardize(&t).unwrap();
            let (mean, sd) = mean_and_population_sd(s.column("x").unwrap());
            prop_assert!(mean.abs() < 1e-10);
            prop_assert!((sd - 1.0).abs() < 1e-10);
            let back = unscale(&s, &params).unwrap();
            for (a, b) in back.column("x").unwrap().iter().zip(&values) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn permutation_preserves_multisets(seed in any::<u64>(), n in 1usize..60) {
            let t = DataTable::new(
                vec![
                    Column::new("a", (0..n).map(|i| i as f64).collect()),
                    Column::new("b", (0..n).map(|i| (i * i) as f64).collect()),
                    Column::new("y", vec![1.0; n]),
                ],
                Some("y"),
            ).unwrap();
            let p = permute_column(&t, "a", &mut seeded(seed)).unwrap();
            prop_assert_eq!(sorted(p.column("a").unwrap()), sorted(t.column("a").unwrap()));
            // other columns bit-exact
            prop_assert_eq!(p.column("b").unwrap(), t.column("b").unwrap());
            prop_assert_eq!(p.column("y").unwrap(), t.column("y").unwrap());
            let all = permute_all_columns(&t, &mut seeded(seed));
            for name in ["a", "b"] {
                prop_assert_eq!(sorted(all.column(name).unwrap()), sorted(t.column(name).unwrap()));
            }
        }

        #[test]
        fn coulomb_rows_satisfy_formula(seed in any::<u64>()) {
            let t = generate_coulomb(&CoulombConfig { n_tuples: 64, seed, ..Default::default() }).unwrap();
            let (q1, q2, r, eps, f) = (
                t.column("q1").unwrap(), t.column("q2").unwrap(), t.column("r").unwrap(),
                t.column("eps").unwrap(), t.column("F").unwrap(),
            );
            for i in 0..64 {
                let lhs = f[i] * r[i] * r[i] * (4.0 * PI * eps[i] * 8.854e-12);
                let rhs = q1[i] * q2[i];
                prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1e-300));
            }
        }
    }
}
