//! Samples, pseudo-observations, the empirical copula, and the copula
//! processes tabulated on a regular lattice.
//!
//! Ties are broken by row order: within a column, equal values receive
//! consecutive ranks in the order the rows appear. This keeps every
//! pseudo-observation column a permutation of `1..=n`, including for
//! bootstrap resamples, which repeat rows.

mod copula;
mod field;
mod process;

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};

pub use copula::{empirical_copula, EmpiricalCopula};
pub(crate) use field::box_measure_unchecked;
pub use field::{box_measure, default_resolution, FieldKind, GridBox, GridField};
pub use process::{
    grid_bootstrap_composite, grid_bootstrap_simple, grid_composite, grid_simple, CopulaProcess,
};

/// An `n × d` matrix of finite observations, one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl Sample {
    /// Builds a sample from row-major data with `d` columns.
    pub fn from_flat(data: Vec<f64>, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::Data(format!(
                "a sample needs at least 2 columns, got {d}"
            )));
        }
        if data.is_empty() {
            return Err(Error::InsufficientData("the sample has no rows".into()));
        }
        if !data.len().is_multiple_of(d) {
            return Err(Error::Data(format!(
                "{} values do not fill rows of {d} columns",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite value in row {}, column {}",
                pos / d + 1,
                pos % d + 1
            )));
        }
        Ok(Self {
            n: data.len() / d,
            d,
            data,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::Data(format!(
                    "row {} has {} columns, expected {d}",
                    i + 1,
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(data, d)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.d + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.d)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Applies `f` to every entry of column `j`.
    pub fn map_column(&self, j: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut data = self.data.clone();
        for row in data.chunks_exact_mut(self.d) {
            row[j] = f(row[j]);
        }
        Self::from_flat(data, self.d)
    }

    /// New sample made of the rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            n: indices.len(),
            d: self.d,
            data,
        }
    }

    /// Reads a CSV file; see [`Sample::from_csv_reader`].
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())
            .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.as_ref().display())))?;
        Self::from_csv_reader(file)
    }

    /// Parses one observation per line with `d ≥ 2` numeric columns. A first
    /// line that does not parse as numbers is taken to be a header.
    pub fn from_csv_reader(reader: impl Read) -> Result<Self> {
        let mut csv = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut data = Vec::new();
        let mut d = None;
        for (line, record) in csv.records().enumerate() {
            let record = record.map_err(|e| Error::Data(format!("malformed CSV: {e}")))?;
            if record.iter().all(|f| f.is_empty()) {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                record.iter().map(|f| f.parse::<f64>()).collect();
            match parsed {
                Ok(values) => {
                    match d {
                        None => d = Some(values.len()),
                        Some(d) if d != values.len() => {
                            return Err(Error::Data(format!(
                                "line {} has {} columns, expected {d}",
                                line + 1,
                                values.len()
                            )))
                        }
                        _ => {}
                    }
                    data.extend(values);
                }
                Err(_) if line == 0 => continue,
                Err(_) => {
                    return Err(Error::Data(format!(
                        "non-numeric value on line {}",
                        line + 1
                    )))
                }
            }
        }
        match d {
            Some(d) => Self::from_flat(data, d),
            None => Err(Error::InsufficientData(
                "the CSV input has no data rows".into(),
            )),
        }
    }

    /// Writes a header `x1,…,xd` and the rows with 17 significant digits.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        csv.write_record((1..=self.d).map(|j| format!("x{j}")))?;
        for row in self.rows() {
            csv.write_record(row.iter().map(|x| format!("{x:.16e}")))?;
        }
        csv.flush()?;
        Ok(())
    }
}

/// Column-wise ranks of a sample. Each column is a permutation of `1..=n`;
/// the pseudo-observation itself is `rank / n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudoObservations {
    n: usize,
    d: usize,
    ranks: Vec<u32>,
}

impl PseudoObservations {
    pub fn from_sample(sample: &Sample) -> Self {
        let (n, d) = (sample.n(), sample.d());
        let mut ranks = vec![0u32; n * d];
        let mut order: Vec<usize> = (0..n).collect();
        for j in 0..d {
            order.iter_mut().enumerate().for_each(|(i, o)| *o = i);
            // Stable: ties keep row order.
            order.sort_by(|&a, &b| sample.value(a, j).total_cmp(&sample.value(b, j)));
            for (pos, &i) in order.iter().enumerate() {
                ranks[i * d + j] = pos as u32 + 1;
            }
        }
        Self { n, d, ranks }
    }

    /// Builds from explicit rank rows; each column must be a permutation of
    /// `1..=n`.
    pub fn from_ranks(ranks: Vec<u32>, d: usize) -> Result<Self> {
        if d == 0 || ranks.is_empty() || !ranks.len().is_multiple_of(d) {
            return Err(Error::Data("rank matrix is empty or ragged".into()));
        }
        let n = ranks.len() / d;
        for j in 0..d {
            let mut seen = vec![false; n + 1];
            for i in 0..n {
                let r = ranks[i * d + j] as usize;
                if r == 0 || r > n || std::mem::replace(&mut seen[r], true) {
                    return Err(Error::Data(format!(
                        "column {} is not a permutation of 1..={n}",
                        j + 1
                    )));
                }
            }
        }
        Ok(Self { n, d, ranks })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn rank(&self, i: usize, j: usize) -> u32 {
        self.ranks[i * self.d + j]
    }

    pub fn ranks_of(&self, i: usize) -> &[u32] {
        &self.ranks[i * self.d..(i + 1) * self.d]
    }

    pub fn ranks(&self) -> &[u32] {
        &self.ranks
    }

    /// The pseudo-observation `rank(i, j) / n`.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.rank(i, j) as f64 / self.n as f64
    }

    /// Pseudo-observations as a sample in `(0, 1]^d`.
    pub fn to_sample(&self) -> Sample {
        let n = self.n as f64;
        Sample {
            n: self.n,
            d: self.d,
            data: self.ranks.iter().map(|&r| r as f64 / n).collect(),
        }
    }

    /// Kendall's tau of the first two columns (no ties by construction).
    pub fn kendall_tau(&self) -> Result<f64> {
        let pairs = (0..self.n)
            .map(|i| (self.rank(i, 0) as f64, self.rank(i, 1) as f64))
            .collect();
        crate::copula::tau_of_pairs(pairs)
    }
}

/// Pseudo-observations of `sample`.
pub fn pseudo_observations(sample: &Sample) -> PseudoObservations {
    PseudoObservations::from_sample(sample)
}

/// `n` row indices drawn uniformly with replacement.
pub fn resample_indices<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Nonparametric bootstrap resample: `n` rows drawn with replacement.
pub fn bootstrap_resample<R: Rng + ?Sized>(sample: &Sample, rng: &mut R) -> Sample {
    sample.select_rows(&resample_indices(sample.n(), rng))
}
