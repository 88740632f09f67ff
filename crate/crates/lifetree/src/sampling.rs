//! Monte Carlo synthetic sampling along fitted trajectories.
//!
//! For each population and each integer year in range, draws
//! `samples_per_year` vectors from Normal(trajectory(year), 1) per
//! structure. Draws for each (population, year) cell come from their own
//! seeded stream, so generation is balanced, reproducible, and
//! order-independent under parallelism.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;

use crate::cohort::STRUCTURE_COUNT;
use crate::error::{Error, Result};
use crate::stats::{labeled_stream_id, RngStream};
use crate::trajectory::{evaluate_trajectory, LifespanModelSet};

/// One synthetic sample.
#[derive(Debug, Clone)]
pub struct SampleRow {
    /// Index into [`SampleSet::labels`].
    pub population: usize,
    pub age: i32,
    pub z: Vec<f64>,
}

/// A balanced set of synthetic samples.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub labels: Vec<String>,
    pub rows: Vec<SampleRow>,
    pub samples_per_year: usize,
    pub seed: u64,
}

impl SampleSet {
    pub fn label_of(&self, row: &SampleRow) -> &str {
        &self.labels[row.population]
    }

    /// Row-major matrix of all samples (n × 124).
    pub fn matrix(&self) -> Array2<f64> {
        let n = self.rows.len();
        let mut m = Array2::zeros((n, STRUCTURE_COUNT));
        for (i, row) in self.rows.iter().enumerate() {
            for (j, v) in row.z.iter().enumerate() {
                m[[i, j]] = *v;
            }
        }
        m
    }

    /// CSV export `population,age,z_1..z_124` for inspection.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file =
            std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut out = std::io::BufWriter::new(file);
        let io_err = |e: std::io::Error| Error::io(path.display().to_string(), e);
        let mut header = String::from("population,age");
        for i in 1..=STRUCTURE_COUNT {
            header.push_str(&format!(",z_{i}"));
        }
        writeln!(out, "{header}").map_err(io_err)?;
        for row in &self.rows {
            write!(out, "{},{}", self.label_of(row), row.age).map_err(io_err)?;
            for z in &row.z {
                write!(out, ",{z}").map_err(io_err)?;
            }
            writeln!(out).map_err(io_err)?;
        }
        out.flush().map_err(io_err)
    }
}

fn draw_cell(
    set: &LifespanModelSet,
    label: &str,
    year: i32,
    n_per_year: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let point = evaluate_trajectory(set, label, year as f64)?;
    let mut rng = RngStream::new(seed, labeled_stream_id("sample", label, i64::from(year)));
    let mut rows = Vec::with_capacity(n_per_year);
    for _ in 0..n_per_year {
        rows.push(
            point
                .values
                .iter()
                .map(|mean| mean + rng.normal())
                .collect(),
        );
    }
    Ok(rows)
}

/// Draw `n_per_year` samples per integer year for one population.
pub fn generate_samples(
    set: &LifespanModelSet,
    population: &str,
    years: std::ops::RangeInclusive<i32>,
    n_per_year: usize,
    seed: u64,
) -> Result<SampleSet> {
    if years.is_empty() {
        return Err(Error::Domain(format!(
            "empty year range {}..={} for population '{population}'",
            years.start(),
            years.end()
        )));
    }
    if n_per_year == 0 {
        return Err(Error::Domain("samples_per_year must be positive".into()));
    }
    set.populations
        .get(population)
        .ok_or_else(|| Error::Lookup(format!("population '{population}' not in model set")))?;

    let year_list: Vec<i32> = years.collect();
    let cells: Result<Vec<Vec<Vec<f64>>>> = year_list
        .par_iter()
        .map(|&year| draw_cell(set, population, year, n_per_year, seed))
        .collect();
    let mut rows = Vec::with_capacity(year_list.len() * n_per_year);
    for (year, cell) in year_list.iter().zip(cells?) {
        for z in cell {
            rows.push(SampleRow {
                population: 0,
                age: *year,
                z,
            });
        }
    }
    Ok(SampleSet {
        labels: vec![population.to_string()],
        rows,
        samples_per_year: n_per_year,
        seed,
    })
}

/// The embedding training pool: samples for every branch population,
/// restricted to years from the age threshold up to each branch's cap.
pub fn training_pool(set: &LifespanModelSet, n_per_year: usize, seed: u64) -> Result<SampleSet> {
    let mut rows = Vec::new();
    let labels: Vec<String> = set.branches.clone();
    for (idx, label) in labels.iter().enumerate() {
        let cap = set.branch_cap(label)?;
        if cap < set.age_threshold {
            return Err(Error::InsufficientData(format!(
                "branch '{label}' ends (cap {cap}) before the age threshold {}",
                set.age_threshold
            )));
        }
        let mut part = generate_samples(set, label, set.age_threshold..=cap, n_per_year, seed)?;
        for row in &mut part.rows {
            row.population = idx;
        }
        rows.extend(part.rows);
    }
    Ok(SampleSet {
        labels,
        rows,
        samples_per_year: n_per_year,
        seed,
    })
}
