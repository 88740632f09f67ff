//! Subject tables: schema-checked CSV ingestion, the canonical structure
//! manifest, and partitioning into diagnostic populations.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of structures per subject. Column order is fixed by the
/// structure manifest.
pub const STRUCTURE_COUNT: usize = 124;

const CANONICAL_MANIFEST: &str = include_str!("../data/structures_124.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sex {
    Female,
    Male,
    Unknown,
}

impl Sex {
    pub fn parse(token: &str) -> Result<Sex> {
        match token {
            "F" => Ok(Sex::Female),
            "M" => Ok(Sex::Male),
            "U" => Ok(Sex::Unknown),
            other => Err(Error::Validation(format!(
                "unknown sex token '{other}' (expected F, M, or U)"
            ))),
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Sex::Female => "F",
            Sex::Male => "M",
            Sex::Unknown => "U",
        }
    }
}

impl fmt::Display for Sex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// One subject: demographics, diagnosis label, intracranial cavity
/// volume, and the 124 structure volumes in manifest order (mm³).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub subject_id: String,
    pub age: f64,
    pub sex: Sex,
    pub diagnosis: String,
    pub icv: f64,
    pub volumes: Vec<f64>,
}

impl SubjectRecord {
    fn validate(&self, row: usize) -> Result<()> {
        let age_ok = self.age.is_finite() && self.age > 0.0 && self.age < 130.0;
        if !age_ok {
            return Err(Error::Validation(format!(
                "row {row}: age {} outside (0, 130)",
                self.age
            )));
        }
        let icv_ok = self.icv.is_finite() && self.icv > 0.0;
        if !icv_ok {
            return Err(Error::Validation(format!(
                "row {row}: icv {} must be positive",
                self.icv
            )));
        }
        if self.volumes.len() != STRUCTURE_COUNT {
            return Err(Error::Validation(format!(
                "row {row}: expected {STRUCTURE_COUNT} volumes, got {}",
                self.volumes.len()
            )));
        }
        for (i, v) in self.volumes.iter().enumerate() {
            if !(v.is_finite() && *v >= 0.0) {
                return Err(Error::Validation(format!(
                    "row {row}: volume {i} = {v} must be finite and >= 0"
                )));
            }
        }
        Ok(())
    }
}

/// Ordered list of the 124 structure names; single source of column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureManifest {
    names: Vec<String>,
}

impl StructureManifest {
    /// The manifest shipped with the artifact.
    pub fn canonical() -> &'static StructureManifest {
        static CANONICAL: OnceLock<StructureManifest> = OnceLock::new();
        CANONICAL.get_or_init(|| {
            StructureManifest::from_lines(CANONICAL_MANIFEST).expect("embedded manifest is valid")
        })
    }

    pub fn from_lines(text: &str) -> Result<StructureManifest> {
        let names: Vec<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect();
        if names.len() != STRUCTURE_COUNT {
            return Err(Error::Schema(format!(
                "structure manifest must list exactly {STRUCTURE_COUNT} names, found {}",
                names.len()
            )));
        }
        Ok(StructureManifest { names })
    }

    pub fn load(path: &Path) -> Result<StructureManifest> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        StructureManifest::from_lines(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.names.join("\n");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Outcome of loading a subjects file: validated records plus the count
/// of rows excluded by the `qc_pass` column.
#[derive(Debug, Clone)]
pub struct LoadedCohort {
    pub records: Vec<SubjectRecord>,
    pub qc_excluded: usize,
}

const FIXED_COLUMNS: [&str; 5] = ["subject_id", "age", "sex", "diagnosis", "icv_mm3"];

/// Load subjects from CSV. The header must be
/// `subject_id,age,sex,diagnosis,icv_mm3[,qc_pass],vol_<name1>,...` with
/// volume columns in manifest order. Rows with `qc_pass` false are
/// dropped and counted.
pub fn load_subjects(path: &Path, manifest: &StructureManifest) -> Result<LoadedCohort> {
    let file =
        std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers()?.clone();

    let mut expected: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    let has_qc = headers.get(FIXED_COLUMNS.len()) == Some("qc_pass");
    if has_qc {
        expected.push("qc_pass".into());
    }
    for name in manifest.names() {
        expected.push(format!("vol_{name}"));
    }

    for (i, want) in expected.iter().enumerate() {
        match headers.get(i) {
            Some(got) if got == want => {}
            Some(got) => {
                return Err(Error::Schema(format!(
                    "column {i}: expected '{want}', found '{got}'"
                )))
            }
            None => return Err(Error::Schema(format!("missing column '{want}'"))),
        }
    }
    if headers.len() > expected.len() {
        return Err(Error::Schema(format!(
            "unexpected extra column '{}'",
            headers.get(expected.len()).unwrap_or("")
        )));
    }

    let vol_offset = FIXED_COLUMNS.len() + usize::from(has_qc);
    let mut records = Vec::new();
    let mut qc_excluded = 0usize;
    for (idx, row) in reader.records().enumerate() {
        let row = row?;
        let data_row = idx + 1;
        let field = |i: usize| row.get(i).unwrap_or("");
        let parse_f64 = |i: usize, column: &str| -> Result<f64> {
            field(i).trim().parse::<f64>().map_err(|_| Error::Parse {
                row: data_row,
                column: column.to_string(),
                message: format!("'{}' is not a number", field(i)),
            })
        };

        if has_qc {
            let token = field(5).trim();
            let pass = match token {
                "true" | "TRUE" | "True" | "1" | "" => true,
                "false" | "FALSE" | "False" | "0" => false,
                other => {
                    return Err(Error::Parse {
                        row: data_row,
                        column: "qc_pass".into(),
                        message: format!("'{other}' is not a boolean"),
                    })
                }
            };
            if !pass {
                qc_excluded += 1;
                continue;
            }
        }

        let mut volumes = Vec::with_capacity(STRUCTURE_COUNT);
        for (v, name) in manifest.names().iter().enumerate() {
            volumes.push(parse_f64(vol_offset + v, &format!("vol_{name}"))?);
        }
        let record = SubjectRecord {
            subject_id: field(0).to_string(),
            age: parse_f64(1, "age")?,
            sex: Sex::parse(field(2).trim())
                .map_err(|e| Error::Validation(format!("row {data_row}: {e}")))?,
            diagnosis: field(3).to_string(),
            icv: parse_f64(4, "icv_mm3")?,
            volumes,
        };
        record.validate(data_row)?;
        records.push(record);
    }

    Ok(LoadedCohort {
        records,
        qc_excluded,
    })
}

/// Write subjects in the canonical CSV schema (with a `qc_pass` column,
/// all true). Floats are printed in shortest round-trip form, so
/// `load_subjects` recovers them bit-exactly.
pub fn save_subjects(
    path: &Path,
    records: &[SubjectRecord],
    manifest: &StructureManifest,
) -> Result<()> {
    let file =
        std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = std::io::BufWriter::new(file);
    let io_err = |e: std::io::Error| Error::io(path.display().to_string(), e);

    let mut header = String::from("subject_id,age,sex,diagnosis,icv_mm3,qc_pass");
    for name in manifest.names() {
        header.push_str(",vol_");
        header.push_str(name);
    }
    writeln!(out, "{header}").map_err(io_err)?;
    for r in records {
        write!(
            out,
            "{},{},{},{},{},true",
            r.subject_id, r.age, r.sex, r.diagnosis, r.icv
        )
        .map_err(io_err)?;
        for v in &r.volumes {
            write!(out, ",{v}").map_err(io_err)?;
        }
        writeln!(out).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Subjects grouped by diagnosis label, with a declared control label.
/// Label order is the declaration order and is the canonical tie-break
/// order downstream.
#[derive(Debug, Clone)]
pub struct PopulationPartition {
    groups: IndexMap<String, Vec<SubjectRecord>>,
    control: String,
}

impl PopulationPartition {
    pub fn new(
        records: &[SubjectRecord],
        labels: &[String],
        control: &str,
    ) -> Result<PopulationPartition> {
        if !labels.iter().any(|l| l == control) {
            return Err(Error::Validation(format!(
                "control label '{control}' missing from the declared label set"
            )));
        }
        let mut groups: IndexMap<String, Vec<SubjectRecord>> = IndexMap::new();
        for label in labels {
            if groups.insert(label.clone(), Vec::new()).is_some() {
                return Err(Error::Validation(format!("duplicate label '{label}'")));
            }
        }
        let mut unknown: Vec<String> = Vec::new();
        for record in records {
            match groups.get_mut(&record.diagnosis) {
                Some(bucket) => bucket.push(record.clone()),
                None => {
                    if !unknown.contains(&record.diagnosis) {
                        unknown.push(record.diagnosis.clone());
                    }
                }
            }
        }
        if !unknown.is_empty() {
            return Err(Error::Validation(format!(
                "records carry labels outside the declared set: {}",
                unknown.join(", ")
            )));
        }
        Ok(PopulationPartition {
            groups,
            control: control.to_string(),
        })
    }

    pub fn labels(&self) -> Vec<String> {
        self.groups.keys().cloned().collect()
    }

    pub fn control(&self) -> &str {
        &self.control
    }

    pub fn group(&self, label: &str) -> Result<&[SubjectRecord]> {
        self.groups
            .get(label)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Lookup(format!("population '{label}' not in partition")))
    }

    pub fn control_group(&self) -> &[SubjectRecord] {
        self.groups
            .get(&self.control)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn counts(&self) -> Vec<(String, usize)> {
        self.groups
            .iter()
            .map(|(label, records)| (label.clone(), records.len()))
            .collect()
    }

    pub fn total(&self) -> usize {
        self.groups.values().map(Vec::len).sum()
    }
}
