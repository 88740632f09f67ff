//! The 3D tree: branch polylines over (age, x, y), nearest-branch
//! classification with normalized Gaussian scores, and cut-slice export.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cohort::SubjectRecord;
use crate::embed::{transform, EmbeddingModel};
use crate::error::{Error, Result};
use crate::normalize::{apply_normalization, NormalizationModel};
use crate::sampling::SampleSet;
use crate::trajectory::{evaluate_trajectory, LifespanModelSet};

/// How a subject's distance to a branch is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum DistanceRule {
    /// Minimum 3D distance over the branch polyline (default).
    #[default]
    Polyline,
    /// Distance to the branch point at the subject's own age only.
    AtAge,
}

impl DistanceRule {
    pub fn parse(token: &str) -> Result<DistanceRule> {
        match token {
            "polyline" => Ok(DistanceRule::Polyline),
            "at-age" => Ok(DistanceRule::AtAge),
            other => Err(Error::Validation(format!(
                "unknown distance rule '{other}' (expected 'polyline' or 'at-age')"
            ))),
        }
    }
}

/// One branch: (year, x, y) triples for integer years, strictly
/// increasing in year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub label: String,
    pub points: Vec<(i32, f64, f64)>,
}

/// An embedded synthetic sample kept for cut-slice plots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudPoint {
    pub label: String,
    pub age: i32,
    pub x: f64,
    pub y: f64,
}

/// The assembled tree. Branch order is the canonical tie-break order.
/// The trunk is the control trajectory below the age threshold; it is
/// exported for plots but excluded from classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifespanTree {
    pub format_version: u32,
    pub threshold: i32,
    #[serde(rename = "populations")]
    pub branches: Vec<Branch>,
    pub trunk: Vec<(i32, f64, f64)>,
    pub cloud: Vec<CloudPoint>,
}

/// Ranked classification of one subject.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub subject_id: String,
    pub x: f64,
    pub y: f64,
    pub age: f64,
    /// Per-branch distances in branch order.
    pub distances: Vec<f64>,
    /// Per-branch scores in branch order; sums to 1.
    pub scores: Vec<f64>,
    /// Labels sorted by descending score, ties broken by branch order.
    pub ranking: Vec<String>,
    /// Scores aligned with `ranking`.
    pub ranked_scores: Vec<f64>,
    pub below_threshold: bool,
    pub sex_unknown: bool,
}

/// Build the tree by pushing each branch's trajectory means through the
/// out-of-sample transform, one point per integer year.
pub fn build_tree(
    set: &LifespanModelSet,
    model: &EmbeddingModel,
    samples: &SampleSet,
) -> Result<LifespanTree> {
    if samples.rows.len() != model.training.nrows() {
        return Err(Error::Validation(format!(
            "sample set ({} rows) does not match the embedding training matrix ({} rows)",
            samples.rows.len(),
            model.training.nrows()
        )));
    }

    let mut branches = Vec::with_capacity(set.branches.len());
    for label in &set.branches {
        let cap = set.branch_cap(label)?;
        let mut points = Vec::new();
        for year in set.age_threshold..=cap {
            let point = evaluate_trajectory(set, label, f64::from(year))?;
            let (x, y) = transform(model, &point.values)?;
            points.push((year, x, y));
        }
        if points.is_empty() {
            return Err(Error::InsufficientData(format!(
                "branch '{label}' has no years in range"
            )));
        }
        branches.push(Branch {
            label: label.clone(),
            points,
        });
    }

    // Trunk: control below the threshold, clipped to the control model's
    // fitted range to avoid far extrapolation. Visualization only.
    let control_min = set
        .populations
        .get(&set.control)
        .and_then(|models| models.first())
        .map(|m| m.age_min.ceil() as i32)
        .unwrap_or(1);
    let mut trunk = Vec::new();
    for year in control_min.max(1)..set.age_threshold {
        let point = evaluate_trajectory(set, &set.control, f64::from(year))?;
        let (x, y) = transform(model, &point.values)?;
        trunk.push((year, x, y));
    }

    let cloud = samples
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| CloudPoint {
            label: samples.label_of(row).to_string(),
            age: row.age,
            x: model.embedding[[i, 0]],
            y: model.embedding[[i, 1]],
        })
        .collect();

    Ok(LifespanTree {
        format_version: 1,
        threshold: set.age_threshold,
        branches,
        trunk,
        cloud,
    })
}

/// Normalize squared-distance Gaussian kernels into scores summing to 1.
///
/// Scores are exp(−d²/2) normalized across branches; the minimum squared
/// distance is factored out before exponentiation for numerical range,
/// which leaves the normalized values unchanged. The nearest branch is
/// therefore always exactly representable; a branch whose squared
/// distance exceeds the minimum by more than ~1490 underflows to a score
/// of exactly 0.
pub fn scores_from_distances(distances: &[f64]) -> Result<Vec<f64>> {
    if distances.is_empty() {
        return Err(Error::Domain("no distances to score".into()));
    }
    if distances.iter().any(|d| !d.is_finite() || *d < 0.0) {
        return Err(Error::Domain(
            "distances must be finite and non-negative".into(),
        ));
    }
    let min_sq = distances
        .iter()
        .map(|d| d * d)
        .fold(f64::INFINITY, f64::min);
    let kernels: Vec<f64> = distances
        .iter()
        .map(|d| (-(d * d - min_sq) / 2.0).exp())
        .collect();
    let total: f64 = kernels.iter().sum();
    Ok(kernels.iter().map(|k| k / total).collect())
}

/// Branch indices by descending score; exact ties resolve to the
/// earlier branch (canonical declaration order).
fn rank_by_score(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("finite scores")
            .then(a.cmp(&b))
    });
    order
}

fn branch_distance(branch: &Branch, x: f64, y: f64, age: f64, rule: DistanceRule) -> f64 {
    let d3 = |point: &(i32, f64, f64)| -> f64 {
        let (year, bx, by) = *point;
        ((x - bx).powi(2) + (y - by).powi(2) + (age - f64::from(year)).powi(2)).sqrt()
    };
    match rule {
        DistanceRule::Polyline => branch
            .points
            .iter()
            .map(d3)
            .fold(f64::INFINITY, f64::min),
        DistanceRule::AtAge => {
            let first = branch.points.first().expect("non-empty branch").0;
            let last = branch.points.last().expect("non-empty branch").0;
            let year = (age.round() as i32).clamp(first, last);
            let point = branch
                .points
                .iter()
                .find(|p| p.0 == year)
                .expect("clamped year present");
            d3(point)
        }
    }
}

/// Classify one subject: normalize, project, and rank branches by
/// distance-derived scores. Subjects younger than the threshold are
/// classified but flagged.
pub fn classify(
    tree: &LifespanTree,
    norm: &NormalizationModel,
    model: &EmbeddingModel,
    record: &SubjectRecord,
    rule: DistanceRule,
) -> Result<ClassificationResult> {
    let features = apply_normalization(record, norm)?;
    let (x, y) = transform(model, &features.z)?;
    let age = record.age;

    let distances: Vec<f64> = tree
        .branches
        .iter()
        .map(|b| branch_distance(b, x, y, age, rule))
        .collect();
    let scores = scores_from_distances(&distances)?;

    let order = rank_by_score(&scores);
    let ranking: Vec<String> = order
        .iter()
        .map(|&i| tree.branches[i].label.clone())
        .collect();
    let ranked_scores: Vec<f64> = order.iter().map(|&i| scores[i]).collect();

    Ok(ClassificationResult {
        subject_id: record.subject_id.clone(),
        x,
        y,
        age,
        distances,
        scores,
        ranking,
        ranked_scores,
        below_threshold: age < f64::from(tree.threshold),
        sex_unknown: features.sex_unknown,
    })
}

/// A row of a cut-slice table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceRow {
    pub kind: SliceKind,
    pub label: String,
    pub age: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SliceKind {
    Branch,
    Cloud,
    Test,
}

impl SliceKind {
    fn token(self) -> &'static str {
        match self {
            SliceKind::Branch => "branch",
            SliceKind::Cloud => "cloud",
            SliceKind::Test => "test",
        }
    }
}

/// A projected test subject to overlay on a cut slice.
#[derive(Debug, Clone)]
pub struct TestPoint {
    pub label: String,
    pub age: f64,
    pub x: f64,
    pub y: f64,
}

/// Slice the tree at `age ± window`: branch points, synthetic cloud
/// points, and any supplied test subjects inside the window.
pub fn cut_tree(
    tree: &LifespanTree,
    age: f64,
    window: f64,
    test_points: &[TestPoint],
) -> Result<Vec<SliceRow>> {
    if window < 0.0 {
        return Err(Error::Domain(format!("window {window} must be >= 0")));
    }
    let inside = |a: f64| (a - age).abs() <= window;
    let mut rows = Vec::new();
    for branch in &tree.branches {
        for &(year, x, y) in &branch.points {
            if inside(f64::from(year)) {
                rows.push(SliceRow {
                    kind: SliceKind::Branch,
                    label: branch.label.clone(),
                    age: f64::from(year),
                    x,
                    y,
                });
            }
        }
    }
    for point in &tree.cloud {
        if inside(f64::from(point.age)) {
            rows.push(SliceRow {
                kind: SliceKind::Cloud,
                label: point.label.clone(),
                age: f64::from(point.age),
                x: point.x,
                y: point.y,
            });
        }
    }
    for point in test_points {
        if inside(point.age) {
            rows.push(SliceRow {
                kind: SliceKind::Test,
                label: point.label.clone(),
                age: point.age,
                x: point.x,
                y: point.y,
            });
        }
    }
    Ok(rows)
}

/// Write a cut slice as `kind,label,age,x,y` CSV.
pub fn write_slice_csv(path: &Path, rows: &[SliceRow]) -> Result<()> {
    let file =
        std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = std::io::BufWriter::new(file);
    let io_err = |e: std::io::Error| Error::io(path.display().to_string(), e);
    writeln!(out, "kind,label,age,x,y").map_err(io_err)?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            row.kind.token(),
            row.label,
            row.age,
            row.x,
            row.y
        )
        .map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

const SLICE_PALETTE: [&str; 10] = [
    "#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee", "#aa3377", "#bbbbbb", "#884499",
    "#e07b39", "#117755",
];

/// Render a cut slice as a static SVG scatter with per-label colors.
pub fn write_slice_svg(path: &Path, rows: &[SliceRow]) -> Result<()> {
    let (width, height, margin) = (720.0, 540.0, 50.0);
    let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for row in rows {
        min_x = min_x.min(row.x);
        max_x = max_x.max(row.x);
        min_y = min_y.min(row.y);
        max_y = max_y.max(row.y);
    }
    if rows.is_empty() {
        min_x = 0.0;
        max_x = 1.0;
        min_y = 0.0;
        max_y = 1.0;
    }
    let span_x = (max_x - min_x).max(1e-9);
    let span_y = (max_y - min_y).max(1e-9);
    let sx = |x: f64| margin + (x - min_x) / span_x * (width - 2.0 * margin);
    let sy = |y: f64| height - margin - (y - min_y) / span_y * (height - 2.0 * margin);

    let mut labels: Vec<&str> = Vec::new();
    for row in rows {
        if !labels.contains(&row.label.as_str()) {
            labels.push(&row.label);
        }
    }
    let color_of = |label: &str| {
        let idx = labels.iter().position(|l| *l == label).unwrap_or(0);
        SLICE_PALETTE[idx % SLICE_PALETTE.len()]
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for row in rows {
        let color = color_of(&row.label);
        match row.kind {
            SliceKind::Cloud => svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"{color}\" fill-opacity=\"0.25\"/>\n",
                sx(row.x),
                sy(row.y)
            )),
            SliceKind::Branch => svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"5\" fill=\"{color}\" stroke=\"black\"/>\n",
                sx(row.x),
                sy(row.y)
            )),
            SliceKind::Test => svg.push_str(&format!(
                "<path d=\"M {x0:.2} {y0:.2} L {x1:.2} {y1:.2} M {x0:.2} {y1:.2} L {x1:.2} {y0:.2}\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                x0 = sx(row.x) - 4.0,
                y0 = sy(row.y) - 4.0,
                x1 = sx(row.x) + 4.0,
                y1 = sy(row.y) + 4.0,
            )),
        }
    }
    for (i, label) in labels.iter().enumerate() {
        let y = 20.0 + 16.0 * i as f64;
        svg.push_str(&format!(
            "<circle cx=\"12\" cy=\"{:.1}\" r=\"5\" fill=\"{}\"/><text x=\"22\" y=\"{:.1}\" font-size=\"12\" font-family=\"sans-serif\">{}</text>\n",
            y - 4.0,
            color_of(label),
            y,
            label
        ));
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg).map_err(|e| Error::io(path.display().to_string(), e))
}

impl LifespanTree {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<LifespanTree> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
