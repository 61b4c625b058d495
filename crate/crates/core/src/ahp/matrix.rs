use serde::{Deserialize, Serialize};

use super::AhpError;

pub const MIN_ORDER: usize = 2;
pub const MAX_ORDER: usize = 10;

/// Largest |a(i,j)·a(j,i) − 1| for which a pair still counts as reciprocal.
pub const RECIPROCITY_TOLERANCE: f64 = 1e-6;

/// Absolute slack when matching an entry against the scale. Judgments are
/// usually transcribed to three decimals (0.333 for 1/3, 0.166 for 1/6).
pub const SCALE_TOLERANCE: f64 = 1e-3;

/// The 1–9 pairwise importance scale and its reciprocals.
#[derive(Debug, Clone, Copy, Default)]
pub struct SaatyScale;

impl SaatyScale {
    /// Odd anchors 1, 3, 5, 7, 9 with 2, 4, 6, 8 as intermediates.
    pub const VALUES: [f64; 9] = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0];

    pub fn contains(value: f64) -> bool {
        if !value.is_finite() || value <= 0.0 {
            return false;
        }
        Self::VALUES
            .iter()
            .any(|&v| (value - v).abs() <= SCALE_TOLERANCE || (value - 1.0 / v).abs() <= SCALE_TOLERANCE)
    }
}

/// Location and value of a matrix entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// |a(i,j)·a(j,i) − 1| for one unordered pair `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReciprocityResidual {
    pub row: usize,
    pub col: usize,
    pub residual: f64,
}

/// Everything [`validate_matrix`] found wrong with a candidate matrix.
///
/// Positivity and diagonal problems are structural and make the matrix
/// unusable. Reciprocity and scale problems are warnings unless the report
/// was produced with `strict_scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub order: usize,
    pub strict_scale: bool,
    pub positivity_violations: Vec<Cell>,
    pub diagonal_violations: Vec<Cell>,
    pub reciprocity_residuals: Vec<ReciprocityResidual>,
    pub max_reciprocity_residual: f64,
    pub reciprocal: bool,
    pub scale_violations: Vec<Cell>,
}

impl ValidationReport {
    pub fn structurally_valid(&self) -> bool {
        self.positivity_violations.is_empty() && self.diagonal_violations.is_empty()
    }

    pub fn scale_conforming(&self) -> bool {
        self.scale_violations.is_empty()
    }

    pub fn reciprocity_violations(&self) -> impl Iterator<Item = &ReciprocityResidual> {
        self.reciprocity_residuals
            .iter()
            .filter(|r| r.residual > RECIPROCITY_TOLERANCE)
    }

    /// Structural validity, plus reciprocity and scale conformance when strict.
    pub fn is_valid(&self) -> bool {
        self.structurally_valid()
            && (!self.strict_scale || (self.reciprocal && self.scale_conforming()))
    }

    /// Problems that make the matrix unusable under the report's strictness.
    pub fn errors(&self, labels: &[String]) -> Vec<String> {
        let mut out = Vec::new();
        for c in &self.positivity_violations {
            out.push(format!(
                "entry ({}, {}) = {} is not strictly positive",
                label(labels, c.row),
                label(labels, c.col),
                c.value
            ));
        }
        for c in &self.diagonal_violations {
            out.push(format!(
                "diagonal entry {} = {} must be exactly 1",
                label(labels, c.row),
                c.value
            ));
        }
        if self.strict_scale {
            out.extend(self.soft_issues(labels));
        }
        out
    }

    /// Reciprocity and scale issues that are tolerated in non-strict mode.
    pub fn warnings(&self, labels: &[String]) -> Vec<String> {
        if self.strict_scale {
            Vec::new()
        } else {
            self.soft_issues(labels)
        }
    }

    fn soft_issues(&self, labels: &[String]) -> Vec<String> {
        let mut out = Vec::new();
        for r in self.reciprocity_violations() {
            out.push(format!(
                "reciprocity violated at ({}, {}): a(i,j)·a(j,i) differs from 1 by {:.6}",
                label(labels, r.row),
                label(labels, r.col),
                r.residual
            ));
        }
        for c in &self.scale_violations {
            out.push(format!(
                "entry ({}, {}) = {} is outside the 1-9 scale and its reciprocals",
                label(labels, c.row),
                label(labels, c.col),
                c.value
            ));
        }
        out
    }
}

fn label(labels: &[String], i: usize) -> String {
    labels.get(i).cloned().unwrap_or_else(|| i.to_string())
}

fn check_shape(rows: &[Vec<f64>]) -> Result<usize, AhpError> {
    let n = rows.len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(AhpError::NotSquare {
                row: i,
                len: row.len(),
                expected: n,
            });
        }
    }
    if !(MIN_ORDER..=MAX_ORDER).contains(&n) {
        return Err(AhpError::Order(n));
    }
    Ok(n)
}

/// Inspects a candidate matrix without modifying it.
///
/// Only shape problems are returned as errors; everything else is recorded
/// in the report so callers can decide what to reject.
#[allow(clippy::needless_range_loop)]
pub fn validate_matrix(rows: &[Vec<f64>], strict_scale: bool) -> Result<ValidationReport, AhpError> {
    let n = check_shape(rows)?;
    let mut positivity_violations = Vec::new();
    let mut diagonal_violations = Vec::new();
    let mut scale_violations = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        for (j, &value) in row.iter().enumerate() {
            let cell = Cell { row: i, col: j, value };
            if !(value.is_finite() && value > 0.0) {
                positivity_violations.push(cell);
            }
            if i == j && value != 1.0 {
                diagonal_violations.push(cell);
            }
            if i != j && !SaatyScale::contains(value) {
                scale_violations.push(cell);
            }
        }
    }

    let mut reciprocity_residuals = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let residual = (rows[i][j] * rows[j][i] - 1.0).abs();
            reciprocity_residuals.push(ReciprocityResidual {
                row: i,
                col: j,
                residual: if residual.is_nan() { f64::INFINITY } else { residual },
            });
        }
    }
    let max_reciprocity_residual = reciprocity_residuals
        .iter()
        .map(|r| r.residual)
        .fold(0.0, f64::max);

    Ok(ValidationReport {
        order: n,
        strict_scale,
        positivity_violations,
        diagonal_violations,
        reciprocity_residuals,
        max_reciprocity_residual,
        reciprocal: max_reciprocity_residual <= RECIPROCITY_TOLERANCE,
        scale_violations,
    })
}

/// Square positive pairwise-comparison matrix with unit diagonal.
///
/// Construction rejects structural problems only; reciprocity and scale
/// conformance are reported by [`JudgmentMatrix::validation`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct JudgmentMatrix {
    criteria: Vec<String>,
    rows: Vec<Vec<f64>>,
    reciprocal: bool,
}

#[derive(Serialize, Deserialize)]
struct RawMatrix {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    criteria: Option<Vec<String>>,
    entries: Vec<Vec<f64>>,
}

impl TryFrom<RawMatrix> for JudgmentMatrix {
    type Error = AhpError;

    fn try_from(raw: RawMatrix) -> Result<Self, Self::Error> {
        match raw.criteria {
            Some(c) => JudgmentMatrix::with_criteria(c, raw.entries),
            None => JudgmentMatrix::from_rows(raw.entries),
        }
    }
}

impl From<JudgmentMatrix> for RawMatrix {
    fn from(m: JudgmentMatrix) -> Self {
        RawMatrix {
            criteria: Some(m.criteria),
            entries: m.rows,
        }
    }
}

impl JudgmentMatrix {
    /// Builds a matrix labelled `C1..Cn`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, AhpError> {
        let labels = (1..=rows.len()).map(|i| format!("C{i}")).collect();
        Self::with_criteria(labels, rows)
    }

    pub fn with_criteria(criteria: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, AhpError> {
        let report = validate_matrix(&rows, false)?;
        if criteria.len() != report.order {
            return Err(AhpError::LabelCount {
                labels: criteria.len(),
                order: report.order,
            });
        }
        if !report.structurally_valid() {
            return Err(AhpError::Invalid(report.errors(&criteria).join("; ")));
        }
        Ok(Self {
            criteria,
            rows,
            reciprocal: report.reciprocal,
        })
    }

    pub fn order(&self) -> usize {
        self.rows.len()
    }

    pub fn criteria(&self) -> &[String] {
        &self.criteria
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    /// True when every pair satisfies |a(i,j)·a(j,i) − 1| ≤ 1e-6.
    pub fn is_reciprocal(&self) -> bool {
        self.reciprocal
    }

    pub fn validation(&self, strict_scale: bool) -> ValidationReport {
        validate_matrix(&self.rows, strict_scale).expect("shape checked at construction")
    }

    /// Builds the perfectly consistent matrix a(i,j) = w(i)/w(j).
    pub fn from_priorities(weights: &[f64]) -> Result<Self, AhpError> {
        let rows = weights
            .iter()
            .map(|wi| weights.iter().map(|wj| wi / wj).collect())
            .collect();
        Self::from_rows(rows)
    }

    /// y = M·x
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}
