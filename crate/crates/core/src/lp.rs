//! Standard-form LP container shared by the market model and the simplex solver.
//!
//! The matrix is stored column-wise (sparse) because the solver prices columns;
//! rows carry a sense and a label that maps back to the market constraints.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Constraint sense of a structural row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    Eq,
    Le,
    Ge,
}

/// Identifies what a structural row encodes. `t` and `scenario` are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowLabel {
    /// Power balance at (t, ω).
    Balance { t: usize, scenario: usize },
    /// Battery energy bookkeeping at (t, ω).
    Dynamics { t: usize, scenario: usize },
    /// Terminal energy floor for scenario ω.
    Terminal { scenario: usize },
    /// Under-production capped by the day-ahead commitment at (t, ω).
    UpCap { t: usize, scenario: usize },
}

/// Identifies the decision variable a column holds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColLabel {
    DayAheadBid {
        t: usize,
    },
    RtSale {
        t: usize,
        scenario: usize,
    },
    UnderProduction {
        t: usize,
        scenario: usize,
    },
    OverProduction {
        t: usize,
        scenario: usize,
    },
    Charge {
        t: usize,
        scenario: usize,
    },
    Discharge {
        t: usize,
        scenario: usize,
    },
    Energy {
        t: usize,
        scenario: usize,
    },
    /// Free-form label for hand-built LPs and tests.
    Aux(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RowSpec {
    pub label: RowLabel,
    pub sense: RowSense,
    pub rhs: f64,
}

/// Hint for the starting basis of one row, produced by the builders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StartBasis {
    /// Structural column index.
    Column(usize),
    /// The row's own slack/surplus variable.
    RowSlack,
}

/// A maximization LP with bounded variables:
/// max cᵀx  s.t.  Ax {=,≤,≥} b,  lower ≤ x ≤ upper.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpStandardForm {
    /// Objective coefficients (maximize).
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    /// Upper bounds; `f64::INFINITY` means unbounded above.
    pub upper: Vec<f64>,
    /// Sparse columns: `cols[j]` lists `(row, coefficient)` pairs.
    pub cols: Vec<Vec<(usize, f64)>>,
    pub rows: Vec<RowSpec>,
    pub col_labels: Vec<ColLabel>,
    /// Constant added to the objective (covers fixed first-stage revenue).
    pub objective_offset: f64,
    /// Optional feasible starting basis, one entry per row.
    pub basis_hint: Option<Vec<StartBasis>>,
}

impl LpStandardForm {
    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Checks internal consistency (lengths, bound ordering, row references).
    pub fn validate(&self) -> Result<(), String> {
        let n = self.cols.len();
        if self.objective.len() != n || self.lower.len() != n || self.upper.len() != n {
            return Err(format!(
                "column arrays disagree: {} cols, {} obj, {} lower, {} upper",
                n,
                self.objective.len(),
                self.lower.len(),
                self.upper.len()
            ));
        }
        if self.col_labels.len() != n {
            return Err(format!("{} labels for {} columns", self.col_labels.len(), n));
        }
        for (j, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if lo > hi || lo.is_nan() || hi.is_nan() {
                return Err(format!("column {j}: lower {lo} above upper {hi}"));
            }
        }
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, v) in col {
                if i >= self.rows.len() {
                    return Err(format!("column {j} references row {i} of {}", self.rows.len()));
                }
                if !v.is_finite() {
                    return Err(format!("column {j}, row {i}: non-finite coefficient"));
                }
            }
        }
        if let Some(hint) = &self.basis_hint {
            if hint.len() != self.rows.len() {
                return Err(format!(
                    "basis hint covers {} of {} rows",
                    hint.len(),
                    self.rows.len()
                ));
            }
        }
        Ok(())
    }

    /// Fixed-width text dump ("row label | coefficients | rhs") for inspection.
    pub fn dump_text(&self) -> String {
        let mut rows_sparse: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.rows.len()];
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, v) in col {
                rows_sparse[i].push((j, v));
            }
        }
        let mut out = String::new();
        let _ = writeln!(out, "{} columns, {} rows, sense max", self.n_cols(), self.n_rows());
        for (i, spec) in self.rows.iter().enumerate() {
            let mut coeffs = String::new();
            for &(j, v) in &rows_sparse[i] {
                let _ = write!(coeffs, "{:+.4}*{} ", v, label_text(&self.col_labels[j]));
            }
            let sense = match spec.sense {
                RowSense::Eq => "=",
                RowSense::Le => "<=",
                RowSense::Ge => ">=",
            };
            let _ = writeln!(
                out,
                "{:<24} | {:<60} | {} {:.6}",
                format!("{:?}", spec.label),
                coeffs.trim_end(),
                sense,
                spec.rhs
            );
        }
        out
    }
}

fn label_text(label: &ColLabel) -> String {
    match label {
        ColLabel::DayAheadBid { t } => format!("da[{t}]"),
        ColLabel::RtSale { t, scenario } => format!("rt[{t},{scenario}]"),
        ColLabel::UnderProduction { t, scenario } => format!("up[{t},{scenario}]"),
        ColLabel::OverProduction { t, scenario } => format!("op[{t},{scenario}]"),
        ColLabel::Charge { t, scenario } => format!("ch[{t},{scenario}]"),
        ColLabel::Discharge { t, scenario } => format!("dis[{t},{scenario}]"),
        ColLabel::Energy { t, scenario } => format!("e[{t},{scenario}]"),
        ColLabel::Aux(name) => name.clone(),
    }
}
