//! Template constraint matrices.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::formula::{write_linear, LinExpr, Var};
use crate::numeric::Rat;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("template row {row} has {got} coefficients, expected {expected}")]
    Width { row: usize, got: usize, expected: usize },
    #[error("template has no rows")]
    Empty,
    #[error("template row {0} is all zeros")]
    ZeroRow(usize),
}

/// An `m × n` matrix `T`; row `j` is the linear form bounded by the `j`-th
/// component of an abstract value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    vars: Vec<String>,
    rows: Vec<Vec<Rat>>,
    labels: Vec<String>,
}

struct RowLabel<'a>(&'a [Rat], &'a [String]);

impl fmt::Display for RowLabel<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let coeffs: BTreeMap<Var, Rat> = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (Var::Pre(i), c.clone()))
            .collect();
        write_linear(f, &coeffs, self.1)
    }
}

impl Template {
    pub fn new(vars: Vec<String>, rows: Vec<Vec<Rat>>) -> Result<Template, TemplateError> {
        if rows.is_empty() {
            return Err(TemplateError::Empty);
        }
        for (row, r) in rows.iter().enumerate() {
            if r.len() != vars.len() {
                return Err(TemplateError::Width {
                    row,
                    got: r.len(),
                    expected: vars.len(),
                });
            }
            if r.iter().all(Rat::is_zero) {
                return Err(TemplateError::ZeroRow(row));
            }
        }
        let labels = rows.iter().map(|r| RowLabel(r, &vars).to_string()).collect();
        Ok(Template { vars, rows, labels })
    }

    /// Rows `x_i` and `-x_i` for every variable.
    pub fn interval(vars: Vec<String>) -> Result<Template, TemplateError> {
        let n = vars.len();
        let mut rows = Vec::new();
        for i in 0..n {
            for sign in [1, -1] {
                let mut r = vec![Rat::zero(); n];
                r[i] = Rat::from(sign);
                rows.push(r);
            }
        }
        Template::new(vars, rows)
    }

    /// Interval rows followed by `±x_i ± x_j` for all `i < j`.
    pub fn octagon(vars: Vec<String>) -> Result<Template, TemplateError> {
        let n = vars.len();
        let mut rows = Template::interval(vars.clone()).map(|t| t.rows).unwrap_or_default();
        for i in 0..n {
            for j in i + 1..n {
                for (si, sj) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                    let mut r = vec![Rat::zero(); n];
                    r[i] = Rat::from(si);
                    r[j] = Rat::from(sj);
                    rows.push(r);
                }
            }
        }
        Template::new(vars, rows)
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn row(&self, j: usize) -> &[Rat] {
        &self.rows[j]
    }

    pub fn rows(&self) -> &[Vec<Rat>] {
        &self.rows
    }

    pub fn label(&self, j: usize) -> &str {
        &self.labels[j]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// `T_j · x` with `x_i` mapped through `var`.
    pub fn row_expr(&self, j: usize, var: impl Fn(usize) -> Var) -> LinExpr {
        let mut e = LinExpr::zero();
        for (i, c) in self.rows[j].iter().enumerate() {
            e.add_term(var(i), c.clone());
        }
        e
    }

    pub fn row_value(&self, j: usize, point: &[Rat]) -> Rat {
        self.rows[j].iter().zip(point).map(|(c, x)| c * x).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn interval_rows_and_labels() {
        let t = Template::interval(names(2)).unwrap();
        assert_eq!(t.num_rows(), 4);
        assert_eq!(t.labels(), ["x1", "-x1", "x2", "-x2"]);
    }

    #[test]
    fn octagon_row_count() {
        let t = Template::octagon(names(3)).unwrap();
        assert_eq!(t.num_rows(), 6 + 4 * 3);
        assert_eq!(t.label(6), "x1 + x2");
        assert_eq!(t.label(9), "-x1 - x2");
    }

    #[test]
    fn width_is_checked() {
        let err = Template::new(names(2), vec![vec![Rat::one()]]).unwrap_err();
        assert_eq!(
            err,
            TemplateError::Width {
                row: 0,
                got: 1,
                expected: 2
            }
        );
    }

    #[test]
    fn zero_rows_are_rejected() {
        let err = Template::new(names(1), vec![vec![Rat::zero()]]).unwrap_err();
        assert_eq!(err, TemplateError::ZeroRow(0));
    }

    #[test]
    fn fractional_label() {
        let t = Template::new(names(2), vec![vec![Rat::new(1, 2), Rat::from(-3)]]).unwrap();
        assert_eq!(t.label(0), "(1/2)*x1 - 3*x2");
    }
}
