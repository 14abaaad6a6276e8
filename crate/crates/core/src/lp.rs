//! Thin wrapper over `microlp` for the dense, tiny programs this crate builds.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    maximize: bool,
    objective: Vec<f64>,
    bounds: Vec<(f64, f64)>,
    rows: Vec<(Vec<f64>, Sense, f64)>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub objective: f64,
    pub x: Vec<f64>,
}

impl LinearProgram {
    pub fn maximize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            maximize: true,
            objective,
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); n],
            rows: Vec::new(),
        }
    }

    pub fn minimize(objective: Vec<f64>) -> Self {
        Self {
            maximize: false,
            ..Self::maximize(objective)
        }
    }

    pub fn nonnegative(&mut self, vars: std::ops::Range<usize>) -> &mut Self {
        for v in vars {
            self.bounds[v] = (0.0, f64::INFINITY);
        }
        self
    }

    pub fn row(&mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) -> &mut Self {
        debug_assert_eq!(coeffs.len(), self.objective.len());
        self.rows.push((coeffs, sense, rhs));
        self
    }

    pub fn solve(&self) -> Result<LpSolution> {
        let mut problem = Problem::new(if self.maximize {
            OptimizationDirection::Maximize
        } else {
            OptimizationDirection::Minimize
        });
        let vars: Vec<_> = self
            .objective
            .iter()
            .zip(&self.bounds)
            .map(|(&c, &b)| problem.add_var(c, b))
            .collect();
        for (coeffs, sense, rhs) in &self.rows {
            let terms: Vec<_> = coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(i, &c)| (vars[i], c))
                .collect();
            let op = match sense {
                Sense::Le => ComparisonOp::Le,
                Sense::Eq => ComparisonOp::Eq,
            };
            problem.add_constraint(terms, op, *rhs);
        }
        let outcome = problem.solve().map_err(|e| {
            Error::Lp(format!(
                "{e} ({} variables, {} constraints)",
                self.objective.len(),
                self.rows.len()
            ))
        })?;
        let solution = outcome
            .into_solution()
            .map_err(|_| Error::Lp("solve interrupted".into()))?;
        Ok(LpSolution {
            objective: solution.objective(),
            x: vars.iter().map(|&v| solution.var_value(v)).collect(),
        })
    }
}
