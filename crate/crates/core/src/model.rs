//! State-space models and their JSON file format.

use crate::linalg::Matrix;
use crate::Error;
use serde::{Deserialize, Serialize};

/// Continuous-time LTI system `ẋ = A x + B u`, `y = C x + D u`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub d: Matrix,
}

impl StateSpace {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, d: Matrix) -> Result<Self, Error> {
        let n = a.nrows();
        let shape_err = |what: &str| Err(Error::Dimension(what.to_string()));
        if a.ncols() != n {
            return shape_err("A must be square");
        }
        if b.nrows() != n {
            return shape_err("B must have as many rows as A");
        }
        if c.ncols() != n {
            return shape_err("C must have as many columns as A");
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return shape_err("D must be outputs x inputs");
        }
        if [&a, &b, &c, &d].iter().any(|m| m.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidArgument("model contains non-finite entries".into()));
        }
        Ok(Self { a, b, c, d })
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            a: rows_of(&self.a),
            b: rows_of(&self.b),
            c: rows_of(&self.c),
            d: rows_of(&self.d),
        };
        serde_json::to_string_pretty(&file).expect("plain numeric data")
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let n = file.a.len();
        let a = matrix_from_rows(&file.a, n)?;
        let b = matrix_from_rows(&file.b, file.b.first().map_or(0, Vec::len))?;
        let c = matrix_from_rows(&file.c, n)?;
        let d = matrix_from_rows(&file.d, file.d.first().map_or(b.ncols(), Vec::len))?;
        Self::new(a, b, c, d)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    d: Vec<Vec<f64>>,
}

/// Row-major nested vectors.
pub fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn matrix_from_rows(rows: &[Vec<f64>], cols: usize) -> Result<Matrix, Error> {
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse("ragged matrix rows".into()));
    }
    Ok(Matrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}
