use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::glm::Family;
use crate::linalg::Matrix;

/// Covariates, responses and a family tag. When `has_intercept` is set,
/// column 0 of `x` is the all-ones intercept column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Matrix,
    y: Vec<f64>,
    family: Family,
    has_intercept: bool,
}

impl Dataset {
    /// Validates shapes, finiteness and the response encoding (`±1` for
    /// binary families, counts for Poisson).
    pub fn new(x: Matrix, y: Vec<f64>, family: Family, has_intercept: bool) -> Result<Self> {
        let (n, p) = (x.rows(), x.cols());
        if y.len() != n {
            return Err(Error::DimensionMismatch(format!("{n} covariate rows but {} responses", y.len())));
        }
        if p == 0 {
            return Err(Error::InvalidDataset("no covariates".into()));
        }
        if n < p + 1 {
            return Err(Error::InvalidDataset(format!("n >= p+1 required (n = {n}, p = {p})")));
        }
        for i in 0..n {
            if let Some(j) = x.row(i).iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!("non-finite covariate at row {i}, column {j}")));
            }
            if !family.is_valid_response(y[i]) {
                return Err(Error::InvalidDataset(format!(
                    "response {} at row {i} is not valid for the {family} family",
                    y[i]
                )));
            }
            if has_intercept && x[(i, 0)] != 1.0 {
                return Err(Error::InvalidDataset(format!("intercept column is not 1 at row {i}")));
            }
        }
        Ok(Dataset { x, y, family, has_intercept })
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn has_intercept(&self) -> bool {
        self.has_intercept
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    /// Index of the intercept coordinate, if any.
    pub fn intercept_index(&self) -> Option<usize> {
        self.has_intercept.then_some(0)
    }

    /// Same covariates, new responses.
    pub fn with_response(&self, y: Vec<f64>) -> Result<Dataset> {
        Dataset::new(self.x.clone(), y, self.family, self.has_intercept)
    }

    /// Rows in the given order (duplicates allowed).
    pub fn select_rows(&self, idx: &[usize]) -> Result<Dataset> {
        let y = idx.iter().map(|&i| self.y[i]).collect();
        Dataset::new(self.x.select_rows(idx), y, self.family, self.has_intercept)
    }

    pub fn into_parts(self) -> (Matrix, Vec<f64>, Family, bool) {
        (self.x, self.y, self.family, self.has_intercept)
    }
}
