//! Dense matrix exponential and the Lie–Trotter product error.

use crate::error::{Error, Result};
use nalgebra::DMatrix;

pub const MAX_TROTTER_DIM: usize = 64;

/// `e^A` by scaling and squaring with a degree-18 Taylor polynomial.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let dim = a.nrows();
    let norm = a.iter().map(|x| x.abs()).fold(0.0, f64::max) * dim as f64;
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a / f64::powi(2.0, squarings);
    let mut term = DMatrix::<f64>::identity(dim, dim);
    let mut sum = term.clone();
    for k in 1..=18 {
        term = &term * &scaled / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Largest singular value.
pub fn operator_norm(a: &DMatrix<f64>) -> f64 {
    a.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// `‖e^{t(A+B)} - [e^{tA/n} e^{tB/n}]^n‖` in the operator norm.
pub fn trotter_compare(a: &DMatrix<f64>, b: &DMatrix<f64>, t: f64, n: usize) -> Result<f64> {
    if !a.is_square() || !b.is_square() || a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "need equal square matrices, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    if a.nrows() > MAX_TROTTER_DIM {
        return Err(Error::Dimension(format!("dimension {} exceeds {MAX_TROTTER_DIM}", a.nrows())));
    }
    if n == 0 {
        return Err(Error::Domain("product needs n >= 1 factors".into()));
    }
    let exact = expm(&((a + b) * t));
    let step = expm(&(a * (t / n as f64))) * expm(&(b * (t / n as f64)));
    let mut prod = DMatrix::<f64>::identity(a.nrows(), a.nrows());
    for _ in 0..n {
        prod = &prod * &step;
    }
    Ok(operator_norm(&(exact - prod)))
}
