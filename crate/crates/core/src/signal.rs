//! The signal container shared by every module.
//!
//! A [`Signal`] is a finite real sequence or a row-major 2D grid. Whenever a
//! matrix operator is applied, 2D signals are scanned lexicographically
//! (row by row) into vectors, which is simply the storage order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    D1(usize),
    D2 { rows: usize, cols: usize },
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::D1(n) => n,
            Shape::D2 { rows, cols } => rows * cols,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(rows, cols)` with 1D signals viewed as a single row.
    pub fn grid(&self) -> (usize, usize) {
        match *self {
            Shape::D1(n) => (1, n),
            Shape::D2 { rows, cols } => (rows, cols),
        }
    }
}

/// Nominal value range of a signal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// Images in `[0, 1]`; clamped only when written to 8-bit files.
    Unit,
    /// Sampling intermediates and noisy data.
    #[default]
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    data: Vec<f64>,
    shape: Shape,
    domain: Domain,
}

impl Signal {
    pub fn new(data: Vec<f64>, shape: Shape) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::shape(shape, data.len()));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid("data", format!("entry {i} is not finite")));
        }
        Ok(Signal {
            data,
            shape,
            domain: Domain::Unbounded,
        })
    }

    pub fn from_vec(data: Vec<f64>) -> Result<Self> {
        let n = data.len();
        Signal::new(data, Shape::D1(n))
    }

    pub fn from_grid(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Signal::new(data, Shape::D2 { rows, cols })
    }

    pub fn zeros(shape: Shape) -> Self {
        Signal::filled(shape, 0.0)
    }

    pub fn filled(shape: Shape, value: f64) -> Self {
        Signal {
            data: vec![value; shape.len()],
            shape,
            domain: Domain::Unbounded,
        }
    }

    /// Builds a signal with the same shape and domain as `self`. Finiteness is
    /// not checked; callers that need it use [`Signal::is_finite`].
    pub fn like(&self, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Signal {
            data,
            shape: self.shape,
            domain: self.domain,
        }
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Signal {
        self.like(self.data.iter().map(|&v| f(v)).collect())
    }

    pub(crate) fn check_same_len(&self, other: &Signal) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::shape(self.shape, other.shape));
        }
        Ok(())
    }

    /// `a·self + b·other`, element-wise.
    pub fn lincomb(&self, a: f64, other: &Signal, b: f64) -> Result<Signal> {
        self.check_same_len(other)?;
        Ok(self.like(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        ))
    }

    pub fn add(&self, other: &Signal) -> Result<Signal> {
        self.check_same_len(other)?;
        Ok(self.like(self.data.iter().zip(&other.data).map(|(x, y)| x + y).collect()))
    }

    pub fn sub(&self, other: &Signal) -> Result<Signal> {
        self.check_same_len(other)?;
        Ok(self.like(self.data.iter().zip(&other.data).map(|(x, y)| x - y).collect()))
    }

    pub fn scale(&self, c: f64) -> Signal {
        self.map(|v| c * v)
    }

    pub fn dot(&self, other: &Signal) -> Result<f64> {
        self.check_same_len(other)?;
        Ok(dot(&self.data, &other.data))
    }

    pub fn norm(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }

    /// `‖self − other‖_∞`.
    pub fn max_abs_diff(&self, other: &Signal) -> Result<f64> {
        self.check_same_len(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}
