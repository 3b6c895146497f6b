//! Vector-field models `ẋ = F(x)`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An autonomous vector field on `R^n`.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;

    fn name(&self) -> &str;

    fn eval(&self, x: &[f64], out: &mut [f64]);

    /// Analytic Jacobian `DF(x)`, if the model provides one.
    fn jacobian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let _ = x;
        None
    }
}

/// Shared handle to a model.
pub type Model = Arc<dyn VectorField>;

impl fmt::Debug for dyn VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VectorField({}, dim {})", self.name(), self.dim())
    }
}

pub fn eval(model: &dyn VectorField, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; model.dim()];
    model.eval(x, &mut out);
    out
}

/// `DF(x)`: analytic when available, otherwise central differences with
/// step `1e-6 · (1 + ‖x‖)`.
pub fn jacobian(model: &dyn VectorField, x: &[f64]) -> DMatrix<f64> {
    model.jacobian(x).unwrap_or_else(|| finite_difference_jacobian(model, x))
}

pub fn finite_difference_jacobian(model: &dyn VectorField, x: &[f64]) -> DMatrix<f64> {
    let n = model.dim();
    let h = 1e-6 * (1.0 + crate::linalg::norm(x));
    let mut jac = DMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    for j in 0..n {
        xp[j] = x[j] + h;
        model.eval(&xp, &mut fp);
        xp[j] = x[j] - h;
        model.eval(&xp, &mut fm);
        xp[j] = x[j];
        for i in 0..n {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

type FieldFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;
type JacobianFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;

/// Model built from closures.
pub struct FnModel {
    name: String,
    dim: usize,
    field: Box<FieldFn>,
    jac: Option<Box<JacobianFn>>,
}

impl FnModel {
    pub fn new(name: impl Into<String>, dim: usize, field: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        Self { name: name.into(), dim, field: Box::new(field), jac: None }
    }

    pub fn with_jacobian(mut self, jac: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.jac = Some(Box::new(jac));
        self
    }

    /// `ẋ = A x`.
    pub fn linear(name: impl Into<String>, a: DMatrix<f64>) -> Self {
        assert!(a.is_square());
        let n = a.nrows();
        let a_field = a.clone();
        Self::new(name, n, move |x, out| {
            for i in 0..n {
                out[i] = (0..n).map(|j| a_field[(i, j)] * x[j]).sum();
            }
        })
        .with_jacobian(move |_| a.clone())
    }

    pub fn into_model(self) -> Model {
        Arc::new(self)
    }
}

impl VectorField for FnModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        (self.field)(x, out)
    }

    fn jacobian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        self.jac.as_ref().map(|j| j(x))
    }
}

/// One term `coefficient · Π x_i^{exponents_i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub coefficient: f64,
    pub exponents: Vec<u32>,
}

impl Monomial {
    pub fn new(coefficient: f64, exponents: &[u32]) -> Self {
        Self { coefficient, exponents: exponents.to_vec() }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.exponents.iter().zip(x).fold(self.coefficient, |acc, (e, v)| acc * v.powi(*e as i32))
    }

    fn partial(&self, x: &[f64], j: usize) -> f64 {
        let e = self.exponents[j];
        if e == 0 {
            return 0.0;
        }
        let mut acc = self.coefficient * e as f64;
        for (i, (ei, v)) in self.exponents.iter().zip(x).enumerate() {
            let p = if i == j { ei - 1 } else { *ei };
            acc *= v.powi(p as i32);
        }
        acc
    }
}

/// Polynomial vector field: one list of monomials per output coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialModel {
    name: String,
    terms: Vec<Vec<Monomial>>,
}

impl PolynomialModel {
    pub fn new(name: impl Into<String>, terms: Vec<Vec<Monomial>>) -> Result<Self> {
        let n = terms.len();
        if n == 0 {
            return Err(Error::Validation("polynomial model needs at least one coordinate".into()));
        }
        for (i, row) in terms.iter().enumerate() {
            for m in row {
                if m.exponents.len() != n {
                    return Err(Error::Validation(format!(
                        "coordinate {i}: monomial has {} exponents, expected {n}",
                        m.exponents.len()
                    )));
                }
                if !m.coefficient.is_finite() {
                    return Err(Error::Validation(format!("coordinate {i}: non-finite coefficient")));
                }
            }
        }
        Ok(Self { name: name.into(), terms })
    }

    pub fn terms(&self) -> &[Vec<Monomial>] {
        &self.terms
    }
}

impl VectorField for PolynomialModel {
    fn dim(&self) -> usize {
        self.terms.len()
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.terms) {
            *o = row.iter().map(|m| m.eval(x)).sum();
        }
    }

    fn jacobian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let n = self.dim();
        Some(DMatrix::from_fn(n, n, |i, j| self.terms[i].iter().map(|m| m.partial(x, j)).sum()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Builtin,
    Polynomial,
}

/// JSON description of a model.
///
/// `builtin` refers to a zoo entry by `name` with optional numeric `params`;
/// `polynomial` lists, per output coordinate, monomials with exponent tuples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<Vec<Monomial>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
}

impl ModelSpec {
    pub fn builtin(name: &str) -> Self {
        Self { name: name.to_string(), kind: ModelKind::Builtin, coefficients: None, params: BTreeMap::new() }
    }

    pub fn build(&self) -> Result<Model> {
        match self.kind {
            ModelKind::Builtin => {
                if self.coefficients.is_some() {
                    return Err(Error::Validation("builtin models take `params`, not `coefficients`".into()));
                }
                Ok(crate::zoo::get_model_with(&self.name, &self.params)?.model)
            }
            ModelKind::Polynomial => {
                let terms = self
                    .coefficients
                    .clone()
                    .ok_or_else(|| Error::Validation("polynomial model requires `coefficients`".into()))?;
                Ok(Arc::new(PolynomialModel::new(self.name.clone(), terms)?))
            }
        }
    }
}
