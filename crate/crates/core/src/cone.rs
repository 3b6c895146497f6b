//! Quadratic rank-k cones `C = {x : xᵀ Q x ≤ 0}`.
//!
//! A nonsingular symmetric `Q` with `k` negative and `n − k` positive
//! eigenvalues defines a closed cone that is invariant under scalar
//! multiplication, contains the k-dimensional negative eigenspace in its
//! interior, and meets the positive eigenspace only at the origin.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::seed;

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Membership {
    Interior,
    Boundary,
    Exterior,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MembershipClass {
    pub class: Membership,
    /// `xᵀ Q x`.
    pub form_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrderRelation {
    /// `x − y ∈ Int C`
    StronglyOrdered,
    /// `x − y ∈ ∂C`
    Ordered,
    Unordered,
}

/// JSON form of a cone.
///
/// `basis` is a list of rows of an orthogonal matrix whose columns are the
/// eigenvectors matching `eigenvalues` in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeSpec {
    pub eigenvalues: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConeSpec", into = "ConeSpec")]
pub struct QuadraticCone {
    dim: usize,
    rank: usize,
    q_matrix: DMatrix<f64>,
    neg_frame: DMatrix<f64>,
    pos_frame: DMatrix<f64>,
    /// Ascending.
    eigenvalues: Vec<f64>,
    tol: f64,
}

impl QuadraticCone {
    /// Builds `B · diag(eigenvalues) · Bᵀ`; `basis` defaults to the identity.
    pub fn new(eigenvalues: &[f64], basis: Option<&DMatrix<f64>>) -> Result<Self> {
        let n = eigenvalues.len();
        if n < 2 {
            return Err(Error::Validation(format!("cone dimension must be at least 2, got {n}")));
        }
        if let Some(v) = eigenvalues.iter().find(|v| !v.is_finite() || **v == 0.0) {
            return Err(Error::Validation(format!("eigenvalues must be finite and nonzero, got {v}")));
        }
        let negatives = eigenvalues.iter().filter(|v| **v < 0.0).count();
        if negatives == 0 || negatives == n {
            return Err(Error::Signature(format!(
                "need both signs among eigenvalues, got {negatives} negative of {n}"
            )));
        }
        let basis = match basis {
            Some(b) => {
                if b.shape() != (n, n) {
                    return Err(Error::Validation(format!(
                        "basis must be {n}x{n}, got {}x{}",
                        b.nrows(),
                        b.ncols()
                    )));
                }
                let defect = (b.transpose() * b - DMatrix::identity(n, n)).amax();
                if defect > 1e-10 {
                    return Err(Error::Validation(format!(
                        "basis is not orthogonal (max |BᵀB − I| = {defect:e})"
                    )));
                }
                b.clone()
            }
            None => DMatrix::identity(n, n),
        };

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eigenvalues[i].total_cmp(&eigenvalues[j]));
        let sorted: Vec<f64> = order.iter().map(|&i| eigenvalues[i]).collect();
        let cols: Vec<DVector<f64>> = order.iter().map(|&i| basis.column(i).into_owned()).collect();
        let neg_frame = DMatrix::from_columns(&cols[..negatives]);
        let pos_frame = DMatrix::from_columns(&cols[negatives..]);

        let q = &basis * DMatrix::from_diagonal(&DVector::from_column_slice(eigenvalues)) * basis.transpose();
        let q_matrix = linalg::symmetrize(&q);

        Ok(Self {
            dim: n,
            rank: negatives,
            q_matrix,
            neg_frame,
            pos_frame,
            eigenvalues: sorted,
            tol: DEFAULT_TOL,
        })
    }

    /// Builds a cone from an explicit symmetric matrix.
    pub fn from_matrix(q: &DMatrix<f64>) -> Result<Self> {
        let n = q.nrows();
        if q.ncols() != n {
            return Err(Error::Validation("cone matrix must be square".into()));
        }
        let scale = q.amax().max(f64::MIN_POSITIVE);
        if (q - q.transpose()).amax() > 1e-12 * scale {
            return Err(Error::Validation("cone matrix is not symmetric".into()));
        }
        let eig = SymmetricEigen::new(linalg::symmetrize(q));
        let smallest = eig.eigenvalues.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        if smallest <= 1e-14 * scale {
            return Err(Error::Validation("cone matrix is singular".into()));
        }
        let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        Self::new(&values, Some(&eig.eigenvectors))
    }

    pub fn from_spec(spec: &ConeSpec) -> Result<Self> {
        let basis = match &spec.basis {
            Some(rows) => {
                let n = spec.eigenvalues.len();
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::Validation(format!("basis must be {n} rows of {n} entries")));
                }
                Some(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
            }
            None => None,
        };
        if !(spec.tol > 0.0) {
            return Err(Error::Validation(format!("tol must be positive, got {}", spec.tol)));
        }
        Ok(Self::new(&spec.eigenvalues, basis.as_ref())?.with_tol(spec.tol))
    }

    pub fn to_spec(&self) -> ConeSpec {
        let basis = self.eigenbasis();
        let n = self.dim;
        ConeSpec {
            eigenvalues: self.eigenvalues.clone(),
            basis: Some((0..n).map(|i| (0..n).map(|j| basis[(i, j)]).collect()).collect()),
            tol: self.tol,
        }
    }

    /// Same cone with a different default classification tolerance.
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Random orthogonal eigenbasis for the given eigenvalues.
    pub fn random_basis(eigenvalues: &[f64], rng_seed: u64) -> Result<Self> {
        let mut rng = seed::rng(rng_seed);
        let basis = linalg::random_frame(eigenvalues.len(), eigenvalues.len(), &mut rng);
        Self::new(eigenvalues, Some(&basis))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn q_matrix(&self) -> &DMatrix<f64> {
        &self.q_matrix
    }

    pub fn neg_frame(&self) -> &DMatrix<f64> {
        &self.neg_frame
    }

    pub fn pos_frame(&self) -> &DMatrix<f64> {
        &self.pos_frame
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Eigenvectors as columns, ordered like `eigenvalues()`.
    pub fn eigenbasis(&self) -> DMatrix<f64> {
        let mut cols: Vec<DVector<f64>> = self.neg_frame.column_iter().map(|c| c.into_owned()).collect();
        cols.extend(self.pos_frame.column_iter().map(|c| c.into_owned()));
        DMatrix::from_columns(&cols)
    }

    /// `xᵀ Q x`
    pub fn form(&self, x: &[f64]) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.q_matrix[(i, j)] * x[j];
            }
            acc += x[i] * row;
        }
        acc
    }

    pub fn classify(&self, x: &[f64]) -> Result<MembershipClass> {
        self.classify_with_tol(x, self.tol)
    }

    pub fn classify_with_tol(&self, x: &[f64], tol: f64) -> Result<MembershipClass> {
        check_dim(self.dim, x.len())?;
        Ok(self.classify_unchecked(x, tol))
    }

    pub(crate) fn classify_unchecked(&self, x: &[f64], tol: f64) -> MembershipClass {
        let form_value = self.form(x);
        let sq: f64 = x.iter().map(|v| v * v).sum();
        let band = tol * sq;
        let class = if form_value < -band {
            Membership::Interior
        } else if form_value.abs() <= band {
            Membership::Boundary
        } else {
            Membership::Exterior
        };
        MembershipClass { class, form_value }
    }

    pub fn order_relation(&self, x: &[f64], y: &[f64]) -> Result<OrderRelation> {
        self.order_relation_with_tol(x, y, self.tol)
    }

    pub fn order_relation_with_tol(&self, x: &[f64], y: &[f64], tol: f64) -> Result<OrderRelation> {
        check_dim(self.dim, x.len())?;
        check_dim(self.dim, y.len())?;
        let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        Ok(match self.classify_unchecked(&diff, tol).class {
            Membership::Interior => OrderRelation::StronglyOrdered,
            Membership::Boundary => OrderRelation::Ordered,
            Membership::Exterior => OrderRelation::Unordered,
        })
    }

    /// Set-wise check that every `x − y` (x ∈ `u`, y ∈ `v`) lies in `C`.
    pub fn sets_ordered(&self, u: &[Vec<f64>], v: &[Vec<f64>]) -> Result<bool> {
        self.sets_check(u, v, |r| r != OrderRelation::Unordered)
    }

    /// Set-wise check that every `x − y` (x ∈ `u`, y ∈ `v`) lies in `Int C`.
    pub fn sets_strongly_ordered(&self, u: &[Vec<f64>], v: &[Vec<f64>]) -> Result<bool> {
        self.sets_check(u, v, |r| r == OrderRelation::StronglyOrdered)
    }

    fn sets_check(&self, u: &[Vec<f64>], v: &[Vec<f64>], ok: impl Fn(OrderRelation) -> bool) -> Result<bool> {
        for x in u {
            for y in v {
                if !ok(self.order_relation(x, y)?) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// A k-probe: the negative eigenspace, which lies in `Int C ∪ {0}`.
    pub fn probe_subspace(&self) -> &DMatrix<f64> {
        &self.neg_frame
    }

    /// `m` unit vectors on `∂C`, deterministic in `rng_seed`.
    pub fn sample_boundary(&self, m: usize, rng_seed: u64) -> Vec<Vec<f64>> {
        let mut rng = seed::rng(rng_seed);
        (0..m).map(|_| self.boundary_vector(&mut rng)).collect()
    }

    pub(crate) fn boundary_vector<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let k = self.rank;
        let u = linalg::random_unit(k, rng);
        let w = linalg::random_unit(self.dim - k, rng);
        // Form contributions in eigencoordinates: a² Σ λ⁻ u² + b² Σ λ⁺ w² = 0.
        let neg: f64 = u.iter().zip(&self.eigenvalues[..k]).map(|(c, l)| l * c * c).sum();
        let pos: f64 = w.iter().zip(&self.eigenvalues[k..]).map(|(c, l)| l * c * c).sum();
        let a = pos.sqrt();
        let b = (-neg).sqrt();
        let v = &self.neg_frame * (u * a) + &self.pos_frame * (w * b);
        let v = &v / v.norm();
        v.iter().copied().collect()
    }

    /// Random nonzero vector of `C`: a boundary direction tilted toward the
    /// probe by a uniform amount, so both `∂C` and `Int C` are covered.
    pub(crate) fn cone_vector<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let b = DVector::from_vec(self.boundary_vector(rng));
        let p = &self.neg_frame * linalg::random_unit(self.rank, rng);
        let s: f64 = rng.random::<f64>();
        // form(b + s p) = 2 s (b, p)_Q + s² form(p), with form(p) < 0.
        let cross = self.form_bilinear(b.as_slice(), p.as_slice());
        let p = if cross > 0.0 { -p } else { p };
        let v = b + p * s;
        let norm = v.norm();
        v.iter().map(|c| c / norm).collect()
    }

    fn form_bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let xv = DVector::from_column_slice(x);
        let yv = DVector::from_column_slice(y);
        xv.dot(&(&self.q_matrix * yv))
    }

    /// `m` points of `B^P(x, eps) \ {x}` for the probe `P` of this cone.
    pub fn probe_neighborhood(&self, x: &[f64], eps: f64, m: usize, rng_seed: u64) -> Result<Vec<Vec<f64>>> {
        check_dim(self.dim, x.len())?;
        if !(eps > 0.0) {
            return Err(Error::Validation(format!("eps must be positive, got {eps}")));
        }
        let mut rng = seed::rng(rng_seed);
        let k = self.rank;
        let mut out = Vec::with_capacity(m);
        while out.len() < m {
            let dir = linalg::random_unit(k, &mut rng);
            // radius with density ∝ r^{k-1}: uniform in the k-disc
            let r = eps * rng.random::<f64>().powf(1.0 / k as f64);
            if r <= 0.0 || r >= eps {
                continue;
            }
            let offset = &self.neg_frame * (dir * r);
            out.push(x.iter().zip(offset.iter()).map(|(a, b)| a + b).collect());
        }
        Ok(out)
    }
}

impl TryFrom<ConeSpec> for QuadraticCone {
    type Error = Error;

    fn try_from(spec: ConeSpec) -> Result<Self> {
        Self::from_spec(&spec)
    }
}

impl From<QuadraticCone> for ConeSpec {
    fn from(cone: QuadraticCone) -> Self {
        cone.to_spec()
    }
}
