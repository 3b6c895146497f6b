//! Built-in models with closed-form facts used as oracles.
//!
//! | name | system |
//! |------|--------|
//! | `linear_diag` | `ẋ = diag(−1, −1, −3) x` |
//! | `limit_cycle_3d` | planar Hopf normal form `r' = r(1 − r²), θ' = 1` with `ż = −c z` |
//! | `cyclic_feedback_3d` | `ẋ₁ = −x₁ − tanh(g x₃)`, `ẋ₂ = −x₂ + tanh(g x₁)`, `ẋ₃ = −x₃ + tanh(g x₂)` |
//! | `may_leonard` | `ẋᵢ = xᵢ(1 − xᵢ − α x_{i+1} − β x_{i+2})`, indices mod 3 |
//! | `rotation_counterexample` | `ẋ = A x`, `A` the generator of rotations in the (e₁, e₃) plane |

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::cone::QuadraticCone;
use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::model::{FnModel, Model, ModelKind, ModelSpec, Monomial};

pub const NAMES: [&str; 5] = ["linear_diag", "limit_cycle_3d", "cyclic_feedback_3d", "may_leonard", "rotation_counterexample"];

pub const LIMIT_CYCLE_DEFAULT_C: f64 = 25.0;
pub const CYCLIC_DEFAULT_GAIN: f64 = 4.0;
pub const MAY_LEONARD_DEFAULT: (f64, f64) = (0.8, 1.3);

/// Documented closed-form properties of a zoo model.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ZooFacts {
    /// Isolated equilibria inside the default box.
    pub equilibria: Vec<Vec<f64>>,
    /// Period of the attracting closed orbit, if there is one.
    pub period: Option<f64>,
    /// Lyapunov exponents along the reference orbit `reference_point`.
    pub exponents: Option<Vec<f64>>,
    pub reference_point: Option<Vec<f64>>,
    /// Whether the recommended cone certifies cooperativity; `None` if not asserted.
    pub cooperative: Option<bool>,
    pub notes: &'static str,
}

#[derive(Debug, Clone)]
pub struct ZooEntry {
    pub name: &'static str,
    pub model: Model,
    pub recommended_cone: QuadraticCone,
    /// Constant multiplier for the Smith matrix inequality, when one is known.
    pub recommended_lambda: Option<f64>,
    pub facts: ZooFacts,
    pub default_box: BoxDomain,
    /// Integration time for orbit classification.
    pub sweep_horizon: f64,
    spec: ModelSpec,
}

impl ZooEntry {
    /// Reproducible JSON description (polynomial coefficients when the field
    /// is polynomial, otherwise the builtin name with its parameters).
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }
}

pub fn get_model(name: &str) -> Result<ZooEntry> {
    get_model_with(name, &BTreeMap::new())
}

pub fn get_model_with(name: &str, params: &BTreeMap<String, f64>) -> Result<ZooEntry> {
    let allowed: &[&str] = match name {
        "linear_diag" | "rotation_counterexample" => &[],
        "limit_cycle_3d" => &["c"],
        "cyclic_feedback_3d" => &["gain"],
        "may_leonard" => &["alpha", "beta"],
        _ => return Err(Error::UnknownModel(name.to_string())),
    };
    if let Some(bad) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::Validation(format!("model `{name}` has no parameter `{bad}` (allowed: {allowed:?})")));
    }
    let get = |key: &str, default: f64| params.get(key).copied().unwrap_or(default);
    match name {
        "linear_diag" => Ok(linear_diag()),
        "limit_cycle_3d" => limit_cycle_3d(get("c", LIMIT_CYCLE_DEFAULT_C)),
        "cyclic_feedback_3d" => cyclic_feedback_3d(get("gain", CYCLIC_DEFAULT_GAIN)),
        "may_leonard" => may_leonard(get("alpha", MAY_LEONARD_DEFAULT.0), get("beta", MAY_LEONARD_DEFAULT.1)),
        _ => Ok(rotation_counterexample()),
    }
}

fn standard_cone() -> QuadraticCone {
    QuadraticCone::new(&[-1.0, -1.0, 1.0], None).expect("valid signature")
}

/// Cone whose single positive direction is `axis`.
fn axis_cone(axis: [f64; 3]) -> QuadraticCone {
    let a = DVector::from_row_slice(&axis).normalize();
    // complete `a` to an orthonormal basis
    let helper = if a[0].abs() < 0.9 { DVector::from_row_slice(&[1.0, 0.0, 0.0]) } else { DVector::from_row_slice(&[0.0, 1.0, 0.0]) };
    let u = (&helper - &a * a.dot(&helper)).normalize();
    let w = a.cross(&u);
    let basis = DMatrix::from_columns(&[u, w, a]);
    QuadraticCone::new(&[-1.0, -1.0, 1.0], Some(&basis)).expect("valid signature")
}

fn polynomial_spec(name: &str, terms: Vec<Vec<Monomial>>) -> ModelSpec {
    ModelSpec { name: name.to_string(), kind: ModelKind::Polynomial, coefficients: Some(terms), params: BTreeMap::new() }
}

fn linear_terms(a: &DMatrix<f64>) -> Vec<Vec<Monomial>> {
    let n = a.nrows();
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| a[(i, j)] != 0.0)
                .map(|j| {
                    let mut e = vec![0; n];
                    e[j] = 1;
                    Monomial { coefficient: a[(i, j)], exponents: e }
                })
                .collect()
        })
        .collect()
}

pub fn linear_diag() -> ZooEntry {
    let a = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -1.0, -3.0]));
    ZooEntry {
        name: "linear_diag",
        spec: polynomial_spec("linear_diag", linear_terms(&a)),
        model: FnModel::linear("linear_diag", a).into_model(),
        recommended_cone: standard_cone(),
        recommended_lambda: Some(2.5),
        facts: ZooFacts {
            equilibria: vec![vec![0.0; 3]],
            period: None,
            exponents: Some(vec![-1.0, -1.0, -3.0]),
            reference_point: Some(vec![1.0, 1.0, 1.0]),
            cooperative: Some(true),
            notes: "globally stable; Smith matrix with λ = 2.5 is diag(−0.5, −0.5, −3.5)",
        },
        default_box: BoxDomain::cube(3, -2.0, 2.0),
        sweep_horizon: 100.0,
    }
}

/// Largest `6 r² − 2` over `[−2, 2]³` (r² = x² + y² ≤ 8).
const LIMIT_CYCLE_BOX_BOUND: f64 = 46.0;

pub fn limit_cycle_3d(c: f64) -> Result<ZooEntry> {
    if !(c > 0.0) {
        return Err(Error::Validation(format!("limit_cycle_3d needs c > 0, got {c}")));
    }
    let model = FnModel::new("limit_cycle_3d", 3, move |x, out| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        out[0] = x[0] - x[1] - x[0] * r2;
        out[1] = x[0] + x[1] - x[1] * r2;
        out[2] = -c * x[2];
    })
    .with_jacobian(move |x| {
        let (a, b) = (x[0], x[1]);
        DMatrix::from_row_slice(
            3,
            3,
            &[
                1.0 - 3.0 * a * a - b * b,
                -1.0 - 2.0 * a * b,
                0.0,
                1.0 - 2.0 * a * b,
                1.0 - a * a - 3.0 * b * b,
                0.0,
                0.0,
                0.0,
                -c,
            ],
        )
    });
    let terms = vec![
        vec![
            Monomial::new(1.0, &[1, 0, 0]),
            Monomial::new(-1.0, &[0, 1, 0]),
            Monomial::new(-1.0, &[3, 0, 0]),
            Monomial::new(-1.0, &[1, 2, 0]),
        ],
        vec![
            Monomial::new(1.0, &[1, 0, 0]),
            Monomial::new(1.0, &[0, 1, 0]),
            Monomial::new(-1.0, &[2, 1, 0]),
            Monomial::new(-1.0, &[0, 3, 0]),
        ],
        vec![Monomial::new(-c, &[0, 0, 1])],
    ];
    // The Smith matrix splits into an upper block with eigenvalues
    // 2r² − 2 − λ, 6r² − 2 − λ and a lower entry λ − 2c, so a constant λ
    // works on the default box exactly when 46 < λ < 2c.
    let recommended_lambda = (2.0 * c > LIMIT_CYCLE_BOX_BOUND).then(|| 0.5 * (LIMIT_CYCLE_BOX_BOUND + 2.0 * c));
    let mut spec = polynomial_spec("limit_cycle_3d", terms);
    if c != LIMIT_CYCLE_DEFAULT_C {
        spec.name = format!("limit_cycle_3d_c{c}");
    }
    Ok(ZooEntry {
        name: "limit_cycle_3d",
        spec,
        model: model.into_model(),
        recommended_cone: standard_cone(),
        recommended_lambda,
        facts: ZooFacts {
            equilibria: vec![vec![0.0; 3]],
            period: Some(2.0 * PI),
            exponents: Some(vec![0.0, -2.0, -c]),
            reference_point: Some(vec![1.0, 0.0, 0.0]),
            cooperative: Some(recommended_lambda.is_some()),
            notes: "unit circle in z = 0 attracts everything off the z-axis; the z-axis flows into the origin",
        },
        default_box: BoxDomain::cube(3, -2.0, 2.0),
        sweep_horizon: 100.0,
    })
}

pub fn cyclic_feedback_3d(gain: f64) -> Result<ZooEntry> {
    if !(gain > 0.0) {
        return Err(Error::Validation(format!("cyclic_feedback_3d needs gain > 0, got {gain}")));
    }
    let g = gain;
    let model = FnModel::new("cyclic_feedback_3d", 3, move |x, out| {
        out[0] = -x[0] - (g * x[2]).tanh();
        out[1] = -x[1] + (g * x[0]).tanh();
        out[2] = -x[2] + (g * x[1]).tanh();
    })
    .with_jacobian(move |x| {
        let sech2 = |v: f64| 1.0 - v.tanh().powi(2);
        DMatrix::from_row_slice(
            3,
            3,
            &[-1.0, 0.0, -g * sech2(g * x[2]), g * sech2(g * x[0]), -1.0, 0.0, 0.0, g * sech2(g * x[1]), -1.0],
        )
    });
    let mut params = BTreeMap::new();
    params.insert("gain".to_string(), gain);
    Ok(ZooEntry {
        name: "cyclic_feedback_3d",
        spec: ModelSpec { name: "cyclic_feedback_3d".into(), kind: ModelKind::Builtin, coefficients: None, params },
        model: model.into_model(),
        // the real eigenvector (1, −1, 1) of the feedback matrix is the stable direction
        recommended_cone: axis_cone([1.0, -1.0, 1.0]),
        recommended_lambda: None,
        facts: ZooFacts {
            equilibria: vec![vec![0.0; 3]],
            period: None,
            exponents: None,
            reference_point: None,
            cooperative: None,
            notes: "origin loses stability through a Hopf bifurcation at gain 2 (eigenvalues −1 + g e^{±iπ/3})",
        },
        default_box: BoxDomain::cube(3, -2.0, 2.0),
        sweep_horizon: 100.0,
    })
}

pub fn may_leonard(alpha: f64, beta: f64) -> Result<ZooEntry> {
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::Validation(format!("may_leonard needs positive alpha, beta; got {alpha}, {beta}")));
    }
    let (a, b) = (alpha, beta);
    let model = FnModel::new("may_leonard", 3, move |x, out| {
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            out[i] = x[i] * (1.0 - x[i] - a * x[j] - b * x[k]);
        }
    })
    .with_jacobian(move |x| {
        let mut m = DMatrix::zeros(3, 3);
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            m[(i, i)] = 1.0 - 2.0 * x[i] - a * x[j] - b * x[k];
            m[(i, j)] = -a * x[i];
            m[(i, k)] = -b * x[i];
        }
        m
    });
    let terms = (0..3)
        .map(|i| {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            let mono = |c: f64, pairs: &[(usize, u32)]| {
                let mut e = vec![0; 3];
                for (idx, p) in pairs {
                    e[*idx] += p;
                }
                Monomial { coefficient: c, exponents: e }
            };
            vec![mono(1.0, &[(i, 1)]), mono(-1.0, &[(i, 2)]), mono(-a, &[(i, 1), (j, 1)]), mono(-b, &[(i, 1), (k, 1)])]
        })
        .collect();
    let s = 1.0 / (1.0 + a + b);
    let mut equilibria = vec![vec![0.0; 3], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![s; 3]];
    // two-species equilibria exist in the orthant only when (1 − α)/(1 − αβ) > 0 and (1 − β)/(1 − αβ) > 0
    let det = 1.0 - a * b;
    let (p, q) = ((1.0 - a) / det, (1.0 - b) / det);
    if det != 0.0 && p > 0.0 && q > 0.0 {
        for i in 0..3 {
            let mut e = vec![0.0; 3];
            e[i] = p;
            e[(i + 1) % 3] = q;
            equilibria.push(e);
        }
    }
    let heteroclinic = a + b > 2.0 && a < 1.0 && 1.0 < b;
    Ok(ZooEntry {
        name: "may_leonard",
        spec: polynomial_spec("may_leonard", terms),
        model: model.into_model(),
        recommended_cone: axis_cone([1.0, 1.0, 1.0]),
        recommended_lambda: None,
        facts: ZooFacts {
            equilibria,
            period: None,
            exponents: None,
            reference_point: None,
            cooperative: None,
            notes: if heteroclinic {
                "heteroclinic regime: interior orbits off the diagonal approach the cycle of axis saddles"
            } else {
                "outside the heteroclinic regime"
            },
        },
        default_box: BoxDomain::cube(3, 0.0, 2.0),
        // orbits need about 250 time units to come within 1e-3 of the saddles
        sweep_horizon: 400.0,
    })
}

pub fn rotation_counterexample() -> ZooEntry {
    let a = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    ZooEntry {
        name: "rotation_counterexample",
        spec: polynomial_spec("rotation_counterexample", linear_terms(&a)),
        model: FnModel::linear("rotation_counterexample", a).into_model(),
        recommended_cone: standard_cone(),
        recommended_lambda: None,
        facts: ZooFacts {
            equilibria: Vec::new(),
            period: Some(2.0 * PI),
            exponents: Some(vec![0.0, 0.0, 0.0]),
            reference_point: Some(vec![1.0, 0.0, 0.0]),
            cooperative: Some(false),
            notes: "the e₂-axis is a line of equilibria; the boundary vector e₁ + e₃ rotates out of the cone",
        },
        default_box: BoxDomain::cube(3, -2.0, 2.0),
        sweep_horizon: 100.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{eval, finite_difference_jacobian, jacobian};
    use crate::seed;

    #[test]
    fn unknown_names_and_params() {
        assert!(matches!(get_model("lorenz"), Err(Error::UnknownModel(_))));
        let mut p = BTreeMap::new();
        p.insert("sigma".to_string(), 1.0);
        assert!(matches!(get_model_with("limit_cycle_3d", &p), Err(Error::Validation(_))));
        for name in NAMES {
            assert_eq!(get_model(name).unwrap().name, name);
        }
    }

    #[test]
    fn analytic_jacobians_match_finite_differences() {
        for name in NAMES {
            let entry = get_model(name).unwrap();
            let mut rng = seed::rng(17);
            for _ in 0..100 {
                let x = entry.default_box.sample(&mut rng);
                let a = jacobian(entry.model.as_ref(), &x);
                let fd = finite_difference_jacobian(entry.model.as_ref(), &x);
                let scale = a.amax().max(1.0);
                assert!((&a - &fd).amax() <= 1e-5 * scale, "{name} at {x:?}");
            }
        }
    }

    #[test]
    fn exported_specs_reproduce_fields() {
        for name in NAMES {
            let entry = get_model(name).unwrap();
            let json = serde_json::to_string(entry.spec()).unwrap();
            let rebuilt = serde_json::from_str::<ModelSpec>(&json).unwrap().build().unwrap();
            let mut rng = seed::rng(5);
            for _ in 0..50 {
                let x = entry.default_box.sample(&mut rng);
                let a = eval(entry.model.as_ref(), &x);
                let b = eval(rebuilt.as_ref(), &x);
                for (u, v) in a.iter().zip(&b) {
                    assert!((u - v).abs() <= 1e-12 * (1.0 + u.abs()), "{name}: {a:?} vs {b:?}");
                }
            }
        }
    }

    #[test]
    fn documented_equilibria_are_roots() {
        for name in NAMES {
            let entry = get_model(name).unwrap();
            for e in &entry.facts.equilibria {
                let f = eval(entry.model.as_ref(), e);
                assert!(crate::linalg::norm(&f) < 1e-14, "{name}: F({e:?}) = {f:?}");
            }
        }
    }

    #[test]
    fn may_leonard_interior_equilibrium() {
        let entry = get_model("may_leonard").unwrap();
        let s = 1.0 / (1.0 + 0.8 + 1.3);
        assert!(entry.facts.equilibria.contains(&vec![s; 3]));
        // no two-species equilibria in the orthant for (0.8, 1.3)
        assert_eq!(entry.facts.equilibria.len(), 5);
    }

    #[test]
    fn limit_cycle_facts() {
        let entry = get_model("limit_cycle_3d").unwrap();
        assert_eq!(entry.facts.period, Some(2.0 * PI));
        assert_eq!(entry.recommended_lambda, Some(48.0));
        assert!(limit_cycle_3d(20.0).unwrap().recommended_lambda.is_none());
    }

    #[test]
    fn axis_cone_orientation() {
        let c = axis_cone([1.0, 1.0, 1.0]);
        use crate::cone::Membership;
        assert_eq!(c.classify(&[1.0, 1.0, 1.0]).unwrap().class, Membership::Exterior);
        assert_eq!(c.classify(&[1.0, -1.0, 0.0]).unwrap().class, Membership::Interior);
    }
}
