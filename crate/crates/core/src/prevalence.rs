//! Monte Carlo sweeps over a box: the fraction of points that are
//! pseudo-ordered or converge to an equilibrium, the periodic-orbit check for
//! equilibrium-free limit sets, and probe-neighborhood scans.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{self, classify_orbit, ClassifierParams, OmegaClass, OrbitRecord};
use crate::cone::QuadraticCone;
use crate::domain::BoxDomain;
use crate::dynamics::{dissipativity_probe, find_equilibria, DissipativityReport};
use crate::error::{check_dim, Error, Result};
use crate::model::VectorField;
use crate::seed;

pub const OMEGA_LABELS: [&str; 4] = ["ConvergesToEquilibrium", "PeriodicOrbit", "ContainsEquilibrium", "Unresolved"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(rename = "box")]
    pub bounds: BoxDomain,
    pub n_points: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub classifier: ClassifierParams,
    /// Total integration time; replaces `classifier.transient` by
    /// `horizon − classifier.tail_window` when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// Newton seeds per axis for locating equilibria in the box.
    #[serde(default = "default_equilibrium_grid")]
    pub equilibrium_grid: usize,
    /// Extra equilibria to use alongside the ones found in the box.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub known_equilibria: Vec<Vec<f64>>,
}

fn default_equilibrium_grid() -> usize {
    7
}

impl SweepConfig {
    pub fn new(bounds: BoxDomain, n_points: usize, master_seed: u64) -> Self {
        Self {
            bounds,
            n_points,
            master_seed,
            classifier: ClassifierParams::default(),
            horizon: None,
            equilibrium_grid: default_equilibrium_grid(),
            known_equilibria: Vec::new(),
        }
    }

    /// Classifier parameters with `horizon` and the box-derived `delta_sep`
    /// applied.
    pub fn effective_params(&self) -> Result<ClassifierParams> {
        let mut p = self.classifier.clone().for_box(&self.bounds);
        if let Some(h) = self.horizon {
            if !(h >= p.tail_window) {
                return Err(Error::Validation(format!(
                    "horizon {h} must be at least classifier.tail_window {}",
                    p.tail_window
                )));
            }
            p.transient = h - p.tail_window;
        }
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        if self.n_points == 0 {
            return Err(Error::EmptySweep);
        }
        if self.equilibrium_grid < 2 {
            return Err(Error::Validation("equilibrium_grid must be at least 2".into()));
        }
        self.effective_params().map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub model: String,
    pub master_seed: u64,
    pub n_points: usize,
    /// Count per ω-class label; every label is present.
    pub counts: BTreeMap<String, usize>,
    #[serde(rename = "n_in_Q")]
    pub n_in_q: usize,
    #[serde(rename = "n_in_S")]
    pub n_in_s: usize,
    #[serde(rename = "n_in_Q_union_S")]
    pub n_in_q_union_s: usize,
    #[serde(rename = "fraction_Q_union_S")]
    pub fraction_q_union_s: f64,
    pub equilibria: Vec<Vec<f64>>,
    pub eps_eq: f64,
    pub dissipativity: DissipativityReport,
    pub warnings: Vec<String>,
    pub pb_violations: Vec<OrbitRecord>,
    pub records: Vec<OrbitRecord>,
}

/// Everything in a [`SweepReport`] except the per-point records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub model: String,
    pub master_seed: u64,
    pub n_points: usize,
    pub counts: BTreeMap<String, usize>,
    #[serde(rename = "n_in_Q")]
    pub n_in_q: usize,
    #[serde(rename = "n_in_S")]
    pub n_in_s: usize,
    #[serde(rename = "n_in_Q_union_S")]
    pub n_in_q_union_s: usize,
    #[serde(rename = "fraction_Q_union_S")]
    pub fraction_q_union_s: f64,
    pub fraction_unresolved: f64,
    pub equilibria: Vec<Vec<f64>>,
    pub dissipativity: DissipativityReport,
    pub pb: PbCheck,
    pub warnings: Vec<String>,
    pub cone_assumption: String,
}

impl SweepReport {
    pub fn unresolved(&self) -> usize {
        self.counts["Unresolved"]
    }

    pub fn summary(&self) -> SweepSummary {
        SweepSummary {
            model: self.model.clone(),
            master_seed: self.master_seed,
            n_points: self.n_points,
            counts: self.counts.clone(),
            n_in_q: self.n_in_q,
            n_in_s: self.n_in_s,
            n_in_q_union_s: self.n_in_q_union_s,
            fraction_q_union_s: self.fraction_q_union_s,
            fraction_unresolved: self.unresolved() as f64 / self.n_points as f64,
            equilibria: self.equilibria.clone(),
            dissipativity: self.dissipativity.clone(),
            pb: pb_check(self, self.eps_eq),
            warnings: self.warnings.clone(),
            cone_assumption: CONE_ASSUMPTION.into(),
        }
    }

    /// Base name `sweep_<model>_seed<seed>` shared by the output files.
    pub fn file_stem(&self) -> String {
        format!("sweep_{}_seed{}", self.model, self.master_seed)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> std::io::Result<()> {
        let dim = self.records.first().map_or(0, |r| r.x0.len());
        classifier::write_records_csv(&self.records, dim, writer)
    }

    /// Writes `<stem>.json` (summary) and `<stem>.csv` (records) into `dir`.
    pub fn write_outputs(&self, dir: &Path) -> std::io::Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let json_path = dir.join(format!("{}.json", self.file_stem()));
        let csv_path = dir.join(format!("{}.csv", self.file_stem()));
        let text = serde_json::to_string_pretty(&self.summary()).map_err(std::io::Error::other)?;
        fs::write(&json_path, text + "\n")?;
        self.write_csv(fs::File::create(&csv_path)?)?;
        Ok((json_path, csv_path))
    }
}

const CONE_ASSUMPTION: &str = "quadratic cones are complemented: the positive eigenspace meets the cone only at 0";

/// Classifies `n_points` uniform samples of the box on the current rayon pool.
pub fn sweep(model: &dyn VectorField, cone: &QuadraticCone, cfg: &SweepConfig) -> Result<SweepReport> {
    cfg.validate()?;
    check_dim(model.dim(), cfg.bounds.dim())?;
    check_dim(cone.dim(), cfg.bounds.dim())?;
    let params = cfg.effective_params()?;

    let mut warnings = Vec::new();
    let dissipativity =
        dissipativity_probe(model, &cfg.bounds, params.horizon(), 16, seed::mix64(cfg.master_seed), &params.integrator)?;
    if !dissipativity.bounded {
        warnings.push(format!("dissipativity probe failed ({}); results may be unreliable", dissipativity.note));
    }
    let mut equilibria = find_equilibria(model, &cfg.bounds, cfg.equilibrium_grid, 1e-10);
    for e in &cfg.known_equilibria {
        check_dim(model.dim(), e.len())?;
        if !equilibria.iter().any(|f| crate::linalg::distance(e, f) < 1e-8) {
            equilibria.push(e.clone());
        }
    }

    let records: Vec<OrbitRecord> = (0..cfg.n_points)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::item_rng(cfg.master_seed, i as u64);
            let x0 = cfg.bounds.sample(&mut rng);
            classify_orbit(model, cone, &x0, &equilibria, &params)
        })
        .collect::<Result<_>>()?;

    let mut counts: BTreeMap<String, usize> = OMEGA_LABELS.iter().map(|l| (l.to_string(), 0)).collect();
    for r in &records {
        *counts.get_mut(r.omega_class.label()).unwrap() += 1;
    }
    let n_in_q = records.iter().filter(|r| r.in_q).count();
    let n_in_s = records.iter().filter(|r| r.in_s).count();
    let n_union = records.iter().filter(|r| r.in_q || r.in_s).count();
    let mut report = SweepReport {
        model: model.name().to_string(),
        master_seed: cfg.master_seed,
        n_points: cfg.n_points,
        counts,
        n_in_q,
        n_in_s,
        n_in_q_union_s: n_union,
        fraction_q_union_s: n_union as f64 / cfg.n_points as f64,
        equilibria,
        eps_eq: params.eps_eq,
        dissipativity,
        warnings,
        pb_violations: Vec::new(),
        records,
    };
    report.pb_violations = pb_check(&report, params.eps_eq).violations;
    Ok(report)
}

/// [`sweep`] on a dedicated pool of `workers` threads.
pub fn sweep_with_workers(model: &dyn VectorField, cone: &QuadraticCone, cfg: &SweepConfig, workers: usize) -> Result<SweepReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Validation(format!("cannot start worker pool: {e}")))?;
    pool.install(|| sweep(model, cone, cfg))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PbCheck {
    /// Integrated records whose tail stays at least `eps_eq` from every known equilibrium.
    pub eligible: usize,
    pub periodic: usize,
    pub violations: Vec<OrbitRecord>,
}

/// Eligible records that are not classified as periodic orbits.
pub fn pb_check(report: &SweepReport, eps_eq: f64) -> PbCheck {
    let eligible: Vec<&OrbitRecord> = report
        .records
        .iter()
        .filter(|r| r.horizon_used > 0.0 && r.tail_min_eq_distance.is_none_or(|d| d >= eps_eq))
        .collect();
    let periodic = eligible.iter().filter(|r| matches!(r.omega_class, OmegaClass::PeriodicOrbit { .. })).count();
    let violations = eligible
        .iter()
        .filter(|r| !matches!(r.omega_class, OmegaClass::PeriodicOrbit { .. }))
        .map(|r| (*r).clone())
        .collect();
    PbCheck { eligible: eligible.len(), periodic, violations }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeScan {
    pub center: Vec<f64>,
    pub eps: f64,
    #[serde(rename = "fraction_in_Q")]
    pub fraction_in_q: f64,
    pub per_point: Vec<OrbitRecord>,
    pub note: String,
}

/// Classifies `m` points of the probe neighborhood `B^P(x, eps) \ {x}`.
#[allow(clippy::too_many_arguments)]
pub fn probe_scan(
    model: &dyn VectorField,
    cone: &QuadraticCone,
    x: &[f64],
    eps: f64,
    m: usize,
    rng_seed: u64,
    equilibria: &[Vec<f64>],
    params: &ClassifierParams,
) -> Result<ProbeScan> {
    check_dim(model.dim(), x.len())?;
    if m == 0 {
        return Err(Error::Validation("probe scan needs at least one point".into()));
    }
    let points = cone.probe_neighborhood(x, eps, m, rng_seed)?;
    let per_point: Vec<OrbitRecord> =
        points.par_iter().map(|p| classify_orbit(model, cone, p, equilibria, params)).collect::<Result<_>>()?;
    let in_q = per_point.iter().filter(|r| r.in_q).count();
    Ok(ProbeScan {
        center: x.to_vec(),
        eps,
        fraction_in_q: in_q as f64 / m as f64,
        per_point,
        note: "diagnostic only: a full fraction is consistent with the probe-neighborhood property but cannot certify \
               that the center lies outside the pseudo-ordered or convergent sets"
            .into(),
    })
}
