//! Convergence diagnostics: sublevel-set parameters, spectral bounds on
//! `F = R_angle R_angleᵀ`, exponential rate fits and equilibrium classification.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::control::{
    edge_errors, potential_gradients, total_potential, AngleConstraint, ConstraintSet,
};
use crate::error::{FormationError, Result};
use crate::linalg::{min_symmetric_eigenvalue, operator_norm};
use crate::realization::realize;
use crate::rigidity::{rigidity_report, Configuration, RigidityMatrices};
use crate::sensing::distance_from_cos;
use crate::simulator::{Scenario, SimulationTrace};

/// Smallest `min(c/2, f)` over the edges.
pub fn compute_b(constraints: &[AngleConstraint]) -> Result<f64> {
    constraints
        .iter()
        .map(|k| k.b_edge)
        .reduce(f64::min)
        .ok_or(FormationError::EmptyConstraints)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SublevelSetParams {
    pub b: f64,
    pub q: f64,
    pub alpha: f64,
    pub beta: f64,
}

pub const DEFAULT_Q_FRACTION: f64 = 0.5;
pub const DEFAULT_BETA_FRACTION: f64 = 0.9;
pub const DEFAULT_SPHERE_POINTS: usize = 10_000;

impl SublevelSetParams {
    /// `q = 0.5 b`, `α` from 10⁴ quasi-random points on `‖e‖ = q`, `β = 0.9 α`.
    pub fn estimate(constraints: &ConstraintSet, r: f64) -> Result<Self> {
        Self::with_settings(
            constraints,
            r,
            DEFAULT_Q_FRACTION,
            DEFAULT_BETA_FRACTION,
            DEFAULT_SPHERE_POINTS,
        )
    }

    pub fn with_settings(
        constraints: &ConstraintSet,
        r: f64,
        q_fraction: f64,
        beta_fraction: f64,
        n_points: usize,
    ) -> Result<Self> {
        if !(q_fraction > 0.0 && q_fraction < 1.0) || !(beta_fraction > 0.0 && beta_fraction < 1.0)
        {
            return Err(FormationError::InvalidParameter(
                "q and beta fractions must lie in (0, 1)".into(),
            ));
        }
        let b = compute_b(constraints.as_slice())?;
        let q = q_fraction * b;
        let alpha = sphere_minimum(constraints, r, q, n_points)?;
        Ok(Self {
            b,
            q,
            alpha,
            beta: beta_fraction * alpha,
        })
    }

    /// Membership of an error vector in `Ω_β`.
    pub fn contains(&self, e: &DVector<f64>, constraints: &ConstraintSet, r: f64) -> bool {
        e.norm() <= self.q && total_potential(e, constraints, r).is_ok_and(|v| v <= self.beta)
    }
}

fn primes(count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut k = 2u64;
    while out.len() < count {
        if out
            .iter()
            .take_while(|&&p| p * p <= k)
            .all(|&p| !k.is_multiple_of(p))
        {
            out.push(k);
        }
        k += 1;
    }
    out
}

/// Radical inverse of `index` in `base` (one Halton coordinate).
fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut x = 0.0;
    while index > 0 {
        f /= base as f64;
        x += f * (index % base) as f64;
        index /= base;
    }
    x
}

/// Quasi-random points on the sphere of radius `q` in `ℝᵐ`: Halton points
/// pushed through the normal quantile function, then normalized.
pub fn halton_sphere(m: usize, q: f64, n_points: usize) -> Vec<DVector<f64>> {
    let normal = Normal::standard();
    let bases = primes(m);
    (1..=n_points as u64)
        .filter_map(|idx| {
            let g = DVector::from_iterator(
                m,
                bases
                    .iter()
                    .map(|&b| normal.inverse_cdf(radical_inverse(idx, b))),
            );
            let n = g.norm();
            (n > 0.0 && n.is_finite()).then(|| g * (q / n))
        })
        .collect()
}

fn sphere_minimum(constraints: &ConstraintSet, r: f64, q: f64, n_points: usize) -> Result<f64> {
    let mut best = f64::INFINITY;
    for e in halton_sphere(constraints.len(), q, n_points) {
        best = best.min(total_potential(&e, constraints, r)?);
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(FormationError::SamplingFailed(n_points))
    }
}

/// Target framework implied by a scenario's constraints.
pub fn target_configuration(scenario: &Scenario) -> Result<Configuration> {
    let lengths = scenario
        .constraints
        .as_slice()
        .iter()
        .map(|k| distance_from_cos(k.cos_star, scenario.radius))
        .collect::<Result<Vec<_>>>()?;
    realize(&scenario.graph, &lengths)
}

/// `F = R_angle R_angleᵀ` at `p`.
pub fn error_gain_matrix(scenario: &Scenario, p: &Configuration) -> Result<DMatrix<f64>> {
    let mats = RigidityMatrices::evaluate(&scenario.graph, p, scenario.radius)?;
    Ok(&mats.jac_angle * mats.jac_angle.transpose())
}

/// Attempts per sample before giving up.
pub const MAX_SAMPLE_ATTEMPTS: usize = 200;

/// Smallest eigenvalue of `F` over configurations near the target whose
/// errors fall in `Ω_β`.
///
/// Sample 0 is the target itself. Sample `s` draws Gaussian perturbations of
/// the target from its own ChaCha stream `s`, shrinking the spread by 0.7
/// after each rejection, so results do not depend on evaluation order.
pub fn estimate_lambda(
    scenario: &Scenario,
    params: &SublevelSetParams,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    let target = target_configuration(scenario)?;
    let report = rigidity_report(&scenario.graph, &target)?;
    if !report.infinitesimally_rigid {
        return Err(FormationError::NotRigid {
            rank: report.rank,
            expected: report.expected_rank,
        });
    }
    if !report.minimally_rigid {
        return Err(FormationError::NotMinimallyRigid {
            edges: report.n_edges,
            expected: report.expected_rank,
        });
    }
    let scale = target
        .points()
        .iter()
        .map(|p| (p - target.centroid()).norm())
        .fold(0.0, f64::max);
    let mut lambda = min_symmetric_eigenvalue(&error_gain_matrix(scenario, &target)?);
    for s in 1..n_samples.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(s as u64);
        let mut sigma = scale;
        let mut accepted = None;
        for _ in 0..MAX_SAMPLE_ATTEMPTS {
            let noise = DVector::from_fn(target.stacked().len(), |_, _| {
                rng.sample::<f64, _>(StandardNormal)
            });
            let cand = Configuration::from_stacked(target.stacked() + noise * sigma)?;
            let ok = edge_errors(
                &scenario.graph,
                &cand,
                scenario.radius,
                &scenario.constraints,
            )
            .is_ok_and(|e| params.contains(&e, &scenario.constraints, scenario.radius));
            if ok {
                accepted = Some(cand);
                break;
            }
            sigma *= 0.7;
        }
        let cand = accepted.ok_or(FormationError::SamplingFailed(MAX_SAMPLE_ATTEMPTS))?;
        lambda = lambda.min(min_symmetric_eigenvalue(&error_gain_matrix(
            scenario, &cand,
        )?));
    }
    Ok(lambda)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    /// Twice the slope of `log ‖e‖` against time.
    pub gamma_fit: f64,
    pub r_squared: f64,
    /// Window actually used, after trimming samples with zero error.
    pub window: (f64, f64),
    pub n_points: usize,
}

/// Least-squares line through `log ‖e(t)‖` over `window`.
///
/// If the error hits exactly zero inside the window the window is cut just
/// before that sample.
pub fn fit_exponential_rate(trace: &SimulationTrace, window: (f64, f64)) -> Result<RateFit> {
    let (start, end) = window;
    let (t0, t1) = match (trace.times.first(), trace.times.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(FormationError::TooFewSamples { needed: 3, got: 0 }),
    };
    if !(start < end) || start < t0 || end > t1 + 1e-9 * t1.abs().max(1.0) {
        return Err(FormationError::WindowOutsideTrace { start, end, t0, t1 });
    }
    let mut pts = Vec::new();
    for (&t, &en) in trace.times.iter().zip(&trace.error_norm) {
        if t < start || t > end {
            continue;
        }
        if !(en > 0.0) || !en.is_finite() {
            break;
        }
        pts.push((t, en.ln()));
    }
    if pts.len() < 3 {
        return Err(FormationError::TooFewSamples {
            needed: 3,
            got: pts.len(),
        });
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sty: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sty / stt;
    let r_squared = if syy > 0.0 {
        sty * sty / (stt * syy)
    } else {
        1.0
    };
    Ok(RateFit {
        gamma_fit: 2.0 * slope,
        r_squared,
        window: (pts[0].0, pts[pts.len() - 1].0),
        n_points: pts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    CorrectTarget,
    IncorrectEquilibrium,
    NonEquilibrium,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::CorrectTarget => "correct_target",
            Self::IncorrectEquilibrium => "incorrect_equilibrium",
            Self::NonEquilibrium => "non_equilibrium",
        })
    }
}

impl FromStr for Classification {
    type Err = FormationError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "correct_target" => Ok(Self::CorrectTarget),
            "incorrect_equilibrium" => Ok(Self::IncorrectEquilibrium),
            "non_equilibrium" => Ok(Self::NonEquilibrium),
            other => Err(FormationError::InvalidParameter(format!(
                "unknown classification `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumVerdict {
    pub classification: Classification,
    /// All centers on a common line, per [`collinearity_residual`].
    pub collinear: bool,
    /// `‖R_angleᵀ V'(e)‖`.
    pub gradient_norm: f64,
    pub error_norm: f64,
}

/// Largest perpendicular distance from the total-least-squares line through
/// the centers, and the diameter of the point set.
pub fn collinearity_residual(p: &Configuration) -> (f64, f64) {
    let pts = p.points();
    let c = p.centroid();
    let mut cov = nalgebra::Matrix2::zeros();
    for q in &pts {
        let d = q - c;
        cov += d * d.transpose();
    }
    let eig = cov.symmetric_eigen();
    let k = if eig.eigenvalues[0] < eig.eigenvalues[1] {
        0
    } else {
        1
    };
    let normal: Vector2<f64> = eig.eigenvectors.column(k).into();
    let residual = pts
        .iter()
        .map(|q| (q - c).dot(&normal).abs())
        .fold(0.0, f64::max);
    let mut diameter: f64 = 0.0;
    for a in &pts {
        for b in &pts {
            diameter = diameter.max((a - b).norm());
        }
    }
    (residual, diameter)
}

pub const COLLINEAR_TOL: f64 = 1e-8;

pub fn is_collinear(p: &Configuration) -> bool {
    let (res, diam) = collinearity_residual(p);
    res <= COLLINEAR_TOL * diam
}

fn gradient_terms(
    p: &Configuration,
    scenario: &Scenario,
) -> Result<(DMatrix<f64>, DVector<f64>, DVector<f64>)> {
    let mats = RigidityMatrices::evaluate(&scenario.graph, p, scenario.radius)?;
    let e = &mats.r_angle - scenario.constraints.cos_star();
    let v = potential_gradients(&e, &scenario.constraints, scenario.radius)?;
    Ok((mats.jac_angle, e, v))
}

pub fn classify_equilibrium(
    p: &Configuration,
    scenario: &Scenario,
    tol: f64,
) -> Result<EquilibriumVerdict> {
    let (jac, e, v) = gradient_terms(p, scenario)?;
    let gradient_norm = (jac.transpose() * v).norm();
    let error_norm = e.norm();
    let classification = if gradient_norm > tol {
        Classification::NonEquilibrium
    } else if error_norm <= tol {
        Classification::CorrectTarget
    } else {
        Classification::IncorrectEquilibrium
    };
    Ok(EquilibriumVerdict {
        classification,
        collinear: is_collinear(p),
        gradient_norm,
        error_norm,
    })
}

/// Checks that `p` is stationary for the position dynamics exactly when it is
/// stationary for the error dynamics: `‖R_angleᵀ v‖ ≤ tol ⇔ ‖F v‖ ≤ tol·(1 + ‖R_angle‖)`.
pub fn verify_equilibrium_set_equality(
    p: &Configuration,
    scenario: &Scenario,
    tol: f64,
) -> Result<bool> {
    let (jac, _, v) = gradient_terms(p, scenario)?;
    let rtv = jac.transpose() * &v;
    let fv = &jac * &rtv;
    let scale = 1.0 + operator_norm(&jac);
    Ok((rtv.norm() <= tol) == (fv.norm() <= tol * scale))
}

/// Diagnostics written next to a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub lambda_min: f64,
    pub gamma_fit: f64,
    pub r_squared: f64,
    pub rate_window: (f64, f64),
    pub params: SublevelSetParams,
    pub classification: Classification,
    pub collinear: bool,
}

impl StabilityReport {
    /// `key = value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        line("lambda_min", format!("{:.16e}", self.lambda_min));
        line("gamma_fit", format!("{:.16e}", self.gamma_fit));
        line("r_squared", format!("{:.16e}", self.r_squared));
        line("b", format!("{:.16e}", self.params.b));
        line("q", format!("{:.16e}", self.params.q));
        line("alpha", format!("{:.16e}", self.params.alpha));
        line("beta", format!("{:.16e}", self.params.beta));
        line("classification", self.classification.to_string());
        line("rate_window_start", format!("{:.16e}", self.rate_window.0));
        line("rate_window_end", format!("{:.16e}", self.rate_window.1));
        line("collinear", self.collinear.to_string());
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = std::collections::HashMap::new();
        for (n, raw) in text.lines().enumerate() {
            let raw = raw.trim();
            if raw.is_empty() || raw.starts_with('#') {
                continue;
            }
            let (k, v) = raw.split_once('=').ok_or_else(|| {
                FormationError::InvalidParameter(format!(
                    "report line {}: expected `key = value`",
                    n + 1
                ))
            })?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| {
            map.get(k)
                .ok_or_else(|| FormationError::InvalidParameter(format!("report lacks `{k}`")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?.parse().map_err(|_| {
                FormationError::InvalidParameter(format!("report field `{k}` is not a number"))
            })
        };
        Ok(Self {
            lambda_min: num("lambda_min")?,
            gamma_fit: num("gamma_fit")?,
            r_squared: num("r_squared")?,
            rate_window: (
                num("rate_window_start").unwrap_or(f64::NAN),
                num("rate_window_end").unwrap_or(f64::NAN),
            ),
            params: SublevelSetParams {
                b: num("b")?,
                q: num("q")?,
                alpha: num("alpha")?,
                beta: num("beta")?,
            },
            classification: get("classification")?.parse()?,
            collinear: get("collinear").map(|s| s == "true").unwrap_or(false),
        })
    }
}

/// Settings for [`build_report`].
#[derive(Debug, Clone, Copy)]
pub struct ReportOptions {
    pub lambda_samples: usize,
    pub rate_window: (f64, f64),
    pub classify_tol: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            lambda_samples: 500,
            rate_window: (3.0, 6.0),
            classify_tol: 1e-6,
        }
    }
}

/// Assembles a [`StabilityReport`] for a finished run. Quantities that cannot
/// be computed (a non-rigid target, a trace too short for the fit window)
/// are reported as NaN.
pub fn build_report(
    scenario: &Scenario,
    trace: &SimulationTrace,
    opts: &ReportOptions,
) -> Result<StabilityReport> {
    let params = SublevelSetParams::estimate(&scenario.constraints, scenario.radius)?;
    let lambda_min =
        estimate_lambda(scenario, &params, opts.lambda_samples, scenario.seed).unwrap_or(f64::NAN);
    let t_last = trace.times.last().copied().unwrap_or(0.0);
    let t_first = trace.times.first().copied().unwrap_or(0.0);
    let window = (
        opts.rate_window.0.max(t_first),
        opts.rate_window.1.min(t_last),
    );
    let fit = fit_exponential_rate(trace, window).ok();
    let last = trace
        .positions
        .last()
        .cloned()
        .unwrap_or_else(|| scenario.initial.stacked().clone());
    let verdict = classify_equilibrium(
        &Configuration::from_stacked(last)?,
        scenario,
        opts.classify_tol,
    )?;
    Ok(StabilityReport {
        lambda_min,
        gamma_fit: fit.map_or(f64::NAN, |f| f.gamma_fit),
        r_squared: fit.map_or(f64::NAN, |f| f.r_squared),
        rate_window: fit.map_or((f64::NAN, f64::NAN), |f| f.window),
        params,
        classification: verdict.classification,
        collinear: verdict.collinear,
    })
}
