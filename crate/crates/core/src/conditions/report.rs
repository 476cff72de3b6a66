use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dynamics::{self, lyapunov::DEFAULT_TOL, Ensemble, SystemModel};
use crate::error::{Error, Result};
use crate::estimator::{theorem_lambda, LambdaRule};

use super::bounds::{horizon_bound_continuous, horizon_bound_discrete, horizon_bound_laplacian};
use super::prop3::Prop3Report;
use super::restricted;

/// Quantities computed from `Q0(eta)` and `sigma_max(I + eta A0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteConditions {
    pub eta: f64,
    pub sigma_max: f64,
    /// `(1 - sigma_max) / eta`.
    pub d: f64,
    /// `None` when the step matrix is not contractive.
    pub c_min: Option<f64>,
    pub alpha: Option<f64>,
    /// `C_min(eta) D`, never above one.
    pub c_min_times_d: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplacianConditions {
    pub m: f64,
    pub max_degree: usize,
    /// `1 - k/(k+m)`, the guaranteed incoherence margin.
    pub alpha_lower_bound: f64,
    pub alpha_bound_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremBounds {
    pub t_continuous: Option<f64>,
    pub t_laplacian: Option<f64>,
    pub n_eta_discrete: Option<f64>,
    pub lambda_continuous: Option<f64>,
    pub lambda_laplacian: Option<f64>,
    pub lambda_discrete: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub p: usize,
    pub row: usize,
    /// `|S0_r|`.
    pub k: usize,
    pub a_min: Option<f64>,
    pub c_min: f64,
    pub alpha: f64,
    pub rho_min: f64,
    /// Confidence parameter used in the bounds.
    pub delta: f64,
    pub horizon: Option<f64>,
    pub discrete: Option<DiscreteConditions>,
    pub laplacian: Option<LaplacianConditions>,
    pub bounds: TheoremBounds,
    /// Upper limit `A_min C_min / 8k` keeping the first gradient condition below the second.
    pub lambda_prop3_max: Option<f64>,
    pub hypothesis_failures: Vec<String>,
    pub prop3: Option<Prop3Report>,
}

pub const DEFAULT_CONFIDENCE: f64 = 0.05;

/// Builds the report; `horizon` (`T` or `n eta`) enables the theorem lambda values.
pub fn compute_condition_report(
    model: &SystemModel,
    row: usize,
    eta: Option<f64>,
    horizon: Option<f64>,
    delta: f64,
) -> Result<ConditionReport> {
    let p = model.p();
    if row >= p {
        return Err(Error::InvalidArgument(format!("row {row} out of range for p = {p}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence delta = {delta} must lie in (0, 1)")));
    }
    let q0 = dynamics::solve_lyapunov_continuous(model, DEFAULT_TOL)?;
    let support = model.support(row);
    let k = support.len();
    let kf = k as f64;
    let cont = restricted(&q0.q, support)?;
    let a_min = model.a_min(row);
    let rho_min = model.rho_min();
    let mut failures = Vec::new();
    if !(cont.alpha > 0.0) {
        failures.push(format!("alpha = {} is not positive", cont.alpha));
    }
    if !(cont.c_min > 0.0) {
        failures.push(format!("C_min = {} is not positive", cont.c_min));
    }
    if !(rho_min > 0.0) {
        failures.push(format!("rho_min = {rho_min} is not positive"));
    }

    let discrete = match eta {
        None => None,
        Some(eta) => {
            if !(eta > 0.0) {
                return Err(Error::InvalidArgument(format!("eta = {eta} must be positive")));
            }
            let sigma_max = model.sigma_max(eta);
            let d = (1.0 - sigma_max) / eta;
            let (c_min, alpha) = if sigma_max < 1.0 {
                let qd = dynamics::solve_lyapunov_discrete(model, eta, DEFAULT_TOL)?;
                let r = restricted(&qd.q, support)?;
                (Some(r.c_min), Some(r.alpha))
            } else {
                failures.push(format!("D = {d} is not positive (sigma_max = {sigma_max})"));
                (None, None)
            };
            if let Some(a) = alpha.filter(|a| !(*a > 0.0)) {
                failures.push(format!("discrete alpha = {a} is not positive"));
            }
            let c_min_times_d = c_min.filter(|_| d > 0.0).map(|c| c * d);
            Some(DiscreteConditions { eta, sigma_max, d, c_min, alpha, c_min_times_d })
        }
    };

    let laplacian = match model.ensemble() {
        Ensemble::Laplacian { m, max_degree } => {
            let lower = 1.0 - max_degree as f64 / (max_degree as f64 + m);
            Some(LaplacianConditions {
                m,
                max_degree,
                alpha_lower_bound: lower,
                alpha_bound_holds: cont.alpha >= lower - 1e-12,
            })
        }
        _ => None,
    };

    let a = a_min.unwrap_or(f64::NAN);
    let mut bounds = TheoremBounds {
        t_continuous: horizon_bound_continuous(p, kf, delta, cont.alpha, rho_min, a, cont.c_min),
        t_laplacian: laplacian.as_ref().and_then(|l| horizon_bound_laplacian(p, l.max_degree as f64, l.m, delta)),
        n_eta_discrete: discrete.as_ref().and_then(|dc| match (dc.alpha, dc.c_min) {
            (Some(al), Some(c)) => horizon_bound_discrete(p, kf, delta, al, dc.d, a, c),
            _ => None,
        }),
        lambda_continuous: None,
        lambda_laplacian: None,
        lambda_discrete: None,
    };
    if let Some(t) = horizon {
        bounds.lambda_continuous =
            theorem_lambda(&LambdaRule::Continuous { p, delta, horizon: t, alpha: cont.alpha, rho_min }).ok();
        bounds.lambda_laplacian = laplacian.as_ref().and_then(|l| {
            theorem_lambda(&LambdaRule::Laplacian { p, delta, horizon: t, k: l.max_degree as f64, m: l.m }).ok()
        });
        bounds.lambda_discrete = discrete.as_ref().and_then(|dc| {
            theorem_lambda(&LambdaRule::Discrete { p, delta, n_eta: t, alpha: dc.alpha?, d: dc.d }).ok()
        });
    }
    let c_for_lambda = discrete.as_ref().and_then(|d| d.c_min).unwrap_or(cont.c_min);
    let lambda_prop3_max = a_min.filter(|_| k > 0 && c_for_lambda > 0.0).map(|am| am * c_for_lambda / (8.0 * kf));

    Ok(ConditionReport {
        p,
        row,
        k,
        a_min,
        c_min: cont.c_min,
        alpha: cont.alpha,
        rho_min,
        delta,
        horizon,
        discrete,
        laplacian,
        bounds,
        lambda_prop3_max,
        hypothesis_failures: failures,
        prop3: None,
    })
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => {
            for (k, inner) in map {
                flatten(&key(k), inner, out);
            }
        }
        Value::Array(items) if items.iter().all(|i| !i.is_object()) => {
            let parts: Vec<String> = items.iter().map(scalar).collect();
            out.push((prefix.to_string(), parts.join("; ")));
        }
        Value::Array(items) => {
            for (i, inner) in items.iter().enumerate() {
                flatten(&key(&i.to_string()), inner, out);
            }
        }
        other => out.push((prefix.to_string(), scalar(other))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => "none".into(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl ConditionReport {
    /// Every hypothesis needed by the continuous-time theorem holds.
    pub fn hypotheses_hold(&self) -> bool {
        self.hypothesis_failures.is_empty()
    }

    pub fn with_prop3(mut self, prop3: Prop3Report) -> Self {
        self.prop3 = Some(prop3);
        self
    }

    /// Flat `name = value` document; nested fields use dotted names.
    pub fn to_kv(&self) -> Result<String> {
        let mut pairs = Vec::new();
        flatten("", &serde_json::to_value(self)?, &mut pairs);
        Ok(pairs.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
