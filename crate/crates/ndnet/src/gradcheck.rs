//! Central finite-difference gradient checking.
//!
//! Forward passes run in `f32`, so the scalar objective is reduced in `f64`
//! and the relative error uses a floor of [`REL_FLOOR`] in the denominator;
//! below that magnitude a gradient component is compared absolutely.
//! Coordinates where the objective is visibly non-smooth inside the probe
//! interval (a ReLU or max switching branch) are reported as kinks and
//! skipped.

use crate::ParamSet;

pub const DEFAULT_EPS: f32 = 1e-3;
/// Absolute slack when comparing one-sided slopes for kinks.
pub const KINK_ABS_SLACK: f64 = 2e-3;

pub const REL_FLOOR: f64 = 0.1;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst: Option<(String, usize, f64, f64)>,
    pub checked: usize,
    pub skipped_kinks: usize,
}

impl GradCheckReport {
    fn record(&mut self, label: &str, idx: usize, analytic: f64, numeric: f64) {
        let err = relative_error(analytic, numeric);
        self.checked += 1;
        if err > self.max_rel_err || self.worst.is_none() {
            self.max_rel_err = err;
            self.worst = Some((label.to_string(), idx, analytic, numeric));
        }
    }

    pub fn merge(&mut self, other: GradCheckReport) {
        self.checked += other.checked;
        self.skipped_kinks += other.skipped_kinks;
        if other.worst.is_some() && (other.max_rel_err > self.max_rel_err || self.worst.is_none()) {
            self.max_rel_err = other.max_rel_err;
            self.worst = other.worst;
        }
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.checked > 0 && self.max_rel_err < tol
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Numeric derivative at one coordinate. Returns `None` at a kink: the two
/// one-sided slopes disagree by more than the tolerance allows.
fn central_difference(
    values: &mut [f32],
    idx: usize,
    eps: f32,
    f: &mut impl FnMut(&[f32]) -> f64,
    f0: f64,
) -> Option<f64> {
    let orig = values[idx];
    values[idx] = orig + eps;
    let fp = f(values);
    values[idx] = orig - eps;
    let fm = f(values);
    values[idx] = orig;
    let e = eps as f64;
    let right = (fp - f0) / e;
    let left = (f0 - fm) / e;
    // Smooth functions have one-sided slopes differing by O(eps · f''); the
    // absolute term absorbs f32 rounding in the objective.
    if (right - left).abs() > 0.05 * right.abs().max(left.abs()) + KINK_ABS_SLACK {
        return None;
    }
    Some((fp - fm) / (2.0 * e))
}

/// Checks `analytic` (the gradient of `f` at `values`) coordinate by coordinate.
pub fn check_slice(
    label: &str,
    values: &mut [f32],
    analytic: &[f32],
    eps: f32,
    mut f: impl FnMut(&[f32]) -> f64,
) -> GradCheckReport {
    assert_eq!(values.len(), analytic.len(), "gradient length mismatch for {label}");
    let mut report = GradCheckReport::default();
    let f0 = f(values);
    for idx in 0..values.len() {
        match central_difference(values, idx, eps, &mut f, f0) {
            Some(num) => report.record(label, idx, analytic[idx] as f64, num),
            None => report.skipped_kinks += 1,
        }
    }
    report
}

/// Checks every parameter of `params` whose analytic gradient was accumulated
/// by the caller. `loss` recomputes the objective for a perturbed copy.
pub fn check_params(
    params: &ParamSet,
    eps: f32,
    mut loss: impl FnMut(&ParamSet) -> f64,
) -> GradCheckReport {
    let mut report = GradCheckReport::default();
    let mut work = params.clone();
    let names: Vec<String> = params.names().map(str::to_string).collect();
    for name in names {
        let analytic = params
            .get(&name)
            .ok()
            .and_then(|t| t.grad().map(<[f32]>::to_vec))
            .unwrap_or_else(|| vec![0.0; params.get(&name).map(|t| t.len()).unwrap_or(0)]);
        let mut values = work.get(&name).expect("name from same set").data().to_vec();
        let sub = check_slice(&name, &mut values, &analytic, eps, |v| {
            work.get_mut(&name)
                .expect("name from same set")
                .data_mut()
                .copy_from_slice(v);
            loss(&work)
        });
        work.get_mut(&name)
            .expect("name from same set")
            .data_mut()
            .copy_from_slice(&values);
        report.merge(sub);
    }
    report
}

/// Dot product in `f64`; the usual way to turn a tensor output into a scalar
/// objective with a known upstream gradient.
pub fn project(values: &[f32], weights: &[f32]) -> f64 {
    values
        .iter()
        .zip(weights)
        .map(|(&a, &b)| a as f64 * b as f64)
        .sum()
}
