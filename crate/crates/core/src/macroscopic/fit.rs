use nalgebra::{DMatrix, DVector};

use super::MacroError;

/// Least-squares fits of one trajectory component: the quadratic
/// `a0 + a1·t + a2·t²` and the linear refit `intercept + slope·t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadFit {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub r2_quadratic: f64,
    pub intercept: f64,
    pub slope: f64,
    pub r2_linear: f64,
    pub t_first: f64,
    pub t_last: f64,
}

impl QuadFit {
    pub fn quadratic_at(&self, t: f64) -> f64 {
        self.a0 + self.a1 * t + self.a2 * t * t
    }

    /// Change of the fitted quadratic across the observation window.
    pub fn net_change(&self) -> f64 {
        self.quadratic_at(self.t_last) - self.quadratic_at(self.t_first)
    }
}

/// Coefficient of determination against the mean-only model. A series with
/// no variance is perfectly described by a constant, so it scores 1.
fn r_squared(values: &[f64], fitted: impl Iterator<Item = f64>) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss_tot: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let ss_res: f64 = values
        .iter()
        .zip(fitted)
        .map(|(v, f)| (v - f) * (v - f))
        .sum();
    if ss_tot == 0.0 {
        return if ss_res == 0.0 { 1.0 } else { 0.0 };
    }
    (1.0 - ss_res / ss_tot).min(1.0)
}

/// Polynomial least squares of the given degree in the rescaled variable
/// `u = t / scale`, returning coefficients in the original variable.
fn polyfit(times: &[f64], values: &[f64], degree: usize, scale: f64) -> Vec<f64> {
    let n = times.len();
    let a = DMatrix::from_fn(n, degree + 1, |r, c| (times[r] / scale).powi(c as i32));
    let b = DVector::from_column_slice(values);
    let coef = a
        .svd(true, true)
        .solve(&b, 1e-13)
        .expect("SVD computed with both U and V");
    coef.iter()
        .enumerate()
        .map(|(k, c)| c / scale.powi(k as i32))
        .collect()
}

pub fn fit_component(times: &[f64], values: &[f64]) -> Result<QuadFit, MacroError> {
    if times.len() != values.len() {
        return Err(MacroError::LengthMismatch(times.len(), values.len()));
    }
    let n = times.len();
    if n < 2 {
        return Err(MacroError::TooFewPoints(n));
    }
    let t_first = times.iter().copied().fold(f64::INFINITY, f64::min);
    let t_last = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if t_first == t_last {
        return Err(MacroError::RankDeficient);
    }

    // flat series: exact constant model, no rounding noise in a1/a2
    if values.iter().all(|v| *v == values[0]) {
        return Ok(QuadFit {
            a0: values[0],
            a1: 0.0,
            a2: 0.0,
            r2_quadratic: 1.0,
            intercept: values[0],
            slope: 0.0,
            r2_linear: 1.0,
            t_first,
            t_last,
        });
    }

    let scale = t_first.abs().max(t_last.abs());
    let lin = polyfit(times, values, 1, scale);
    let r2_linear = r_squared(values, times.iter().map(|t| lin[0] + lin[1] * t));

    let mut distinct = times.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let (a0, a1, a2, r2_quadratic) = if distinct.len() >= 3 {
        let q = polyfit(times, values, 2, scale);
        let r2 = r_squared(values, times.iter().map(|t| q[0] + q[1] * t + q[2] * t * t));
        (q[0], q[1], q[2], r2)
    } else {
        (lin[0], lin[1], 0.0, r2_linear)
    };

    Ok(QuadFit {
        a0,
        a1,
        a2,
        r2_quadratic,
        intercept: lin[0],
        slope: lin[1],
        r2_linear,
        t_first,
        t_last,
    })
}
