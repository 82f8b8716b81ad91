use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Ordinary least-squares line with its largest absolute residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    /// `ln error = intercept + slope · ln x`.
    LogLog,
    /// `error = intercept + slope · x`.
    Linear,
}

pub const MIN_FIT_POINTS: usize = 3;

fn least_squares(xs: &[f64], ys: &[f64]) -> Result<Fit> {
    if xs.len() < MIN_FIT_POINTS {
        return Err(Error::Degenerate(format!(
            "a slope needs at least {MIN_FIT_POINTS} points, got {}",
            xs.len()
        )));
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all abscissae are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max);
    Ok(Fit {
        slope,
        intercept,
        residual,
    })
}

/// Least-squares fit of `(ln n, ln error)`.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<Fit> {
    if let Some(&(n, e)) = points.iter().find(|(n, e)| !(*e > 0.0) || !(*n > 0.0)) {
        return Err(Error::Degenerate(format!(
            "log-log fit needs positive values, got ({n}, {e})"
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    least_squares(&xs, &ys)
}

/// Least-squares fit of `(x, y)` on the raw scale.
pub fn fit_linear(points: &[(f64, f64)]) -> Result<Fit> {
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Degenerate("non-finite point in linear fit".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    least_squares(&xs, &ys)
}

impl FitKind {
    pub fn fit(self, points: &[(f64, f64)]) -> Result<Fit> {
        match self {
            FitKind::LogLog => fit_slope(points),
            FitKind::Linear => fit_linear(points),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::Rng;

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = [512.0, 1024.0, 2048.0, 4096.0, 8192.0]
            .iter()
            .map(|&n: &f64| (n, n.powf(-0.5)))
            .collect();
        let fit = fit_slope(&pts).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12, "{fit:?}");
        assert!(fit.intercept.abs() < 1e-10);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn constant_errors_have_zero_slope() {
        let pts = [(10.0, 0.3), (20.0, 0.3), (40.0, 0.3)];
        assert_eq!(fit_slope(&pts).unwrap().slope, 0.0);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(fit_slope(&[(1.0, 1.0), (2.0, 0.5)]).is_err());
        assert!(fit_slope(&[(1.0, 1.0), (2.0, 0.0), (3.0, 0.1)]).is_err());
        assert!(fit_slope(&[(4.0, 1.0), (4.0, 0.5), (4.0, 0.1)]).is_err());
        assert!(fit_linear(&[(1.0, f64::NAN), (2.0, 0.0), (3.0, 0.1)]).is_err());
    }

    #[test]
    fn agrees_with_normal_equations() {
        let mut rng = crate::rng::stream(11, crate::rng::purpose::CHECK, &[]);
        for trial in 0..50 {
            let m = rng.gen_range(3..40);
            let pts: Vec<(f64, f64)> = (0..m)
                .map(|_| (rng.gen_range(1.0..1e5), rng.gen_range(1e-6..1.0)))
                .collect();
            // oracle: normal equations (AᵀA) β = Aᵀ ln e with A = [1, ln n]
            let a = DMatrix::from_fn(m, 2, |i, j| if j == 0 { 1.0 } else { pts[i].0.ln() });
            let b = DVector::from_iterator(m, pts.iter().map(|p| p.1.ln()));
            let beta = (a.transpose() * &a).try_inverse().unwrap() * (a.transpose() * b);
            let fit = fit_slope(&pts).unwrap();
            assert!((fit.slope - beta[1]).abs() < 1e-10, "trial {trial}");
            assert!((fit.intercept - beta[0]).abs() < 1e-10, "trial {trial}");
        }
    }

    #[test]
    fn linear_fit_recovers_line() {
        let pts = [(3.0, 1.0 + 0.2 * 3.0), (5.0, 2.0), (10.0, 3.0)];
        let fit = fit_linear(&pts).unwrap();
        assert!(fit.slope > 0.0);
        let exact = [(3.0, 7.0), (5.0, 11.0), (10.0, 21.0)];
        let f = fit_linear(&exact).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
    }
}
