//! Small statistics helpers shared by the estimators and fits.

/// Sample mean and unbiased (n − 1) standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Standard error of the sample standard deviation, from the fourth central moment.
pub fn std_standard_error(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    if values.len() < 4 {
        return f64::NAN;
    }
    let (mean, sd) = mean_std(values);
    let var = sd * sd;
    if var == 0.0 {
        return 0.0;
    }
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let var_of_var = ((m4 - var * var * (n - 3.0) / (n - 1.0)) / n).max(0.0);
    var_of_var.sqrt() / (2.0 * sd)
}

/// Ordinary least squares `y ≈ intercept + slope·x`. Returns `(intercept, slope)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

/// Weighted least squares through the origin, `y ≈ k·x` with weights `1/σ²`.
/// Returns `(k, σ_k)`.
pub fn proportional_fit(x: &[f64], y: &[f64], sigma: &[f64]) -> Option<(f64, f64)> {
    if x.is_empty() || x.len() != y.len() || x.len() != sigma.len() {
        return None;
    }
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for ((&xi, &yi), &si) in x.iter().zip(y).zip(sigma) {
        let w = 1.0 / (si * si);
        if !w.is_finite() {
            return None;
        }
        sxx += w * xi * xi;
        sxy += w * xi * yi;
    }
    if sxx == 0.0 {
        return None;
    }
    Some((sxy / sxx, (1.0 / sxx).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_fit_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let (b, m) = linear_fit(&x, &y).unwrap();
        assert!((b - 2.0).abs() < 1e-12 && (m + 0.5).abs() < 1e-12);
    }

    #[test]
    fn proportional_fit_weights() {
        let x = [1.0, 2.0];
        let y = [1.0, 4.0];
        let (k, _) = proportional_fit(&x, &y, &[1.0, 1e6]).unwrap();
        assert!((k - 1.0).abs() < 1e-6);
    }

    #[test]
    fn mean_std_small() {
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
    }
}
