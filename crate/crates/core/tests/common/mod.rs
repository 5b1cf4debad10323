#![allow(dead_code)]

/// Least-squares slope of log|y| against log x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn geomspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Trapezoid rule on a uniform grid.
pub fn trapz(y: &[f64], h: f64) -> f64 {
    let n = y.len();
    h * (y.iter().sum::<f64>() - 0.5 * (y[0] + y[n - 1]))
}

/// Matrix exponential by scaling and squaring of a Taylor series.
pub fn expm(a: &nalgebra::Matrix4<f64>) -> nalgebra::Matrix4<f64> {
    let norm = a.iter().map(|v| v.abs()).sum::<f64>();
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let b = a / 2f64.powi(s);
    let mut term = nalgebra::Matrix4::identity();
    let mut sum = term;
    for k in 1..30 {
        term = term * b / k as f64;
        sum += term;
    }
    for _ in 0..s {
        sum = sum * sum;
    }
    sum
}
