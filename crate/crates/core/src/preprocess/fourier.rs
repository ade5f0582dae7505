use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::AvailabilitySeries;

/// Low-pass filter by zeroing every DFT bin whose period is shorter than
/// `cutoff_secs`. The mean (bin 0) is always kept. No clamping.
pub fn fourier_lowpass(values: &[f64], step_secs: i64, cutoff_secs: f64) -> Vec<f64> {
    let n = values.len();
    if n < 2 {
        return values.to_vec();
    }
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fwd.process(&mut buf);
    let span = n as f64 * step_secs as f64;
    for (k, c) in buf.iter_mut().enumerate().skip(1) {
        let harmonic = k.min(n - k) as f64;
        let period = span / harmonic;
        if period < cutoff_secs {
            *c = Complex::new(0.0, 0.0);
        }
    }
    inv.process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter().map(|c| c.re * scale).collect()
}

/// Remove components with period below `cutoff_secs`, clamping the result to `[0, 1]`.
pub fn fourier_denoise(series: &AvailabilitySeries, cutoff_secs: f64) -> AvailabilitySeries {
    let values = fourier_lowpass(&series.values, series.grid.step, cutoff_secs)
        .into_iter()
        .map(|v| v.clamp(0.0, 1.0))
        .collect();
    AvailabilitySeries {
        values,
        ..series.clone()
    }
}
