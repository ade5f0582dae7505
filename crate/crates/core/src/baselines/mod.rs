//! Reference forecasters. All of them read only the target lot's own history.

mod ar;
mod ha;
mod nlinear;

pub use ar::{ar_fit, ar_forecast_at, ar_predict, ARModel};
pub use ha::{ha_fit, ha_forecast_at, ha_predict, HAModel};
pub use nlinear::{nlinear_fit, nlinear_predict, NLinearConfig, NLinearModel};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Solve the symmetric positive (semi)definite system `a x = b`. A failed
/// Cholesky factorization retries with `ridge` added to the diagonal.
pub(crate) fn solve_spd(a: DMatrix<f64>, b: DMatrix<f64>, ridge: f64, what: &str) -> Result<DMatrix<f64>> {
    if let Some(ch) = a.clone().cholesky() {
        let x = ch.solve(&b);
        if x.iter().all(|v| v.is_finite()) {
            return Ok(x);
        }
    }
    log::warn!("{what}: singular normal equations, retrying with ridge {ridge:e}");
    let n = a.nrows();
    let scale = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max).max(1.0);
    let reg = a + DMatrix::<f64>::identity(n, n) * (ridge * scale);
    reg.cholesky()
        .map(|ch| ch.solve(&b))
        .ok_or_else(|| Error::Numerical(format!("{what}: normal equations stay singular after ridge")))
}
