//! Classical fourth-order Runge-Kutta stepping.

use crate::error::{Error, Result};

/// One RK4 step of `y' = deriv(t, y)` from `t` to `t + dt`.
///
/// Every stage evaluation is checked for finiteness; the first non-finite
/// derivative aborts with the time at which it was evaluated.
pub fn rk4_step<F>(deriv: F, t: f64, y: &[f64], dt: f64) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    if !(dt > 0.0) {
        return Err(Error::Integration { t, reason: format!("step size {dt} is not positive") });
    }
    let n = y.len();
    let eval = |tt: f64, yy: &[f64]| -> Result<Vec<f64>> {
        let d = deriv(tt, yy);
        if d.len() != n {
            return Err(Error::Shape(format!("derivative has length {}, state {}", d.len(), n)));
        }
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration { t: tt, reason: "non-finite derivative".into() });
        }
        Ok(d)
    };
    let offset = |k: &[f64], scale: f64| -> Vec<f64> {
        y.iter().zip(k).map(|(yi, ki)| yi + scale * ki).collect()
    };

    let half = 0.5 * dt;
    let k1 = eval(t, y)?;
    let k2 = eval(t + half, &offset(&k1, half))?;
    let k3 = eval(t + half, &offset(&k2, half))?;
    let k4 = eval(t + dt, &offset(&k3, dt))?;

    Ok((0..n)
        .map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Integrates on the uniform grid `t_n = n * dt`, `n = 0..steps`, returning
/// `steps + 1` states. `deriv` also receives the step index so exogenous
/// signals can be held at their sample value for the whole step.
pub(crate) fn integrate<F, C>(
    deriv: F,
    y0: &[f64],
    dt: f64,
    steps: usize,
    mut check: C,
) -> Result<Vec<Vec<f64>>>
where
    F: Fn(usize, f64, &[f64]) -> Vec<f64>,
    C: FnMut(usize, f64, &[f64]) -> Result<()>,
{
    let mut out = Vec::with_capacity(steps + 1);
    check(0, 0.0, y0)?;
    out.push(y0.to_vec());
    for n in 0..steps {
        let t = n as f64 * dt;
        let next = rk4_step(|tt, yy| deriv(n, tt, yy), t, &out[n], dt)?;
        check(n + 1, (n + 1) as f64 * dt, &next)?;
        out.push(next);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_derivative_keeps_state() {
        let y = rk4_step(|_, _| vec![0.0], 0.0, &[2.0], 0.1).unwrap();
        assert_eq!(y, vec![2.0]);
    }

    #[test]
    fn integrates_cubic_exactly() {
        let y = rk4_step(|t, _| vec![3.0 * t * t], 0.0, &[0.0], 1.0).unwrap();
        assert_eq!(y[0], 1.0);
    }

    #[test]
    fn exponential_matches_fourth_order_taylor() {
        // 1 + h + h^2/2 + h^3/6 + h^4/24 at h = 0.1
        let taylor = 1.0 + 0.1 + 0.005 + 0.001 / 6.0 + 0.0001 / 24.0;
        let y = rk4_step(|_, y| vec![y[0]], 0.0, &[1.0], 0.1).unwrap();
        assert!((y[0] - taylor).abs() < 1e-15);
        assert!((y[0] - 1.1051708333).abs() < 1e-10);
    }

    #[test]
    fn non_finite_derivative_reports_time() {
        let err = rk4_step(|t, _| vec![if t > 0.0 { f64::NAN } else { 1.0 }], 0.0, &[0.0], 0.5)
            .unwrap_err();
        match err {
            Error::Integration { t, .. } => assert_eq!(t, 0.25),
            other => panic!("unexpected {other:?}"),
        }
    }
}
