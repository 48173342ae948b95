//! Classical fixed-step fourth order Runge-Kutta.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Reusable stage buffers so repeated steps do not allocate.
#[derive(Clone, Debug, Default)]
pub struct Rk4<T> {
    k1: Vec<T>,
    k2: Vec<T>,
    k3: Vec<T>,
    k4: Vec<T>,
    tmp: Vec<T>,
}

impl<T: Scalar> Rk4<T> {
    pub fn new() -> Self {
        Self {
            k1: Vec::new(),
            k2: Vec::new(),
            k3: Vec::new(),
            k4: Vec::new(),
            tmp: Vec::new(),
        }
    }

    fn resize(&mut self, dim: usize) {
        for buf in [
            &mut self.k1,
            &mut self.k2,
            &mut self.k3,
            &mut self.k4,
            &mut self.tmp,
        ] {
            buf.clear();
            buf.resize(dim, T::zero());
        }
    }

    /// Advances `y` by `dt` in place. `rhs(y, dy)` writes dy/dt at `y`.
    pub fn step<F>(&mut self, y: &mut [T], dt: T, mut rhs: F) -> Result<()>
    where
        F: FnMut(&[T], &mut [T]),
    {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::Domain {
                name: "dt",
                value: dt.as_f64(),
                domain: "(0, inf)",
            });
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::Integration(format!(
                "non-finite state component {i}: {}",
                y[i]
            )));
        }
        let dim = y.len();
        self.resize(dim);
        let half = dt / T::lit(2.0);

        rhs(y, &mut self.k1);
        for i in 0..dim {
            self.tmp[i] = y[i] + half * self.k1[i];
        }
        rhs(&self.tmp, &mut self.k2);
        for i in 0..dim {
            self.tmp[i] = y[i] + half * self.k2[i];
        }
        rhs(&self.tmp, &mut self.k3);
        for i in 0..dim {
            self.tmp[i] = y[i] + dt * self.k3[i];
        }
        rhs(&self.tmp, &mut self.k4);

        let sixth = dt / T::lit(6.0);
        let two = T::lit(2.0);
        for i in 0..dim {
            let slope = self.k1[i] + two * self.k2[i] + two * self.k3[i] + self.k4[i];
            if !slope.is_finite() {
                return Err(Error::Integration(format!(
                    "non-finite derivative in component {i}"
                )));
            }
            y[i] += sixth * slope;
        }
        Ok(())
    }
}

/// One RK4 step returning the new state.
pub fn rk4_step<T, F>(y: &[T], dt: T, rhs: F) -> Result<Vec<T>>
where
    T: Scalar,
    F: FnMut(&[T], &mut [T]),
{
    let mut out = y.to_vec();
    Rk4::new().step(&mut out, dt, rhs)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rhs_leaves_state_unchanged() {
        let y = [1.5, -2.0, 3.25];
        let out = rk4_step(&y, 0.1, |_, dy: &mut [f64]| dy.fill(0.0)).unwrap();
        assert_eq!(out, y);
    }

    #[test]
    fn constant_rhs_is_exact() {
        let y = [1.0f64, 2.0];
        let out = rk4_step(&y, 0.5, |_, dy: &mut [f64]| {
            dy[0] = 4.0;
            dy[1] = -2.0;
        })
        .unwrap();
        assert_eq!(out, [3.0, 1.0]);
    }

    #[test]
    fn exponential_decay_matches_closed_form() {
        let out = rk4_step(&[1.0f64], 0.1, |y, dy| dy[0] = -y[0]).unwrap();
        assert!((out[0] - (-0.1f64).exp()).abs() < 1e-7);

        let out32 = rk4_step(&[1.0f32], 0.1, |y, dy| dy[0] = -y[0]).unwrap();
        assert!((out32[0] - (-0.1f32).exp()).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(rk4_step(&[1.0], 0.0, |_, dy: &mut [f64]| dy[0] = 0.0).is_err());
        assert!(rk4_step(&[f64::NAN], 0.1, |_, dy: &mut [f64]| dy[0] = 0.0).is_err());
        assert!(rk4_step(&[1.0], 0.1, |_, dy: &mut [f64]| dy[0] = f64::INFINITY).is_err());
    }

    #[test]
    fn deterministic() {
        let f = |y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1].sin();
            dy[1] = -y[0] * y[1];
        };
        let a = rk4_step(&[0.3, 0.7], 0.05, f).unwrap();
        let b = rk4_step(&[0.3, 0.7], 0.05, f).unwrap();
        assert_eq!(a, b);
    }
}
