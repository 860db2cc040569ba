//! Fixed-step RK4 and the slice-coupling quadrature shared by both stages.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::Grid;

/// Time step and trajectory sampling interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stepping {
    pub dt: f64,
    pub sample_interval: f64,
}

impl Default for Stepping {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            sample_interval: 1e-2,
        }
    }
}

/// Step count and sampling stride for one integration interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Plan {
    pub steps: usize,
    pub dt: f64,
    pub stride: usize,
}

impl Plan {
    pub fn is_sample(&self, step: usize) -> bool {
        step.is_multiple_of(self.stride) || step == self.steps
    }
}

impl Stepping {
    pub fn new(dt: f64, sample_interval: f64) -> Result<Self> {
        let s = Self { dt, sample_interval };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", format!("{} must be positive", self.dt)));
        }
        if !(self.sample_interval > 0.0 && self.sample_interval.is_finite()) {
            return Err(invalid(
                "sample_interval",
                format!("{} must be positive", self.sample_interval),
            ));
        }
        Ok(())
    }

    /// Halved step and unchanged sampling, for convergence checks.
    pub fn refined(&self) -> Self {
        Self {
            dt: 0.5 * self.dt,
            sample_interval: self.sample_interval,
        }
    }

    /// Integer number of equal steps covering `duration`, each no longer than
    /// `dt`.
    pub(crate) fn plan(&self, duration: f64) -> Result<Plan> {
        self.validate()?;
        if !(duration >= 0.0 && duration.is_finite()) {
            return Err(invalid("t_end", format!("integration span {duration} is negative")));
        }
        let steps = ((duration / self.dt) - 1e-9).ceil().max(0.0) as usize;
        let dt = if steps == 0 { 0.0 } else { duration / steps as f64 };
        let stride = if steps == 0 {
            1
        } else {
            ((self.sample_interval / dt).round() as usize).max(1)
        };
        Ok(Plan { steps, dt, stride })
    }
}

/// Scratch buffers for classical RK4 on a complex vector.
pub(crate) struct Rk4 {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Rk4 {
    pub fn new(n: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); n];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    /// Advance `y` by one step of the autonomous system `dy/dt = f(y)`.
    pub fn step<F>(&mut self, y: &mut [Complex64], dt: f64, f: &mut F)
    where
        F: FnMut(&[Complex64], &mut [Complex64]),
    {
        let h2 = 0.5 * dt;
        f(y, &mut self.k1);
        axpy(&mut self.tmp, y, h2, &self.k1);
        f(&self.tmp, &mut self.k2);
        axpy(&mut self.tmp, y, h2, &self.k2);
        f(&self.tmp, &mut self.k3);
        axpy(&mut self.tmp, y, dt, &self.k3);
        f(&self.tmp, &mut self.k4);
        let w = dt / 6.0;
        for (i, v) in y.iter_mut().enumerate() {
            *v += (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]) * w;
        }
    }
}

#[inline]
fn axpy(out: &mut [Complex64], y: &[Complex64], a: f64, k: &[Complex64]) {
    for ((o, y), k) in out.iter_mut().zip(y).zip(k) {
        *o = y + k * a;
    }
}

/// Per-slice polarization `P(z) = ∫ s ρ dΔ`, given `ρ` premultiplied by the
/// detuning weights.
pub(crate) fn polarization(grid: &Grid, weighted_rho: &[f64], s: &[Complex64], out: &mut [Complex64]) {
    let nd = grid.n_delta();
    for ((o, srow), rrow) in out.iter_mut().zip(s.chunks_exact(nd)).zip(weighted_rho.chunks_exact(nd)) {
        let mut acc = Complex64::new(0.0, 0.0);
        for (s, r) in srow.iter().zip(rrow) {
            acc += s * r;
        }
        *o = acc;
    }
}

/// Cumulative `∫_0^z P` as seen by each slice: everything upstream plus half
/// of the slice's own cell. Interior nodes coincide with the trapezoid rule;
/// the half-cell self term makes `2 Re Σ w P* C = |Σ w P|²` hold exactly, so
/// the discrete scheme conserves flux.
pub(crate) fn accumulate_forward(z_weights: &[f64], p: &[Complex64], out: &mut [Complex64]) {
    let mut acc = Complex64::new(0.0, 0.0);
    for ((o, w), p) in out.iter_mut().zip(z_weights).zip(p) {
        let half = p * (0.5 * w);
        *o = acc + half;
        acc += half + half;
    }
}

/// Mirror of [`accumulate_forward`]: `∫_z^L P` with the same half-cell rule.
pub(crate) fn accumulate_backward(z_weights: &[f64], p: &[Complex64], out: &mut [Complex64]) {
    let mut acc = Complex64::new(0.0, 0.0);
    for ((o, w), p) in out.iter_mut().zip(z_weights).zip(p).rev() {
        let half = p * (0.5 * w);
        *o = acc + half;
        acc += half + half;
    }
}

/// Full trapezoid `∫_0^L P dz`.
pub(crate) fn integrate_z(z_weights: &[f64], p: &[Complex64]) -> Complex64 {
    z_weights.iter().zip(p).map(|(w, p)| p * w).sum()
}

/// `ρ · w_Δ` row by row.
pub(crate) fn delta_weighted(grid: &Grid, rho: &[f64]) -> Vec<f64> {
    let nd = grid.n_delta();
    rho.chunks_exact(nd)
        .flat_map(|row| row.iter().zip(grid.delta_weights()).map(|(r, w)| r * w))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn plan_covers_span_exactly() {
        let s = Stepping::new(1e-2, 1e-1).unwrap();
        let p = s.plan(4.0).unwrap();
        assert_eq!(p.steps, 400);
        assert_eq!(p.stride, 10);
        assert!((p.dt * p.steps as f64 - 4.0).abs() < 1e-12);
        let p = s.plan(2.345).unwrap();
        assert_eq!(p.steps, 235);
        assert!(p.dt <= 1e-2);
        assert!(p.is_sample(235));
        assert_eq!(s.plan(0.0).unwrap().steps, 0);
        assert!(s.plan(-1.0).is_err());
        assert!(Stepping::new(0.0, 1.0).is_err());
    }

    #[test]
    fn rk4_is_fourth_order_on_rotation() {
        let mut y = vec![Complex64::new(1.0, 0.0)];
        let mut rk = Rk4::new(1);
        let mut f = |y: &[Complex64], out: &mut [Complex64]| out[0] = Complex64::i() * y[0];
        for _ in 0..100 {
            rk.step(&mut y, 0.01, &mut f);
        }
        let exact = Complex64::from_polar(1.0, 1.0);
        assert!((y[0] - exact).norm() < 2e-10);
    }

    proptest! {
        #[test]
        fn half_cell_accumulation_conserves_flux(
            re in proptest::collection::vec(-1.0f64..1.0, 2..40),
            im in proptest::collection::vec(-1.0f64..1.0, 2..40),
        ) {
            let n = re.len().min(im.len());
            let p: Vec<Complex64> = (0..n).map(|i| Complex64::new(re[i], im[i])).collect();
            let h = 1.0 / (n - 1) as f64;
            let mut w = vec![h; n];
            w[0] *= 0.5;
            w[n - 1] *= 0.5;
            let total = integrate_z(&w, &p);
            for backward in [false, true] {
                let mut c = vec![Complex64::new(0.0, 0.0); n];
                if backward {
                    accumulate_backward(&w, &p, &mut c);
                } else {
                    accumulate_forward(&w, &p, &mut c);
                }
                let lhs: f64 = 2.0 * (0..n).map(|j| (w[j] * p[j].conj() * c[j]).re).sum::<f64>();
                prop_assert!((lhs - total.norm_sqr()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn forward_accumulation_matches_trapezoid_inside() {
        let p: Vec<Complex64> = (0..5).map(|i| Complex64::new(i as f64, 0.0)).collect();
        let w = [0.125, 0.25, 0.25, 0.25, 0.125];
        let mut c = vec![Complex64::new(0.0, 0.0); 5];
        accumulate_forward(&w, &p, &mut c);
        // trapezoid of f(z) = 4z on nodes 0, .25, .5 is 2 z²
        assert!((c[1].re - 0.125).abs() < 1e-15);
        assert!((c[2].re - 0.5).abs() < 1e-15);
        assert!((c[3].re - 1.125).abs() < 1e-15);
    }
}
