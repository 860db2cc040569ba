//! Position/detuning discretization with trapezoidal quadrature weights.

use crate::error::{Error, Result};

/// Ensemble length in internal units.
pub const LENGTH: f64 = 1.0;

/// Tensor-product grid over position `z ∈ [0, L]` and detuning `Δ ∈ [-h, h]`.
///
/// Field values on the grid are stored row-major: one row per `z` node, each
/// row holding every detuning node, so `index(iz, id) = iz * n_delta + id`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    z: Vec<f64>,
    delta: Vec<f64>,
    z_weights: Vec<f64>,
    delta_weights: Vec<f64>,
}

impl Grid {
    /// Uniform grid with `n_z` positions and `n_delta` detunings spanning
    /// `±delta_halfspan` (in units of the inhomogeneous width).
    pub fn new(n_z: usize, n_delta: usize, delta_halfspan: f64) -> Result<Self> {
        if n_z < 2 {
            return Err(Error::InvalidGrid(format!("n_z = {n_z}, need at least 2")));
        }
        if n_delta < 3 {
            return Err(Error::InvalidGrid(format!(
                "n_delta = {n_delta}, need at least 3"
            )));
        }
        if n_delta.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "n_delta = {n_delta} is even; zero detuning must be a node"
            )));
        }
        if !(delta_halfspan > 0.0 && delta_halfspan.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "delta_halfspan = {delta_halfspan}, must be positive"
            )));
        }

        let z_last = (n_z - 1) as f64;
        let z: Vec<f64> = (0..n_z).map(|i| LENGTH * i as f64 / z_last).collect();
        // integer numerator keeps the node set exactly antisymmetric
        let d_last = (n_delta - 1) as i64;
        let delta: Vec<f64> = (0..n_delta as i64)
            .map(|k| delta_halfspan * (2 * k - d_last) as f64 / d_last as f64)
            .collect();

        Ok(Self {
            z_weights: trapezoid_weights(LENGTH / z_last, n_z),
            delta_weights: trapezoid_weights(2.0 * delta_halfspan / d_last as f64, n_delta),
            z,
            delta,
        })
    }

    /// Same span with every interval halved (`n -> 2n - 1` nodes per axis).
    pub fn refined(&self) -> Result<Self> {
        Self::new(2 * self.n_z() - 1, 2 * self.n_delta() - 1, self.delta_halfspan())
    }

    pub fn n_z(&self) -> usize {
        self.z.len()
    }

    pub fn n_delta(&self) -> usize {
        self.delta.len()
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.z.len() * self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn z_weights(&self) -> &[f64] {
        &self.z_weights
    }

    pub fn delta_weights(&self) -> &[f64] {
        &self.delta_weights
    }

    pub fn length(&self) -> f64 {
        LENGTH
    }

    pub fn delta_halfspan(&self) -> f64 {
        *self.delta.last().expect("grid has detuning nodes")
    }

    pub fn delta_span(&self) -> f64 {
        2.0 * self.delta_halfspan()
    }

    /// Index of the `Δ = 0` node.
    pub fn zero_detuning_index(&self) -> usize {
        self.n_delta() / 2
    }

    #[inline]
    pub fn index(&self, iz: usize, id: usize) -> usize {
        iz * self.n_delta() + id
    }

    /// Double trapezoidal quadrature of a real field.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        values
            .chunks_exact(self.n_delta())
            .zip(&self.z_weights)
            .map(|(row, wz)| wz * dot(row, &self.delta_weights))
            .sum()
    }

    /// `∫ f dΔ` for every `z` node.
    pub fn integrate_delta(&self, values: &[f64]) -> Vec<f64> {
        values
            .chunks_exact(self.n_delta())
            .map(|row| dot(row, &self.delta_weights))
            .collect()
    }

    /// `∫ f dz` for every `Δ` node.
    pub fn integrate_z(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_delta()];
        for (row, wz) in values.chunks_exact(self.n_delta()).zip(&self.z_weights) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += wz * v;
            }
        }
        out
    }

    /// Reflect a field through `z -> L - z`.
    pub fn reverse_z<T: Clone>(&self, values: &[T]) -> Vec<T> {
        values
            .chunks_exact(self.n_delta())
            .rev()
            .flat_map(|row| row.iter().cloned())
            .collect()
    }
}

/// Convenience constructor mirroring [`Grid::new`].
pub fn make_grid(n_z: usize, n_delta: usize, delta_halfspan: f64) -> Result<Grid> {
    Grid::new(n_z, n_delta, delta_halfspan)
}

fn trapezoid_weights(step: f64, n: usize) -> Vec<f64> {
    let mut w = vec![step; n];
    w[0] = 0.5 * step;
    w[n - 1] = 0.5 * step;
    w
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn smallest_legal_grid() {
        let g = make_grid(2, 3, 1.0).unwrap();
        assert_eq!(g.z(), &[0.0, 1.0]);
        assert_eq!(g.delta(), &[-1.0, 0.0, 1.0]);
        assert_eq!(g.z_weights(), &[0.5, 0.5]);
        assert_eq!(g.delta_weights(), &[0.5, 1.0, 0.5]);
    }

    #[test]
    fn production_grid() {
        let g = make_grid(201, 201, 5.0).unwrap();
        assert_eq!(g.len(), 201 * 201);
        assert_eq!(g.delta()[0], -5.0);
        assert_eq!(g.delta()[200], 5.0);
        assert_eq!(g.delta()[g.zero_detuning_index()], 0.0);
        assert_relative_eq!(g.z_weights().iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(g.delta_weights().iter().sum::<f64>(), 10.0, epsilon = 1e-12);
        for k in 0..201 {
            assert_eq!(g.delta()[k], -g.delta()[200 - k]);
        }
        assert!(g.z().windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*g.z().last().unwrap(), LENGTH);
    }

    #[test]
    fn rejects_degenerate_counts() {
        assert!(matches!(make_grid(1, 3, 1.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(make_grid(2, 1, 1.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(make_grid(2, 4, 1.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(make_grid(2, 3, 0.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(make_grid(2, 3, f64::NAN), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn refinement_halves_intervals() {
        let g = make_grid(11, 21, 5.0).unwrap().refined().unwrap();
        assert_eq!((g.n_z(), g.n_delta()), (21, 41));
        assert_eq!(g.delta_halfspan(), 5.0);
    }

    #[test]
    fn quadrature_of_constant_is_area() {
        let g = make_grid(7, 9, 2.0).unwrap();
        assert_relative_eq!(g.integrate(&vec![1.0; g.len()]), 4.0, epsilon = 1e-14);
    }

    #[test]
    fn reverse_z_is_involution() {
        let g = make_grid(3, 3, 1.0).unwrap();
        let v: Vec<f64> = (0..9).map(f64::from).collect();
        let r = g.reverse_z(&v);
        assert_eq!(&r[..3], &[6.0, 7.0, 8.0]);
        assert_eq!(g.reverse_z(&r), v);
    }
}
