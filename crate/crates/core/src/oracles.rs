//! Closed-form weak-coupling results, independent of the time-stepping
//! solvers.

use num_complex::Complex64;

use crate::ensemble::{Density, GAMMA};
use crate::error::{invalid, Result};
use crate::table::Table;

/// Unnormalized echo field `∝ ∫ dΔ ρ̄(Δ) e^{iΔ(t − T_S)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoProfile {
    pub times: Vec<f64>,
    pub amplitude: Vec<Complex64>,
    pub center: f64,
    /// Amplitude width `τ = 1/Γ`.
    pub width: f64,
}

impl EchoProfile {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.amplitude.iter().map(|a| a.norm()).collect()
    }

    /// `t,re_phi,im_phi`.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["t", "re_phi", "im_phi"]);
        for (x, a) in self.times.iter().zip(&self.amplitude) {
            t.push([*x, a.re, a.im]);
        }
        t
    }
}

/// Fourier transform of the z-integrated spectral density, centred on the
/// rephasing time.
pub fn analytic_echo_profile(density: &Density, t_s: f64, times: &[f64]) -> EchoProfile {
    let spectrum = density.spectral_profile();
    let grid = density.grid();
    let amplitude = times
        .iter()
        .map(|t| spectral_transform(grid.delta(), grid.delta_weights(), &spectrum, t - t_s))
        .collect();
    EchoProfile {
        times: times.to_vec(),
        amplitude,
        center: t_s,
        width: 1.0 / density.gamma(),
    }
}

fn spectral_transform(delta: &[f64], weights: &[f64], spectrum: &[f64], t: f64) -> Complex64 {
    delta
        .iter()
        .zip(weights)
        .zip(spectrum)
        .map(|((d, w), s)| Complex64::from_polar(w * s, d * t))
        .sum()
}

/// `exp(−Γ²(t − T_S)²/2)`, the Gaussian-line echo envelope.
pub fn gaussian_echo_envelope(t: f64, t_s: f64, gamma: f64) -> f64 {
    let x = gamma * (t - t_s);
    (-0.5 * x * x).exp()
}

/// Amplitude overlap `|⟨a(t)|a(t − s)⟩|` of two Gaussian photons with
/// amplitude width `τ`: `exp(−s²/(4τ²))`.
pub fn photon_overlap(spacing: f64, tau: f64) -> Result<f64> {
    check_overlap_args(spacing, tau)?;
    Ok((-spacing * spacing / (4.0 * tau * tau)).exp())
}

/// Normalized overlap of the intensity profiles, `exp(−s²/(2τ²))`; the square
/// of [`photon_overlap`].
pub fn photon_intensity_overlap(spacing: f64, tau: f64) -> Result<f64> {
    check_overlap_args(spacing, tau)?;
    Ok((-spacing * spacing / (2.0 * tau * tau)).exp())
}

fn check_overlap_args(spacing: f64, tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(invalid("tau", format!("{tau} must be positive")));
    }
    if !(spacing >= 0.0 && spacing.is_finite()) {
        return Err(invalid("spacing", format!("{spacing} must be >= 0")));
    }
    Ok(())
}

/// Survival with only the uniform decay term: `exp(−αL Γ t)`.
pub fn weak_coupling_survival(alpha_l: f64, t: f64) -> Result<f64> {
    if !(alpha_l >= 0.0 && alpha_l.is_finite()) {
        return Err(invalid("alpha_l", format!("{alpha_l} must be >= 0")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid("t", format!("{t} must be >= 0")));
    }
    Ok((-alpha_l * GAMMA * t).exp())
}

/// Survival including the collective term to first order in `αL`, assuming
/// the amplitude only dephases:
///
/// ```text
/// P(t) = e^{−αL t} (1 − αL ∫_0^t |χ(u)|² du),   χ(u) = ∫∫ ρ e^{iΔu} / N
/// ```
///
/// The time integral uses composite Simpson with `2·intervals` panels.
pub fn dephased_survival(alpha_l: f64, density: &Density, t: f64, intervals: usize) -> Result<f64> {
    let base = weak_coupling_survival(alpha_l, t)?;
    let grid = density.grid();
    let spectrum: Vec<f64> = density
        .spectral_profile()
        .into_iter()
        .map(|s| s / density.n_atoms())
        .collect();
    let chi2 = |u: f64| spectral_transform(grid.delta(), grid.delta_weights(), &spectrum, u).norm_sqr();
    let n = 2 * intervals.max(1);
    let h = t / n as f64;
    let mut acc = chi2(0.0) + chi2(t);
    for k in 1..n {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * chi2(k as f64 * h);
    }
    let integral = acc * h / 3.0;
    Ok(base * (1.0 - alpha_l * GAMMA * integral))
}
