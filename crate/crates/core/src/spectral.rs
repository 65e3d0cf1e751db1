//! Fourier-Galerkin representation on the periodic interval `[−π, π)`.
//!
//! A [`ModalState`] stores the coefficients `û_k`, `k = 0..=N`, of each of
//! the `m` real components; negative wavenumbers are implied by
//! `û_{−k} = conj(û_k)`. Coefficients are laid out mode-major so that the
//! per-mode `m`-vectors the time stepper works on are contiguous.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use thiserror::Error;

use crate::densemat::RealMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite coefficient for component {comp}, mode {mode}")]
    NonFinite { comp: usize, mode: usize },
    #[error("mean mode of component {comp} has imaginary part {im:e}")]
    NotReal { comp: usize, im: f64 },
}

pub type Result<T> = std::result::Result<T, SpectralError>;

#[derive(Debug, Clone, PartialEq)]
pub struct ModalState {
    m: usize,
    n: usize,
    coeffs: Vec<Complex64>,
}

impl ModalState {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            coeffs: vec![Complex64::new(0.0, 0.0); m * (n + 1)],
        }
    }

    /// Wraps mode-major coefficients (`coeffs[k·m + c]`), checking finiteness
    /// and that every mean mode is real.
    pub fn from_coeffs(m: usize, n: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != m * (n + 1) {
            return Err(SpectralError::ShapeMismatch(format!(
                "{} coefficients for m = {m}, N = {n}",
                coeffs.len()
            )));
        }
        if let Some(i) = coeffs
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(SpectralError::NonFinite {
                comp: i % m,
                mode: i / m,
            });
        }
        let scale = coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (comp, z) in coeffs[..m].iter().enumerate() {
            if z.im.abs() > 1e-13 * scale.max(1.0) {
                return Err(SpectralError::NotReal { comp, im: z.im });
            }
        }
        Ok(Self { m, n, coeffs })
    }

    /// Number of components.
    pub fn components(&self) -> usize {
        self.m
    }

    /// Mode cutoff `N`.
    pub fn cutoff(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, comp: usize, k: usize) -> Complex64 {
        self.coeffs[k * self.m + comp]
    }

    pub fn set_coeff(&mut self, comp: usize, k: usize, value: Complex64) {
        self.coeffs[k * self.m + comp] = value;
    }

    /// The `m`-vector of mode `k`.
    pub fn mode(&self, k: usize) -> &[Complex64] {
        &self.coeffs[k * self.m..(k + 1) * self.m]
    }

    pub fn mode_mut(&mut self, k: usize) -> &mut [Complex64] {
        &mut self.coeffs[k * self.m..(k + 1) * self.m]
    }

    pub fn modes_mut(&mut self) -> std::slice::ChunksExactMut<'_, Complex64> {
        self.coeffs.chunks_exact_mut(self.m)
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.m != other.m || self.n != other.n {
            return Err(SpectralError::ShapeMismatch(format!(
                "(m, N) = ({}, {}) vs ({}, {})",
                self.m, self.n, other.m, other.n
            )));
        }
        Ok(())
    }

    /// `α·self + β·other`
    pub fn lin_comb(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            m: self.m,
            n: self.n,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a * alpha + b * beta)
                .collect(),
        })
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            m: self.m,
            n: self.n,
            coeffs: self.coeffs.iter().map(|z| z * alpha).collect(),
        }
    }

    /// Largest `|Im û₀|` over components.
    pub fn mean_imag_residue(&self) -> f64 {
        self.coeffs[..self.m]
            .iter()
            .map(|z| z.im.abs())
            .fold(0.0, f64::max)
    }
}

/// Samples on the uniform grid `x_j = −π + 2πj/P`, `j = 0..P`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub x: Vec<f64>,
    /// `values[c][j]` is component `c` at `x[j]`.
    pub values: Vec<Vec<f64>>,
}

impl GridField {
    pub fn points(&self) -> usize {
        self.x.len()
    }

    pub fn components(&self) -> usize {
        self.values.len()
    }

    /// Trapezoid-rule `L²` norm over `[−π, π)`.
    pub fn l2_norm(&self) -> f64 {
        let w = 2.0 * PI / self.points() as f64;
        (w * self.values.iter().flatten().map(|u| u * u).sum::<f64>()).sqrt()
    }

    /// Writes `x,comp1,…,compm` CSV.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<String> = std::iter::once("x".to_string())
            .chain((1..=self.components()).map(|c| format!("comp{c}")))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for (j, x) in self.x.iter().enumerate() {
            write!(out, "{x:.16e}")?;
            for comp in &self.values {
                write!(out, ",{:.16e}", comp[j])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Grid points used for a cutoff `N`: `2N + 2` of them.
pub fn grid(n: usize) -> Vec<f64> {
    let p = 2 * n + 2;
    (0..p)
        .map(|j| -PI + 2.0 * PI * j as f64 / p as f64)
        .collect()
}

/// Projects sampled data onto `P_N`. The sample count must be even and at
/// least `2N + 2`, which makes the trapezoid rule exact on `P_N`.
pub fn project_grid(field: &GridField, n: usize) -> Result<ModalState> {
    let p = field.points();
    if !p.is_multiple_of(2) || p < 2 * n + 2 {
        return Err(SpectralError::ShapeMismatch(format!(
            "{p} samples cannot resolve N = {n}"
        )));
    }
    let m = field.components();
    let mut state = ModalState::zeros(m, n);
    for k in 0..=n {
        let phases: Vec<Complex64> = field
            .x
            .iter()
            .map(|&x| Complex64::from_polar(1.0 / p as f64, -(k as f64) * x))
            .collect();
        for (c, samples) in field.values.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (u, e) in samples.iter().zip(&phases) {
                acc += e * *u;
            }
            if k == 0 {
                acc.im = 0.0;
            }
            state.set_coeff(c, k, acc);
        }
    }
    Ok(state)
}

/// Orthogonal projection of the per-component functions onto `P_N`.
pub fn project(fields: &[&dyn Fn(f64) -> f64], n: usize) -> ModalState {
    let x = grid(n);
    let values = fields
        .iter()
        .map(|f| x.iter().map(|&xj| f(xj)).collect())
        .collect();
    project_grid(&GridField { x, values }, n).expect("grid is sized for N")
}

/// Point values on the `2N + 2` grid.
pub fn synthesize(state: &ModalState) -> GridField {
    synthesize_at(state, &grid(state.n))
}

/// Point values `Σ_{|k|≤N} û_k e^{ikx}` at arbitrary points; real by
/// construction through the conjugate pairing.
pub fn synthesize_at(state: &ModalState, x: &[f64]) -> GridField {
    let values = (0..state.m)
        .map(|c| {
            x.iter()
                .map(|&xj| {
                    let mut u = state.coeff(c, 0).re;
                    for k in 1..=state.n {
                        u += 2.0
                            * (state.coeff(c, k) * Complex64::from_polar(1.0, k as f64 * xj)).re;
                    }
                    u
                })
                .collect()
        })
        .collect();
    GridField {
        x: x.to_vec(),
        values,
    }
}

/// Parseval weight of mode `k` (negative partner included).
#[inline]
pub fn mode_weight(k: usize) -> f64 {
    if k == 0 {
        1.0
    } else {
        2.0
    }
}

pub fn l2_norm(state: &ModalState) -> f64 {
    let sum: f64 = (0..=state.n)
        .map(|k| mode_weight(k) * state.mode(k).iter().map(|z| z.norm_sqr()).sum::<f64>())
        .sum();
    (2.0 * PI * sum).sqrt()
}

/// `L²` distance between two states with the same shape.
pub fn modal_error(a: &ModalState, b: &ModalState) -> Result<f64> {
    a.check_same_shape(b)?;
    let sum: f64 = (0..=a.n)
        .map(|k| {
            mode_weight(k)
                * a.mode(k)
                    .iter()
                    .zip(b.mode(k))
                    .map(|(x, y)| (x - y).norm_sqr())
                    .sum::<f64>()
        })
        .sum();
    Ok((2.0 * PI * sum).sqrt())
}

/// `∂ₓ`: multiplies `û_k` by `ik`.
pub fn derivative(state: &ModalState) -> ModalState {
    let mut out = state.clone();
    for (k, mode) in out.modes_mut().enumerate() {
        let ik = Complex64::new(0.0, k as f64);
        mode.iter_mut().for_each(|z| *z *= ik);
    }
    out
}

/// `‖U‖_{A₀} = (∫ Uᵀ A₀ U dx)^{1/2}` for a symmetric positive definite `A₀`.
pub fn energy_norm(state: &ModalState, a0: &RealMatrix) -> Result<f64> {
    if a0.rows() != state.m || a0.cols() != state.m {
        return Err(SpectralError::ShapeMismatch(format!(
            "A0 is {}x{}, state has m = {}",
            a0.rows(),
            a0.cols(),
            state.m
        )));
    }
    let mut sum = 0.0;
    for k in 0..=state.n {
        let u = state.mode(k);
        let mut quad = 0.0;
        for i in 0..state.m {
            for j in 0..state.m {
                quad += a0[(i, j)] * (u[i].conj() * u[j]).re;
            }
        }
        sum += mode_weight(k) * quad;
    }
    Ok((2.0 * PI * sum).sqrt())
}
