//! IMEX Runge-Kutta time stepping of the Fourier-Galerkin system.
//!
//! Each Fourier mode evolves independently under
//! `Û' = −ik A Û + (1/ε) Q Û`. Advection is treated with the explicit tableau
//! and relaxation with the implicit one; for a type-CK scheme the first
//! stage is free and every other stage solves `(I − μ hᵢᵢ Q) Û⁽ⁱ⁾ = rhs` with
//! `μ = Δt/ε`. The exact per-mode matrix exponential is provided alongside as
//! the reference solution.
//!
//! Relaxation terms `μ hᵢⱼ Q Û⁽ʲ⁾` are folded into the solves rather than
//! formed explicitly: for stiff data they are `O(μ)` and cancel, which would
//! leave an `O(μ·ulp)` rounding error in the step.

use num_complex::Complex64;
use thiserror::Error;

use crate::densemat::{expm, LinalgError, LuFactors, RealMatrix};
use crate::relaxsys::RelaxationSystem;
use crate::spectral::{ModalState, SpectralError};
use crate::tableaux::Tableau;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("stage matrix I - mu*{diag}*Q is singular")]
    SingularStageMatrix { diag: f64 },
    #[error("interval {interval} is not a whole number of steps of size {dt}")]
    NonCommensurateInterval { interval: f64, dt: f64 },
    #[error("state has m = {state}, system has m = {system}")]
    DimensionMismatch { state: usize, system: usize },
    #[error("negative evolution time {0}")]
    NegativeTime(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

pub type Result<T> = std::result::Result<T, StepError>;

/// Everything that depends only on (system, tableau, Δt).
#[derive(Debug, Clone)]
pub struct StepPlan {
    system: RelaxationSystem,
    tableau: Tableau,
    dt: f64,
    mu: f64,
    /// Distinct positive implicit diagonals and the factors of `I − μ·h·Q`.
    factors: Vec<(f64, LuFactors<f64>)>,
    /// Per stage: index into `factors`, `None` when `hᵢᵢ = 0`.
    stage_factor: Vec<Option<usize>>,
    /// `b` coincides with the last row of `H`.
    stiffly_accurate: bool,
    /// `μQÛ⁽ʲ⁾` must be formed explicitly: some stage with `hᵢᵢ = 0` couples
    /// to earlier ones through `H`, or the update is not stiffly accurate.
    direct_relaxation: bool,
}

impl StepPlan {
    pub fn new(system: &RelaxationSystem, tableau: &Tableau, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(StepError::InvalidStep(dt));
        }
        let mu = dt / system.epsilon();
        let m = system.dim();
        let mut factors: Vec<(f64, LuFactors<f64>)> = Vec::new();
        let mut stage_factor = Vec::with_capacity(tableau.stages());
        for i in 0..tableau.stages() {
            let h = tableau.h_imp()[(i, i)];
            if h == 0.0 {
                stage_factor.push(None);
                continue;
            }
            if let Some(pos) = factors.iter().position(|(d, _)| *d == h) {
                stage_factor.push(Some(pos));
                continue;
            }
            let stage_matrix = RealMatrix::identity(m)
                .try_sub(&system.q().scale(mu * h))
                .expect("square");
            let lu = LuFactors::factor(&stage_matrix).map_err(|e| match e {
                LinalgError::SingularMatrix(_) => StepError::SingularStageMatrix { diag: h },
                other => other.into(),
            })?;
            factors.push((h, lu));
            stage_factor.push(Some(factors.len() - 1));
        }
        let s = tableau.stages();
        let h = tableau.h_imp();
        let stiffly_accurate = (0..s).all(|j| h[(s - 1, j)] == tableau.b_imp()[j]);
        let explicit_coupling =
            (0..s).any(|i| stage_factor[i].is_none() && (0..i).any(|j| h[(i, j)] != 0.0));
        Ok(Self {
            system: system.clone(),
            tableau: tableau.clone(),
            dt,
            mu,
            factors,
            stage_factor,
            stiffly_accurate,
            direct_relaxation: explicit_coupling || !stiffly_accurate,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `Δt/ε`
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn system(&self) -> &RelaxationSystem {
        &self.system
    }

    pub fn tableau(&self) -> &Tableau {
        &self.tableau
    }

    /// The cached `(hᵢᵢ, factors)` pairs.
    pub fn factor_cache(&self) -> &[(f64, LuFactors<f64>)] {
        &self.factors
    }

    /// Advances `state` by one step.
    pub fn step(&self, state: &ModalState) -> Result<ModalState> {
        let mut out = state.clone();
        let mut ws = StageWorkspace::new(self.tableau.stages(), self.system.dim());
        self.step_in_place(&mut out, &mut ws)?;
        Ok(out)
    }

    /// Advances `state` in place, reusing `ws` for stage storage.
    pub fn step_in_place(&self, state: &mut ModalState, ws: &mut StageWorkspace) -> Result<()> {
        let m = self.system.dim();
        if state.components() != m {
            return Err(StepError::DimensionMismatch {
                state: state.components(),
                system: m,
            });
        }
        ws.resize(self.tableau.stages(), m);
        for (k, mode) in state.modes_mut().enumerate() {
            self.advance_mode(k as f64, mode, ws);
        }
        Ok(())
    }

    fn advance_mode(&self, k: f64, u: &mut [Complex64], ws: &mut StageWorkspace) {
        let m = self.system.dim();
        let s = self.tableau.stages();
        let a = self.system.a();
        let q = self.system.q();
        let ht = self.tableau.h_exp();
        let h = self.tableau.h_imp();
        let minus_ik_dt = Complex64::new(0.0, -k * self.dt);

        for i in 0..s {
            let rhs = &mut ws.rhs;
            rhs.copy_from_slice(u);
            for j in 0..i {
                let ce = minus_ik_dt * ht[(i, j)];
                let au = &ws.adv[j * m..(j + 1) * m];
                for r in 0..m {
                    rhs[r] += ce * au[r];
                }
            }
            let (done, rest) = ws.stage.split_at_mut(i * m);
            let stage = &mut rest[..m];
            match self.stage_factor[i] {
                Some(f) => {
                    // (I − μhQ)⁻¹μhⱼQ = (hⱼ/h)[(I − μhQ)⁻¹ − I] turns every
                    // μ-weighted term into an O(1) one.
                    let (hii, lu) = &self.factors[f];
                    for j in 0..i {
                        let ratio = h[(i, j)] / hii;
                        if ratio != 0.0 {
                            for (x, y) in rhs.iter_mut().zip(&done[j * m..(j + 1) * m]) {
                                *x += y * ratio;
                            }
                        }
                    }
                    stage.copy_from_slice(rhs);
                    lu.solve_complex_in_place(stage, &mut ws.scratch);
                    for j in 0..i {
                        let ratio = h[(i, j)] / hii;
                        if ratio != 0.0 {
                            for (x, y) in stage.iter_mut().zip(&done[j * m..(j + 1) * m]) {
                                *x -= y * ratio;
                            }
                        }
                    }
                }
                None => {
                    for j in 0..i {
                        let ci = h[(i, j)];
                        let qu = &ws.rel[j * m..(j + 1) * m];
                        for r in 0..m {
                            rhs[r] += qu[r] * ci;
                        }
                    }
                    stage.copy_from_slice(rhs);
                }
            }
            mat_apply(a, stage, &mut ws.adv[i * m..(i + 1) * m]);
            if self.direct_relaxation {
                let rel = &mut ws.rel[i * m..(i + 1) * m];
                mat_apply(q, stage, rel);
                rel.iter_mut().for_each(|z| *z *= self.mu);
            }
        }

        let bt = self.tableau.b_exp();
        if self.stiffly_accurate {
            // b equals the last implicit row, so the update is the last stage
            // plus the difference of the explicit weights.
            u.copy_from_slice(&ws.stage[(s - 1) * m..s * m]);
            for j in 0..s {
                let w = bt[j] - ht[(s - 1, j)];
                if w == 0.0 {
                    continue;
                }
                let ce = minus_ik_dt * w;
                for (x, y) in u.iter_mut().zip(&ws.adv[j * m..(j + 1) * m]) {
                    *x += ce * y;
                }
            }
        } else {
            let b = self.tableau.b_imp();
            for j in 0..s {
                let ce = minus_ik_dt * bt[j];
                let au = &ws.adv[j * m..(j + 1) * m];
                let qu = &ws.rel[j * m..(j + 1) * m];
                for r in 0..m {
                    u[r] += ce * au[r] + qu[r] * b[j];
                }
            }
        }
    }

    /// Applies `n = round(T/Δt)` steps; `T` must be a whole number of steps.
    pub fn integrate(&self, state: &ModalState, interval: f64) -> Result<ModalState> {
        let n = self.steps_for(interval)?;
        let mut out = state.clone();
        let mut ws = StageWorkspace::new(self.tableau.stages(), self.system.dim());
        for _ in 0..n {
            self.step_in_place(&mut out, &mut ws)?;
        }
        Ok(out)
    }

    /// Number of steps covering `interval` exactly.
    pub fn steps_for(&self, interval: f64) -> Result<usize> {
        steps_for(interval, self.dt)
    }
}

/// `round(T/Δt)`, provided it reproduces `T` to `1e-9·T`.
pub fn steps_for(interval: f64, dt: f64) -> Result<usize> {
    if !(interval > 0.0 && interval.is_finite()) {
        return Err(StepError::NonCommensurateInterval { interval, dt });
    }
    let n = (interval / dt).round();
    if n < 1.0 || (n * dt - interval).abs() > 1e-9 * interval {
        return Err(StepError::NonCommensurateInterval { interval, dt });
    }
    Ok(n as usize)
}

fn mat_apply(a: &RealMatrix, x: &[Complex64], out: &mut [Complex64]) {
    let m = x.len();
    for (r, o) in out.iter_mut().enumerate() {
        let row = a.row(r);
        let mut acc = Complex64::new(0.0, 0.0);
        for c in 0..m {
            if row[c] != 0.0 {
                acc += x[c] * row[c];
            }
        }
        *o = acc;
    }
}

/// Per-mode stage storage: stage values `Û⁽ʲ⁾`, advection images `AÛ⁽ʲ⁾`
/// and, when the plan needs them, scaled relaxation images `μQÛ⁽ʲ⁾`.
#[derive(Debug, Clone, Default)]
pub struct StageWorkspace {
    stage: Vec<Complex64>,
    adv: Vec<Complex64>,
    rel: Vec<Complex64>,
    rhs: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl StageWorkspace {
    pub fn new(stages: usize, m: usize) -> Self {
        let mut ws = Self::default();
        ws.resize(stages, m);
        ws
    }

    fn resize(&mut self, stages: usize, m: usize) {
        let zero = Complex64::new(0.0, 0.0);
        for buf in [&mut self.stage, &mut self.adv, &mut self.rel] {
            buf.resize(stages * m, zero);
        }
        self.rhs.resize(m, zero);
    }

    /// Stage values of the last mode advanced.
    pub fn stage(&self, i: usize, m: usize) -> &[Complex64] {
        &self.stage[i * m..(i + 1) * m]
    }
}

/// Convenience wrapper: `plan(...).step(state)`.
pub fn step(plan: &StepPlan, state: &ModalState) -> Result<ModalState> {
    plan.step(state)
}

/// `Û_k(t) = exp(t(−ikA + Q/ε)) Û_k(0)` for every mode.
pub fn exact_evolve(system: &RelaxationSystem, state: &ModalState, t: f64) -> Result<ModalState> {
    if t.is_nan() || t < 0.0 {
        return Err(StepError::NegativeTime(t));
    }
    let m = system.dim();
    if state.components() != m {
        return Err(StepError::DimensionMismatch {
            state: state.components(),
            system: m,
        });
    }
    if t == 0.0 {
        return Ok(state.clone());
    }
    let q_over_eps = system.q().scale(1.0 / system.epsilon()).to_complex();
    let a = system.a().to_complex();
    let mut out = state.clone();
    for (k, mode) in out.modes_mut().enumerate() {
        let generator = q_over_eps.try_sub(&a.scale(Complex64::new(0.0, k as f64)))?;
        let prop = expm(&generator, t)?;
        let next = prop.matvec(mode)?;
        mode.copy_from_slice(&next);
    }
    Ok(out)
}

/// Reference by brute force: `bhr553s` with step `dt` over `t`.
pub fn fine_step_evolve(
    system: &RelaxationSystem,
    state: &ModalState,
    t: f64,
    dt: f64,
) -> Result<ModalState> {
    if t == 0.0 {
        return Ok(state.clone());
    }
    let tableau = crate::tableaux::registry("bhr553s").expect("registered");
    StepPlan::new(system, &tableau, dt)?.integrate(state, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relaxsys::builtin_broadwell;
    use crate::spectral::{modal_error, project};
    use crate::tableaux::registry;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn decay_system() -> RelaxationSystem {
        RelaxationSystem::new(
            RealMatrix::zeros(2, 2),
            RealMatrix::from_diag(&[0.0, -1.0]),
            1,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn euler_pair_hand_computation() {
        let sys = decay_system();
        let plan = StepPlan::new(&sys, &registry("ars111").unwrap(), 0.1).unwrap();
        let mut s = ModalState::zeros(2, 0);
        s.set_coeff(0, 0, c(1.0));
        s.set_coeff(1, 0, c(1.0));
        let out = plan.step(&s).unwrap();
        assert!((out.coeff(0, 0) - c(1.0)).norm() < 1e-15);
        assert!((out.coeff(1, 0) - c(1.0 / 1.1)).norm() < 1e-15);

        let exact = exact_evolve(&sys, &s, 0.1).unwrap();
        assert!((exact.coeff(1, 0) - c((-0.1f64).exp())).norm() < 1e-15);
    }

    #[test]
    fn non_stiffly_accurate_update() {
        let t = Tableau::new(
            RealMatrix::from_rows(&[[0.0, 0.0], [0.5, 0.0]]),
            RealMatrix::from_rows(&[[0.0, 0.0], [0.0, 0.5]]),
            vec![0.0, 1.0],
            vec![0.0, 1.0],
        )
        .unwrap();
        let plan = StepPlan::new(&decay_system(), &t, 0.1).unwrap();
        let mut s = ModalState::zeros(2, 0);
        s.set_coeff(1, 0, c(1.0));
        let out = plan.step(&s).unwrap();
        assert!((out.coeff(1, 0) - c(1.0 - 0.1 / 1.05)).norm() < 1e-15);
    }

    #[test]
    fn stiff_step_projects_onto_equilibrium() {
        let (sys, _) = builtin_broadwell(1e-12).unwrap();
        let s = project(
            &[
                &|x: f64| 1.0 + 0.3 * x.sin(),
                &|x: f64| x.cos(),
                &|x: f64| 0.5 + 0.15 * x.sin(),
            ],
            6,
        );
        for name in ["ars222", "ars443", "bhr553s"] {
            let plan = StepPlan::new(&sys, &registry(name).unwrap(), 1e-2).unwrap();
            let out = plan.step(&s).unwrap();
            let mut stiff = ModalState::zeros(1, 6);
            for k in 0..=6 {
                stiff.set_coeff(0, k, out.coeff(0, k) - out.coeff(2, k) * 2.0);
            }
            let norm = crate::spectral::l2_norm(&out);
            assert!(crate::spectral::l2_norm(&stiff) <= 1e-6 * norm, "{name}");
        }
    }

    #[test]
    fn broadwell_mean_density_and_momentum_conserved() {
        let (sys, _) = builtin_broadwell(1e-4).unwrap();
        let s = project(&[&|x: f64| 0.7 + x.sin(), &|_| 0.2, &|x: f64| x.cos()], 5);
        let plan = StepPlan::new(&sys, &registry("bhr553s").unwrap(), 1e-2).unwrap();
        let out = plan.step(&s).unwrap();
        assert!((out.coeff(0, 0) - s.coeff(0, 0)).norm() < 1e-13);
        assert!((out.coeff(1, 0) - s.coeff(1, 0)).norm() < 1e-13);
    }

    #[test]
    fn explicit_limit_without_relaxation() {
        // Q = 0: only (H̃, b̃) act; ars222's explicit part on u' = −iu.
        let sys = RelaxationSystem::new(RealMatrix::identity(1), RealMatrix::zeros(1, 1), 1, 1.0)
            .unwrap();
        let t = registry("ars222").unwrap();
        let dt = 0.05;
        let plan = StepPlan::new(&sys, &t, dt).unwrap();
        let mut st = ModalState::zeros(1, 1);
        st.set_coeff(0, 1, c(1.0));
        let out = plan.step(&st).unwrap();
        let z = Complex64::new(0.0, -dt);
        let (ht, bt) = (t.h_exp(), t.b_exp());
        let mut k = Vec::new();
        for i in 0..3 {
            let mut y = c(1.0);
            for (j, kj) in k.iter().enumerate() {
                y += z * ht[(i, j)] * kj;
            }
            k.push(y);
        }
        let want: Complex64 = c(1.0) + k.iter().zip(bt).map(|(y, b)| z * *b * y).sum::<Complex64>();
        assert!((out.coeff(0, 1) - want).norm() < 1e-15);
    }

    #[test]
    fn plan_rejects_bad_step_and_caches_diagonals() {
        let (sys, _) = builtin_broadwell(1e-3).unwrap();
        let t = registry("ars443").unwrap();
        assert_eq!(
            StepPlan::new(&sys, &t, 0.0).unwrap_err(),
            StepError::InvalidStep(0.0)
        );
        let plan = StepPlan::new(&sys, &t, 1e-3).unwrap();
        assert_eq!(plan.mu(), 1.0);
        assert_eq!(plan.factor_cache().len(), 1);
        let stage = RealMatrix::identity(3)
            .try_sub(&sys.q().scale(0.5))
            .unwrap();
        let back = plan.factor_cache()[0].1.reconstruct();
        assert!(back.try_sub(&stage).unwrap().norm_max() <= 1e-12);
    }

    #[test]
    fn fully_explicit_relaxation_has_no_factors() {
        let t = Tableau::new(
            RealMatrix::from_rows(&[[0.0, 0.0], [1.0, 0.0]]),
            RealMatrix::from_rows(&[[0.0, 0.0], [1.0, 0.0]]),
            vec![0.5, 0.5],
            vec![0.5, 0.5],
        )
        .unwrap();
        let plan = StepPlan::new(&decay_system(), &t, 0.1).unwrap();
        assert!(plan.factor_cache().is_empty());
    }

    #[test]
    fn zero_state_stays_zero() {
        let (sys, _) = builtin_broadwell(1e-2).unwrap();
        let plan = StepPlan::new(&sys, &registry("bhr553s").unwrap(), 1e-2).unwrap();
        let z = ModalState::zeros(3, 8);
        assert_eq!(plan.step(&z).unwrap(), z);
    }

    #[test]
    fn integrate_counts_steps() {
        let sys = decay_system();
        let plan = StepPlan::new(&sys, &registry("ars222").unwrap(), 0.01).unwrap();
        assert_eq!(plan.steps_for(0.1).unwrap(), 10);
        assert!(matches!(
            plan.steps_for(0.105),
            Err(StepError::NonCommensurateInterval { .. })
        ));
    }

    #[test]
    fn integrate_halves_compose() {
        let (sys, _) = builtin_broadwell(0.1).unwrap();
        let plan = StepPlan::new(&sys, &registry("ars222").unwrap(), 0.01).unwrap();
        let s = project(
            &[&|x: f64| 1.0 + 0.2 * x.sin(), &|x: f64| x.cos(), &|_| 0.3],
            6,
        );
        let once = plan.integrate(&s, 0.2).unwrap();
        let twice = plan
            .integrate(&plan.integrate(&s, 0.1).unwrap(), 0.1)
            .unwrap();
        assert!(modal_error(&once, &twice).unwrap() < 1e-12);
    }

    #[test]
    fn broadwell_mean_mode_closed_form() {
        let eps = 0.3;
        let (sys, _) = builtin_broadwell(eps).unwrap();
        let s = project(&[&|_| 0.8, &|_| -0.1, &|_| 0.9], 2);
        let t = 0.7;
        let out = exact_evolve(&sys, &s, t).unwrap();
        let z = 0.4 + (0.9 - 0.4) * (-2.0 * t / eps).exp();
        assert!((out.coeff(0, 0) - c(0.8)).norm() < 1e-14);
        assert!((out.coeff(1, 0) - c(-0.1)).norm() < 1e-14);
        assert!((out.coeff(2, 0) - c(z)).norm() < 1e-14);
    }

    #[test]
    fn fine_step_matches_exact() {
        let (sys, _) = builtin_broadwell(0.5).unwrap();
        let s = project(&[&|x: f64| 1.0 + x.sin(), &|_| 0.0, &|x: f64| x.cos()], 4);
        let fine = fine_step_evolve(&sys, &s, 0.5, 1e-3).unwrap();
        let exact = exact_evolve(&sys, &s, 0.5).unwrap();
        assert!(modal_error(&fine, &exact).unwrap() < 1e-8);
    }

    #[test]
    fn exact_evolve_zero_time_is_identity() {
        let (sys, _) = builtin_broadwell(1e-5).unwrap();
        let s = project(&[&|x: f64| x.sin(), &|_| 1.0, &|_| 0.0], 3);
        assert_eq!(exact_evolve(&sys, &s, 0.0).unwrap(), s);
        assert!(exact_evolve(&sys, &s, -1.0).is_err());
    }
}
