//! Linear hyperbolic relaxation systems `U_t + A U_x = Q U / ε`.
//!
//! Besides the system itself this module checks Yong's structural stability
//! conditions against a supplied certificate `(P, A₀)` and ships the two
//! models used in the experiments: the linearized Broadwell model and the
//! linearized Grad moment system.

use thiserror::Error;

use crate::densemat::{self, inverse, is_psd, LinalgError, RealMatrix, PSD_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("transformation matrix P is singular")]
    SingularP,
    #[error("moment order must be at least 3, got {0}")]
    BadMomentOrder(usize),
    #[error("relaxation time must be positive and finite, got {0}")]
    BadEpsilon(f64),
    #[error("stiff rank must satisfy 0 < r <= m, got r = {r} for m = {m}")]
    BadRank { r: usize, m: usize },
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("certificate derivation failed: {0}")]
    Derivation(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, SystemError>;

/// `U_t + A U_x = Q U / ε` with a stiff block of rank `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationSystem {
    a: RealMatrix,
    q: RealMatrix,
    r: usize,
    epsilon: f64,
}

impl RelaxationSystem {
    pub fn new(a: RealMatrix, q: RealMatrix, r: usize, epsilon: f64) -> Result<Self> {
        let m = a.rows();
        if !a.is_square() || q.rows() != m || q.cols() != m {
            return Err(SystemError::ShapeMismatch(format!(
                "A is {}x{}, Q is {}x{}",
                a.rows(),
                a.cols(),
                q.rows(),
                q.cols()
            )));
        }
        if !a.is_finite() || !q.is_finite() {
            return Err(SystemError::ShapeMismatch("non-finite matrix entry".into()));
        }
        if r == 0 || r > m {
            return Err(SystemError::BadRank { r, m });
        }
        check_epsilon(epsilon)?;
        Ok(Self { a, q, r, epsilon })
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    pub fn stiff_rank(&self) -> usize {
        self.r
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn a(&self) -> &RealMatrix {
        &self.a
    }

    pub fn q(&self) -> &RealMatrix {
        &self.q
    }

    /// Same matrices, different relaxation time.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self {
            epsilon,
            ..self.clone()
        })
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(SystemError::BadEpsilon(epsilon));
    }
    Ok(())
}

/// `(P, A₀, Ŝ)` witnessing the structural stability conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCertificate {
    pub p: RealMatrix,
    pub a0: RealMatrix,
    pub shat: RealMatrix,
}

impl StabilityCertificate {
    /// Builds a certificate, taking `Ŝ` as the lower-right `r×r` block of
    /// `P Q P⁻¹`.
    pub fn from_transform(p: RealMatrix, a0: RealMatrix, q: &RealMatrix, r: usize) -> Result<Self> {
        let m = q.rows();
        if p.rows() != m || !p.is_square() || a0.rows() != m || !a0.is_square() {
            return Err(SystemError::ShapeMismatch("certificate dimensions".into()));
        }
        let p_inv = invert_p(&p)?;
        let pqp = p.matmul(q)?.matmul(&p_inv)?;
        let shat = pqp.block(m - r, m - r, r, r);
        Ok(Self { p, a0, shat })
    }

    pub fn identity(m: usize, r: usize, q: &RealMatrix) -> Result<Self> {
        Self::from_transform(RealMatrix::identity(m), RealMatrix::identity(m), q, r)
    }
}

fn invert_p(p: &RealMatrix) -> Result<RealMatrix> {
    inverse(p).map_err(|e| match e {
        LinalgError::SingularMatrix(_) => SystemError::SingularP,
        other => other.into(),
    })
}

/// A flag together with the magnitude that decided it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub pass: bool,
    pub residual: f64,
}

impl Verdict {
    fn new(pass: bool, residual: f64) -> Self {
        Self {
            pass,
            residual: residual.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// `P Q = diag(0, Ŝ) P` with `Ŝ` invertible.
    pub cond_i: Verdict,
    /// `A₀` symmetric positive definite and `A₀A = AᵀA₀`.
    pub cond_ii: Verdict,
    /// `A₀Q + QᵀA₀ + Pᵀ diag(0, I_r) P ⪯ 0`; residual is the largest eigenvalue.
    pub cond_iii: Verdict,
    /// `P⁻ᵀA₀P⁻¹` block diagonal.
    pub block_diag_a0: Verdict,
    /// `A₀₂Ŝ` symmetric negative definite; residual is the larger of its
    /// asymmetry and its largest eigenvalue clamped at zero.
    pub shat_sym_neg_def: Verdict,
}

impl StabilityReport {
    pub fn all_pass(&self) -> bool {
        self.flags().iter().all(|(_, v)| v.pass)
    }

    pub fn flags(&self) -> [(&'static str, Verdict); 5] {
        [
            ("condition (i)", self.cond_i),
            ("condition (ii)", self.cond_ii),
            ("condition (iii)", self.cond_iii),
            ("block-diagonal symmetrizer", self.block_diag_a0),
            ("A02*Shat symmetric neg. def.", self.shat_sym_neg_def),
        ]
    }
}

impl std::fmt::Display for StabilityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (name, v) in self.flags() {
            writeln!(
                f,
                "  {:<30} {:>10.3e}  {}",
                name,
                v.residual,
                if v.pass { "ok" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

fn max_eigen(s: &RealMatrix) -> Result<f64> {
    Ok(densemat::sym_eigen(s)?
        .eigenvalues
        .last()
        .copied()
        .unwrap_or(0.0))
}

fn min_eigen(s: &RealMatrix) -> Result<f64> {
    Ok(densemat::sym_eigen(s)?
        .eigenvalues
        .first()
        .copied()
        .unwrap_or(0.0))
}

/// Projector-like `diag(0, I_r)` of size `m`.
fn stiff_selector(m: usize, r: usize) -> RealMatrix {
    let mut d = RealMatrix::zeros(m, m);
    for i in m - r..m {
        d[(i, i)] = 1.0;
    }
    d
}

fn symmetrize(s: &RealMatrix) -> RealMatrix {
    s.symmetric_part_doubled().scale(0.5)
}

/// Evaluates the structural stability conditions for `(A, Q)` against `cert`.
pub fn check_structural_stability(
    a: &RealMatrix,
    q: &RealMatrix,
    cert: &StabilityCertificate,
    r: usize,
) -> Result<StabilityReport> {
    let m = a.rows();
    let shapes_ok = a.is_square()
        && q.rows() == m
        && q.is_square()
        && cert.p.rows() == m
        && cert.p.is_square()
        && cert.a0.rows() == m
        && cert.a0.is_square()
        && cert.shat.rows() == r
        && cert.shat.is_square()
        && r > 0
        && r <= m;
    if !shapes_ok {
        return Err(SystemError::ShapeMismatch(format!(
            "m = {m}, r = {r}, P {}x{}, A0 {}x{}, Shat {}x{}",
            cert.p.rows(),
            cert.p.cols(),
            cert.a0.rows(),
            cert.a0.cols(),
            cert.shat.rows(),
            cert.shat.cols()
        )));
    }
    let p = &cert.p;
    let a0 = &cert.a0;
    let p_inv = invert_p(p)?;
    let scale = [a.norm_max(), q.norm_max(), p.norm_max(), a0.norm_max(), 1.0]
        .into_iter()
        .fold(0.0, f64::max);
    let tol = 1e-10 * scale * scale;

    // (i)
    let mut block = RealMatrix::zeros(m, m);
    for i in 0..r {
        for j in 0..r {
            block[(m - r + i, m - r + j)] = cert.shat[(i, j)];
        }
    }
    let res_i = p.matmul(q)?.try_sub(&block.matmul(p)?)?.norm_max();
    let det_shat = densemat::determinant(&cert.shat)?;
    let cond_i = Verdict::new(
        res_i <= tol && det_shat.abs() > 1e-12 * cert.shat.norm_max().max(1.0).powi(r as i32),
        res_i,
    );

    // (ii)
    let asym = a0.asymmetry() * a0.norm_max();
    let a0_sym = symmetrize(a0);
    let min_a0 = min_eigen(&a0_sym)?;
    let commut = a0
        .matmul(a)?
        .try_sub(&a.transpose().matmul(a0)?)?
        .norm_max();
    let res_ii = asym.max(commut);
    let cond_ii = Verdict::new(res_ii <= tol && min_a0 > tol, res_ii);

    // (iii)
    let sel = stiff_selector(m, r);
    let a0q = a0.matmul(q)?;
    let coupling = a0q
        .try_add(&a0q.transpose())?
        .try_add(&p.transpose().matmul(&sel)?.matmul(p)?)?;
    let coupling = symmetrize(&coupling);
    let (nsd, _) = is_psd(&coupling.scale(-1.0), PSD_TOL)?;
    let cond_iii = Verdict::new(nsd, max_eigen(&coupling)?.max(0.0));

    // symmetrizer of the transformed system
    let a0t = p_inv.transpose().matmul(a0)?.matmul(&p_inv)?;
    let mut off = 0.0f64;
    for i in 0..m - r {
        for j in m - r..m {
            off = off.max(a0t[(i, j)].abs()).max(a0t[(j, i)].abs());
        }
    }
    let block_diag_a0 = Verdict::new(off <= tol, off);

    let a02 = a0t.block(m - r, m - r, r, r);
    let prod = a02.matmul(&cert.shat)?;
    let prod_asym = prod.try_sub(&prod.transpose())?.norm_max();
    let max_prod = max_eigen(&symmetrize(&prod))?;
    let shat_sym_neg_def = Verdict::new(
        prod_asym <= tol && max_prod < -tol,
        prod_asym.max(max_prod.max(0.0)),
    );

    Ok(StabilityReport {
        cond_i,
        cond_ii,
        cond_iii,
        block_diag_a0,
        shat_sym_neg_def,
    })
}

/// `A' = PAP⁻¹`, `Q' = PQP⁻¹`.
pub fn transform(sys: &RelaxationSystem, p: &RealMatrix) -> Result<RelaxationSystem> {
    if p.rows() != sys.dim() || !p.is_square() {
        return Err(SystemError::ShapeMismatch(format!(
            "P is {}x{}, system has m = {}",
            p.rows(),
            p.cols(),
            sys.dim()
        )));
    }
    let p_inv = invert_p(p)?;
    let a = p.matmul(&sys.a)?.matmul(&p_inv)?;
    let q = p.matmul(&sys.q)?.matmul(&p_inv)?;
    RelaxationSystem::new(a, q, sys.r, sys.epsilon)
}

/// The certificate of the transformed system: `P̃ = I`, `Ã₀ = P⁻ᵀA₀P⁻¹`.
pub fn transformed_certificate(
    cert: &StabilityCertificate,
    q_transformed: &RealMatrix,
    r: usize,
) -> Result<StabilityCertificate> {
    let p_inv = invert_p(&cert.p)?;
    let a0t = p_inv.transpose().matmul(&cert.a0)?.matmul(&p_inv)?;
    StabilityCertificate::from_transform(RealMatrix::identity(cert.p.rows()), a0t, q_transformed, r)
}

/// Linearized Broadwell model at `ρ⋆ = 2, m⋆ = 0, z⋆ = 1`, state `(ρ, m, z)`.
pub fn builtin_broadwell(epsilon: f64) -> Result<(RelaxationSystem, StabilityCertificate)> {
    let a = RealMatrix::from_rows(&[[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]]);
    let q = RealMatrix::from_rows(&[[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, -2.0]]);
    let sys = RelaxationSystem::new(a, q, 1, epsilon)?;
    let cert = derive_certificate(&sys.a, &sys.q, sys.r)?;
    Ok((sys, cert))
}

/// Linearized Grad moment system of order `moments`, state
/// `(ρ, w, θ/√2, √3!·f₃, …)`.
pub fn builtin_grad(
    moments: usize,
    epsilon: f64,
) -> Result<(RelaxationSystem, StabilityCertificate)> {
    if moments < 3 {
        return Err(SystemError::BadMomentOrder(moments));
    }
    let m = moments + 1;
    let mut a = RealMatrix::zeros(m, m);
    for k in 1..=moments {
        let v = (k as f64).sqrt();
        a[(k - 1, k)] = v;
        a[(k, k - 1)] = v;
    }
    let mut q = RealMatrix::zeros(m, m);
    for i in 3..m {
        q[(i, i)] = -1.0;
    }
    let r = moments - 2;
    let cert = StabilityCertificate::identity(m, r, &q)?;
    Ok((RelaxationSystem::new(a, q, r, epsilon)?, cert))
}

/// Resolves a model id: `broadwell` or `grad:M`.
pub fn builtin(model: &str, epsilon: f64) -> Result<(RelaxationSystem, StabilityCertificate)> {
    match model {
        "broadwell" => builtin_broadwell(epsilon),
        other => match other.strip_prefix("grad:").map(str::parse::<usize>) {
            Some(Ok(moments)) => builtin_grad(moments, epsilon),
            _ => Err(SystemError::UnknownModel(other.to_string())),
        },
    }
}

/// Orthonormal basis (as rows) of the null space of `k`, from the symmetric
/// eigenproblem of `KᵀK`.
fn null_space_rows(k: &RealMatrix, rel_tol: f64) -> Result<Vec<Vec<f64>>> {
    let ktk = k.transpose().matmul(k)?;
    let (vals, vecs) = densemat::sym_eigen_vectors(&ktk)?;
    let top = vals.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    Ok(vals
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= rel_tol * top)
        .map(|(j, _)| vecs.column(j))
        .collect())
}

/// Derives `(P, A₀)` for a system whose `Q` is diagonalizable with a
/// semisimple zero eigenvalue.
///
/// `P` stacks a basis of the left kernel of `Q` over a basis of its row
/// space. `A₀ = PᵀBP` with `B = diag(B₁, B₂)` symmetric is then found from the
/// linear constraints `A₀A = AᵀA₀` and `B₂Ŝ = ŜᵀB₂`; the solution is
/// normalized to unit trace and doubled until condition (iii) holds.
pub fn derive_certificate(
    a: &RealMatrix,
    q: &RealMatrix,
    r: usize,
) -> Result<StabilityCertificate> {
    let m = q.rows();
    let fail = |msg: &str| SystemError::Derivation(msg.to_string());

    let kernel = null_space_rows(&q.transpose(), 1e-24)?;
    if kernel.len() != m - r {
        return Err(fail(&format!(
            "left kernel of Q has dimension {}, expected {}",
            kernel.len(),
            m - r
        )));
    }
    // row space of Q: orthonormal basis of range(Qᵀ) = complement of ker(Q)
    let (vals, vecs) = densemat::sym_eigen_vectors(&q.matmul(&q.transpose())?)?;
    let range: Vec<Vec<f64>> = (0..m)
        .rev()
        .take(r)
        .filter(|&j| vals[j] > 1e-12 * vals[m - 1])
        .map(|j| {
            // row-space vector u = Qᵀ w for an eigenvector w of QQᵀ
            let w = vecs.column(j);
            q.transpose().matvec(&w).expect("square")
        })
        .collect();
    if range.len() != r {
        return Err(fail("row space of Q does not have dimension r"));
    }
    let mut p = RealMatrix::zeros(m, m);
    for (i, row) in kernel.iter().chain(range.iter().rev()).enumerate() {
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        for j in 0..m {
            p[(i, j)] = row[j] / norm;
        }
    }
    let p_inv = invert_p(&p).map_err(|_| fail("zero eigenvalue of Q is not semisimple"))?;
    let shat = p.matmul(q)?.matmul(&p_inv)?.block(m - r, m - r, r, r);

    // unknowns: upper triangles of B₁ (size m−r) and B₂ (size r)
    let n1 = m - r;
    let mut slots: Vec<(usize, usize)> = Vec::new();
    for (off, n) in [(0, n1), (n1, r)] {
        for i in 0..n {
            for j in i..n {
                slots.push((off + i, off + j));
            }
        }
    }
    let basis_b = |k: usize| {
        let (i, j) = slots[k];
        let mut b = RealMatrix::zeros(m, m);
        b[(i, j)] = 1.0;
        b[(j, i)] = 1.0;
        b
    };
    // linear map: B ↦ (A₀A − AᵀA₀, B₂Ŝ − ŜᵀB₂), flattened
    let mut columns = Vec::with_capacity(slots.len());
    for k in 0..slots.len() {
        let b = basis_b(k);
        let a0 = p.transpose().matmul(&b)?.matmul(&p)?;
        let c1 = a0.matmul(a)?.try_sub(&a.transpose().matmul(&a0)?)?;
        let b2 = b.block(n1, n1, r, r);
        let c2 = b2.matmul(&shat)?.try_sub(&shat.transpose().matmul(&b2)?)?;
        let mut col = c1.as_slice().to_vec();
        col.extend_from_slice(c2.as_slice());
        columns.push(col);
    }
    let rows = columns[0].len();
    let mut lin = RealMatrix::zeros(rows, slots.len());
    for (k, col) in columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            lin[(i, k)] = v;
        }
    }
    let solutions = null_space_rows(&lin, 1e-24)?;
    let to_a0 = |coef: &[f64]| -> Result<RealMatrix> {
        let mut b = RealMatrix::zeros(m, m);
        for (k, &c) in coef.iter().enumerate() {
            b = b.try_add(&basis_b(k).scale(c))?;
        }
        Ok(p.transpose().matmul(&b)?.matmul(&p)?)
    };
    let mut candidates: Vec<Vec<f64>> = solutions.clone();
    if solutions.len() > 1 {
        let sum: Vec<f64> = (0..slots.len())
            .map(|k| solutions.iter().map(|s| s[k]).sum())
            .collect();
        candidates.push(sum);
    }
    for coef in candidates {
        let mut a0 = to_a0(&coef)?;
        let trace: f64 = (0..m).map(|i| a0[(i, i)]).sum();
        if trace == 0.0 {
            continue;
        }
        a0 = a0.scale(1.0 / trace);
        if min_eigen(&symmetrize(&a0))? <= 0.0 {
            continue;
        }
        let cert_for = |a0: &RealMatrix| StabilityCertificate {
            p: p.clone(),
            a0: a0.clone(),
            shat: shat.clone(),
        };
        for _ in 0..60 {
            let report = check_structural_stability(a, q, &cert_for(&a0), r)?;
            if !report.cond_iii.pass {
                a0 = a0.scale(2.0);
                continue;
            }
            // one more doubling keeps (iii) away from the rank-deficient edge
            let cert = cert_for(&a0.scale(2.0));
            if check_structural_stability(a, q, &cert, r)?.all_pass() {
                return Ok(cert);
            }
            break;
        }
    }
    Err(fail(
        "no symmetric positive definite symmetrizer satisfies the conditions",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn broadwell_matrices() {
        let (sys, cert) = builtin_broadwell(1e-3).unwrap();
        assert_eq!(sys.a()[(0, 1)], 1.0);
        assert_eq!(sys.q()[(2, 0)], 1.0);
        assert_eq!(sys.q()[(2, 2)], -2.0);
        assert_eq!(sys.dim(), 3);
        assert_eq!(sys.stiff_rank(), 1);
        let report = check_structural_stability(sys.a(), sys.q(), &cert, 1).unwrap();
        assert!(report.all_pass(), "{report}");
        assert!((cert.shat[(0, 0)] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn grad_matrices() {
        let (sys, cert) = builtin_grad(5, 1.0).unwrap();
        assert_eq!(sys.dim(), 6);
        assert_eq!(sys.stiff_rank(), 3);
        let off: Vec<f64> = (0..5).map(|k| sys.a()[(k, k + 1)]).collect();
        let want = [1.0, 2f64.sqrt(), 3f64.sqrt(), 2.0, 5f64.sqrt()];
        for (x, y) in off.iter().zip(want) {
            assert!((x - y).abs() < 1e-15);
        }
        let diag: Vec<f64> = (0..6).map(|i| sys.q()[(i, i)]).collect();
        assert_eq!(diag, vec![0.0, 0.0, 0.0, -1.0, -1.0, -1.0]);
        assert_eq!(cert.p, RealMatrix::identity(6));
        assert!(check_structural_stability(sys.a(), sys.q(), &cert, 3)
            .unwrap()
            .all_pass());
        assert_eq!(
            builtin_grad(2, 1.0).unwrap_err(),
            SystemError::BadMomentOrder(2)
        );
    }

    #[test]
    fn anti_dissipative_source_fails_iii() {
        let (sys, cert) = builtin_grad(5, 1.0).unwrap();
        let mut q = RealMatrix::zeros(6, 6);
        q[(5, 5)] = 1.0;
        let report = check_structural_stability(sys.a(), &q, &cert, 3).unwrap();
        assert!(!report.cond_iii.pass);
    }

    #[test]
    fn identity_transform_and_round_trip() {
        let (sys, cert) = builtin_broadwell(0.5).unwrap();
        assert_eq!(transform(&sys, &RealMatrix::identity(3)).unwrap(), sys);
        let there = transform(&sys, &cert.p).unwrap();
        let back = transform(&there, &inverse(&cert.p).unwrap()).unwrap();
        assert!(back.a().try_sub(sys.a()).unwrap().norm_max() < 1e-12);
        assert!(back.q().try_sub(sys.q()).unwrap().norm_max() < 1e-12);
        // block form diag(0, 0, −2)
        let mut want = RealMatrix::zeros(3, 3);
        want[(2, 2)] = -2.0;
        assert!(there.q().try_sub(&want).unwrap().norm_max() < 1e-10);
    }

    #[test]
    fn singular_p() {
        let (sys, _) = builtin_broadwell(1.0).unwrap();
        assert_eq!(
            transform(&sys, &RealMatrix::zeros(3, 3)),
            Err(SystemError::SingularP)
        );
    }

    #[test]
    fn non_symmetric_a0_fails_ii() {
        let (sys, mut cert) = builtin_grad(4, 1.0).unwrap();
        cert.a0[(0, 1)] = 0.3;
        let report = check_structural_stability(sys.a(), sys.q(), &cert, sys.stiff_rank()).unwrap();
        assert!(!report.cond_ii.pass);
    }

    #[test]
    fn model_ids() {
        assert_eq!(builtin("grad:5", 1.0).unwrap().0.dim(), 6);
        assert!(matches!(
            builtin("grad:x", 1.0),
            Err(SystemError::UnknownModel(_))
        ));
        assert!(matches!(
            builtin("euler", 1.0),
            Err(SystemError::UnknownModel(_))
        ));
        assert!(matches!(
            builtin("broadwell", 0.0),
            Err(SystemError::BadEpsilon(_))
        ));
    }
}
