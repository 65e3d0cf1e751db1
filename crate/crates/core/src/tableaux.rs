//! Double Butcher tableaux for IMEX Runge-Kutta schemes.
//!
//! A tableau pairs a strictly lower-triangular explicit matrix `H̃` (advection)
//! with a lower-triangular implicit matrix `H` (relaxation). This module
//! validates that structure, classifies the scheme (CK / ARS / ISA / GSA),
//! evaluates the classical order conditions up to third order together with
//! the stage-order and vanishing-coefficient conditions used for uniform
//! third-order accuracy, and checks energy-method certificates `M`.

use std::fmt;

use thiserror::Error;

use crate::densemat::{self, is_psd, LinalgError, RealMatrix, PSD_TOL};

/// Upper-triangle entries larger than this are a structure violation.
const STRUCTURE_TOL: f64 = 1e-14;
/// Row comparisons for ISA/GSA.
const ROW_MATCH_TOL: f64 = 1e-14;
/// Residual threshold for a condition to count as satisfied.
pub const CONDITION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TableauError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("structure violation: {0}")]
    StructureViolation(String),
    #[error("stage conditions need at least 3 stages, got {0}")]
    TooFewStages(usize),
    #[error("implicit matrix has nullity {0}, expected 1")]
    NullityMismatch(usize),
    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),
    #[error("tableau file, line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, TableauError>;

/// A validated double Butcher tableau.
#[derive(Debug, Clone, PartialEq)]
pub struct Tableau {
    name: String,
    h_exp: RealMatrix,
    h_imp: RealMatrix,
    b_exp: Vec<f64>,
    b_imp: Vec<f64>,
    c_exp: Vec<f64>,
    c_imp: Vec<f64>,
}

impl Tableau {
    /// Validates the triangular structure and the sign of the implicit
    /// diagonal, and derives the abscissae as row sums.
    pub fn new(
        h_exp: RealMatrix,
        h_imp: RealMatrix,
        b_exp: Vec<f64>,
        b_imp: Vec<f64>,
    ) -> Result<Self> {
        let s = b_imp.len();
        if s == 0 {
            return Err(TableauError::ShapeMismatch(
                "tableau needs at least one stage".into(),
            ));
        }
        for (what, m) in [("explicit matrix", &h_exp), ("implicit matrix", &h_imp)] {
            if m.rows() != s || m.cols() != s {
                return Err(TableauError::ShapeMismatch(format!(
                    "{what} is {}x{}, expected {s}x{s}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        if b_exp.len() != s {
            return Err(TableauError::ShapeMismatch(format!(
                "explicit weights have length {}, expected {s}",
                b_exp.len()
            )));
        }
        if b_exp.iter().chain(&b_imp).any(|x| !x.is_finite()) {
            return Err(TableauError::StructureViolation("non-finite weight".into()));
        }
        for i in 0..s {
            for j in i..s {
                if h_exp[(i, j)].abs() > STRUCTURE_TOL {
                    return Err(TableauError::StructureViolation(format!(
                        "explicit entry ({}, {}) = {} is not strictly lower triangular",
                        i + 1,
                        j + 1,
                        h_exp[(i, j)]
                    )));
                }
            }
            for j in i + 1..s {
                if h_imp[(i, j)].abs() > STRUCTURE_TOL {
                    return Err(TableauError::StructureViolation(format!(
                        "implicit entry ({}, {}) = {} is above the diagonal",
                        i + 1,
                        j + 1,
                        h_imp[(i, j)]
                    )));
                }
            }
            if h_imp[(i, i)] < 0.0 {
                return Err(TableauError::StructureViolation(format!(
                    "implicit diagonal entry {} = {} is negative",
                    i + 1,
                    h_imp[(i, i)]
                )));
            }
        }
        let c_exp = (0..s)
            .map(|i| (0..i).map(|j| h_exp[(i, j)]).sum())
            .collect();
        let c_imp = (0..s)
            .map(|i| (0..=i).map(|j| h_imp[(i, j)]).sum())
            .collect();
        Ok(Self {
            name: String::from("user"),
            h_exp,
            h_imp,
            b_exp,
            b_imp,
            c_exp,
            c_imp,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn stages(&self) -> usize {
        self.b_imp.len()
    }

    /// `H̃`
    pub fn h_exp(&self) -> &RealMatrix {
        &self.h_exp
    }

    /// `H`
    pub fn h_imp(&self) -> &RealMatrix {
        &self.h_imp
    }

    /// `b̃`
    pub fn b_exp(&self) -> &[f64] {
        &self.b_exp
    }

    /// `b`
    pub fn b_imp(&self) -> &[f64] {
        &self.b_imp
    }

    /// `c̃`
    pub fn c_exp(&self) -> &[f64] {
        &self.c_exp
    }

    /// `c`
    pub fn c_imp(&self) -> &[f64] {
        &self.c_imp
    }
}

/// Scheme-type flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub is_ck: bool,
    pub is_ars: bool,
    pub is_isa: bool,
    pub is_gsa: bool,
    pub c_matched: bool,
}

pub fn classify(t: &Tableau) -> Classification {
    let s = t.stages();
    let h = &t.h_imp;
    let first_row_zero = (0..s).all(|j| h[(0, j)] == 0.0);
    // the trailing block is lower triangular, so its determinant is the
    // product of the remaining diagonal
    let scale = h.norm_max().max(1.0).powi(s as i32 - 1);
    let det_hat: f64 = (1..s).map(|i| h[(i, i)]).product();
    let is_ck = first_row_zero && det_hat.abs() > 1e-12 * scale;
    let is_ars = is_ck && (1..s).all(|i| h[(i, 0)] == 0.0) && t.b_imp[0] == 0.0;
    let is_isa = (0..s).all(|j| (h[(s - 1, j)] - t.b_imp[j]).abs() <= ROW_MATCH_TOL);
    let is_gsa =
        is_isa && (0..s).all(|j| (t.h_exp[(s - 1, j)] - t.b_exp[j]).abs() <= ROW_MATCH_TOL);
    let c_matched = t
        .c_exp
        .iter()
        .zip(&t.c_imp)
        .all(|(a, b)| (a - b).abs() <= ROW_MATCH_TOL);
    Classification {
        is_ck,
        is_ars,
        is_isa,
        is_gsa,
        c_matched,
    }
}

/// One evaluated condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub name: String,
    pub residual: f64,
}

impl Condition {
    pub fn passes(&self) -> bool {
        self.residual < CONDITION_TOL
    }
}

/// Named residuals, in the order the conditions are evaluated.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConditionReport {
    pub conditions: Vec<Condition>,
}

impl ConditionReport {
    fn push(&mut self, name: impl Into<String>, residual: f64) {
        self.conditions.push(Condition {
            name: name.into(),
            residual: residual.abs(),
        });
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.conditions
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.residual)
    }

    pub fn all_pass(&self) -> bool {
        self.conditions.iter().all(Condition::passes)
    }

    pub fn failing(&self) -> impl Iterator<Item = &Condition> {
        self.conditions.iter().filter(|c| !c.passes())
    }

    pub fn max_residual(&self) -> f64 {
        self.conditions
            .iter()
            .map(|c| c.residual)
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .conditions
            .iter()
            .map(|c| c.name.len())
            .max()
            .unwrap_or(0);
        for c in &self.conditions {
            writeln!(
                f,
                "  {:<width$}  {:>10.3e}  {}",
                c.name,
                c.residual,
                if c.passes() { "ok" } else { "FAIL" },
            )?;
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dot3(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    a.iter().zip(b).zip(c).map(|((x, y), z)| x * y * z).sum()
}

/// `Σᵢⱼ wᵢ Mᵢⱼ vⱼ`
fn bilinear(w: &[f64], m: &RealMatrix, v: &[f64]) -> f64 {
    let mv = m.matvec(v).expect("tableau shapes are validated");
    dot(w, &mv)
}

/// Residuals of the order conditions for every order up to `p` (1, 2 or 3).
///
/// Naming: `t` marks the explicit member (`bt` = b̃, `ct` = c̃, `Ht` = H̃).
pub fn order_residuals(t: &Tableau, p: u8) -> ConditionReport {
    let (bt, b, ct, c) = (&t.b_exp[..], &t.b_imp[..], &t.c_exp[..], &t.c_imp[..]);
    let (ht, h) = (&t.h_exp, &t.h_imp);
    let mut r = ConditionReport::default();

    r.push("sum_bt = 1", bt.iter().sum::<f64>() - 1.0);
    r.push("sum_b = 1", b.iter().sum::<f64>() - 1.0);
    if p < 2 {
        return r;
    }

    r.push("sum_bt_ct = 1/2", dot(bt, ct) - 0.5);
    r.push("sum_b_c = 1/2", dot(b, c) - 0.5);
    r.push("sum_bt_c = 1/2", dot(bt, c) - 0.5);
    r.push("sum_b_ct = 1/2", dot(b, ct) - 0.5);
    if p < 3 {
        return r;
    }

    const SIXTH: f64 = 1.0 / 6.0;
    const THIRD: f64 = 1.0 / 3.0;
    r.push("sum_bt_Ht_ct = 1/6", bilinear(bt, ht, ct) - SIXTH);
    r.push("sum_b_H_c = 1/6", bilinear(b, h, c) - SIXTH);
    r.push("sum_bt_ct_ct = 1/3", dot3(bt, ct, ct) - THIRD);
    r.push("sum_b_c_c = 1/3", dot3(b, c, c) - THIRD);
    r.push("sum_bt_Ht_c = 1/6", bilinear(bt, ht, c) - SIXTH);
    r.push("sum_bt_H_ct = 1/6", bilinear(bt, h, ct) - SIXTH);
    r.push("sum_bt_H_c = 1/6", bilinear(bt, h, c) - SIXTH);
    r.push("sum_b_Ht_c = 1/6", bilinear(b, ht, c) - SIXTH);
    r.push("sum_b_H_ct = 1/6", bilinear(b, h, ct) - SIXTH);
    r.push("sum_b_Ht_ct = 1/6", bilinear(b, ht, ct) - SIXTH);
    r.push("sum_bt_c_c = 1/3", dot3(bt, c, c) - THIRD);
    r.push("sum_bt_ct_c = 1/3", dot3(bt, ct, c) - THIRD);
    r.push("sum_b_ct_ct = 1/3", dot3(b, ct, ct) - THIRD);
    r.push("sum_b_ct_c = 1/3", dot3(b, ct, c) - THIRD);
    r
}

/// Stage-order equalities `½cᵢ² = Σⱼ h̃ᵢⱼcⱼ = Σⱼ hᵢⱼcⱼ` for `i ≥ 3`, then the
/// vanishing coefficients `b̃₂` and `hᵢ₂` (`i ≥ 3`).
pub fn stage_conditions(t: &Tableau) -> Result<ConditionReport> {
    let s = t.stages();
    if s < 3 {
        return Err(TableauError::TooFewStages(s));
    }
    let c = &t.c_imp;
    let ht_c = t.h_exp.matvec(c)?;
    let h_c = t.h_imp.matvec(c)?;
    let mut r = ConditionReport::default();
    for i in 2..s {
        let half_c2 = 0.5 * c[i] * c[i];
        r.push(
            format!("stage_exp[{}]: sum_Ht_c = c^2/2", i + 1),
            ht_c[i] - half_c2,
        );
        r.push(
            format!("stage_imp[{}]: sum_H_c = c^2/2", i + 1),
            h_c[i] - half_c2,
        );
    }
    r.push("vanishing: bt_2 = 0", t.b_exp[1]);
    let col2 = (2..s).map(|i| t.h_imp[(i, 1)].abs()).fold(0.0, f64::max);
    r.push("vanishing: max_i |h_i2| = 0", col2);
    Ok(r)
}

/// `M⋆ = M·L + C`, where `L` has a zero first row, `−1` down the rest of the
/// first column and the identity elsewhere, and `C` is `+1` at the top-left
/// and `−1` at the bottom-right corner.
pub fn mstar(m: &RealMatrix) -> Result<RealMatrix> {
    let s = m.rows();
    if !m.is_square() || s < 2 {
        return Err(TableauError::ShapeMismatch(format!(
            "M* needs a square matrix with s >= 2, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let mut l = RealMatrix::zeros(s, s);
    for i in 1..s {
        l[(i, 0)] = -1.0;
        l[(i, i)] = 1.0;
    }
    let mut out = m.matmul(&l)?;
    out[(0, 0)] += 1.0;
    out[(s - 1, s - 1)] -= 1.0;
    Ok(out)
}

/// The corner matrix `C` of [`mstar`].
pub fn mstar_corner(s: usize) -> RealMatrix {
    let mut c = RealMatrix::zeros(s, s);
    c[(0, 0)] = 1.0;
    c[(s - 1, s - 1)] = -1.0;
    c
}

/// Candidate energy-method certificate for a tableau.
#[derive(Debug, Clone, PartialEq)]
pub struct MCertificate {
    pub m: RealMatrix,
    pub tol: f64,
}

impl MCertificate {
    pub fn new(m: RealMatrix) -> Self {
        Self { m, tol: PSD_TOL }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MCheck {
    pub m1_pass: bool,
    pub m2_pass: bool,
    /// `MH + (MH)ᵀ`
    pub m1_matrix: RealMatrix,
    /// `M⋆ + M⋆ᵀ`
    pub m2_matrix: RealMatrix,
    pub m1_eigenvalues: Vec<f64>,
    pub m2_eigenvalues: Vec<f64>,
}

/// Checks (M1): `MH + (MH)ᵀ ⪰ 0` with rank `s−1`, and (M2): the same for
/// `M⋆ + M⋆ᵀ`.
pub fn check_m(t: &Tableau, cert: &MCertificate) -> Result<MCheck> {
    let s = t.stages();
    if cert.m.rows() != s || cert.m.cols() != s {
        return Err(TableauError::ShapeMismatch(format!(
            "certificate is {}x{}, tableau has {s} stages",
            cert.m.rows(),
            cert.m.cols()
        )));
    }
    let m1 = cert.m.matmul(&t.h_imp)?.symmetric_part_doubled();
    let m2 = mstar(&cert.m)?.symmetric_part_doubled();
    let verdict = |x: &RealMatrix| -> Result<(bool, Vec<f64>)> {
        let (psd, rank) = is_psd(x, cert.tol)?;
        let eig = densemat::sym_eigen(x)?.eigenvalues;
        Ok((psd && rank == s - 1, eig))
    };
    let (m1_pass, m1_eigenvalues) = verdict(&m1)?;
    let (m2_pass, m2_eigenvalues) = verdict(&m2)?;
    Ok(MCheck {
        m1_pass,
        m2_pass,
        m1_matrix: m1,
        m2_matrix: m2,
        m1_eigenvalues,
        m2_eigenvalues,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NullSpaceCheck {
    pub pass: bool,
    pub null_vector: Vec<f64>,
}

/// Checks that the one-dimensional kernel of `H` is spanned by a vector with
/// vanishing last component.
pub fn assumption_h(t: &Tableau) -> Result<NullSpaceCheck> {
    let s = t.stages();
    let h = &t.h_imp;
    let scale = h.norm_max().max(f64::MIN_POSITIVE);
    let zero_diag: Vec<usize> = (0..s)
        .filter(|&i| h[(i, i)].abs() <= 1e-14 * scale)
        .collect();

    let v = if zero_diag == [0] {
        // CK layout: forward substitution from v₁ = 1
        let mut v = vec![0.0; s];
        v[0] = 1.0;
        for i in 1..s {
            let acc: f64 = (0..i).map(|j| h[(i, j)] * v[j]).sum();
            v[i] = -acc / h[(i, i)];
        }
        v
    } else {
        let hth = h.transpose().matmul(h)?;
        let (vals, vecs) = densemat::sym_eigen_vectors(&hth)?;
        let thr = 1e-20 * vals.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
        let nullity = vals.iter().filter(|&&x| x <= thr).count();
        if nullity != 1 {
            return Err(TableauError::NullityMismatch(nullity));
        }
        vecs.column(0)
    };
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let pass = v[s - 1].abs() <= 1e-12 * norm;
    Ok(NullSpaceCheck {
        pass,
        null_vector: v,
    })
}

/// Names accepted by [`registry`].
pub const REGISTRY: [&str; 4] = ["ars111", "ars222", "ars443", "bhr553s"];

/// Classical order each registry scheme is built for.
pub fn claimed_order(name: &str) -> Option<u8> {
    match name {
        "ars111" => Some(1),
        "ars222" => Some(2),
        "ars443" | "bhr553s" => Some(3),
        _ => None,
    }
}

/// Built-in schemes.
pub fn registry(name: &str) -> Result<Tableau> {
    let t = match name {
        "ars111" => ars111(),
        "ars222" => ars222(),
        "ars443" => ars443(),
        "bhr553s" => bhr553s(),
        other => return Err(TableauError::UnknownScheme(other.to_string())),
    }?;
    Ok(t.with_name(name))
}

/// Forward-backward Euler.
fn ars111() -> Result<Tableau> {
    Tableau::new(
        RealMatrix::from_rows(&[[0.0, 0.0], [1.0, 0.0]]),
        RealMatrix::from_rows(&[[0.0, 0.0], [0.0, 1.0]]),
        vec![1.0, 0.0],
        vec![0.0, 1.0],
    )
}

fn ars222() -> Result<Tableau> {
    let g = 1.0 - std::f64::consts::SQRT_2 / 2.0;
    let d = 1.0 - 1.0 / (2.0 * g);
    Tableau::new(
        RealMatrix::from_rows(&[[0.0, 0.0, 0.0], [g, 0.0, 0.0], [d, 1.0 - d, 0.0]]),
        RealMatrix::from_rows(&[[0.0, 0.0, 0.0], [0.0, g, 0.0], [0.0, 1.0 - g, g]]),
        vec![d, 1.0 - d, 0.0],
        vec![0.0, 1.0 - g, g],
    )
}

fn ars443() -> Result<Tableau> {
    Tableau::new(
        RealMatrix::from_rows(&[
            [0.0, 0.0, 0.0, 0.0, 0.0],
            [1.0 / 2.0, 0.0, 0.0, 0.0, 0.0],
            [11.0 / 18.0, 1.0 / 18.0, 0.0, 0.0, 0.0],
            [5.0 / 6.0, -5.0 / 6.0, 1.0 / 2.0, 0.0, 0.0],
            [1.0 / 4.0, 7.0 / 4.0, 3.0 / 4.0, -7.0 / 4.0, 0.0],
        ]),
        RealMatrix::from_rows(&[
            [0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 1.0 / 2.0, 0.0, 0.0, 0.0],
            [0.0, 1.0 / 6.0, 1.0 / 2.0, 0.0, 0.0],
            [0.0, -1.0 / 2.0, 1.0 / 2.0, 1.0 / 2.0, 0.0],
            [0.0, 3.0 / 2.0, -3.0 / 2.0, 1.0 / 2.0, 1.0 / 2.0],
        ]),
        vec![1.0 / 4.0, 7.0 / 4.0, 3.0 / 4.0, -7.0 / 4.0, 0.0],
        vec![0.0, 3.0 / 2.0, -3.0 / 2.0, 1.0 / 2.0, 1.0 / 2.0],
    )
}

/// Diagonal of the BHR(5,5,3) family: the root of `6γ³ − 18γ² + 9γ − 1` in
/// `(0, 1)`. With `c₂ = c₃ = 2γ` this is what puts the last component of the
/// kernel vector of `H` at zero.
pub const BHR_GAMMA: f64 = 0.435_866_521_508_458_999_416_019_451_194;

/// Fourth abscissa of BHR(5,5,3)*.
pub const BHR_C4: f64 = 2_684_624.0 / 1_147_171.0;

/// BHR(5,5,3)*: type CK, ISA (not GSA), `c = c̃`, third order, stage order
/// three from stage 3 on, `b̃₂ = 0` and `hᵢ₂ = 0` for `i ≥ 3`.
///
/// Every coefficient is an explicit function of `γ` and `c₄`; the remaining
/// explicit freedom is fixed by `h̃₄₂ = h̃₅₂ = 0`, `h̃₅₄ = b₄/2` and `b̃ = b`.
fn bhr553s() -> Result<Tableau> {
    let g = BHR_GAMMA;
    let c2 = 2.0 * g;
    let c3 = 2.0 * g;
    let c4 = BHR_C4;

    // weights from Σb = 1, Σbc = 1/2, Σbc² = 1/3 with b₂ = 0, b₅ = γ
    let r1 = 0.5 - g;
    let r2 = 1.0 / 3.0 - g;
    let det = c3 * c4 * c4 - c4 * c3 * c3;
    let b3 = (r1 * c4 * c4 - c4 * r2) / det;
    let b4 = (c3 * r2 - c3 * c3 * r1) / det;
    let b1 = 1.0 - g - b3 - b4;

    // implicit row 4 from the stage-order condition
    let h43 = (0.5 * c4 * c4 - g * c4) / c3;
    let h41 = c4 - g - h43;

    let h_imp = RealMatrix::from_rows(&[
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [g, g, 0.0, 0.0, 0.0],
        [g, 0.0, g, 0.0, 0.0],
        [h41, 0.0, h43, g, 0.0],
        [b1, 0.0, b3, b4, g],
    ]);

    let e43 = 0.5 * c4 * c4 / c3;
    let e41 = c4 - e43;
    let e54 = 0.5 * b4;
    let e53 = (0.5 - e54 * c4) / c3;
    let e51 = 1.0 - e53 - e54;
    let h_exp = RealMatrix::from_rows(&[
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [c2, 0.0, 0.0, 0.0, 0.0],
        [g, g, 0.0, 0.0, 0.0],
        [e41, 0.0, e43, 0.0, 0.0],
        [e51, 0.0, e53, e54, 0.0],
    ]);
    let b = vec![b1, 0.0, b3, b4, g];
    Tableau::new(h_exp, h_imp, b.clone(), b)
}

/// Parses the tableau text format: `s`, then `s` rows of `H̃`, `s` rows of
/// `H`, one line of `b̃` and one line of `b`. `#` starts a comment.
pub fn parse_tableau(text: &str) -> Result<Tableau> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut next = |what: &str| {
        lines.next().ok_or_else(|| TableauError::Parse {
            line: 0,
            msg: format!("unexpected end of input, expected {what}"),
        })
    };
    let conv = |e: LinalgError| match e {
        LinalgError::Parse { line, msg } => TableauError::Parse { line, msg },
        other => TableauError::Linalg(other),
    };
    let (ln, l) = next("stage count")?;
    let s: usize = l.parse().map_err(|_| TableauError::Parse {
        line: ln,
        msg: format!("bad stage count `{l}`"),
    })?;
    if s == 0 {
        return Err(TableauError::Parse {
            line: ln,
            msg: "stage count must be positive".into(),
        });
    }
    let mut read_row = |what: &str| -> Result<Vec<f64>> {
        let (ln, l) = next(what)?;
        let v = densemat::parse_numbers::<f64>(l, ln).map_err(conv)?;
        if v.len() != s {
            return Err(TableauError::Parse {
                line: ln,
                msg: format!("{what}: expected {s} entries, found {}", v.len()),
            });
        }
        Ok(v)
    };
    let mut mat = |what: &str| -> Result<RealMatrix> {
        let mut data = Vec::with_capacity(s * s);
        for _ in 0..s {
            data.extend(read_row(what)?);
        }
        RealMatrix::from_vec(s, s, data).map_err(TableauError::from)
    };
    let h_exp = mat("explicit matrix row")?;
    let h_imp = mat("implicit matrix row")?;
    let b_exp = read_row("explicit weights")?;
    let b_imp = read_row("implicit weights")?;
    Tableau::new(h_exp, h_imp, b_exp, b_imp)
}

/// Inverse of [`parse_tableau`].
pub fn write_tableau(t: &Tableau) -> String {
    let s = t.stages();
    let fmt_row = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.16e}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut out = format!("{s}\n");
    for m in [&t.h_exp, &t.h_imp] {
        for i in 0..s {
            out.push_str(&fmt_row(m.row(i)));
            out.push('\n');
        }
    }
    out.push_str(&fmt_row(&t.b_exp));
    out.push('\n');
    out.push_str(&fmt_row(&t.b_imp));
    out.push('\n');
    out
}
