//! Closed-form macroscopic eigenpairs `(λ¹, u)` for `ρ = 1`.
//!
//! For `k ≠ 0` the pair `σ ∈ {k, -k}` solves `c(σ) u_σ' + λ¹ u_σ = 0` with
//! `u_σ = d_σ e^{-λ¹ x / c(σ)}`. For a double eigenvalue at `k = 0` the pair
//! `(u_n, u_m)` solves `c(n,m) u_m' + λ¹ u_n = 0`, `c(m,n) u_n' + λ¹ u_m = 0`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::{Error, Result, C64};

/// Size below which `c` counts as zero.
pub const DEGENERATE_C_TOL: f64 = 1e-10;

/// Size below which `φ(0)` counts as zero.
pub const VANISHING_PHI_TOL: f64 = 1e-8;

/// Tolerance on `b(k,n,n) = 1`.
pub const UNIT_DENSITY_TOL: f64 = 1e-6;

/// `αk/ε = h + l` with `h = ⌊αk/ε⌋` and `l ∈ [0, 1)`, computed for `|k|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EpsilonDecomposition {
    pub h: u64,
    pub l: f64,
    pub k: f64,
    pub alpha: f64,
    pub epsilon: f64,
}

impl EpsilonDecomposition {
    /// `l` carrying the sign of `k`, so that `-k` uses the conjugate phase.
    pub fn signed_l(&self) -> f64 {
        if self.k < 0.0 {
            -self.l
        } else {
            self.l
        }
    }
}

pub fn decompose_epsilon(alpha: f64, k: f64, epsilon: f64) -> EpsilonDecomposition {
    let mut t = alpha * k.abs() / epsilon;
    let r = t.round();
    if (t - r).abs() <= 1e-12 * t.max(1.0) {
        t = r;
    }
    let h = t.floor();
    EpsilonDecomposition {
        h: h as u64,
        l: t - h,
        k,
        alpha,
        epsilon,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MacroBranch {
    KNonzero,
    KZeroLambda1Zero,
    KZeroLambda1Nonzero,
}

/// Closed-form data of a macroscopic solution.
#[derive(Clone, Debug, PartialEq)]
pub enum MacroForm {
    /// `u_k = d_k e^{-λ¹x/c}`, `u_{-k} = d_{-k} e^{-λ¹x/conj(c)}`.
    Pair {
        c: C64,
        d_k: C64,
        d_mk: C64,
        phi0_k: C64,
        phi0_mk: C64,
        l_k: f64,
    },
    /// `u_m = d1 cos θx + d2 sin θx`, `u_n = d1 sin θx − d2 cos θx`, `θ = λ¹/c(n,m)`.
    Double {
        m: usize,
        c_nm: f64,
        d1: C64,
        d2: C64,
        phi_n0: f64,
        phi_m0: f64,
    },
    /// A simple eigenvalue at `k = 0`: `c(0,n,n) = 0` forces `λ¹ = 0`, `u ≡ amplitude`.
    Simple { amplitude: C64, phi_n0: f64 },
}

/// An analytic macroscopic eigenpair.
#[derive(Clone, Debug, PartialEq)]
pub struct MacroSolution {
    pub k: f64,
    pub n: usize,
    pub ell: i64,
    pub lambda1: f64,
    /// Imaginary part discarded from the complex formula for `λ¹`.
    pub lambda1_im: f64,
    pub alpha: f64,
    pub branch: MacroBranch,
    pub form: MacroForm,
}

/// Terms `(mode index, amplitude)` of the macroscopic field.
pub type MacroTerms = Vec<(usize, C64)>;

impl MacroSolution {
    /// `(u_k(x), u_{-k}(x))` for the `k ≠ 0` pair.
    pub fn pair_values(&self, x: f64) -> Option<(C64, C64)> {
        match self.form {
            MacroForm::Pair { c, d_k, d_mk, .. } => Some((
                d_k * (-self.lambda1 * x / c).exp(),
                d_mk * (-self.lambda1 * x / c.conj()).exp(),
            )),
            _ => None,
        }
    }

    /// `(u_n(x), u_m(x))` for the `k = 0` double case.
    pub fn double_values(&self, x: f64) -> Option<(C64, C64)> {
        match self.form {
            MacroForm::Double { c_nm, d1, d2, .. } => {
                if self.ell == 0 {
                    return Some((-d2, d1));
                }
                let theta = self.lambda1 / c_nm;
                let (s, c) = (theta * x).sin_cos();
                Some((d1 * s - d2 * c, d1 * c + d2 * s))
            }
            _ => None,
        }
    }

    /// Residual of the macroscopic ODE system at `x`, as a max over equations.
    pub fn ode_residual(&self, x: f64) -> f64 {
        match self.form {
            MacroForm::Pair { c, .. } => {
                let (uk, umk) = self.pair_values(x).unwrap();
                // u' = -λ¹/c · u in closed form
                let duk = -self.lambda1 / c * uk;
                let dumk = -self.lambda1 / c.conj() * umk;
                (c * duk + self.lambda1 * uk)
                    .norm()
                    .max((c.conj() * dumk + self.lambda1 * umk).norm())
            }
            MacroForm::Double { c_nm, d1, d2, .. } => {
                let (un, um) = self.double_values(x).unwrap();
                let (dun, dum) = if self.ell == 0 {
                    (C64::default(), C64::default())
                } else {
                    let theta = self.lambda1 / c_nm;
                    let (s, c) = (theta * x).sin_cos();
                    ((d1 * c + d2 * s) * theta, (-d1 * s + d2 * c) * theta)
                };
                (c_nm * dum + self.lambda1 * un)
                    .norm()
                    .max((-c_nm * dun + self.lambda1 * um).norm())
            }
            MacroForm::Simple { amplitude, .. } => (self.lambda1 * amplitude).norm(),
        }
    }

    /// Residual of the macroscopic boundary condition at `x`.
    pub fn boundary_residual(&self, x: f64) -> f64 {
        match self.form {
            MacroForm::Pair {
                phi0_k,
                phi0_mk,
                l_k,
                ..
            } => {
                let (uk, umk) = self.pair_values(x).unwrap();
                let ph = C64::from_polar(1.0, 2.0 * PI * l_k * x / self.alpha);
                (uk * phi0_k * ph + umk * phi0_mk * ph.conj()).norm()
            }
            MacroForm::Double { phi_n0, phi_m0, .. } => {
                let (un, um) = self.double_values(x).unwrap();
                (un * phi_n0 + um * phi_m0).norm()
            }
            MacroForm::Simple { amplitude, phi_n0 } => (amplitude * phi_n0).norm(),
        }
    }

    /// Largest `|u|` component at `x`.
    pub fn magnitude(&self, x: f64) -> f64 {
        match self.form {
            MacroForm::Pair { .. } => {
                let (a, b) = self.pair_values(x).unwrap();
                a.norm().max(b.norm())
            }
            MacroForm::Double { .. } => {
                let (a, b) = self.double_values(x).unwrap();
                a.norm().max(b.norm())
            }
            MacroForm::Simple { amplitude, .. } => amplitude.norm(),
        }
    }

    /// Macroscopic amplitudes at `x` keyed by `(σ is -k, mode index)`;
    /// the first flag marks terms multiplying the conjugate Bloch mode.
    pub fn terms(&self, x: f64) -> Vec<(bool, usize, C64)> {
        match self.form {
            MacroForm::Pair { .. } => {
                let (uk, umk) = self.pair_values(x).unwrap();
                vec![(false, self.n, uk), (true, self.n, umk)]
            }
            MacroForm::Double { m, .. } => {
                let (un, um) = self.double_values(x).unwrap();
                vec![(false, self.n, un), (false, m, um)]
            }
            MacroForm::Simple { amplitude, .. } => vec![(false, self.n, amplitude)],
        }
    }
}

/// Closed form for `k ≠ 0`: `λ¹ = Re[c/α (2iπ l_k − iℓπ)]`,
/// `d_k = iδ/φ_k(0)`, `d_{-k} = −iδ/φ_{-k}(0)`.
#[allow(clippy::too_many_arguments)]
pub fn macro_eigenpair_k(
    k: f64,
    n: usize,
    c_nn: C64,
    b_nn: f64,
    phi0_k: C64,
    phi0_mk: C64,
    alpha: f64,
    l_k: f64,
    ell: i64,
    delta: f64,
) -> Result<MacroSolution> {
    if (b_nn - 1.0).abs() > UNIT_DENSITY_TOL {
        return Err(Error::NonUnitDensity(b_nn));
    }
    if c_nn.norm() <= DEGENERATE_C_TOL {
        return Err(Error::DegenerateMacroModel);
    }
    if phi0_k.norm() <= VANISHING_PHI_TOL || phi0_mk.norm() <= VANISHING_PHI_TOL {
        return Err(Error::PeriodicDegenerateMode);
    }
    let i = C64::i();
    let l1 = c_nn / alpha * (i * (2.0 * PI * l_k - ell as f64 * PI));
    Ok(MacroSolution {
        k,
        n,
        ell,
        lambda1: l1.re,
        lambda1_im: l1.im,
        alpha,
        branch: MacroBranch::KNonzero,
        form: MacroForm::Pair {
            c: c_nn,
            d_k: i * delta / phi0_k,
            d_mk: -i * delta / phi0_mk,
            phi0_k,
            phi0_mk,
            l_k,
        },
    })
}

/// Closed form for a double eigenvalue at `k = 0` with real modes `(φ_n, φ_m)`:
/// `λ¹ = ℓπ c(n,m)/α` and `d1 = d2 φ_n(0)/φ_m(0)`; when `φ_m(0) = 0`,
/// `d2 = 0` and `d1 = φ_n(0)`.
#[allow(clippy::too_many_arguments)]
pub fn macro_eigenpair_0(
    n: usize,
    m: usize,
    c_nm: C64,
    phi_n0: f64,
    phi_m0: f64,
    alpha: f64,
    ell: i64,
    d2: C64,
) -> Result<MacroSolution> {
    if c_nm.norm() <= DEGENERATE_C_TOL {
        return Err(Error::DegenerateMacroModel);
    }
    let scale = phi_n0.abs().max(phi_m0.abs());
    if scale <= VANISHING_PHI_TOL {
        return Err(Error::UnderdeterminedBoundary);
    }
    let (d1, d2) = if phi_m0.abs() > VANISHING_PHI_TOL {
        (d2 * phi_n0 / phi_m0, d2)
    } else {
        (C64::new(phi_n0, 0.0), C64::default())
    };
    let c = c_nm.re;
    let l1 = ell as f64 * PI * c_nm / alpha;
    Ok(MacroSolution {
        k: 0.0,
        n,
        ell,
        lambda1: l1.re,
        lambda1_im: l1.im,
        alpha,
        branch: if ell == 0 {
            MacroBranch::KZeroLambda1Zero
        } else {
            MacroBranch::KZeroLambda1Nonzero
        },
        form: MacroForm::Double {
            m,
            c_nm: c,
            d1,
            d2,
            phi_n0,
            phi_m0,
        },
    })
}

/// A simple eigenvalue at `k = 0`: `c(n,n) = 0` forces `λ¹ = 0` and leaves the
/// envelope free except for `u φ_n(0) = 0` on the boundary. Only a vanishing
/// `φ_n(0)` admits the unit constant envelope.
pub fn macro_eigenpair_0_simple(n: usize, phi_n0: f64, alpha: f64) -> Result<MacroSolution> {
    if phi_n0.abs() > VANISHING_PHI_TOL {
        return Err(Error::UndeterminedEnvelope(phi_n0));
    }
    Ok(MacroSolution {
        k: 0.0,
        n,
        ell: 0,
        lambda1: 0.0,
        lambda1_im: 0.0,
        alpha,
        branch: MacroBranch::KZeroLambda1Zero,
        form: MacroForm::Simple {
            amplitude: C64::new(1.0, 0.0),
            phi_n0,
        },
    })
}

/// The exact two-scale mode for `a = ρ = 1`.
///
/// For `k ≠ 0` the Bloch pair is `e^{±2iπ(m+k)y}` and `ℓ` is counted from
/// `2 l^k` with `l^k` the signed fractional part of `αk/ε`. For `k = 0` and
/// `m ≥ 1` the pair is `(√2 cos 2πmy, √2 sin 2πmy)`; `m = 0` is the constant.
#[derive(Clone, Debug)]
pub struct OracleMode {
    pub alpha: f64,
    pub epsilon: f64,
    pub k: f64,
    pub m: i64,
    pub ell: i64,
    pub lambda_n: f64,
    pub lambda1: f64,
    pub gamma: f64,
    pub macro_solution: MacroSolution,
}

impl OracleMode {
    /// Bloch mode `σ` at `y` (`conj = true` selects the `-k` member).
    fn bloch(&self, index: usize, conj: bool, y: f64) -> C64 {
        if self.k != 0.0 {
            let v = C64::from_polar(1.0, 2.0 * PI * (self.m as f64 + self.k) * y);
            return if conj { v.conj() } else { v };
        }
        if self.m == 0 {
            return C64::new(1.0, 0.0);
        }
        let t = 2.0 * PI * self.m as f64 * y;
        let s2 = 2f64.sqrt();
        C64::new(if index == 0 { s2 * t.cos() } else { s2 * t.sin() }, 0.0)
    }

    /// `ψ(x) = Σ u_σ(x) φ_σ(x/ε)`.
    pub fn psi(&self, x: f64) -> C64 {
        let y = x / self.epsilon;
        self.macro_solution
            .terms(x)
            .into_iter()
            .map(|(conj, idx, u)| u * self.bloch(if idx == self.macro_solution.n { 0 } else { 1 }, conj, y))
            .sum()
    }
}

pub fn analytic_two_scale_oracle(
    alpha: f64,
    epsilon: f64,
    k: f64,
    m: i64,
    ell: i64,
) -> Result<OracleMode> {
    let k = if k == 0.0 { 0.0 } else { k };
    let mk = m as f64 + k;
    let lambda_n = 4.0 * PI * PI * mk * mk;
    let sol = if k != 0.0 {
        let l = decompose_epsilon(alpha, k, epsilon).signed_l();
        let c = C64::new(0.0, 4.0 * PI * mk);
        let one = C64::new(1.0, 0.0);
        macro_eigenpair_k(k, 0, c, 1.0, one, one, alpha, l, ell, 1.0)?
    } else if m == 0 {
        macro_eigenpair_0_simple(0, 1.0, alpha)?
    } else {
        let c = C64::new(4.0 * PI * m as f64, 0.0);
        macro_eigenpair_0(0, 1, c, 2f64.sqrt(), 0.0, alpha, ell, C64::default())?
    };
    Ok(OracleMode {
        alpha,
        epsilon,
        k,
        m,
        ell,
        lambda_n,
        lambda1: sol.lambda1,
        gamma: lambda_n + epsilon * sol.lambda1,
        macro_solution: sol,
    })
}
