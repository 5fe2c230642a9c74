//! Two-point distributions of the massless scalar field in two dimensions.
//!
//! Conventions, for `Q = Δt² - Δx²` of `p - q`:
//!
//! | kernel | value |
//! |---|---|
//! | commutator `Δ` | `-½` future timelike, `+½` past timelike, `0` spacelike |
//! | retarded `Δ_R` | `-½ Θ(Δt - |Δx|)`, so `-□ Δ_R = δ` |
//! | Hadamard `H_μ` | `-(1/4π) ln(μ²|Q|)` |
//! | Wightman `W_μ` | `-(1/4π) ln(-μ²Q + i0·Δt) = H_μ + (i/2)Δ` |
//! | Feynman `Δ_F` | `-(1/4π) ln(-μ²Q + i0) = H_μ + iΔ_D` |
//!
//! `Θ(0) = 1`, so the lightlike boundary counts as timelike for `Δ`.

use crate::densities::TestDensity;
use crate::error::{Result, SgError};
use crate::geometry::{lightcone, Point};
use crate::lightcone::LightconeProfile;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const INV_4PI: f64 = 1.0 / (4.0 * PI);

fn step(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Kernel value with a flag for whether `(p, q)` lies off the null cone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: Complex64,
    pub regular: bool,
}

/// Branch taken by `ln(-Q ± i0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrescriptionMode {
    /// `-Q > 0`: real logarithm.
    SpacelikeRealBranch,
    /// `-Q < 0` approached from above: phase `+iπ`.
    TimelikeForwardPhase,
    /// `-Q < 0` approached from below: phase `-iπ`.
    TimelikeBackwardPhase,
}

/// Resolution of an infinitesimal imaginary shift of `-Q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonPrescription {
    pub mode: PrescriptionMode,
    /// Imaginary part of the logarithm, `0` or `±π`.
    pub branch: f64,
}

impl EpsilonPrescription {
    /// Branch of `ln(-Q + i0·sign)` for the pair `(p, q)`; `None` on the null cone.
    pub fn resolve(p: Point, q: Point, sign: f64) -> Option<Self> {
        let (u, v) = lightcone(p, q);
        let q2 = u * v;
        if q2 == 0.0 {
            None
        } else if q2 < 0.0 {
            Some(EpsilonPrescription { mode: PrescriptionMode::SpacelikeRealBranch, branch: 0.0 })
        } else if sign > 0.0 {
            Some(EpsilonPrescription { mode: PrescriptionMode::TimelikeForwardPhase, branch: PI })
        } else {
            Some(EpsilonPrescription { mode: PrescriptionMode::TimelikeBackwardPhase, branch: -PI })
        }
    }

    /// Branch used by the two-point function (`sign = Δt`).
    pub fn wightman(p: Point, q: Point) -> Option<Self> {
        Self::resolve(p, q, p.t - q.t)
    }

    /// Branch used by the time-ordered product (`sign = +1`).
    pub fn feynman(p: Point, q: Point) -> Option<Self> {
        Self::resolve(p, q, 1.0)
    }

    /// `ln(-Q ± i0)` given `ln|Q|`.
    pub fn log(&self, ln_abs_q: f64) -> Complex64 {
        Complex64::new(ln_abs_q, self.branch)
    }
}

/// Commutator function `Δ(p, q)`.
pub fn pauli_jordan(p: Point, q: Point) -> f64 {
    let dt = p.t - q.t;
    let ax = (p.x - q.x).abs();
    if dt == 0.0 && ax == 0.0 {
        return 0.0;
    }
    -0.5 * step(dt - ax) + 0.5 * step(-dt - ax)
}

/// Retarded fundamental solution.
pub fn retarded(p: Point, q: Point) -> f64 {
    -0.5 * step((p.t - q.t) - (p.x - q.x).abs())
}

/// Advanced fundamental solution.
pub fn advanced(p: Point, q: Point) -> f64 {
    -0.5 * step(-(p.t - q.t) - (p.x - q.x).abs())
}

/// `Δ_D = ½(Δ_R + Δ_A)`: `-¼` on timelike pairs, `0` on spacelike pairs.
pub fn dirac(p: Point, q: Point) -> f64 {
    0.5 * (retarded(p, q) + advanced(p, q))
}

/// Hadamard function `H_μ(p, q)`; infinite and irregular on the null cone.
pub fn hadamard_h(p: Point, q: Point, mu: f64) -> KernelValue {
    let (u, v) = lightcone(p, q);
    let q2 = (u * v).abs();
    if q2 == 0.0 {
        return KernelValue { value: Complex64::new(f64::INFINITY, 0.0), regular: false };
    }
    KernelValue { value: Complex64::new(-INV_4PI * (mu * mu * q2).ln(), 0.0), regular: true }
}

fn log_kernel(p: Point, q: Point, mu: f64, eps: f64, shift: f64, branch: Option<EpsilonPrescription>) -> Result<KernelValue> {
    let q2 = crate::geometry::minkowski_square(p, q);
    if eps > 0.0 {
        let z = Complex64::new(-mu * mu * q2, shift);
        if z.norm() == 0.0 {
            return Err(SgError::SingularPoint(format!("{p:?} {q:?}")));
        }
        return Ok(KernelValue { value: -INV_4PI * z.ln(), regular: q2 != 0.0 });
    }
    let pr = branch.ok_or_else(|| SgError::SingularPoint(format!("lightlike pair {p:?} {q:?}")))?;
    Ok(KernelValue { value: -INV_4PI * pr.log((mu * mu * q2.abs()).ln()), regular: true })
}

/// Two-point function `W_μ(p, q) = -(1/4π) ln(-μ²Q + iμεΔt)`; `eps = 0` takes the
/// boundary value.
pub fn wightman_w(p: Point, q: Point, mu: f64, eps: f64) -> Result<KernelValue> {
    log_kernel(p, q, mu, eps, mu * eps * (p.t - q.t), EpsilonPrescription::wightman(p, q))
}

/// Feynman propagator `-(1/4π) ln(-μ²Q + iε)`; `eps = 0` takes the boundary value.
pub fn feynman(p: Point, q: Point, mu: f64, eps: f64) -> Result<KernelValue> {
    log_kernel(p, q, mu, eps, eps, EpsilonPrescription::feynman(p, q))
}

/// Shift `H_{μ'} - H_μ = -(1/2π) ln(μ'/μ)`.
pub fn mass_scale_shift(mu: f64, mu_prime: f64) -> f64 {
    -(mu_prime / mu).ln() / (2.0 * PI)
}

/// Dual commutator `½(Θ(-u) - Θ(v))` in the lightcone coordinates of `p - q`.
pub fn dual_pauli_jordan(p: Point, q: Point) -> f64 {
    let (u, v) = lightcone(p, q);
    0.5 * (step(-u) - step(v))
}

/// Dual commutator entering the exchange of two dual vertex exponentials,
/// `½(Θ(-u) + Θ(v))`: `0` or `1` at spacelike separation, `½` at timelike.
pub fn dual_exchange_kernel(p: Point, q: Point) -> f64 {
    let (u, v) = lightcone(p, q);
    0.5 * (step(-u) + step(v))
}

/// Dual Hadamard function `-(1/4π) ln|u/v|`.
pub fn dual_hadamard(p: Point, q: Point) -> Result<KernelValue> {
    let (u, v) = lightcone(p, q);
    if u == 0.0 || v == 0.0 {
        return Err(SgError::SingularPoint(format!("dual Hadamard on a light ray {p:?} {q:?}")));
    }
    Ok(KernelValue { value: Complex64::new(-INV_4PI * (u / v).abs().ln(), 0.0), regular: true })
}

/// `(Δψ)(p)`, evaluated through the null marginals of `ψ`.
pub fn smeared_solution(psi: &TestDensity, p: Point) -> Result<f64> {
    let total = psi.total();
    let mu = psi.cumulative_u(p.u());
    let mv = psi.cumulative_v(p.v());
    let out = 0.5 * (total - mu - mv);
    if !out.is_finite() {
        return Err(SgError::BudgetExceeded { requested: 1e-12, achieved: f64::NAN });
    }
    Ok(out)
}

/// `(Δψ)(p)` from a precomputed profile.
pub fn smeared_solution_profiled(profile: &LightconeProfile, p: Point) -> f64 {
    profile.pauli_jordan(p)
}
