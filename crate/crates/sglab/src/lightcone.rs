//! Lightcone-marginal representation of a test density.
//!
//! Both the commutator function and the logarithmic two-point function
//! factorise over the null directions, so every smeared quantity of a density
//! `f` reduces to one-dimensional integrals of its marginals
//! `ρ_u(s) = ∫ f(t, s - t) dt` and `ρ_v(s) = ∫ f(t, t - s) dt`:
//!
//! | quantity | marginal form |
//! |---|---|
//! | `Δf(p)` | `½(∫f - M_u(u_p) - M_v(v_p))` |
//! | `H₁f(p)` | `-(1/4π)(L_u(u_p) + L_v(v_p))` |
//!
//! with `M` the cumulative marginal and `L(s) = ∫ ln|s - s'| ρ(s') ds'`.

use crate::densities::TestDensity;
use crate::error::{Result, SgError};
use crate::geometry::Point;
use crate::quad::{integrate_with_breaks, Tolerance};
use crate::spline::UniformSpline;
use std::f64::consts::PI;

const NODES: usize = 2049;
const TOL: Tolerance = Tolerance { abs: 1e-14, rel: 1e-12, max_evals: 400_000 };

/// Tabulated marginal of a density along one null direction.
#[derive(Debug, Clone)]
pub struct MarginalTable {
    lo: f64,
    hi: f64,
    rho: UniformSpline,
    log_potential: UniformSpline,
}

impl MarginalTable {
    fn build<F: Fn(f64) -> f64>(marginal: F, lo: f64, hi: f64) -> Result<Self> {
        let h = (hi - lo) / (NODES - 1) as f64;
        let nodes: Vec<f64> = (0..NODES).map(|i| lo + i as f64 * h).collect();
        let rho_vals: Vec<f64> = nodes.iter().map(|&s| marginal(s)).collect();
        if rho_vals.iter().any(|v| !v.is_finite()) {
            return Err(SgError::BudgetExceeded { requested: TOL.abs, achieved: f64::NAN });
        }
        let rho = UniformSpline::new(lo, hi, rho_vals);
        let mut logs = Vec::with_capacity(NODES);
        for &s in &nodes {
            logs.push(log_potential_direct(&rho, lo, hi, s)?);
        }
        let log_potential = UniformSpline::new(lo, hi, logs);
        Ok(MarginalTable { lo, hi, rho, log_potential })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn rho(&self, s: f64) -> f64 {
        if s <= self.lo || s >= self.hi {
            0.0
        } else {
            self.rho.eval(s)
        }
    }

    /// `∫_{-∞}^{s} ρ`.
    pub fn cumulative(&self, s: f64) -> f64 {
        self.rho.integral_to(s)
    }

    pub fn total(&self) -> f64 {
        self.rho.total()
    }

    /// `∫ ln|s - s'| ρ(s') ds'`.
    pub fn log_potential(&self, s: f64) -> f64 {
        if s >= self.lo && s <= self.hi {
            self.log_potential.eval(s)
        } else {
            log_potential_direct(&self.rho, self.lo, self.hi, s).unwrap_or(f64::NAN)
        }
    }

    /// `∫ ρ(s) g(s) ds` over the support of this marginal.
    pub fn pair<G: Fn(f64) -> f64>(&self, g: G, extra_breaks: &[f64]) -> Result<f64> {
        let mut breaks: Vec<f64> = (1..16).map(|i| self.lo + (self.hi - self.lo) * i as f64 / 16.0).collect();
        breaks.extend_from_slice(extra_breaks);
        integrate_with_breaks(|s| self.rho(s) * g(s), self.lo, self.hi, &breaks, TOL).map(|r| r.value)
    }
}

fn log_potential_direct(rho: &UniformSpline, lo: f64, hi: f64, s: f64) -> Result<f64> {
    let breaks: Vec<f64> = (1..8).map(|i| lo + (hi - lo) * i as f64 / 8.0).chain([s]).collect();
    integrate_with_breaks(
        |y| {
            let d = (s - y).abs();
            if d == 0.0 {
                0.0
            } else {
                d.ln() * rho.eval(y)
            }
        },
        lo,
        hi,
        &breaks,
        TOL,
    )
    .map(|r| r.value)
}

/// Both null marginals of a density, tabulated for fast smeared kernels.
#[derive(Debug, Clone)]
pub struct LightconeProfile {
    density: TestDensity,
    total: f64,
    u: MarginalTable,
    v: MarginalTable,
}

impl LightconeProfile {
    pub fn new(density: &TestDensity) -> Result<Self> {
        let b = density.support();
        let (u0, u1) = b.u_range();
        let (v0, v1) = b.v_range();
        let u = MarginalTable::build(|s| density.marginal_u(s), u0, u1)?;
        let v = MarginalTable::build(|s| density.marginal_v(s), v0, v1)?;
        Ok(LightconeProfile { density: density.clone(), total: density.total(), u, v })
    }

    pub fn density(&self) -> &TestDensity {
        &self.density
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn u_table(&self) -> &MarginalTable {
        &self.u
    }

    pub fn v_table(&self) -> &MarginalTable {
        &self.v
    }

    /// `(Δf)(p) = ∫ Δ(p, y) f(y) dy`.
    pub fn pauli_jordan(&self, p: Point) -> f64 {
        0.5 * (self.total - self.u.cumulative(p.u()) - self.v.cumulative(p.v()))
    }

    /// `(H₁f)(p) = ∫ H₁(p, y) f(y) dy` with unit mass scale.
    pub fn hadamard(&self, p: Point) -> f64 {
        -(self.u.log_potential(p.u()) + self.v.log_potential(p.v())) / (4.0 * PI)
    }

    /// `(Δ_D f)(p)`, half the sum of retarded and advanced solutions.
    pub fn dirac(&self, p: Point) -> f64 {
        -0.25 * (self.density.past_cone_mass(p) + self.density.future_cone_mass(p))
    }

    /// `⟨self, H₁ other⟩`.
    pub fn pair_hadamard(&self, other: &LightconeProfile) -> Result<f64> {
        let a = self.u.pair(|s| other.u.log_potential(s), &[other.u.lo, other.u.hi])?;
        let b = self.v.pair(|s| other.v.log_potential(s), &[other.v.lo, other.v.hi])?;
        Ok(-(a + b) / (4.0 * PI))
    }

    /// `⟨self, Δ other⟩`.
    pub fn pair_pauli_jordan(&self, other: &LightconeProfile) -> Result<f64> {
        let a = self.u.pair(|s| other.u.cumulative(s), &[other.u.lo, other.u.hi])?;
        let b = self.v.pair(|s| other.v.cumulative(s), &[other.v.lo, other.v.hi])?;
        Ok(0.5 * (self.total * other.total - a - b))
    }
}
