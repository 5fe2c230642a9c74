//! Regular reference states of the massless field built from a unit-mass
//! density `ψ` and a width parameter `r`.
//!
//! The symmetric two-point function is `H = H₁ + K` with the smooth part
//!
//! `K(x, y) = -H₁ψ(x) - H₁ψ(y) + ⟨ψ, H₁ψ⟩ + Δψ(x)Δψ(y)/(2r²) + r²/2`,
//!
//! so that on test functions `⟨f, H g⟩ = ⟨Pf, H₁ Pg⟩ + ⟨f, Δψ⟩⟨g, Δψ⟩/(2r²)
//! + (r²/2) ∫f ∫g` with `Pf = f - (∫f) ψ`.

use crate::densities::{check_normalized, ChargeProbe, TestDensity};
use crate::error::{Result, SgError};
use crate::geometry::Point;
use crate::lightcone::LightconeProfile;
use crate::mc::{check_pair, mc_integrate, Estimate, QuadratureSpec, SampleFailure};
use crate::propagators::{hadamard_h, pauli_jordan};
use crate::quad::{integrate_with_breaks, Tolerance};
use crate::vertex::VertexMonomial;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Reference state determined by `ψ`, `r` and `ħ`.
#[derive(Debug, Clone)]
pub struct SchubertState {
    psi: TestDensity,
    profile: LightconeProfile,
    r: f64,
    hbar: f64,
    c_psi: f64,
}

/// 2×2 dominance matrix `[[⟨f,Hf⟩, ½⟨f,Δg⟩], [½⟨f,Δg⟩, ⟨g,Hg⟩]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceMatrix {
    pub entries: [[Estimate; 2]; 2],
    pub min_eigenvalue: f64,
    pub min_eigenvalue_err: f64,
    pub max_eigenvalue: f64,
}

/// Comparison of the state's two-point function with its test-function form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPointCheck {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub defect: f64,
}

/// Value of `∫ χ_λ Δψ` with the status of the support hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargeLemmaResult {
    pub value: f64,
    pub err: f64,
    /// Whether the spatial profile equals 1 wherever the lemma needs it.
    pub hypothesis_holds: bool,
}

impl SchubertState {
    pub fn new(psi: TestDensity, r: f64, hbar: f64) -> Result<Self> {
        check_normalized(&psi, 1e-6)?;
        if r <= 0.0 || hbar <= 0.0 {
            return Err(SgError::ConfigInvalid(format!("r = {r} and hbar = {hbar} must be positive")));
        }
        let profile = LightconeProfile::new(&psi)?;
        let c_psi = profile.pair_hadamard(&profile)?;
        Ok(SchubertState { psi, profile, r, hbar, c_psi })
    }

    pub fn psi(&self) -> &TestDensity {
        &self.psi
    }

    pub fn profile(&self) -> &LightconeProfile {
        &self.profile
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// `⟨ψ, H₁ψ⟩`.
    pub fn c_psi(&self) -> f64 {
        self.c_psi
    }

    /// `(H₁ψ)(p)`.
    pub fn h1_psi(&self, p: Point) -> f64 {
        self.profile.hadamard(p)
    }

    /// `(Δψ)(p)`.
    pub fn delta_psi(&self, p: Point) -> f64 {
        self.profile.pauli_jordan(p)
    }

    /// Smooth part `K(p, q) = H(p, q) - H₁(p, q)`.
    pub fn smooth_part(&self, p: Point, q: Point) -> f64 {
        let r2 = self.r * self.r;
        -self.h1_psi(p) - self.h1_psi(q) + self.c_psi + self.delta_psi(p) * self.delta_psi(q) / (2.0 * r2) + 0.5 * r2
    }

    /// Symmetric two-point function `H(p, q)`.
    pub fn schubert_h(&self, p: Point, q: Point) -> Result<f64> {
        let h = hadamard_h(p, q, 1.0);
        if !h.regular {
            return Err(SgError::SingularPoint(format!("{p:?} {q:?}")));
        }
        Ok(h.value.re + self.smooth_part(p, q))
    }

    /// `Σ_{ij} a_i a_j K(x_i, x_j)` in O(n) from the rank structure of `K`.
    pub fn smooth_quadratic_form(&self, charges: &[f64], points: &[Point]) -> f64 {
        let (mut a, mut b, mut d) = (0.0, 0.0, 0.0);
        for (&q, &p) in charges.iter().zip(points) {
            a += q;
            b += q * self.h1_psi(p);
            d += q * self.delta_psi(p);
        }
        self.quadratic_form_from_moments(a, b, d)
    }

    /// `Σ a_i a_j K_ij` from `A = Σa`, `B = Σ a H₁ψ(x)`, `D = Σ a Δψ(x)`.
    pub fn quadratic_form_from_moments(&self, a: f64, b: f64, d: f64) -> f64 {
        let r2 = self.r * self.r;
        -2.0 * a * b + a * a * self.c_psi + d * d / (2.0 * r2) + 0.5 * r2 * a * a
    }

    /// `ω(:exp(iΣ a_j Φ(x_j)):) = exp(-(ħ/2) Σ a_i a_j K(x_i, x_j))`.
    pub fn vertex_expectation(&self, m: &VertexMonomial) -> Complex64 {
        Complex64::new((-0.5 * self.hbar * self.smooth_quadratic_form(&m.charges, &m.points)).exp(), 0.0)
    }

    /// `|ω(:exp(iΣ a_j Φ(x_j)):)|` for a neutral monomial, which is at most 1.
    pub fn dm_vertex_bound(&self, m: &VertexMonomial) -> Result<f64> {
        if !m.is_neutral() {
            return Err(SgError::NotNeutral { total: m.total_charge() });
        }
        Ok(self.vertex_expectation(m).norm())
    }

    fn projected(&self, f: &TestDensity) -> TestDensity {
        f.minus(f.total(), &self.psi)
    }

    /// `⟨f, H f⟩` by the marginal formula.
    pub fn h_form_deterministic(&self, f: &TestDensity) -> Result<f64> {
        let pf = LightconeProfile::new(f)?;
        let c = f.total();
        let h1 = pf.pair_hadamard(&pf)? - 2.0 * c * pf.pair_hadamard(&self.profile)? + c * c * self.c_psi;
        let d = pf.pair_pauli_jordan(&self.profile)?;
        let r2 = self.r * self.r;
        Ok(h1 + d * d / (2.0 * r2) + 0.5 * r2 * c * c)
    }

    fn h_form_monte_carlo(&self, f: &TestDensity, pf: &LightconeProfile, q: &QuadratureSpec) -> Result<Estimate> {
        let proj = self.projected(f);
        let kernel = |p: &[Point]| -> std::result::Result<Complex64, SampleFailure> {
            check_pair(p[0], p[1])?;
            Ok(Complex64::new(hadamard_h(p[0], p[1], 1.0).value.re, 0.0))
        };
        let est = mc_integrate(&kernel, &[&proj, &proj], q)?;
        let c = f.total();
        let d = pf.pair_pauli_jordan(&self.profile)?;
        let r2 = self.r * self.r;
        Ok(Estimate { value: est.value.re + d * d / (2.0 * r2) + 0.5 * r2 * c * c, err: est.err_re })
    }

    /// Dominance matrix of `f` and `g`; the diagonal is sampled, the
    /// off-diagonal commutator pairing is deterministic.
    pub fn dominance_matrix(&self, f: &TestDensity, g: &TestDensity, q: &QuadratureSpec) -> Result<DominanceMatrix> {
        let pf = LightconeProfile::new(f)?;
        let pg = LightconeProfile::new(g)?;
        let a = self.h_form_monte_carlo(f, &pf, q)?;
        let mut q2 = *q;
        q2.seed = q.seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let c = self.h_form_monte_carlo(g, &pg, &q2)?;
        let b = Estimate { value: 0.5 * pf.pair_pauli_jordan(&pg)?, err: 1e-10 };
        Ok(dominance_from_entries(a, b, c))
    }

    /// Builds narrow unit-mass bumps of half-width `w` at `p` and `q` and
    /// compares `⟨f, (H + iΔ/2) g⟩`, assembled from the test-function formula,
    /// with `H(p, q) + (i/2)Δ(p, q)`; both sides carry the factor `ħ`.
    pub fn dm_two_point_check(&self, p: Point, q: Point, w: f64) -> Result<TwoPointCheck> {
        let f = TestDensity::normalized_bump(p, w, w);
        let g = TestDensity::normalized_bump(q, w, w);
        let pf = LightconeProfile::new(&f)?;
        let pg = LightconeProfile::new(&g)?;
        let (fi, gi) = (f.total(), g.total());
        let fh_psi = pf.pair_hadamard(&self.profile)?;
        let gh_psi = pg.pair_hadamard(&self.profile)?;
        let pf_h1_pg = pf.pair_hadamard(&pg)? - gi * fh_psi - fi * gh_psi + fi * gi * self.c_psi;
        let f_d_psi = pf.pair_pauli_jordan(&self.profile)?;
        let g_d_psi = pg.pair_pauli_jordan(&self.profile)?;
        let psi_d_psi = self.profile.pair_pauli_jordan(&self.profile)?;
        let pf_d_pg = pf.pair_pauli_jordan(&pg)? - gi * f_d_psi + fi * g_d_psi + fi * gi * psi_d_psi;
        let r2 = self.r * self.r;
        let i = Complex64::new(0.0, 1.0);
        let lhs = (Complex64::new(pf_h1_pg, 0.0) + i * 0.5 * pf_d_pg + 0.5 * r2 * fi * gi - i * 0.5 * fi * g_d_psi
            + i * 0.5 * f_d_psi * gi
            + f_d_psi * g_d_psi / (2.0 * r2))
            * self.hbar;
        let rhs = (Complex64::new(self.schubert_h(p, q)?, 0.0) + i * 0.5 * pauli_jordan(p, q)) * self.hbar;
        Ok(TwoPointCheck { lhs, rhs, defect: (lhs - rhs).norm() })
    }

    /// `∫ χ_λ Δψ`, equal to `-1` whenever the support hypothesis holds.
    pub fn charge_lemma_integral(&self, probe: &ChargeProbe) -> Result<ChargeLemmaResult> {
        let chi = probe.density();
        // ∫ χ Δψ = -∫ ψ Δχ = ½ Σ_{u,v} ∫ ρ^ψ M^χ, since ∫χ = 0.
        let u = self.profile.u_table().pair(|s| chi.cumulative_u(s), &[])?;
        let v = self.profile.v_table().pair(|s| chi.cumulative_v(s), &[])?;
        let value = 0.5 * (u + v);
        // Independent evaluation with the exact marginals of ψ.
        let tol = Tolerance::new(1e-13, 1e-11);
        let (u0, u1) = self.profile.u_table().range();
        let (v0, v1) = self.profile.v_table().range();
        let brk = |a: f64, b: f64| (1..8).map(|i| a + (b - a) * i as f64 / 8.0).collect::<Vec<_>>();
        let du = integrate_with_breaks(|s| self.psi.marginal_u(s) * chi.cumulative_u(s), u0, u1, &brk(u0, u1), tol)?;
        let dv = integrate_with_breaks(|s| self.psi.marginal_v(s) * chi.cumulative_v(s), v0, v1, &brk(v0, v1), tol)?;
        let direct = 0.5 * (du.value + dv.value);
        let err = (value - direct).abs() + 0.5 * (du.error + dv.error);
        let b = self.psi.support();
        let reach = b.corners().iter().map(|c| c.t.abs() + c.x.abs()).fold(0.0, f64::max);
        let (t0, t1) = probe.time_profile.support();
        let lam = probe.lambda;
        let hypothesis_holds = lam * t0.abs().max(t1.abs()) + lam * lam * reach <= probe.plateau_half_length();
        Ok(ChargeLemmaResult { value, err, hypothesis_holds })
    }

    /// `⟨ψ', Δψ⟩` for another unit-mass density `ψ'`.
    pub fn intertwiner_overlap(&self, other: &TestDensity) -> Result<f64> {
        check_normalized(other, 1e-6)?;
        LightconeProfile::new(other)?.pair_pauli_jordan(&self.profile)
    }
}

/// `λ² ∫ |p| |χ̂⁰(λp)|² |χ̂¹(p)|² dp`, the Fock-space norm of the probe.
pub fn charge_fock_norm(probe: &ChargeProbe) -> Result<f64> {
    let lam = probe.lambda;
    if lam == 0.0 {
        return Ok(0.0);
    }
    let f = |p: f64| {
        let a = probe.time_profile.fourier_fast(lam * p).norm_sqr();
        let b = probe.space_profile.fourier_fast(p).norm_sqr();
        p * a * b
    };
    let tol = Tolerance::new(1e-14, 1e-10);
    let mut total = 0.0;
    let mut lo = 0.0;
    let mut hi = 8.0;
    loop {
        let breaks: Vec<f64> = (1..64).map(|i| lo + (hi - lo) * i as f64 / 64.0).collect();
        let piece = integrate_with_breaks(f, lo, hi, &breaks, tol)?.value;
        total += piece;
        if piece.abs() <= 1e-13 * total.abs() || hi > 1e5 {
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    Ok(2.0 * lam * lam * total)
}

/// Dominance matrix from sampled entries, with first-order error propagation
/// to the smallest eigenvalue.
pub fn dominance_from_entries(a: Estimate, b: Estimate, c: Estimate) -> DominanceMatrix {
    let mean = 0.5 * (a.value + c.value);
    let half = 0.5 * (a.value - c.value);
    let rad = (half * half + b.value * b.value).sqrt();
    let (da, dc, db) = if rad > 0.0 {
        (0.5 - half / (2.0 * rad), 0.5 + half / (2.0 * rad), -b.value / rad)
    } else {
        (0.5, 0.5, 0.0)
    };
    let err = ((da * a.err).powi(2) + (dc * c.err).powi(2) + (db * b.err).powi(2)).sqrt();
    DominanceMatrix {
        entries: [[a, b], [b, c]],
        min_eigenvalue: mean - rad,
        min_eigenvalue_err: err,
        max_eigenvalue: mean + rad,
    }
}
