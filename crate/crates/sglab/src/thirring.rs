//! Dual-field vertex exponentials `:e^{i(αΦ + βΦ̃)}:` and the Thirring fields
//! built from them, in units with `ħ = 1` and mass scale `μ = 1`.
//!
//! Dual pairs are evaluated on lightcone configurations `φ = φ_L(u) + φ_R(v)`,
//! `φ̃ = φ_L(u) − φ_R(v)`, on which `∂_u φ̃ = ∂_u φ` and `∂_v φ̃ = −∂_v φ` hold
//! identically.

use crate::error::{Result, SgError};
use crate::geometry::{lightcone, Point};
use crate::mc::NULL_REJECTION;
use crate::propagators::{dual_exchange_kernel, pauli_jordan};
use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Normal-ordered product `prefactor · :exp(i Σ (α_j Φ(x_j) + β_j Φ̃(x_j))):`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualVertexWord {
    /// `(α, β, x)` for each factor.
    pub terms: Vec<(f64, f64, Point)>,
    pub prefactor: Complex64,
}

impl DualVertexWord {
    pub fn single(alpha: f64, beta: f64, x: Point) -> Self {
        DualVertexWord { terms: vec![(alpha, beta, x)], prefactor: Complex64::new(1.0, 0.0) }
    }

    pub fn adjoint(&self) -> Self {
        DualVertexWord {
            terms: self.terms.iter().map(|&(a, b, x)| (-a, -b, x)).collect(),
            prefactor: self.prefactor.conj(),
        }
    }

    /// Lorentz weights `α_j β_j / 2π` of the factors.
    pub fn lorentz_exponents(&self) -> Vec<f64> {
        self.terms.iter().map(|&(a, b, _)| a * b / (2.0 * PI)).collect()
    }

    /// Value of the word on a configuration.
    pub fn evaluate(&self, config: &LightconeConfiguration) -> Complex64 {
        let phase: f64 = self.terms.iter().map(|&(a, b, x)| a * config.phi(x) + b * config.phi_dual(x)).sum();
        self.prefactor * Complex64::from_polar(1.0, phase)
    }
}

/// `(iu + 0)^e = |u|^e e^{iπ e sgn(u)/2}`.
fn i_power(u: f64, e: f64) -> Complex64 {
    Complex64::from_polar(u.abs().powf(e), 0.5 * PI * e * u.signum())
}

/// c-number of `:e^{i(αΦ+βΦ̃)(x)}: ⋆ :e^{i(α′Φ+β′Φ̃)(y)}:` relative to the merged word:
/// `(iu+0)^{(α+β)(α′+β′)/4π} (iv+0)^{(α−β)(α′−β′)/4π} e^{i(αβ′−α′β)/4}` with `(u, v)` of `x − y`.
pub fn dual_pair_kernel(a: (f64, f64), x: Point, b: (f64, f64), y: Point) -> Result<Complex64> {
    let (u, v) = lightcone(x, y);
    if u.abs() < NULL_REJECTION || v.abs() < NULL_REJECTION {
        return Err(SgError::SingularConfiguration(format!("pair {x:?}, {y:?} on a light ray")));
    }
    let (al, be) = a;
    let (al2, be2) = b;
    let e1 = (al + be) * (al2 + be2) / (4.0 * PI);
    let e2 = (al - be) * (al2 - be2) / (4.0 * PI);
    Ok(i_power(u, e1) * i_power(v, e2) * Complex64::from_polar(1.0, 0.25 * (al * be2 - al2 * be)))
}

/// `w1 ⋆ w2 = kernel · merged`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualStarProduct {
    pub merged: DualVertexWord,
    pub kernel: Complex64,
}

pub fn dual_star_kernel(w1: &DualVertexWord, w2: &DualVertexWord) -> Result<DualStarProduct> {
    let mut kernel = Complex64::new(1.0, 0.0);
    for &(a, b, x) in &w1.terms {
        for &(a2, b2, y) in &w2.terms {
            kernel *= dual_pair_kernel((a, b), x, (a2, b2), y)?;
        }
    }
    let mut terms = w1.terms.clone();
    terms.extend_from_slice(&w2.terms);
    Ok(DualStarProduct { merged: DualVertexWord { terms, prefactor: w1.prefactor * w2.prefactor }, kernel })
}

/// Factor `c` in `A(x) ⋆ B(y) = c · B(y) ⋆ A(x)` for `A = :e^{i(αΦ+βΦ̃)}:` and
/// `B = :e^{i(α′Φ+β′Φ̃)}:`:
/// `exp(−i(αα′+ββ′)Δ(x,y) − i(αβ′+α′β)Δ̃(x,y) + iαβ′)` with `Δ̃` the dual exchange kernel.
pub fn exchange_phase(alpha: f64, beta: f64, alpha2: f64, beta2: f64, x: Point, y: Point) -> Complex64 {
    let d = pauli_jordan(x, y);
    let dt = dual_exchange_kernel(x, y);
    Complex64::from_polar(1.0, -(alpha * alpha2 + beta * beta2) * d - (alpha * beta2 + alpha2 * beta) * dt + alpha * beta2)
}

/// The four fermionic fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FermionKind {
    PsiPlus,
    PsiMinus,
    PsiPlusStar,
    PsiMinusStar,
}

impl FermionKind {
    pub const ALL: [FermionKind; 4] =
        [FermionKind::PsiPlus, FermionKind::PsiMinus, FermionKind::PsiPlusStar, FermionKind::PsiMinusStar];
}

/// `ψ₊ = −i(2π)^{-1/2} :e^{i(αΦ + (π/α)Φ̃)}:`, `ψ₋ = (2π)^{-1/2} :e^{i(−αΦ + (π/α)Φ̃)}:`
/// and their adjoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FermionField {
    pub kind: FermionKind,
    pub alpha: f64,
}

impl FermionField {
    pub fn new(kind: FermionKind, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(SgError::ConfigInvalid(format!("α = {alpha} must be positive")));
        }
        Ok(FermionField { kind, alpha })
    }

    /// `(α, β)` charges of the dual exponential.
    pub fn charges(&self) -> (f64, f64) {
        let (a, b) = (self.alpha, PI / self.alpha);
        match self.kind {
            FermionKind::PsiPlus => (a, b),
            FermionKind::PsiMinus => (-a, b),
            FermionKind::PsiPlusStar => (-a, -b),
            FermionKind::PsiMinusStar => (a, -b),
        }
    }

    pub fn prefactor(&self) -> Complex64 {
        let c = (2.0 * PI).powf(-0.5);
        match self.kind {
            FermionKind::PsiPlus => Complex64::new(0.0, -c),
            FermionKind::PsiPlusStar => Complex64::new(0.0, c),
            FermionKind::PsiMinus | FermionKind::PsiMinusStar => Complex64::new(c, 0.0),
        }
    }

    pub fn word(&self, x: Point) -> DualVertexWord {
        let (a, b) = self.charges();
        DualVertexWord { terms: vec![(a, b, x)], prefactor: self.prefactor() }
    }
}

/// c-number of `field1(x) ⋆ field2(y)`, prefactors included.
pub fn fermion_pair_kernel(kind1: FermionKind, kind2: FermionKind, alpha: f64, x: Point, y: Point) -> Result<Complex64> {
    let f1 = FermionField::new(kind1, alpha)?;
    let f2 = FermionField::new(kind2, alpha)?;
    Ok(f1.prefactor() * f2.prefactor() * dual_pair_kernel(f1.charges(), x, f2.charges(), y)?)
}

/// `d(α) = (α − π/α)² / 4π`.
pub fn anomalous_dimension(alpha: f64) -> f64 {
    (alpha - PI / alpha).powi(2) / (4.0 * PI)
}

/// Exponent `α²/4π − π/4α²` of the mixed products `ψ₊* ⋆ ψ₋`.
pub fn mass_exponent(alpha: f64) -> f64 {
    alpha * alpha / (4.0 * PI) - PI / (4.0 * alpha * alpha)
}

/// `g = π²/α² − π`.
pub fn coupling_constant(alpha: f64) -> f64 {
    PI * PI / (alpha * alpha) - PI
}

/// Coefficient `α − π/α` in `∂_v ψ₊ = i(α − π/α)(∂_v Φ) ψ₊`.
pub fn eom_coefficient(alpha: f64) -> f64 {
    alpha - PI / alpha
}

/// Magnitude `α/2π + 1/2α` of the current coefficients.
pub fn current_coefficient(alpha: f64) -> f64 {
    alpha / (2.0 * PI) + 1.0 / (2.0 * alpha)
}

/// `Π_j e^{α_j β_j θ / 2π}`.
pub fn lorentz_weight(word: &DualVertexWord, theta: f64) -> f64 {
    word.lorentz_exponents().iter().map(|w| (w * theta).exp()).product()
}

/// `γ⁰` and `γ¹` of the two-component field `(ψ₊, ψ₋)`.
pub fn gamma_matrices() -> (Matrix2<f64>, Matrix2<f64>) {
    (Matrix2::new(0.0, 1.0, 1.0, 0.0), Matrix2::new(0.0, -1.0, 1.0, 0.0))
}

/// Smooth chiral profile `A sin(k s + φ₀)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wave {
    pub amplitude: f64,
    pub wavenumber: f64,
    pub phase: f64,
}

impl Wave {
    pub const ZERO: Wave = Wave { amplitude: 0.0, wavenumber: 0.0, phase: 0.0 };

    pub fn value(&self, s: f64) -> f64 {
        self.amplitude * (self.wavenumber * s + self.phase).sin()
    }

    pub fn derivative(&self, s: f64) -> f64 {
        self.amplitude * self.wavenumber * (self.wavenumber * s + self.phase).cos()
    }
}

/// Field pair `(φ, φ̃)` generated from left- and right-moving data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LightconeConfiguration {
    pub left: Wave,
    pub right: Wave,
}

impl LightconeConfiguration {
    pub fn phi(&self, x: Point) -> f64 {
        self.left.value(x.u()) + self.right.value(x.v())
    }

    pub fn phi_dual(&self, x: Point) -> f64 {
        self.left.value(x.u()) - self.right.value(x.v())
    }

    pub fn d_u_phi(&self, x: Point) -> f64 {
        self.left.derivative(x.u())
    }

    pub fn d_v_phi(&self, x: Point) -> f64 {
        self.right.derivative(x.v())
    }

    pub fn d_u_phi_dual(&self, x: Point) -> f64 {
        self.left.derivative(x.u())
    }

    pub fn d_v_phi_dual(&self, x: Point) -> f64 {
        -self.right.derivative(x.v())
    }
}

/// `∂_v log ψ₊` on a configuration by central differences, which equals
/// `i(α − π/α) ∂_v φ`.
pub fn eom_from_configuration(alpha: f64, config: &LightconeConfiguration, x: Point, h: f64) -> Result<Complex64> {
    let f = FermionField::new(FermionKind::PsiPlus, alpha)?;
    // Shift along v only: (t, x) → (t ± h/2, x ∓ h/2) moves v by ±h.
    let plus = f.word(Point::new(x.t + 0.5 * h, x.x - 0.5 * h)).evaluate(config);
    let minus = f.word(Point::new(x.t - 0.5 * h, x.x + 0.5 * h)).evaluate(config);
    let centre = f.word(x).evaluate(config);
    Ok((plus - minus) / (2.0 * h * centre))
}

/// Lightlike direction along which the short-distance limit is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    U,
    V,
}

/// Spacelike ray `y = x + s (Δu, Δv)` in lightcone coordinates with geometric steps
/// `s_j = s₀ 2^{-j}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproachPath {
    pub x: Point,
    pub du: f64,
    pub dv: f64,
    pub s0: f64,
    pub steps: usize,
}

impl ApproachPath {
    pub fn new(x: Point, du: f64, dv: f64) -> Self {
        ApproachPath { x, du, dv, s0: 0.05, steps: 4 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.du * self.dv < 0.0) {
            return Err(SgError::ConfigInvalid(format!("approach direction ({}, {}) is not spacelike", self.du, self.dv)));
        }
        if self.steps < 2 || !(self.s0 > 0.0) {
            return Err(SgError::ConfigInvalid("need s0 > 0 and at least two steps".into()));
        }
        Ok(())
    }

    fn point(&self, s: f64) -> Point {
        let (du, dv) = (s * self.du, s * self.dv);
        Point::new(self.x.t + 0.5 * (du + dv), self.x.x + 0.5 * (du - dv))
    }

    fn steps(&self) -> Vec<f64> {
        (0..self.steps).map(|j| self.s0 * 0.5f64.powi(j as i32)).collect()
    }
}

/// Extrapolated short-distance coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpeResult {
    /// Closed-form magnitude it is compared with.
    pub target: f64,
    /// Extrapolated signed coefficient.
    pub value: Complex64,
    /// `|value.re − sgn · target| / target` with the sign of the extracted value.
    pub rel_err: f64,
    /// Difference of the last two Richardson columns.
    pub residual: f64,
    /// `(s, coefficient at step s)`.
    pub trace: Vec<(f64, Complex64)>,
}

/// Richardson extrapolation for steps halved each time, assuming an expansion
/// in integer powers of `s`. Returns the final estimate and the difference to
/// the previous column.
pub fn richardson(values: &[Complex64]) -> (Complex64, f64) {
    let n = values.len();
    let mut table = vec![values.to_vec()];
    for k in 1..n {
        let prev = &table[k - 1];
        let f = 2f64.powi(k as i32);
        let col: Vec<Complex64> = (1..prev.len()).map(|j| (prev[j] * f - prev[j - 1]) / (f - 1.0)).collect();
        table.push(col);
    }
    let best = table[n - 1][0];
    let prev = *table[n - 2].last().unwrap();
    (best, (best - prev).norm())
}

fn finish(target: f64, trace: Vec<(f64, Complex64)>) -> Result<OpeResult> {
    let values: Vec<Complex64> = trace.iter().map(|t| t.1).collect();
    let (value, residual) = richardson(&values);
    if residual > 0.05 * target.abs() {
        return Err(SgError::ExtrapolationUnstable { residual });
    }
    let rel_err = (value.re.abs() - target).abs() / target;
    Ok(OpeResult { target, value, rel_err, residual, trace })
}

/// Coefficient of `∂_u Φ` in `N(ψ₊*ψ₊)` (direction `U`) or of `∂_v Φ` in
/// `N(ψ₋*ψ₋)` (direction `V`): the limit of
/// `|uv|^{d(α)} ψ*(x) ⋆ ψ(y) − (2π)^{-1}(i w)^{-1}`, `w = u` or `v`, divided by
/// the derivative, on a configuration that only moves in the chosen direction.
pub fn ope_coefficient_current(alpha: f64, direction: Direction, path: &ApproachPath) -> Result<OpeResult> {
    path.validate()?;
    let (adj, field) = match direction {
        Direction::U => (FermionKind::PsiPlusStar, FermionKind::PsiPlus),
        Direction::V => (FermionKind::PsiMinusStar, FermionKind::PsiMinus),
    };
    let wave = Wave { amplitude: 0.7, wavenumber: 1.3, phase: 0.4 };
    let config = match direction {
        Direction::U => LightconeConfiguration { left: wave, right: Wave::ZERO },
        Direction::V => LightconeConfiguration { left: Wave::ZERO, right: wave },
    };
    let x = path.x;
    let deriv = match direction {
        Direction::U => config.d_u_phi(x),
        Direction::V => config.d_v_phi(x),
    };
    let d = anomalous_dimension(alpha);
    let fa = FermionField::new(adj, alpha)?;
    let fb = FermionField::new(field, alpha)?;
    let mut trace = Vec::new();
    for s in path.steps() {
        let y = path.point(s);
        let (u, v) = lightcone(x, y);
        let kernel = fermion_pair_kernel(adj, field, alpha, x, y)?;
        let (a1, b1) = fa.charges();
        let (a2, b2) = fb.charges();
        let phase = a1 * config.phi(x) + b1 * config.phi_dual(x) + a2 * config.phi(y) + b2 * config.phi_dual(y);
        let product = (u * v).abs().powf(d) * kernel * Complex64::from_polar(1.0, phase);
        let w = match direction {
            Direction::U => u,
            Direction::V => v,
        };
        let singular = Complex64::new(0.0, w).inv() / (2.0 * PI);
        trace.push((s, (product - singular) / deriv));
    }
    finish(current_coefficient(alpha), trace)
}

/// Prefactor `P` in `lim |uv|^{-e} ψ₊*(x) ⋆ ψ₋(y) = P e^{−2iαΦ(x)}`, `e` the mass exponent.
pub fn ope_coefficient_mass(alpha: f64, path: &ApproachPath) -> Result<OpeResult> {
    path.validate()?;
    let config = LightconeConfiguration {
        left: Wave { amplitude: 0.6, wavenumber: 1.1, phase: 0.3 },
        right: Wave { amplitude: 0.4, wavenumber: 0.7, phase: -0.2 },
    };
    let x = path.x;
    let e = mass_exponent(alpha);
    let fa = FermionField::new(FermionKind::PsiPlusStar, alpha)?;
    let fb = FermionField::new(FermionKind::PsiMinus, alpha)?;
    let reference = Complex64::from_polar(1.0, -2.0 * alpha * config.phi(x));
    let mut trace = Vec::new();
    for s in path.steps() {
        let y = path.point(s);
        let (u, v) = lightcone(x, y);
        let kernel = fermion_pair_kernel(fa.kind, fb.kind, alpha, x, y)?;
        let (a1, b1) = fa.charges();
        let (a2, b2) = fb.charges();
        let phase = a1 * config.phi(x) + b1 * config.phi_dual(x) + a2 * config.phi(y) + b2 * config.phi_dual(y);
        let value = (u * v).abs().powf(-e) * kernel * Complex64::from_polar(1.0, phase) / reference;
        trace.push((s, value));
    }
    finish(1.0 / (2.0 * PI), trace)
}

/// `π(N(ψ₋*ψ₊) + N(ψ₊*ψ₋)) − cos(βφ)` at `x`, using the closed-form limits
/// `N(ψ∓*ψ±) = (2π)^{-1} e^{±2iαφ}`.
pub fn mass_term_defect(alpha: f64, beta: f64, config: &LightconeConfiguration, x: Point) -> f64 {
    let phi = config.phi(x);
    let n = (Complex64::from_polar(1.0, 2.0 * alpha * phi) + Complex64::from_polar(1.0, -2.0 * alpha * phi)) / (2.0 * PI);
    (PI * n - Complex64::new((beta * phi).cos(), 0.0)).norm()
}

/// `(1/π) ε / (u² + ε²)`: the regularized kernel of `{ψ₊*(x), ψ₊(y)}` at `α = √π`,
/// the sum of `(2π)^{-1}(iu+ε)^{-1}` and `(2π)^{-1}(−iu+ε)^{-1}`.
pub fn anticommutator_kernel(u: f64, eps: f64) -> f64 {
    eps / (PI * (u * u + eps * eps))
}

/// `∫ f(u) (1/π) ε/(u²+ε²) du`, tending to `f(0)` as `ε → 0`.
pub fn anticommutator_smeared(f: &crate::densities::Density1D, eps: f64) -> Result<f64> {
    let (lo, hi) = f.support();
    let mut breaks = f.quadrature_breaks();
    if lo < 0.0 && hi > 0.0 {
        breaks.extend([-eps, 0.0, eps]);
    }
    Ok(crate::quad::integrate_with_breaks(
        |u| f.eval(u) * anticommutator_kernel(u, eps),
        lo,
        hi,
        &breaks,
        crate::quad::Tolerance::new(1e-13, 1e-11),
    )?
    .value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::Density1D;
    use crate::vertex::{star_kernel, VertexWord};
    use proptest::prelude::*;

    const SQRT_PI: f64 = 1.772_453_850_905_516;

    fn spacelike_pair() -> impl Strategy<Value = (Point, Point)> {
        (-5.0..5.0f64, -5.0..5.0f64, -0.95..0.95f64, 0.05..5.0f64, prop::bool::ANY).prop_map(|(t, x, r, d, flip)| {
            let dx = if flip { -d } else { d };
            (Point::new(t, x), Point::new(t + r * d, x + dx))
        })
    }

    fn generic_pair() -> impl Strategy<Value = (Point, Point)> {
        (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64)
            .prop_filter("off the light cone", |(t, x, s, y)| {
                let (u, v) = lightcone(Point::new(*t, *x), Point::new(*s, *y));
                u.abs() > 1e-3 && v.abs() > 1e-3
            })
            .prop_map(|(t, x, s, y)| (Point::new(t, x), Point::new(s, y)))
    }

    #[test]
    fn exponents_and_couplings() {
        assert!(anomalous_dimension(SQRT_PI).abs() < 1e-15);
        assert!(coupling_constant(SQRT_PI).abs() < 1e-14);
        assert!(eom_coefficient(SQRT_PI).abs() < 1e-15);
        assert!(mass_exponent(SQRT_PI).abs() < 1e-15);
        assert!((coupling_constant((PI / 2.0).sqrt()) - PI).abs() < 1e-13);
        assert!((anomalous_dimension(1.0) - (1.0 - PI).powi(2) / (4.0 * PI)).abs() < 1e-15);
        assert!(coupling_constant(1.0) > 0.0 && coupling_constant(2.0) < 0.0);
        for a in [0.5, 1.0, 2.3] {
            assert!((anomalous_dimension(a) - anomalous_dimension(PI / a)).abs() < 1e-14);
            assert!((current_coefficient(a) - current_coefficient(PI / a)).abs() < 1e-14);
            // The equations of motion carry the coupling with the opposite sign.
            assert!((eom_coefficient(a) + coupling_constant(a) * a / PI).abs() < 1e-13);
        }
        assert!((current_coefficient(SQRT_PI) - 1.0 / SQRT_PI).abs() < 1e-15);
    }

    #[test]
    fn gamma_algebra() {
        let (g0, g1) = gamma_matrices();
        assert_eq!(g0 * g0, Matrix2::identity());
        assert_eq!(g1 * g1, -Matrix2::identity());
        assert_eq!(g0 * g1 + g1 * g0, Matrix2::zeros());
    }

    #[test]
    fn lorentz_weights() {
        let x = Point::new(0.3, 0.1);
        for a in [0.7, SQRT_PI, 2.0] {
            let p = FermionField::new(FermionKind::PsiPlus, a).unwrap().word(x);
            let m = FermionField::new(FermionKind::PsiMinus, a).unwrap().word(x);
            assert!((lorentz_weight(&p, 0.8) - 0.4f64.exp()).abs() < 1e-14);
            assert!((lorentz_weight(&m, 0.8) - (-0.4f64).exp()).abs() < 1e-14);
            assert_eq!(lorentz_weight(&p, 0.0), 1.0);
        }
        assert_eq!(lorentz_weight(&DualVertexWord::single(1.3, 0.0, x), 2.0), 1.0);
    }

    #[test]
    fn field_definitions() {
        let f = FermionField::new(FermionKind::PsiPlus, 1.2).unwrap();
        let adj = FermionField::new(FermionKind::PsiPlusStar, 1.2).unwrap();
        let w = f.word(Point::new(0.0, 0.0));
        assert_eq!(w.adjoint(), adj.word(Point::new(0.0, 0.0)));
        assert!(FermionField::new(FermionKind::PsiMinus, -1.0).is_err());
    }

    #[test]
    fn free_fermion_pair_kernel() {
        let x = Point::new(0.1, 0.0);
        let y = Point::new(-0.2, 0.9);
        let (u, _) = lightcone(x, y);
        let k = fermion_pair_kernel(FermionKind::PsiPlusStar, FermionKind::PsiPlus, SQRT_PI, x, y).unwrap();
        let expect = Complex64::new(0.0, u).inv() / (2.0 * PI);
        assert!((k - expect).norm() < 1e-14);
        // Generic α: (2π)^{-1} (iu)^{-1} |uv|^{-d} at spacelike separation.
        let a = 1.0;
        let (u, v) = lightcone(x, y);
        let k = fermion_pair_kernel(FermionKind::PsiPlusStar, FermionKind::PsiPlus, a, x, y).unwrap();
        let expect = Complex64::new(0.0, u).inv() * (u * v).abs().powf(-anomalous_dimension(a)) / (2.0 * PI);
        assert!((k - expect).norm() < 1e-13);
    }

    #[test]
    fn exchange_phase_cases() {
        let x = Point::new(0.0, 0.0);
        let y = Point::new(0.2, 1.0);
        assert!((exchange_phase(0.8, 0.0, 1.1, 0.0, x, y) - 1.0).norm() < 1e-15);
        // Timelike scalar charges a, −a: e^{ia²Δ}.
        let z = Point::new(2.0, 0.3);
        let a = 1.3;
        let p = exchange_phase(a, 0.0, -a, 0.0, z, x);
        assert!((p - Complex64::from_polar(1.0, a * a * pauli_jordan(z, x))).norm() < 1e-15);
        assert!((p - 1.0).norm() > 0.1);
        assert!(matches!(
            dual_star_kernel(&DualVertexWord::single(1.0, 0.0, x), &DualVertexWord::single(1.0, 0.0, Point::new(1.0, 1.0))),
            Err(SgError::SingularConfiguration(_))
        ));
    }

    #[test]
    fn current_ope_coefficients() {
        for a in [1.0, SQRT_PI, 2.0] {
            let path = ApproachPath::new(Point::new(0.2, -0.1), 1.0, -0.6);
            let up = ope_coefficient_current(a, Direction::U, &path).unwrap();
            let down = ope_coefficient_current(a, Direction::V, &path).unwrap();
            assert!(up.rel_err < 1e-6 && down.rel_err < 1e-6, "{up:?} {down:?}");
            assert!(up.value.re < 0.0 && down.value.re > 0.0);
            assert!(up.value.im.abs() < 1e-6 && down.value.im.abs() < 1e-6);
        }
        assert!(ope_coefficient_current(1.0, Direction::U, &ApproachPath::new(Point::new(0.0, 0.0), 1.0, 1.0)).is_err());
    }

    #[test]
    fn mass_ope_prefactor() {
        for a in [1.0, SQRT_PI, 2.5] {
            let path = ApproachPath::new(Point::new(-0.3, 0.4), -0.5, 1.0);
            let r = ope_coefficient_mass(a, &path).unwrap();
            assert!(r.rel_err < 1e-6 && r.value.im.abs() < 1e-6, "{r:?}");
        }
        let c = LightconeConfiguration {
            left: Wave { amplitude: 0.6, wavenumber: 1.1, phase: 0.3 },
            right: Wave { amplitude: 0.4, wavenumber: 0.7, phase: -0.2 },
        };
        let x = Point::new(0.5, 0.2);
        assert!(mass_term_defect(1.1, 2.2, &c, x) < 1e-14);
        assert!(mass_term_defect(1.1, 2.0, &c, x) > 1e-3);
    }

    #[test]
    fn richardson_removes_polynomial_terms() {
        let vals: Vec<Complex64> =
            (0..4).map(|j| 0.5f64.powi(j)).map(|s| Complex64::new(2.0 + 3.0 * s - s * s + 0.5 * s * s * s, 0.0)).collect();
        let (v, _) = richardson(&vals);
        assert!((v.re - 2.0).abs() < 1e-12);
    }

    #[test]
    fn equations_of_motion_on_configurations() {
        let c = LightconeConfiguration {
            left: Wave { amplitude: 0.6, wavenumber: 1.1, phase: 0.3 },
            right: Wave { amplitude: 0.4, wavenumber: 0.7, phase: -0.2 },
        };
        let x = Point::new(0.1, 0.3);
        assert!((c.d_u_phi_dual(x) - c.d_u_phi(x)).abs() < 1e-15);
        assert!((c.d_v_phi_dual(x) + c.d_v_phi(x)).abs() < 1e-15);
        for a in [0.8, SQRT_PI, 2.0] {
            let num = eom_from_configuration(a, &c, x, 1e-4).unwrap();
            let expect = Complex64::new(0.0, eom_coefficient(a) * c.d_v_phi(x));
            assert!((num - expect).norm() < 1e-7, "{num} vs {expect}");
        }
    }

    #[test]
    fn anticommutator_concentrates_on_the_light_ray() {
        let across = Density1D::bump(0.1, 0.5, 1.0);
        let f0 = across.eval(0.0);
        let errs: Vec<f64> = [1e-2, 1e-3, 1e-4].iter().map(|&e| (anticommutator_smeared(&across, e).unwrap() - f0).abs()).collect();
        assert!(errs[2] < errs[1] && errs[1] < errs[0] && errs[2] < 1e-3, "{errs:?}");
        let off = Density1D::bump(1.0, 0.5, 1.0);
        let vals: Vec<f64> = [1e-2, 1e-3].iter().map(|&e| anticommutator_smeared(&off, e).unwrap()).collect();
        assert!(vals[1] < 0.2 * vals[0] && vals[1] < 1e-3);
    }

    proptest! {
        #[test]
        fn fermions_anticommute_at_spacelike_separation((x, y) in spacelike_pair(), a in 0.3..3.0f64) {
            for k1 in FermionKind::ALL {
                for k2 in FermionKind::ALL {
                    let (a1, b1) = FermionField::new(k1, a).unwrap().charges();
                    let (a2, b2) = FermionField::new(k2, a).unwrap().charges();
                    let p = exchange_phase(a1, b1, a2, b2, x, y);
                    prop_assert!((p + 1.0).norm() < 1e-12, "{k1:?} {k2:?} {p}");
                }
            }
        }

        #[test]
        fn exchange_phase_is_the_ratio_of_orderings(
            (x, y) in generic_pair(),
            a in -2.0..2.0f64, b in -2.0..2.0f64, a2 in -2.0..2.0f64, b2 in -2.0..2.0f64,
        ) {
            let xy = dual_pair_kernel((a, b), x, (a2, b2), y).unwrap();
            let yx = dual_pair_kernel((a2, b2), y, (a, b), x).unwrap();
            let p = exchange_phase(a, b, a2, b2, x, y);
            prop_assert!((xy / yx - p).norm() < 1e-9);
        }

        #[test]
        fn scalar_limit_matches_vertex_star_product((x, y) in generic_pair(), a in -2.0..2.0f64, b in -2.0..2.0f64) {
            let dual = dual_star_kernel(&DualVertexWord::single(a, 0.0, x), &DualVertexWord::single(b, 0.0, y)).unwrap();
            let scalar = star_kernel(&VertexWord::single(a, x), &VertexWord::single(b, y), 1.0).unwrap();
            prop_assert!((dual.kernel - scalar.kernel).norm() <= 1e-12 * scalar.kernel.norm().max(1.0));
        }

        #[test]
        fn pure_dual_kernel_is_symmetric_in_null_coordinates((x, y) in generic_pair(), b in -2.0..2.0f64) {
            let (u, v) = lightcone(x, y);
            let k = dual_pair_kernel((0.0, b), x, (0.0, b), y).unwrap();
            let e = b * b / (4.0 * PI);
            let expect = i_power(u, e) * i_power(v, e);
            prop_assert!((k - expect).norm() < 1e-12 * expect.norm().max(1.0));
            let swapped = i_power(v, e) * i_power(u, e);
            prop_assert!((k - swapped).norm() < 1e-12 * expect.norm().max(1.0));
        }
    }
}
