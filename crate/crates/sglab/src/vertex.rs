//! Normal-ordered vertex operators `:exp(i Σ a_j Φ(x_j)):` and the c-number
//! kernels produced by their star and time-ordered products.
//!
//! The star product of two words, with `x` taken from the left factor and `y`
//! from the right, carries for each cross pair the factor
//! `(-(x-y)² + i0·(x⁰-y⁰))^{ħab/4π} = exp(-ħ a b W(x, y))`.

use crate::densities::TestDensity;
use crate::error::{Result, SgError};
use crate::geometry::{minkowski_square, Point};
use crate::lightcone::LightconeProfile;
use crate::propagators::{feynman, EpsilonPrescription};
use crate::quad::{integrate_2d, Tolerance};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Charges at points, the argument of a vertex expectation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexMonomial {
    pub charges: Vec<f64>,
    pub points: Vec<Point>,
}

impl VertexMonomial {
    pub fn new(charges: Vec<f64>, points: Vec<Point>) -> Self {
        assert_eq!(charges.len(), points.len(), "one charge per point");
        VertexMonomial { charges, points }
    }

    pub fn total_charge(&self) -> f64 {
        self.charges.iter().sum()
    }

    pub fn is_neutral(&self) -> bool {
        self.total_charge().abs() <= 1e-12
    }
}

/// `prefactor · :exp(i Σ a_j Φ(x_j)):`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexWord {
    pub terms: Vec<(f64, Point)>,
    pub prefactor: Complex64,
}

impl VertexWord {
    pub fn single(a: f64, x: Point) -> Self {
        VertexWord { terms: vec![(a, x)], prefactor: Complex64::new(1.0, 0.0) }
    }

    /// Involution: charges negated, prefactor conjugated.
    pub fn adjoint(&self) -> Self {
        VertexWord { terms: self.terms.iter().map(|&(a, x)| (-a, x)).collect(), prefactor: self.prefactor.conj() }
    }

    /// Combines terms at coincident points.
    pub fn merged(&self) -> Self {
        let mut out: Vec<(f64, Point)> = Vec::new();
        for &(a, x) in &self.terms {
            match out.iter_mut().find(|(_, y)| *y == x) {
                Some(e) => e.0 += a,
                None => out.push((a, x)),
            }
        }
        VertexWord { terms: out, prefactor: self.prefactor }
    }

    pub fn monomial(&self) -> VertexMonomial {
        VertexMonomial {
            charges: self.terms.iter().map(|t| t.0).collect(),
            points: self.terms.iter().map(|t| t.1).collect(),
        }
    }
}

/// One factor of a pair kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairFactor {
    pub left: usize,
    pub right: usize,
    pub exponent: f64,
    pub ln_abs_q: f64,
    pub prescription: EpsilonPrescription,
}

impl PairFactor {
    pub fn value(&self) -> Complex64 {
        (self.prescription.log(self.ln_abs_q) * self.exponent).exp()
    }
}

/// Product of pairwise powers `(-Q ± i0)^{ρ}` between two words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairKernel {
    pub factors: Vec<PairFactor>,
}

impl PairKernel {
    pub fn evaluate(&self) -> Complex64 {
        let log: Complex64 = self.factors.iter().map(|f| f.prescription.log(f.ln_abs_q) * f.exponent).sum();
        log.exp()
    }
}

/// Cross-pair kernel for the star product `w1 ⋆ w2`.
pub fn pair_kernel(w1: &VertexWord, w2: &VertexWord, hbar: f64) -> Result<PairKernel> {
    let mut factors = Vec::new();
    for (i, &(a, x)) in w1.terms.iter().enumerate() {
        for (j, &(b, y)) in w2.terms.iter().enumerate() {
            let exponent = hbar * a * b / (4.0 * PI);
            if exponent == 0.0 {
                continue;
            }
            let pr = EpsilonPrescription::wightman(x, y)
                .ok_or_else(|| SgError::SingularConfiguration(format!("{x:?} and {y:?} are lightlike")))?;
            factors.push(PairFactor {
                left: i,
                right: j,
                exponent,
                ln_abs_q: minkowski_square(x, y).abs().ln(),
                prescription: pr,
            });
        }
    }
    Ok(PairKernel { factors })
}

/// Result of a star product of two words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarProduct {
    pub merged: VertexWord,
    pub kernel: Complex64,
}

/// `w1 ⋆ w2 = kernel · merged`.
pub fn star_kernel(w1: &VertexWord, w2: &VertexWord, hbar: f64) -> Result<StarProduct> {
    let kernel = pair_kernel(w1, w2, hbar)?.evaluate();
    let mut terms = w1.terms.clone();
    terms.extend_from_slice(&w2.terms);
    let merged = VertexWord { terms, prefactor: w1.prefactor * w2.prefactor }.merged();
    Ok(StarProduct { merged, kernel })
}

/// Partial sums of the exponential series for a single-pair kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesCheck {
    pub partial_sums: Vec<Complex64>,
    pub closed_form: Complex64,
    pub defect: f64,
}

/// Sums `Σ_{n ≤ N} (ħab/4π · ln(-Q + i0·Δt))^n / n!` and compares with the
/// power computed in polar form.
pub fn series_vs_closed_form(w1: &VertexWord, w2: &VertexWord, n_max: usize, hbar: f64) -> Result<SeriesCheck> {
    if w1.terms.len() != 1 || w2.terms.len() != 1 {
        return Err(SgError::ConfigInvalid("series check takes single-term words".into()));
    }
    let (a, x) = w1.terms[0];
    let (b, y) = w2.terms[0];
    let rho = hbar * a * b / (4.0 * PI);
    let pr = EpsilonPrescription::wightman(x, y)
        .ok_or_else(|| SgError::SingularConfiguration(format!("{x:?} and {y:?} are lightlike")))?;
    let abs_q = minkowski_square(x, y).abs();
    let z = pr.log(abs_q.ln()) * rho;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut partial_sums = vec![sum];
    for n in 1..=n_max {
        term = term * z / n as f64;
        sum += term;
        partial_sums.push(sum);
    }
    let closed_form = Complex64::from_polar(abs_q.powf(rho), rho * pr.branch);
    Ok(SeriesCheck { defect: (sum - closed_form).norm(), partial_sums, closed_form })
}

/// `Π_{i<j} exp(-ħ a_i a_j Δ_F(x_i, x_j))`, the c-number of a time-ordered
/// product of single vertices.
pub fn tord_kernel(charges: &[f64], points: &[Point], hbar: f64) -> Result<Complex64> {
    let mut log = Complex64::new(0.0, 0.0);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let c = charges[i] * charges[j];
            if c == 0.0 {
                continue;
            }
            let f = feynman(points[i], points[j], 1.0, 0.0)
                .map_err(|_| SgError::SingularConfiguration(format!("{:?} and {:?} are lightlike", points[i], points[j])))?;
            log -= f.value * (hbar * c);
        }
    }
    Ok(log.exp())
}

/// `|t_n|²`-type kernel for the norm bound: products of `|Q|^{±ħ a_i a_j/4π}`
/// within and across the two point groups.
pub fn abs_square_kernel(charges: &[f64], xs: &[Point], ys: &[Point], hbar: f64) -> Result<f64> {
    let n = charges.len();
    let mut log = 0.0;
    let lnq = |p: Point, q: Point| -> Result<f64> {
        let a = minkowski_square(p, q).abs();
        if a == 0.0 {
            return Err(SgError::SingularConfiguration(format!("{p:?} and {q:?} are lightlike")));
        }
        Ok(a.ln())
    };
    for i in 0..n {
        for j in i + 1..n {
            let e = hbar * charges[i] * charges[j] / (4.0 * PI);
            log += e * (lnq(xs[i], xs[j])? + lnq(ys[i], ys[j])?);
        }
        for j in 0..n {
            let e = hbar * charges[i] * charges[j] / (4.0 * PI);
            log -= e * lnq(xs[i], ys[j])?;
        }
    }
    Ok(log.exp())
}

/// Time-ordered product of vertices with one linear exponential `:e^{iΦ(h)}:`,
/// expressed relative to the plain product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DressedFactor {
    pub factor: Complex64,
    /// `⟨h, Δ_D h⟩`.
    pub h_dirac_h: f64,
    pub h_dirac_h_err: f64,
    /// `(Δ_D h)(x_i)`.
    pub dirac_smeared: Vec<f64>,
}

/// `exp(-(iħ/2)⟨h, Δ_D h⟩) · Π exp(-iħ a_i (Δ_D h)(x_i))`.
pub fn dressed_tord_with_linear(h: &TestDensity, charges: &[f64], points: &[Point], hbar: f64) -> Result<DressedFactor> {
    let b = h.support();
    // ⟨h, Δ_D h⟩ = -½ ∫ h(x) (mass of h in the past cone of x) dx.
    let r = integrate_2d(
        |t, x| {
            let p = Point::new(t, x);
            let v = h.eval(p);
            if v == 0.0 {
                0.0
            } else {
                v * h.past_cone_mass(p)
            }
        },
        b.t0,
        b.t1,
        |_| (b.x0, b.x1),
        Tolerance::new(1e-10, 1e-9),
    )?;
    let hdh = -0.5 * r.value;
    let profile_free_dirac = |p: Point| -0.25 * (h.past_cone_mass(p) + h.future_cone_mass(p));
    let dirac_smeared: Vec<f64> = points.iter().map(|&p| profile_free_dirac(p)).collect();
    let phase = -0.5 * hbar * hdh - hbar * charges.iter().zip(&dirac_smeared).map(|(a, d)| a * d).sum::<f64>();
    Ok(DressedFactor {
        factor: Complex64::from_polar(1.0, phase),
        h_dirac_h: hdh,
        h_dirac_h_err: 0.5 * r.error,
        dirac_smeared,
    })
}

/// Smeared kernels of a linear source needed by mixed products.
#[derive(Debug, Clone)]
pub struct LinearSource {
    pub profile: LightconeProfile,
    /// `⟨h, H₁ h⟩`.
    pub h_hadamard_h: f64,
    /// `⟨h, Δ_D h⟩`.
    pub h_dirac_h: f64,
}

impl LinearSource {
    pub fn new(h: &TestDensity) -> Result<Self> {
        let profile = LightconeProfile::new(h)?;
        let h_hadamard_h = profile.pair_hadamard(&profile)?;
        let h_dirac_h = dressed_tord_with_linear(h, &[], &[], 1.0)?.h_dirac_h;
        Ok(LinearSource { profile, h_hadamard_h, h_dirac_h })
    }
}
