//! Local normality on a bounded interval: the symmetrized one-particle
//! products of the massive vacuum and of the massless reference state,
//! their comparison operators `A` and `B` on a bump basis, and the kernels
//! `A′`, `B′` whose square integrability makes `A − 1` and `B − 1` trace class.
//!
//! Fourier transforms are unitary, `ĥ(k) = (2π)^{-1/2} ∫ e^{-ikx} h(x) dx`.
//! Pairs of real functions integrate over the full line as
//! `½∫_ℝ = ∫_0^∞ Re(⋯)`.

use crate::densities::{bump_cosine_transform, Density1D};
use crate::error::{Result, SgError};
use crate::quad::{composite_gl, integrate, Tolerance};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Largest accepted condition number of a Gram matrix.
pub const MAX_CONDITION: f64 = 1e12;

/// Interval `I = [-ℓ/2, ℓ/2]` with mass, state parameter and auxiliary densities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalModel {
    pub length: f64,
    pub m: f64,
    pub r: f64,
    /// Normalized density defining the reference state, supported in `I`.
    pub psi: Density1D,
    /// Smooth cutoff equal to one on `I`.
    pub chi: Density1D,
}

impl IntervalModel {
    /// Defaults `ψ` = normalized bump of half-width `ℓ/4` and `χ` a plateau on
    /// `I` with ramps of width `ℓ/2`.
    pub fn new(length: f64, m: f64, r: f64) -> Result<Self> {
        Self::with_densities(
            length,
            m,
            r,
            Density1D::normalized_bump(0.0, 0.25 * length),
            Density1D::plateau(0.5 * length, 0.5 * length),
        )
    }

    pub fn with_densities(length: f64, m: f64, r: f64, psi: Density1D, chi: Density1D) -> Result<Self> {
        if !(length > 0.0 && m > 0.0 && r > 0.0) {
            return Err(SgError::ConfigInvalid(format!("need ℓ, m, r > 0, got {length}, {m}, {r}")));
        }
        let half = 0.5 * length;
        let (lo, hi) = psi.support();
        if lo < -half - 1e-12 || hi > half + 1e-12 {
            return Err(SgError::ConfigInvalid(format!("supp ψ = [{lo}, {hi}] not inside I")));
        }
        let mass = psi.integral()?.value;
        if (mass - 1.0).abs() > 1e-9 {
            return Err(SgError::PsiNotNormalized { integral: mass });
        }
        let grid: Vec<f64> = (0..=64).map(|i| -half + length * i as f64 / 64.0).collect();
        if grid.iter().any(|&x| (chi.eval(x) - 1.0).abs() > 1e-12) {
            return Err(SgError::ConfigInvalid("χ is not identically one on I".into()));
        }
        Ok(IntervalModel { length, m, r, psi, chi })
    }

    pub fn omega(&self, k: f64) -> f64 {
        k.hypot(self.m)
    }

    /// `∫ e^{-ikx} ψ(x) dx`, equal to one at `k = 0`.
    pub fn psi_hat_normalized(&self, k: f64) -> Complex64 {
        self.psi.fourier_fast(k) * (2.0 * PI).sqrt()
    }

    /// Unitary transform of `P_ψ h = h − ψ ∫h`.
    pub fn projected_hat(&self, h_hat: Complex64, h_mass: f64, k: f64) -> Complex64 {
        h_hat - self.psi.fourier_fast(k) * h_mass
    }
}

/// Gauss–Legendre nodes on `[0, k_max]`.
#[derive(Debug, Clone)]
struct MomentumGrid {
    k: Vec<f64>,
    w: Vec<f64>,
}

impl MomentumGrid {
    fn new(k_max: f64, panels: usize) -> Self {
        let (k, w) = composite_gl(0.0, k_max, panels, 8);
        MomentumGrid { k, w }
    }

    fn transforms(&self, d: &Density1D) -> Vec<Complex64> {
        self.k.iter().map(|&k| d.fourier_fast(k)).collect()
    }
}

/// Momentum cutoff and panel count for products of general densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumQuadrature {
    pub k_max: f64,
    pub panels: usize,
    /// Fail when the integrand on the last panel exceeds this fraction of the total.
    pub tail_tol: f64,
}

impl Default for MomentumQuadrature {
    fn default() -> Self {
        MomentumQuadrature { k_max: 2000.0, panels: 8000, tail_tol: 1e-9 }
    }
}

fn weighted_sum(grid: &MomentumGrid, q: &MomentumQuadrature, f: impl Fn(usize) -> f64) -> Result<f64> {
    let mut total = 0.0;
    let mut tail = 0.0;
    let n = grid.k.len();
    for i in 0..n {
        let v = grid.w[i] * f(i);
        total += v;
        if i + 8 >= n {
            tail += v.abs();
        }
    }
    if tail > q.tail_tol * total.abs().max(1e-300) && tail > 1e-300 {
        return Err(SgError::BudgetExceeded { requested: q.tail_tol, achieved: tail / total.abs().max(1e-300) });
    }
    Ok(total)
}

/// `⟨f, g⟩_{m,sym} = ½∫(ω⁻¹ conj f̂₁ ĝ₁ + ω conj f̂₂ ĝ₂) dk` for Cauchy data `(f₁, f₂)`.
pub fn sym_product_m(
    f: (&Density1D, &Density1D),
    g: (&Density1D, &Density1D),
    m: f64,
    q: &MomentumQuadrature,
) -> Result<f64> {
    let grid = MomentumGrid::new(q.k_max, q.panels);
    let (f1, f2, g1, g2) = (grid.transforms(f.0), grid.transforms(f.1), grid.transforms(g.0), grid.transforms(g.1));
    weighted_sum(&grid, q, |i| {
        let w = grid.k[i].hypot(m);
        (f1[i].conj() * g1[i]).re / w + (f2[i].conj() * g2[i]).re * w
    })
}

/// `⟨f, g⟩_{s,sym}`: `½∫(|k|⁻¹ conj(P_ψf₁)^ (P_ψg₁)^ + |k| conj f̂₂ ĝ₂) dk
/// + (r²/2)∫f₁∫g₁ + (1/2r²)∫ψf₂∫ψg₂`.
pub fn sym_product_s(
    f: (&Density1D, &Density1D),
    g: (&Density1D, &Density1D),
    model: &IntervalModel,
    q: &MomentumQuadrature,
) -> Result<f64> {
    let grid = MomentumGrid::new(q.k_max, q.panels);
    let (mf, mg) = (f.0.integral()?.value, g.0.integral()?.value);
    let p1: Vec<Complex64> = grid.k.iter().map(|&k| model.projected_hat(f.0.fourier_fast(k), mf, k)).collect();
    let p2: Vec<Complex64> = grid.k.iter().map(|&k| model.projected_hat(g.0.fourier_fast(k), mg, k)).collect();
    let (f2, g2) = (grid.transforms(f.1), grid.transforms(g.1));
    let kin = weighted_sum(&grid, q, |i| {
        let k = grid.k[i];
        (p1[i].conj() * p2[i]).re / k + (f2[i].conj() * g2[i]).re * k
    })?;
    let psi_f2 = psi_pairing(model, f.1)?;
    let psi_g2 = psi_pairing(model, g.1)?;
    let r2 = model.r * model.r;
    Ok(kin + 0.5 * r2 * mf * mg + psi_f2 * psi_g2 / (2.0 * r2))
}

fn psi_pairing(model: &IntervalModel, h: &Density1D) -> Result<f64> {
    let (lo, hi) = model.psi.support();
    let (a, b) = h.support();
    let (lo, hi) = (lo.max(a), hi.min(b));
    if lo >= hi {
        return Ok(0.0);
    }
    let mut breaks = model.psi.quadrature_breaks();
    breaks.extend(h.quadrature_breaks());
    Ok(crate::quad::integrate_with_breaks(|x| model.psi.eval(x) * h.eval(x), lo, hi, &breaks, Tolerance::new(1e-14, 1e-12))?
        .value)
}

/// Translated bumps on `I` with the Gram matrices of `⟨·,·⟩₁` and `⟨·,·⟩₂`.
#[derive(Debug, Clone)]
pub struct BasisSet {
    pub n: usize,
    pub half_width: f64,
    pub functions: Vec<Density1D>,
    pub gram1: DMatrix<f64>,
    pub gram2: DMatrix<f64>,
    pub cond1: f64,
    pub cond2: f64,
    grid: MomentumGrid,
    hats: Vec<Vec<Complex64>>,
}

/// `n` bumps of half-width `ℓ/(n+1)` centred at spacing `ℓ/(n+1)`, so that
/// neighbours overlap by half and all supports lie in `I`.
pub fn bump_basis(model: &IntervalModel, n: usize) -> Result<BasisSet> {
    if n == 0 {
        return Err(SgError::ConfigInvalid("basis size must be positive".into()));
    }
    let w = model.length / (n as f64 + 1.0);
    let functions: Vec<Density1D> =
        (0..n).map(|i| Density1D::bump(-0.5 * model.length + w * (i as f64 + 1.0), w, 1.0)).collect();
    // The bump transform is below 1e-15 of its peak beyond |k w| = 600.
    let k_max = 600.0 / w;
    let grid = MomentumGrid::new(k_max, (k_max / 0.5).ceil() as usize);
    let hats: Vec<Vec<Complex64>> = functions
        .iter()
        .map(|d| {
            let Density1D::Bump { center, half_width, .. } = d else { unreachable!() };
            grid.k
                .iter()
                .map(|&k| {
                    Complex64::from_polar(half_width * bump_cosine_transform(k * half_width) / (2.0 * PI).sqrt(), -k * center)
                })
                .collect()
        })
        .collect();
    let gram = |weight: &dyn Fn(f64) -> f64| -> DMatrix<f64> {
        let ws: Vec<f64> = grid.k.iter().zip(&grid.w).map(|(&k, &wt)| wt * weight(k)).collect();
        DMatrix::from_fn(n, n, |i, j| {
            ws.iter().enumerate().map(|(t, &wt)| wt * (hats[i][t].conj() * hats[j][t]).re).sum()
        })
    };
    let m = model.m;
    let gram1 = symmetrize(gram(&|k: f64| 1.0 / k.hypot(m)));
    let gram2 = symmetrize(gram(&|k: f64| k.hypot(m)));
    let cond1 = condition(&gram1)?;
    let cond2 = condition(&gram2)?;
    Ok(BasisSet { n, half_width: w, functions, gram1, gram2, cond1, cond2, grid, hats })
}

fn symmetrize(a: DMatrix<f64>) -> DMatrix<f64> {
    (&a + a.transpose()) * 0.5
}

fn condition(g: &DMatrix<f64>) -> Result<f64> {
    let e = SymmetricEigen::new(g.clone()).eigenvalues;
    let (lo, hi) = (e.min(), e.max());
    let c = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if c > MAX_CONDITION {
        return Err(SgError::IllConditionedBasis { condition: c });
    }
    Ok(c)
}

impl BasisSet {
    fn masses(&self) -> Vec<f64> {
        self.functions.iter().map(|d| d.declared_integral().unwrap_or(0.0)).collect()
    }

    fn psi_pairings(&self, model: &IntervalModel) -> Result<Vec<f64>> {
        self.functions.iter().map(|d| psi_pairing(model, d)).collect()
    }
}

/// `⟨b_i, A b_j⟩₁ = ½∫|k|⁻¹ conj(P_ψb_i)^ (P_ψb_j)^ dk + (r²/2) ∫b_i ∫b_j`.
pub fn operator_matrix_a(model: &IntervalModel, basis: &BasisSet) -> DMatrix<f64> {
    let masses = basis.masses();
    let g = &basis.grid;
    let proj: Vec<Vec<Complex64>> = (0..basis.n)
        .map(|i| g.k.iter().enumerate().map(|(t, &k)| model.projected_hat(basis.hats[i][t], masses[i], k)).collect())
        .collect();
    let ws: Vec<f64> = g.k.iter().zip(&g.w).map(|(&k, &w)| w / k).collect();
    let r2 = model.r * model.r;
    symmetrize(DMatrix::from_fn(basis.n, basis.n, |i, j| {
        let kin: f64 = ws.iter().enumerate().map(|(t, &w)| w * (proj[i][t].conj() * proj[j][t]).re).sum();
        kin + 0.5 * r2 * masses[i] * masses[j]
    }))
}

/// Multiplication part `½∫|k| conj b̂_i b̂_j dk` of `B`.
pub fn operator_matrix_b_multiplication(basis: &BasisSet) -> DMatrix<f64> {
    let g = &basis.grid;
    let ws: Vec<f64> = g.k.iter().zip(&g.w).map(|(&k, &w)| w * k).collect();
    symmetrize(DMatrix::from_fn(basis.n, basis.n, |i, j| {
        ws.iter().enumerate().map(|(t, &w)| w * (basis.hats[i][t].conj() * basis.hats[j][t]).re).sum()
    }))
}

/// `⟨b_i, B b_j⟩₂ = ½∫|k| conj b̂_i b̂_j dk + (1/2r²) ∫ψb_i ∫ψb_j`.
pub fn operator_matrix_b(model: &IntervalModel, basis: &BasisSet) -> Result<DMatrix<f64>> {
    let v = basis.psi_pairings(model)?;
    let r2 = model.r * model.r;
    let mut b = operator_matrix_b_multiplication(basis);
    for i in 0..basis.n {
        for j in 0..basis.n {
            b[(i, j)] += v[i] * v[j] / (2.0 * r2);
        }
    }
    Ok(b)
}

/// Trace of the rank-one part of `B` relative to `⟨·,·⟩₂` on the basis span.
pub fn b_rank_one_trace(model: &IntervalModel, basis: &BasisSet) -> Result<f64> {
    let v = DVector::from_vec(basis.psi_pairings(model)?);
    let chol = basis.gram2.clone().cholesky().ok_or(SgError::IllConditionedBasis { condition: f64::INFINITY })?;
    let y = chol.solve(&v);
    Ok(v.dot(&y) / (2.0 * model.r * model.r))
}

/// `sup_h (∫ψh)² / ‖h‖₂²` over all of `L²(ℝ)`, i.e. `2∫|ψ̂|²/ω dk`.
pub fn b_rank_one_full_line(model: &IntervalModel, q: &MomentumQuadrature) -> Result<f64> {
    let grid = MomentumGrid::new(q.k_max, q.panels);
    let h = grid.transforms(&model.psi);
    let s = weighted_sum(&grid, q, |i| h[i].norm_sqr() / grid.k[i].hypot(model.m))?;
    Ok(4.0 * s / (2.0 * model.r * model.r))
}

/// Generalized eigenvalues of `(M, G)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub gram_condition: f64,
}

pub fn generalized_spectrum(m: &DMatrix<f64>, gram: &DMatrix<f64>) -> Result<Spectrum> {
    let gram_condition = condition(gram)?;
    let chol = gram.clone().cholesky().ok_or(SgError::IllConditionedBasis { condition: gram_condition })?;
    let l = chol.l();
    let y = l.solve_lower_triangular(m).ok_or(SgError::IllConditionedBasis { condition: gram_condition })?;
    let z = l
        .solve_lower_triangular(&y.transpose())
        .ok_or(SgError::IllConditionedBasis { condition: gram_condition })?;
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(symmetrize(z)).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    Ok(Spectrum { min: eigenvalues[0], max: *eigenvalues.last().unwrap(), eigenvalues, gram_condition })
}

/// Spectra of `A` and `B` for one basis size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub n: usize,
    pub a: Spectrum,
    pub b: Spectrum,
}

pub fn spectral_report(model: &IntervalModel, n: usize) -> Result<SpectralReport> {
    let basis = bump_basis(model, n)?;
    let a = generalized_spectrum(&operator_matrix_a(model, &basis), &basis.gram1)?;
    let b = generalized_spectrum(&operator_matrix_b(model, &basis)?, &basis.gram2)?;
    Ok(SpectralReport { n, a, b })
}

/// Largest relative change of the lower spectral bound between successive reports.
pub fn lower_bound_drift(reports: &[SpectralReport], pick: impl Fn(&SpectralReport) -> f64) -> f64 {
    reports
        .windows(2)
        .map(|w| {
            let (a, b) = (pick(&w[0]), pick(&w[1]));
            (b - a).abs() / a.abs()
        })
        .fold(0.0, f64::max)
}

fn symmetric_grid(cut: f64, panel: f64) -> (Vec<f64>, Vec<f64>) {
    let panels = 2 * ((cut / panel).ceil() as usize).max(1);
    composite_gl(-cut, cut, panels, 8)
}

const HS_PANEL: f64 = 0.25;

/// `∫∫_{|k|≤k_cut, |p|≤p_cut} |A′(k,p)|²` with
/// `A′(k,p) = (2π)^{-1/2} √(|k|⁻¹ − ω(k)⁻¹) (χ̂(k−p) − ψ̂ₙ(k) χ̂(p)) ω(p)^{1/2}`,
/// where `ψ̂ₙ(0) = 1`.
pub fn hs_norm_a_prime(model: &IntervalModel, k_cut: f64, p_cut: f64) -> Result<f64> {
    check_cuts(k_cut, p_cut)?;
    let (ks, kw) = symmetric_grid(k_cut, HS_PANEL);
    let (ps, pw) = symmetric_grid(p_cut, HS_PANEL);
    let chi_p: Vec<f64> = ps.iter().map(|&p| model.chi.fourier_fast(p).re).collect();
    let om_p: Vec<f64> = ps.iter().map(|&p| model.omega(p)).collect();
    let mut total = 0.0;
    for (&k, &wk) in ks.iter().zip(&kw) {
        let damp = 1.0 / k.abs() - 1.0 / model.omega(k);
        let psi = model.psi_hat_normalized(k);
        let mut row = 0.0;
        for j in 0..ps.len() {
            let d = Complex64::new(model.chi.fourier_fast(k - ps[j]).re, 0.0) - psi * chi_p[j];
            row += pw[j] * d.norm_sqr() * om_p[j];
        }
        total += wk * damp * row;
    }
    Ok(total / (2.0 * PI))
}

/// `∫∫ |B′(k,p)|²` with `B′(k,p) = (2π)^{-1/2} √(ω(k) − |k|) χ̂(k−p) ω(p)^{-1/2}`.
pub fn hs_norm_b_prime(model: &IntervalModel, k_cut: f64, p_cut: f64) -> Result<f64> {
    check_cuts(k_cut, p_cut)?;
    let (ks, kw) = symmetric_grid(k_cut, HS_PANEL);
    let (ps, pw) = symmetric_grid(p_cut, HS_PANEL);
    let om_p: Vec<f64> = ps.iter().map(|&p| model.omega(p)).collect();
    let m2 = model.m * model.m;
    let mut total = 0.0;
    for (&k, &wk) in ks.iter().zip(&kw) {
        let gap = m2 / (model.omega(k) + k.abs());
        let mut row = 0.0;
        for j in 0..ps.len() {
            row += pw[j] * model.chi.fourier_fast(k - ps[j]).re.powi(2) / om_p[j];
        }
        total += wk * gap * row;
    }
    Ok(total / (2.0 * PI))
}

fn check_cuts(k_cut: f64, p_cut: f64) -> Result<()> {
    if k_cut > 0.0 && p_cut > 0.0 {
        Ok(())
    } else {
        Err(SgError::ConfigInvalid(format!("cutoffs must be positive, got {k_cut}, {p_cut}")))
    }
}

/// Which Hilbert–Schmidt kernel to tabulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HsKernel {
    APrime,
    BPrime,
}

/// HS integrals on a sequence of cutoffs (the same for `k` and `p`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HsConvergence {
    pub kernel: HsKernel,
    pub cutoffs: Vec<f64>,
    pub values: Vec<f64>,
    pub increments: Vec<f64>,
    /// Last increment divided by the one before it.
    pub last_ratio: f64,
}

pub fn hs_convergence(model: &IntervalModel, kernel: HsKernel, cutoffs: &[f64]) -> Result<HsConvergence> {
    if cutoffs.len() < 3 {
        return Err(SgError::ConfigInvalid("need at least three cutoffs".into()));
    }
    let values = cutoffs
        .iter()
        .map(|&c| match kernel {
            HsKernel::APrime => hs_norm_a_prime(model, c, c),
            HsKernel::BPrime => hs_norm_b_prime(model, c, c),
        })
        .collect::<Result<Vec<f64>>>()?;
    let increments: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let n = increments.len();
    let last_ratio = increments[n - 1] / increments[n - 2];
    Ok(HsConvergence { kernel, cutoffs: cutoffs.to_vec(), values, increments, last_ratio })
}

/// `∫ (ω(k) − |k|) / ω(k − q) dk` over the real line.
pub fn b_prime_log_reference(model: &IntervalModel, q: f64) -> Result<f64> {
    let m2 = model.m * model.m;
    let f = |k: f64| m2 / (model.omega(k) + k.abs()) / model.omega(k - q);
    let tol = Tolerance { abs: 1e-12, rel: 1e-10, max_evals: 2_000_000 };
    // Substitute k = ±(s/(1-s)) on each half line to reach infinity.
    let half = |sign: f64| {
        integrate(
            |s: f64| {
                if s >= 1.0 {
                    return 0.0;
                }
                let k = sign * s / (1.0 - s);
                f(k) / ((1.0 - s) * (1.0 - s))
            },
            0.0,
            1.0,
            tol,
        )
    };
    Ok(half(1.0)?.value + half(-1.0)?.value)
}

/// Largest `|(P_ψh)^(k)| / (C |k| ‖h‖₁)` over `0 < |k| ≤ 0.1` with
/// `C = sup{|x| : x ∈ supp P_ψh} (1 + ‖ψ‖₁)`.
pub fn k0_estimate_ratio(model: &IntervalModel, h: &Density1D) -> Result<f64> {
    let (a, b) = h.support();
    let (c, d) = model.psi.support();
    let reach = a.abs().max(b.abs()).max(c.abs()).max(d.abs());
    let l1 = h.abs_integral();
    let cst = reach * (1.0 + model.psi.abs_integral());
    let mass = h.integral()?.value;
    let mut worst: f64 = 0.0;
    for i in 1..=200 {
        for sign in [-1.0, 1.0] {
            let k = sign * 0.1 * i as f64 / 200.0;
            let ph = model.projected_hat(h.fourier(k)?, mass, k);
            worst = worst.max(ph.norm() / (cst * k.abs() * l1));
        }
    }
    Ok(worst)
}

/// First zero of `Ai′`, from the Maclaurin series of `Ai` and Newton's method.
pub fn airy_prime_first_zero() -> f64 {
    // Ai(0) and -Ai′(0).
    const C1: f64 = 0.355_028_053_887_817_2;
    const C2: f64 = 0.258_819_403_792_806_8;
    let eval = |x: f64| {
        // y'' = x y gives a_n = a_{n-3} / (n(n-1)).
        let mut a = vec![C1, -C2, 0.0];
        for n in 3..80 {
            let next = a[n - 3] / ((n * (n - 1)) as f64);
            a.push(next);
        }
        let (mut ai, mut dai, mut xp) = (0.0, 0.0, 1.0);
        for n in 0..a.len() {
            ai += a[n] * xp;
            if n + 1 < a.len() {
                dai += (n + 1) as f64 * a[n + 1] * xp;
            }
            xp *= x;
        }
        (ai, dai)
    };
    let mut x = -1.0;
    for _ in 0..50 {
        let (ai, dai) = eval(x);
        let step = dai / (x * ai);
        x -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    x
}

/// `2c/|I|` with `c = 2 E^{3/2} / 3^{3/2}`, where `E = |a′₁|` is the ground
/// state energy of `x² + |k|`.
pub fn airy_reference(length: f64) -> f64 {
    let e = -airy_prime_first_zero();
    let c = 2.0 * e.powf(1.5) / 3f64.powf(1.5);
    2.0 * c / length
}

/// Empirical lower bound of `⟨h, M_{|k|} h⟩ / ‖h‖²` on `L²(I)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AiryCheck {
    pub length: f64,
    pub trials: usize,
    pub min_observed: f64,
    /// Smallest Rayleigh quotient over the whole basis span.
    pub ritz_min: f64,
    pub reference: f64,
}

const AIRY_BASIS: usize = 16;

/// Rayleigh quotients of random combinations of a bump basis on an interval
/// of the given length; the basis and momentum grid scale with the interval.
pub fn airy_lower_bound_check(length: f64, trials: usize, seed: u64) -> Result<AiryCheck> {
    if trials < 100 {
        return Err(SgError::ConfigInvalid(format!("need at least 100 trials, got {trials}")));
    }
    if !(length > 0.0) {
        return Err(SgError::ConfigInvalid(format!("interval length {length} must be positive")));
    }
    let n = AIRY_BASIS;
    let w = length / (n as f64 + 1.0);
    let centers: Vec<f64> = (0..n).map(|i| -0.5 * length + w * (i as f64 + 1.0)).collect();
    let k_max = 600.0 / w;
    let grid = MomentumGrid::new(k_max, 2400);
    let hats: Vec<Vec<Complex64>> = centers
        .iter()
        .map(|&c| {
            grid.k
                .iter()
                .map(|&k| Complex64::from_polar(w * bump_cosine_transform(k * w) / (2.0 * PI).sqrt(), -k * c))
                .collect()
        })
        .collect();
    let form = |weight: &dyn Fn(f64) -> f64| {
        let ws: Vec<f64> = grid.k.iter().zip(&grid.w).map(|(&k, &wt)| 2.0 * wt * weight(k)).collect();
        symmetrize(DMatrix::from_fn(n, n, |i, j| {
            ws.iter().enumerate().map(|(t, &wt)| wt * (hats[i][t].conj() * hats[j][t]).re).sum()
        }))
    };
    let kin = form(&|k| k);
    let gram = form(&|_| 1.0);
    let ritz_min = generalized_spectrum(&kin, &gram)?.min;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_observed = f64::INFINITY;
    for _ in 0..trials {
        let c = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let num = c.dot(&(&kin * &c));
        let den = c.dot(&(&gram * &c));
        min_observed = min_observed.min(num / den);
    }
    Ok(AiryCheck { length, trials, min_observed, ritz_min, reference: airy_reference(length) })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> IntervalModel {
        IntervalModel::new(2.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn model_validation() {
        assert!(matches!(
            IntervalModel::with_densities(2.0, 1.0, 1.0, Density1D::normalized_bump(0.8, 0.5), Density1D::plateau(1.0, 1.0)),
            Err(SgError::ConfigInvalid(_))
        ));
        assert!(matches!(
            IntervalModel::with_densities(2.0, 1.0, 1.0, Density1D::bump(0.0, 0.5, 1.0), Density1D::plateau(1.0, 1.0)),
            Err(SgError::PsiNotNormalized { .. })
        ));
        assert!(IntervalModel::with_densities(2.0, 1.0, 1.0, Density1D::normalized_bump(0.0, 0.5), Density1D::plateau(0.9, 1.0))
            .is_err());
        let m = model();
        assert!((m.psi_hat_normalized(0.0) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn massive_product_zero_and_direct_oracle() {
        let z = Density1D::bump(0.0, 0.5, 0.0);
        let f1 = Density1D::bump(0.2, 0.4, 1.0);
        let q = MomentumQuadrature::default();
        assert_eq!(sym_product_m((&z, &z), (&z, &z), 1.0, &q).unwrap(), 0.0);
        let v = sym_product_m((&f1, &z), (&f1, &z), 1.0, &q).unwrap();
        // ½∫ω⁻¹|f̂|² over the line with adaptive transforms.
        let direct = integrate(
            |s: f64| {
                if s >= 1.0 {
                    return 0.0;
                }
                let k = s / (1.0 - s);
                f1.fourier(k).unwrap().norm_sqr() / k.hypot(1.0) / ((1.0 - s) * (1.0 - s))
            },
            0.0,
            1.0,
            Tolerance::new(1e-13, 1e-10),
        )
        .unwrap()
        .value;
        assert!((v - direct).abs() < 1e-9 * direct, "{v} vs {direct}");
    }

    #[test]
    fn polarization_recovers_the_product() {
        let q = MomentumQuadrature::default();
        let m = model();
        let f = (Density1D::bump(0.2, 0.4, 1.0), Density1D::bump(-0.3, 0.5, 0.7));
        let g = (Density1D::bump(-0.1, 0.3, 2.0), Density1D::bump(0.4, 0.3, -1.0));
        let sum = (
            Density1D::Combination { terms: vec![(1.0, f.0.clone()), (1.0, g.0.clone())] },
            Density1D::Combination { terms: vec![(1.0, f.1.clone()), (1.0, g.1.clone())] },
        );
        let diff = (
            Density1D::Combination { terms: vec![(1.0, f.0.clone()), (-1.0, g.0.clone())] },
            Density1D::Combination { terms: vec![(1.0, f.1.clone()), (-1.0, g.1.clone())] },
        );
        for prod in [
            |a: (&Density1D, &Density1D), b: (&Density1D, &Density1D), m: &IntervalModel, q: &MomentumQuadrature| {
                sym_product_m(a, b, m.m, q)
            },
            |a: (&Density1D, &Density1D), b: (&Density1D, &Density1D), m: &IntervalModel, q: &MomentumQuadrature| {
                sym_product_s(a, b, m, q)
            },
        ] {
            let direct = prod((&f.0, &f.1), (&g.0, &g.1), &m, &q).unwrap();
            let p = prod((&sum.0, &sum.1), (&sum.0, &sum.1), &m, &q).unwrap();
            let n = prod((&diff.0, &diff.1), (&diff.0, &diff.1), &m, &q).unwrap();
            assert!(((p - n) / 4.0 - direct).abs() < 1e-8, "{} vs {direct}", (p - n) / 4.0);
        }
    }

    #[test]
    fn schubert_product_special_cases() {
        let m = model();
        let q = MomentumQuadrature::default();
        let z = Density1D::bump(0.0, 0.5, 0.0);
        let v = sym_product_s((&m.psi, &z), (&m.psi, &z), &m, &q).unwrap();
        assert!((v - 0.5).abs() < 1e-10, "{v}");
        // A neutral f₁ only sees the kinetic term.
        let f1 = Density1D::derivative_of(Density1D::bump(0.1, 0.4, 1.0));
        let v = sym_product_s((&f1, &z), (&f1, &z), &m, &q).unwrap();
        let grid = MomentumGrid::new(q.k_max, q.panels);
        let direct: f64 = grid.k.iter().zip(&grid.w).map(|(&k, &w)| w * f1.fourier_fast(k).norm_sqr() / k).sum();
        assert!((v - direct).abs() < 1e-10 * direct);
    }

    #[test]
    fn spectra_are_bounded_and_positive() {
        let m = model();
        let basis = bump_basis(&m, 8).unwrap();
        assert!(basis.cond1 < MAX_CONDITION && basis.cond2 < MAX_CONDITION);
        let a = generalized_spectrum(&operator_matrix_a(&m, &basis), &basis.gram1).unwrap();
        assert!(a.min > 0.0 && a.max.is_finite());
        // |k|/ω < 1: the multiplication part of B is a contraction.
        let bm = generalized_spectrum(&operator_matrix_b_multiplication(&basis), &basis.gram2).unwrap();
        assert!(bm.max < 1.0 && bm.min > 0.0);
        let b = generalized_spectrum(&operator_matrix_b(&m, &basis).unwrap(), &basis.gram2).unwrap();
        assert!(b.min > 0.0);
    }

    #[test]
    fn mass_enters_only_through_the_gram_matrix() {
        // ⟨b, A b⟩₁ is the massless kinetic form plus the zero-mode term; as
        // m → 0 the generalized spectrum follows the Gram matrix alone.
        let setup = |m: f64| {
            let model = IntervalModel::new(2.0, m, 1.0).unwrap();
            let basis = bump_basis(&model, 6).unwrap();
            (operator_matrix_a(&model, &basis), basis.gram1)
        };
        let (a1, g1) = setup(1.0);
        let (a2, g2) = setup(0.01);
        assert!((&a1 - &a2).norm() < 1e-12 * a1.norm());
        assert!((&g1 - &g2).norm() > 1e-3 * g1.norm());
        let s1 = generalized_spectrum(&a1, &g1).unwrap();
        let s2 = generalized_spectrum(&a2, &g2).unwrap();
        assert!(s2.max < s1.max);
    }

    #[test]
    fn rank_one_trace_matches_direct_quadrature() {
        let m = model();
        let full = b_rank_one_full_line(&m, &MomentumQuadrature::default()).unwrap();
        // (1/r²)·2·‖M_{1/ω}ψ‖₂² = (1/r²)∫|ψ̂|²/ω over the line, with adaptive transforms.
        let breaks: Vec<f64> = (1..120).map(|i| 10.0 * i as f64).collect();
        let direct = 2.0
            * crate::quad::integrate_with_breaks(
                |k: f64| m.psi.fourier(k).unwrap().norm_sqr() / k.hypot(m.m),
                0.0,
                1200.0,
                &breaks,
                Tolerance::new(1e-14, 1e-11),
            )
            .unwrap()
            .value
            / (m.r * m.r);
        assert!((full - direct).abs() < 1e-9 * direct, "{full} vs {direct}");
        // On a basis span the trace is a Ritz value of the same functional.
        for n in [8, 16] {
            let t = b_rank_one_trace(&m, &bump_basis(&m, n).unwrap()).unwrap();
            assert!(t > 0.0 && t <= full, "{t} {full}");
        }
    }

    #[test]
    fn hs_kernels_are_bounded_near_zero() {
        let m = model();
        assert!((m.m.powi(2) / (m.omega(3.0) + 3.0)) <= m.m);
        for k in [1e-6, 1e-4, 1e-2] {
            let d = 1.0 / k - 1.0 / m.omega(k);
            let diff = Complex64::new(m.chi.fourier_fast(k - 0.7).re, 0.0) - m.psi_hat_normalized(k) * m.chi.fourier_fast(0.7).re;
            let v = d * diff.norm_sqr();
            assert!(v.is_finite() && v < 1.0, "{v}");
        }
        let b = b_prime_log_reference(&m, 0.0).unwrap();
        assert!(b.is_finite() && b > 0.0);
    }

    #[test]
    fn b_prime_reference_grows_at_most_logarithmically() {
        let m = model();
        let j1 = b_prime_log_reference(&m, 1.0).unwrap();
        let c = j1 / 2f64.ln();
        for q in [10.0, 100.0] {
            let j = b_prime_log_reference(&m, q).unwrap();
            assert!(j <= c * (1.0 + q).ln(), "J({q}) = {j}");
        }
    }

    #[test]
    fn k0_estimate_holds() {
        let m = model();
        for h in [Density1D::bump(0.3, 0.5, 1.0), Density1D::bump(-0.5, 0.4, -2.0)] {
            let r = k0_estimate_ratio(&m, &h).unwrap();
            assert!(r <= 1.0, "{r}");
        }
    }

    #[test]
    fn airy_zero_matches_tabulated_value() {
        assert!((airy_prime_first_zero() + 1.018_792_971_647_471).abs() < 1e-12);
    }

    #[test]
    fn airy_scaling_is_inverse_length() {
        let checks: Vec<AiryCheck> = [1.0, 2.0, 4.0].iter().map(|&l| airy_lower_bound_check(l, 100, 3).unwrap()).collect();
        let slope = log_log_slope(
            &checks.iter().map(|c| c.length).collect::<Vec<_>>(),
            &checks.iter().map(|c| c.min_observed).collect::<Vec<_>>(),
        );
        assert!((slope + 1.0).abs() < 1e-6, "{slope}");
        for c in &checks {
            assert!(c.ritz_min >= c.reference * 0.999, "{c:?}");
            assert!(c.min_observed >= c.ritz_min);
        }
    }
}
