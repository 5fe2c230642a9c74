//! Perturbative S-matrix of the sine-Gordon interaction
//! `V = ½(:e^{iaΦ}: + :e^{-iaΦ}:)` smeared with a coupling density `g`.
//!
//! `S = Σ_n S_n` with `S_n = (λ^n/n!) (i/ħ)^n (½)^n Σ_{σ ∈ {±a}^n} ∫ g^{⊗n}
//! T(:e^{iσ₁Φ(x₁)}: ⋯ :e^{iσₙΦ(xₙ)}:)`. Expectations in the reference state of
//! ordered products of such factors are c-numbers: every pair of charges
//! contributes `exp(-ħ a b P)` with `P` the propagator fixed by the ordering,
//! and the remaining normal-ordered exponential contributes
//! `exp(-(ħ/2) Σ a_i a_j K_ij)`.

use crate::densities::TestDensity;
use crate::error::{Result, SgError};
use crate::geometry::{boxes_causally_ordered, lightcone, Point};
use crate::mc::{check_pair, mc_integrate, OrderEstimate, QuadratureSpec, SampleFailure, Stratification};
use crate::propagators::{dirac, pauli_jordan};
use crate::states::SchubertState;
use crate::vertex::{abs_square_kernel, LinearSource, VertexMonomial};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Parameters of the interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionSpec {
    /// Vertex charge `a`.
    pub a: f64,
    pub hbar: f64,
    /// Overall coupling `λ` multiplying `g`.
    pub coupling: f64,
    pub g: TestDensity,
    /// Hölder exponent `p` of the norm bound, in `(1, 4π/(ħa²))`.
    pub p_exponent: f64,
}

impl InteractionSpec {
    /// `ħa²/4π`, the exponent of the pair kernels.
    pub fn rho(&self) -> f64 {
        self.hbar * self.a * self.a / (4.0 * PI)
    }

    pub fn validate(&self) -> Result<()> {
        let x = self.hbar * self.a * self.a;
        if !(x < 4.0 * PI) || !x.is_finite() {
            return Err(SgError::RegimeViolation { value: x });
        }
        if self.hbar <= 0.0 {
            return Err(SgError::ConfigInvalid(format!("hbar = {} must be positive", self.hbar)));
        }
        let pmax = if x > 0.0 { 4.0 * PI / x } else { f64::INFINITY };
        if !(self.p_exponent > 1.0 && self.p_exponent < pmax) {
            return Err(SgError::ConfigInvalid(format!(
                "p = {} outside (1, {pmax})",
                self.p_exponent
            )));
        }
        Ok(())
    }

    /// Checks the interaction and that the state is built with the same `ħ`.
    pub fn validate_with(&self, state: &SchubertState) -> Result<()> {
        self.validate()?;
        if (state.hbar() - self.hbar).abs() > 1e-12 * self.hbar {
            return Err(SgError::ConfigInvalid(format!(
                "state built with hbar = {}, interaction uses {}",
                state.hbar(),
                self.hbar
            )));
        }
        Ok(())
    }

    /// `c_n = (λ^n/n!) (i/ħ)^n (½)^n`.
    pub fn order_coefficient(&self, n: usize) -> Complex64 {
        let c1 = Complex64::new(0.0, 0.5 * self.coupling / self.hbar);
        let mut c = Complex64::new(1.0, 0.0);
        for k in 1..=n {
            c = c * c1 / k as f64;
        }
        c
    }
}

/// Left and right probe words, giving expectations `ω(F* ⋆ X ⋆ G)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Probes {
    pub left: Option<VertexMonomial>,
    pub right: Option<VertexMonomial>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GroupKind {
    /// A single normal-ordered exponential: no internal contractions.
    Plain,
    TimeOrdered,
    AntiTimeOrdered,
}

struct Group {
    kind: GroupKind,
    members: Vec<(usize, f64)>,
}

#[derive(Clone, Copy)]
struct SiteMoments {
    mass: f64,
    h1_psi: f64,
    d_psi: f64,
}

/// A linear source together with its pairings against `ψ`.
struct SourceSite {
    source: LinearSource,
    moments: SiteMoments,
}

impl SourceSite {
    fn new(h: &TestDensity, state: &SchubertState) -> Result<Self> {
        let source = LinearSource::new(h)?;
        let psi = state.profile();
        let moments = SiteMoments {
            mass: source.profile.total(),
            h1_psi: source.profile.pair_hadamard(psi)?,
            d_psi: source.profile.pair_pauli_jordan(psi)?,
        };
        Ok(SourceSite { source, moments })
    }
}

/// Pair data for all sites of one sample; pairs are summed in canonical
/// site order so that equal contractions give bitwise equal results.
struct SampleContext<'a> {
    state: &'a SchubertState,
    n: usize,
    moments: Vec<SiteMoments>,
    h1: Vec<f64>,
    pj: Vec<f64>,
    dd: Vec<f64>,
    source: Option<usize>,
}

impl<'a> SampleContext<'a> {
    fn new(
        state: &'a SchubertState,
        points: &[Point],
        source: Option<&SourceSite>,
    ) -> std::result::Result<Self, SampleFailure> {
        let np = points.len();
        let n = np + usize::from(source.is_some());
        let mut h1 = vec![0.0; n * n];
        let mut pj = vec![0.0; n * n];
        let mut dd = vec![0.0; n * n];
        for i in 0..np {
            for j in i + 1..np {
                let (u, v) = check_pair(points[i], points[j])?;
                let h = -(u * v).abs().ln() / (4.0 * PI);
                h1[i * n + j] = h;
                h1[j * n + i] = h;
                let d = pauli_jordan(points[i], points[j]);
                pj[i * n + j] = d;
                pj[j * n + i] = -d;
                let dr = dirac(points[i], points[j]);
                dd[i * n + j] = dr;
                dd[j * n + i] = dr;
            }
        }
        let mut moments: Vec<SiteMoments> = points
            .iter()
            .map(|&p| SiteMoments { mass: 1.0, h1_psi: state.h1_psi(p), d_psi: state.delta_psi(p) })
            .collect();
        let mut src = None;
        if let Some(site) = source {
            let s = &site.source;
            let k = np;
            src = Some(k);
            for (i, &p) in points.iter().enumerate() {
                let h = s.profile.hadamard(p);
                h1[i * n + k] = h;
                h1[k * n + i] = h;
                let d = s.profile.pauli_jordan(p);
                pj[i * n + k] = d;
                pj[k * n + i] = -d;
                let dr = s.profile.dirac(p);
                dd[i * n + k] = dr;
                dd[k * n + i] = dr;
            }
            h1[k * n + k] = s.h_hadamard_h;
            dd[k * n + k] = s.h_dirac_h;
            moments.push(site.moments);
        }
        Ok(SampleContext { state, n, moments, h1, pj, dd, source: src })
    }

    /// `ω(G₁ ⋆ G₂ ⋆ ⋯)` for the groups in product order.
    fn expectation(&self, groups: &[Group]) -> Complex64 {
        let n = self.n;
        let mut group_of = vec![usize::MAX; n];
        let mut kind_of = vec![GroupKind::Plain; n];
        let mut charge = vec![0.0; n];
        for (gi, g) in groups.iter().enumerate() {
            for &(s, a) in &g.members {
                group_of[s] = gi;
                kind_of[s] = g.kind;
                charge[s] += a;
            }
        }
        let hbar = self.state.hbar();
        let mut log = Complex64::new(0.0, 0.0);
        for i in 0..n {
            if charge[i] == 0.0 {
                continue;
            }
            for j in i + 1..n {
                if charge[j] == 0.0 {
                    continue;
                }
                let (gi, gj) = (group_of[i], group_of[j]);
                let h = self.h1[i * n + j];
                let p = if gi == gj {
                    match kind_of[i] {
                        GroupKind::Plain => continue,
                        GroupKind::TimeOrdered => Complex64::new(h, self.dd[i * n + j]),
                        GroupKind::AntiTimeOrdered => Complex64::new(h, -self.dd[i * n + j]),
                    }
                } else if gi < gj {
                    Complex64::new(h, 0.5 * self.pj[i * n + j])
                } else {
                    Complex64::new(h, 0.5 * self.pj[j * n + i])
                };
                log -= p * (hbar * charge[i] * charge[j]);
            }
        }
        if let Some(s) = self.source {
            let c = charge[s];
            if c != 0.0 {
                let self_term = 0.5 * hbar * c * c * self.dd[s * n + s];
                match kind_of[s] {
                    GroupKind::TimeOrdered => log -= Complex64::new(0.0, self_term),
                    GroupKind::AntiTimeOrdered => log += Complex64::new(0.0, self_term),
                    GroupKind::Plain => {}
                }
            }
        }
        let (mut a, mut b, mut d) = (0.0, 0.0, 0.0);
        for s in 0..n {
            let m = &self.moments[s];
            a += charge[s] * m.mass;
            b += charge[s] * m.h1_psi;
            d += charge[s] * m.d_psi;
        }
        log -= 0.5 * hbar * self.state.quadratic_form_from_moments(a, b, d);
        log.exp()
    }
}

/// All sign assignments `σ ∈ {±1}^n`.
fn assignments(n: usize) -> impl Iterator<Item = Vec<f64>> {
    (0..1usize << n).map(move |mask| (0..n).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect())
}

/// Site layout `[left probe, samples, right probe]`.
struct Layout {
    left: Vec<(usize, f64)>,
    right: Vec<(usize, f64)>,
    first_sample: usize,
}

fn layout(probes: &Probes, k: usize, samples: &[Point]) -> (Vec<Point>, Layout) {
    let mut pts = Vec::new();
    let mut left = Vec::new();
    if let Some(f) = &probes.left {
        for (&a, &p) in f.charges.iter().zip(&f.points) {
            left.push((pts.len(), -a));
            pts.push(p);
        }
    }
    let first_sample = pts.len();
    pts.extend_from_slice(&samples[..k]);
    let mut right = Vec::new();
    if let Some(g) = &probes.right {
        for (&a, &p) in g.charges.iter().zip(&g.points) {
            right.push((pts.len(), a));
            pts.push(p);
        }
    }
    (pts, Layout { left, right, first_sample })
}

fn with_probes(l: &Layout, inner: Vec<Group>) -> Vec<Group> {
    let mut groups = Vec::with_capacity(inner.len() + 2);
    if !l.left.is_empty() {
        groups.push(Group { kind: GroupKind::Plain, members: l.left.clone() });
    }
    groups.extend(inner);
    if !l.right.is_empty() {
        groups.push(Group { kind: GroupKind::Plain, members: l.right.clone() });
    }
    groups
}

fn check_probes(probes: &Probes) -> Result<()> {
    let mut pts = Vec::new();
    for m in [&probes.left, &probes.right].into_iter().flatten() {
        pts.extend_from_slice(&m.points);
    }
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let (u, v) = lightcone(pts[i], pts[j]);
            if u * v == 0.0 && pts[i] != pts[j] {
                return Err(SgError::SingularConfiguration(format!("probe points {:?} {:?}", pts[i], pts[j])));
            }
        }
    }
    Ok(())
}

/// `ω(F* ⋆ (Σ_{n+m=k} S_n* ⋆ S_m) ⋆ G)`, which vanishes for `k ≥ 1`.
pub fn unitarity_defect(
    spec: &InteractionSpec,
    state: &SchubertState,
    k: usize,
    probes: &Probes,
    q: &QuadratureSpec,
) -> Result<OrderEstimate> {
    spec.validate_with(state)?;
    check_probes(probes)?;
    if k == 0 {
        return Ok(OrderEstimate::exact(0, Complex64::new(0.0, 0.0)));
    }
    let a = spec.a;
    let coeffs: Vec<Complex64> = (0..=k).map(|n| spec.order_coefficient(n)).collect();
    let kernel = |samples: &[Point]| -> std::result::Result<Complex64, SampleFailure> {
        let (pts, l) = layout(probes, k, samples);
        let ctx = SampleContext::new(state, &pts, None)?;
        let mut total = Complex64::new(0.0, 0.0);
        for n in 0..=k {
            let m = k - n;
            let c = coeffs[n].conj() * coeffs[m];
            for sn in assignments(n) {
                for sm in assignments(m) {
                    let mut inner = Vec::new();
                    if n > 0 {
                        let members = (0..n).map(|i| (l.first_sample + i, -sn[i] * a)).collect();
                        inner.push(Group { kind: GroupKind::AntiTimeOrdered, members });
                    }
                    if m > 0 {
                        let members = (0..m).map(|i| (l.first_sample + n + i, sm[i] * a)).collect();
                        inner.push(Group { kind: GroupKind::TimeOrdered, members });
                    }
                    total += c * ctx.expectation(&with_probes(&l, inner));
                }
            }
        }
        Ok(total)
    };
    let dens: Vec<&TestDensity> = (0..k).map(|_| &spec.g).collect();
    let mut est = mc_integrate(&kernel, &dens, q)?;
    est.order = k;
    Ok(est)
}

/// `(1/n!)² ∫ |g|^{⊗2n} Π |Q|^{±ħa²/4π}`, the square of the order-`n` norm
/// bound; points are ordered `x₁, y₁, x₂, y₂, …`.
pub fn norm_bound_integral(spec: &InteractionSpec, n: usize, q: &QuadratureSpec) -> Result<OrderEstimate> {
    spec.validate()?;
    if n == 0 {
        return Ok(OrderEstimate::exact(0, Complex64::new(1.0, 0.0)));
    }
    let charges = vec![spec.a; n];
    let g = &spec.g;
    let fact: f64 = (1..=n).map(|i| i as f64).product();
    let norm = 1.0 / (fact * fact);
    let kernel = |pts: &[Point]| -> std::result::Result<Complex64, SampleFailure> {
        let xs: Vec<Point> = (0..n).map(|i| pts[2 * i]).collect();
        let ys: Vec<Point> = (0..n).map(|i| pts[2 * i + 1]).collect();
        for i in 0..2 * n {
            for j in i + 1..2 * n {
                check_pair(pts[i], pts[j])?;
            }
        }
        let sign: f64 = pts.iter().map(|&p| g.eval(p).signum()).product();
        let k = abs_square_kernel(&charges, &xs, &ys, spec.hbar)?;
        Ok(Complex64::new(norm * sign * k, 0.0))
    };
    let dens: Vec<&TestDensity> = (0..2 * n).map(|_| g).collect();
    let mut est = mc_integrate(&kernel, &dens, q)?;
    est.order = n;
    Ok(est)
}

/// Growth check `b_n ≤ C^n (n!)^{(1-p)/p}` for `b_n = √(norm bound)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorialCheck {
    pub p_exponent: f64,
    /// `(n, b_n, σ(b_n))`.
    pub b: Vec<(usize, f64, f64)>,
    /// Constant fitted on orders 1 and 2.
    pub fitted_c: f64,
    /// `(n, bound, slack in standard deviations)` for orders ≥ 3.
    pub bounds: Vec<(usize, f64, f64)>,
    pub passed: bool,
}

pub fn factorial_growth_check(spec: &InteractionSpec, n_max: usize, q: &QuadratureSpec) -> Result<FactorialCheck> {
    spec.validate()?;
    let p = spec.p_exponent;
    let expo = (1.0 - p) / p;
    let fact = |n: usize| (1..=n).map(|i| i as f64).product::<f64>();
    let mut b = Vec::new();
    for n in 1..=n_max {
        let mut qn = *q;
        qn.seed = q.seed.wrapping_add(n as u64);
        let est = norm_bound_integral(spec, n, &qn)?;
        let v = est.value.re.max(0.0).sqrt();
        let e = if v > 0.0 { est.err_re / (2.0 * v) } else { est.err_re.sqrt() };
        b.push((n, v, e));
    }
    let fitted_c = b
        .iter()
        .filter(|(n, _, _)| *n <= 2)
        .map(|&(n, v, _)| (v / fact(n).powf(expo)).powf(1.0 / n as f64))
        .fold(0.0, f64::max);
    let mut bounds = Vec::new();
    let mut passed = true;
    for &(n, v, e) in b.iter().filter(|(n, _, _)| *n >= 3) {
        let bound = fitted_c.powi(n as i32) * fact(n).powf(expo);
        let slack = if e > 0.0 { (bound - v) / e } else if bound >= v { f64::INFINITY } else { f64::NEG_INFINITY };
        passed &= v <= bound;
        bounds.push((n, bound, slack));
    }
    Ok(FactorialCheck { p_exponent: p, b, fitted_c, bounds, passed })
}

/// Pair-importance budget suited to the norm-bound kernel of `spec`.
pub fn norm_bound_quadrature(spec: &InteractionSpec, samples: usize, seed: u64) -> QuadratureSpec {
    QuadratureSpec::new(samples, seed).with_stratification(Stratification::PairImportance { exponent: spec.rho() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Label {
    F,
    G,
    H,
}

/// Coefficients of `T(x_a, x_b)` and of `x_a ⋆ x_b` in the order-2 causality
/// defect for points with labels `(la, lb)`, in units of `c₂` and `c₁²`.
fn bogoliubov_coefficients(la: Label, lb: Label) -> (i32, i32) {
    use Label::*;
    let fg = |l| matches!(l, F | G);
    let gh = |l| matches!(l, G | H);
    // S(f+g+h) - S(f+g) ⋆ S(g)⁻¹ ⋆ S(g+h), with (S⁻¹)₁ = -S₁, (S⁻¹)₂ = S₁S₁ - S₂.
    let mut t = 1;
    let mut s = 0;
    if fg(la) && fg(lb) {
        t -= 1;
    }
    if gh(la) && gh(lb) {
        t -= 1;
    }
    if la == G && lb == G {
        t += 1;
        s -= 1;
    }
    if fg(la) && lb == G {
        s += 1;
    }
    if fg(la) && gh(lb) {
        s -= 1;
    }
    if la == G && gh(lb) {
        s += 1;
    }
    (t, s)
}

/// Densities `f`, `g`, `h` for the causal factorisation test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalTriple {
    pub f: TestDensity,
    pub g: Option<TestDensity>,
    pub h: TestDensity,
}

/// `S(f+g+h) - S(f+g) S(g)⁻¹ S(g+h)` at order `k ≤ 2`, requiring that `f`
/// does not meet the causal past of `h`.
pub fn bogoliubov_defect(
    spec: &InteractionSpec,
    state: &SchubertState,
    triple: &CausalTriple,
    k: usize,
    probes: &Probes,
    q: &QuadratureSpec,
) -> Result<OrderEstimate> {
    if !boxes_causally_ordered(&triple.f.support(), &triple.h.support()) {
        return Err(SgError::CausalPreconditionViolated(
            "supp f meets the causal past of supp h".into(),
        ));
    }
    bogoliubov_control(spec, state, triple, k, probes, q)
}

/// Same computation as [`bogoliubov_defect`] without the causal precondition,
/// used as a sensitivity control on acausal configurations.
pub fn bogoliubov_control(
    spec: &InteractionSpec,
    state: &SchubertState,
    triple: &CausalTriple,
    k: usize,
    probes: &Probes,
    q: &QuadratureSpec,
) -> Result<OrderEstimate> {
    spec.validate_with(state)?;
    check_probes(probes)?;
    match k {
        0 | 1 => return Ok(OrderEstimate::exact(k, Complex64::new(0.0, 0.0))),
        2 => {}
        _ => return Err(SgError::ConfigInvalid(format!("causality defect implemented up to order 2, got {k}"))),
    }
    let c1 = spec.order_coefficient(1);
    let c1sq = c1 * c1;
    let c2 = spec.order_coefficient(2);
    let mut labels = vec![(Label::F, &triple.f), (Label::H, &triple.h)];
    if let Some(g) = &triple.g {
        labels.push((Label::G, g));
    }
    let a = spec.a;
    let mut parts = Vec::new();
    for i in 0..labels.len() {
        for j in i..labels.len() {
            let (la, da) = labels[i];
            let (lb, db) = labels[j];
            // Coefficients for (x₁, x₂) with labels (la, lb) and, for distinct
            // labels, the mirrored ordering (lb, la) on (x₂, x₁).
            let (t1, s12) = bogoliubov_coefficients(la, lb);
            let (t2, s21) = if i == j { (0, 0) } else { bogoliubov_coefficients(lb, la) };
            let t = t1 + t2;
            if t == 0 && s12 == 0 && s21 == 0 {
                parts.push(OrderEstimate::exact(2, Complex64::new(0.0, 0.0)));
                continue;
            }
            let ct = c2 * f64::from(t);
            let c12 = c1sq * f64::from(s12);
            let c21 = c1sq * f64::from(s21);
            let kernel = |samples: &[Point]| -> std::result::Result<Complex64, SampleFailure> {
                let (pts, l) = layout(probes, 2, samples);
                let ctx = SampleContext::new(state, &pts, None)?;
                let (x1, x2) = (l.first_sample, l.first_sample + 1);
                let mut total = Complex64::new(0.0, 0.0);
                for s in assignments(2) {
                    let (a1, a2) = (s[0] * a, s[1] * a);
                    let mut term = Complex64::new(0.0, 0.0);
                    if t != 0 {
                        let g = vec![Group { kind: GroupKind::TimeOrdered, members: vec![(x1, a1), (x2, a2)] }];
                        term += ct * ctx.expectation(&with_probes(&l, g));
                    }
                    if s12 != 0 {
                        let g = vec![
                            Group { kind: GroupKind::Plain, members: vec![(x1, a1)] },
                            Group { kind: GroupKind::Plain, members: vec![(x2, a2)] },
                        ];
                        term += c12 * ctx.expectation(&with_probes(&l, g));
                    }
                    if s21 != 0 {
                        let g = vec![
                            Group { kind: GroupKind::Plain, members: vec![(x2, a2)] },
                            Group { kind: GroupKind::Plain, members: vec![(x1, a1)] },
                        ];
                        term += c21 * ctx.expectation(&with_probes(&l, g));
                    }
                    total += term;
                }
                Ok(total)
            };
            let mut qc = *q;
            qc.seed = q.seed.wrapping_add((i * 8 + j) as u64);
            parts.push(mc_integrate(&kernel, &[da, db], &qc)?);
        }
    }
    Ok(OrderEstimate::combine(2, &parts))
}

/// Perturbation inserted into the relative S-matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    /// A second sine-Gordon vertex density.
    Vertex(TestDensity),
    /// A linear source: the time-ordered exponential `T e^{iΦ(h)}`.
    Linear(TestDensity),
}

/// Coefficients `ω(F* ⋆ [S(g)⁻¹ ⋆ S(g + f)]_k ⋆ G)` for `k = 0..=k_max ≤ 2`,
/// ordered by total order in the vertex couplings.
pub fn relative_smatrix_coeffs(
    spec: &InteractionSpec,
    state: &SchubertState,
    f: &Perturbation,
    k_max: usize,
    probes: &Probes,
    q: &QuadratureSpec,
) -> Result<Vec<OrderEstimate>> {
    spec.validate_with(state)?;
    check_probes(probes)?;
    if k_max > 2 {
        return Err(SgError::ConfigInvalid(format!("relative S-matrix implemented up to order 2, got {k_max}")));
    }
    let a = spec.a;
    let c1 = spec.order_coefficient(1);
    let c2 = spec.order_coefficient(2);
    let mut out = Vec::new();
    match f {
        Perturbation::Vertex(fd) => {
            let (pts0, l0) = layout(probes, 0, &[]);
            let ctx0 = SampleContext::new(state, &pts0, None).map_err(sample_error)?;
            out.push(OrderEstimate::exact(0, ctx0.expectation(&with_probes(&l0, vec![]))));
            if k_max >= 1 {
                let kernel = |s: &[Point]| -> std::result::Result<Complex64, SampleFailure> {
                    let (pts, l) = layout(probes, 1, s);
                    let ctx = SampleContext::new(state, &pts, None)?;
                    let x = l.first_sample;
                    Ok(assignments(1)
                        .map(|sg| {
                            let g = vec![Group { kind: GroupKind::TimeOrdered, members: vec![(x, sg[0] * a)] }];
                            c1 * ctx.expectation(&with_probes(&l, g))
                        })
                        .sum())
                };
                let mut e = mc_integrate(&kernel, &[fd], q)?;
                e.order = 1;
                out.push(e);
            }
            if k_max >= 2 {
                // S₂(f).
                let diag = |s: &[Point]| -> std::result::Result<Complex64, SampleFailure> {
                    let (pts, l) = layout(probes, 2, s);
                    let ctx = SampleContext::new(state, &pts, None)?;
                    let (x1, x2) = (l.first_sample, l.first_sample + 1);
                    Ok(assignments(2)
                        .map(|sg| {
                            let g = vec![Group {
                                kind: GroupKind::TimeOrdered,
                                members: vec![(x1, sg[0] * a), (x2, sg[1] * a)],
                            }];
                            c2 * ctx.expectation(&with_probes(&l, g))
                        })
                        .sum())
                };
                // T(g f) - S₁(g) ⋆ S₁(f), with x₁ from g and x₂ from f.
                let cross = |s: &[Point]| -> std::result::Result<Complex64, SampleFailure> {
                    let (pts, l) = layout(probes, 2, s);
                    let ctx = SampleContext::new(state, &pts, None)?;
                    let (x1, x2) = (l.first_sample, l.first_sample + 1);
                    Ok(assignments(2)
                        .map(|sg| {
                            let (a1, a2) = (sg[0] * a, sg[1] * a);
                            let t = vec![Group { kind: GroupKind::TimeOrdered, members: vec![(x1, a1), (x2, a2)] }];
                            let st = vec![
                                Group { kind: GroupKind::Plain, members: vec![(x1, a1)] },
                                Group { kind: GroupKind::Plain, members: vec![(x2, a2)] },
                            ];
                            c1 * c1 * (ctx.expectation(&with_probes(&l, t)) - ctx.expectation(&with_probes(&l, st)))
                        })
                        .sum())
                };
                let e1 = mc_integrate(&diag, &[fd, fd], q)?;
                let mut q2 = *q;
                q2.seed = q.seed.wrapping_add(1);
                let e2 = mc_integrate(&cross, &[&spec.g, fd], &q2)?;
                out.push(OrderEstimate::combine(2, &[e1, e2]));
            }
        }
        Perturbation::Linear(h) => {
            let src = SourceSite::new(h, state)?;
            let (pts0, l0) = layout(probes, 0, &[]);
            let ctx0 = SampleContext::new(state, &pts0, Some(&src)).map_err(sample_error)?;
            let s0 = ctx0.n - 1;
            let e0 = ctx0.expectation(&with_probes(
                &l0,
                vec![Group { kind: GroupKind::TimeOrdered, members: vec![(s0, 1.0)] }],
            ));
            out.push(OrderEstimate::exact(0, e0));
            if k_max >= 1 {
                let kernel = |s: &[Point]| -> std::result::Result<Complex64, SampleFailure> {
                    let (pts, l) = layout(probes, 1, s);
                    let ctx = SampleContext::new(state, &pts, Some(&src))?;
                    let (x, sr) = (l.first_sample, ctx.n - 1);
                    Ok(assignments(1)
                        .map(|sg| {
                            let ax = sg[0] * a;
                            let joint = vec![Group { kind: GroupKind::TimeOrdered, members: vec![(x, ax), (sr, 1.0)] }];
                            let split = vec![
                                Group { kind: GroupKind::Plain, members: vec![(x, ax)] },
                                Group { kind: GroupKind::TimeOrdered, members: vec![(sr, 1.0)] },
                            ];
                            c1 * (ctx.expectation(&with_probes(&l, joint)) - ctx.expectation(&with_probes(&l, split)))
                        })
                        .sum())
                };
                let mut e = mc_integrate(&kernel, &[&spec.g], q)?;
                e.order = 1;
                out.push(e);
            }
            if k_max >= 2 {
                let kernel = |s: &[Point]| -> std::result::Result<Complex64, SampleFailure> {
                    let (pts, l) = layout(probes, 2, s);
                    let ctx = SampleContext::new(state, &pts, Some(&src))?;
                    let (x1, x2, sr) = (l.first_sample, l.first_sample + 1, ctx.n - 1);
                    let e = |g: Vec<Group>| ctx.expectation(&with_probes(&l, g));
                    Ok(assignments(2)
                        .map(|sg| {
                            let (a1, a2) = (sg[0] * a, sg[1] * a);
                            let plain = |x, q| Group { kind: GroupKind::Plain, members: vec![(x, q)] };
                            let th = || Group { kind: GroupKind::TimeOrdered, members: vec![(sr, 1.0)] };
                            // (S⁻¹)₂ ⋆ E = (S₁ ⋆ S₁ - S₂) ⋆ E.
                            let inv2 = c1 * c1 * e(vec![plain(x1, a1), plain(x2, a2), th()])
                                - c2 * e(vec![
                                    Group { kind: GroupKind::TimeOrdered, members: vec![(x1, a1), (x2, a2)] },
                                    th(),
                                ]);
                            // (S⁻¹)₁ ⋆ S(g, h)₁.
                            let mixed = -c1 * c1
                                * e(vec![
                                    plain(x1, a1),
                                    Group { kind: GroupKind::TimeOrdered, members: vec![(x2, a2), (sr, 1.0)] },
                                ]);
                            // S(g, h)₂.
                            let joint = c2
                                * e(vec![Group {
                                    kind: GroupKind::TimeOrdered,
                                    members: vec![(x1, a1), (x2, a2), (sr, 1.0)],
                                }]);
                            inv2 + mixed + joint
                        })
                        .sum())
                };
                let mut e = mc_integrate(&kernel, &[&spec.g, &spec.g], q)?;
                e.order = 2;
                out.push(e);
            }
        }
    }
    Ok(out)
}

fn sample_error(e: SampleFailure) -> SgError {
    match e {
        SampleFailure::NearNull => SgError::SingularConfiguration("probe configuration is lightlike".into()),
        SampleFailure::Error(e) => e,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::Density1D;
    use crate::vertex::{dressed_tord_with_linear, star_kernel, tord_kernel, VertexWord};

    fn state() -> SchubertState {
        SchubertState::new(TestDensity::normalized_bump(Point::new(0.0, 0.0), 0.3, 0.3), 1.0, 1.0).unwrap()
    }

    fn spec() -> InteractionSpec {
        InteractionSpec {
            a: PI.sqrt(),
            hbar: 1.0,
            coupling: 1.0,
            g: TestDensity::normalized_bump(Point::new(0.0, 0.0), 0.5, 0.5),
            p_exponent: 2.0,
        }
    }

    #[test]
    fn regime_is_enforced() {
        let mut s = spec();
        s.hbar = 4.5;
        assert!(matches!(s.validate(), Err(SgError::RegimeViolation { .. })));
        let mut s = spec();
        s.hbar = 0.5;
        assert!(s.validate().is_ok());
        assert!(matches!(s.validate_with(&state()), Err(SgError::ConfigInvalid(_))));
        let mut s = spec();
        s.p_exponent = 5.0;
        assert!(matches!(s.validate(), Err(SgError::ConfigInvalid(_))));
        assert!((spec().rho() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn order_coefficients() {
        let s = spec();
        let c2 = s.order_coefficient(2);
        let c1 = s.order_coefficient(1);
        assert_eq!(c1 * c1, c2 * 2.0);
    }

    #[test]
    fn evaluator_matches_vertex_kernels() {
        let st = state();
        let pts = [Point::new(0.4, 0.1), Point::new(-0.5, 0.3), Point::new(0.2, 2.0)];
        let ctx = SampleContext::new(&st, &pts, None).unwrap();
        let charges = [1.0, -1.0, 0.5];
        let m = VertexMonomial::new(charges.to_vec(), pts.to_vec());
        let base = st.vertex_expectation(&m);
        // Star product in site order.
        let groups: Vec<Group> =
            (0..3).map(|i| Group { kind: GroupKind::Plain, members: vec![(i, charges[i])] }).collect();
        let mut expect = base;
        for i in 0..3 {
            for j in i + 1..3 {
                let w1 = VertexWord::single(charges[i], pts[i]);
                let w2 = VertexWord::single(charges[j], pts[j]);
                expect *= star_kernel(&w1, &w2, st.hbar()).unwrap().kernel;
            }
        }
        assert!((ctx.expectation(&groups) - expect).norm() < 1e-12);
        // Time-ordered group.
        let t = vec![Group { kind: GroupKind::TimeOrdered, members: (0..3).map(|i| (i, charges[i])).collect() }];
        let expect = base * tord_kernel(&charges, &pts, st.hbar()).unwrap();
        assert!((ctx.expectation(&t) - expect).norm() < 1e-12);
        // A single normal-ordered word has no internal kernel.
        let w = vec![Group { kind: GroupKind::Plain, members: (0..3).map(|i| (i, charges[i])).collect() }];
        assert!((ctx.expectation(&w) - base).norm() < 1e-14);
    }

    #[test]
    fn bogoliubov_bookkeeping_isolates_the_f_h_class() {
        use Label::*;
        for (la, lb) in [(F, F), (G, G), (H, H)] {
            assert_eq!(bogoliubov_coefficients(la, lb), (0, 0));
        }
        for (la, lb) in [(F, G), (G, H)] {
            let (t1, s1) = bogoliubov_coefficients(la, lb);
            let (t2, s2) = bogoliubov_coefficients(lb, la);
            assert_eq!((t1 + t2, s1, s2), (0, 0, 0));
        }
        assert_eq!(bogoliubov_coefficients(F, H), (1, -1));
        assert_eq!(bogoliubov_coefficients(H, F), (1, 0));
    }

    #[test]
    fn first_order_unitarity_cancels_exactly() {
        let e = unitarity_defect(&spec(), &state(), 1, &Probes::default(), &QuadratureSpec::new(2000, 1)).unwrap();
        assert_eq!(e.value, Complex64::new(0.0, 0.0));
        assert_eq!(e.err, 0.0);
        let e = unitarity_defect(&spec(), &state(), 0, &Probes::default(), &QuadratureSpec::new(10, 1)).unwrap();
        assert_eq!(e.value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn second_order_unitarity_within_noise() {
        let probes = Probes {
            left: Some(VertexMonomial::new(vec![0.5], vec![Point::new(0.0, 2.0)])),
            right: Some(VertexMonomial::new(vec![-0.5], vec![Point::new(0.3, -2.0)])),
        };
        let e = unitarity_defect(&spec(), &state(), 2, &probes, &QuadratureSpec::new(100_000, 3)).unwrap();
        assert!(e.err > 0.0);
        assert!(e.value.norm() <= 4.0 * e.err, "{} ± {}", e.value, e.err);
    }

    fn triple(causal: bool) -> CausalTriple {
        let late = TestDensity::normalized_bump(Point::new(3.0, 0.0), 0.4, 0.4);
        let early = TestDensity::normalized_bump(Point::new(0.0, 0.0), 0.4, 0.4);
        let g = TestDensity::normalized_bump(Point::new(1.5, 0.0), 0.4, 0.4);
        if causal {
            CausalTriple { f: late, g: Some(g), h: early }
        } else {
            CausalTriple { f: early, g: Some(g), h: late }
        }
    }

    #[test]
    fn causal_factorisation_holds_and_acausal_control_fails() {
        let (s, st) = (spec(), state());
        let q = QuadratureSpec::new(50_000, 8);
        let good = bogoliubov_defect(&s, &st, &triple(true), 2, &Probes::default(), &q).unwrap();
        assert!(good.value.norm() <= 3.0 * good.err || good.value.norm() == 0.0, "{} ± {}", good.value, good.err);
        assert!(matches!(
            bogoliubov_defect(&s, &st, &triple(false), 2, &Probes::default(), &q),
            Err(SgError::CausalPreconditionViolated(_))
        ));
        let bad = bogoliubov_control(&s, &st, &triple(false), 2, &Probes::default(), &q).unwrap();
        assert!(bad.sigmas() >= 5.0, "{} ± {}", bad.value, bad.err);
    }

    #[test]
    fn norm_bound_order_one_matches_tensor_quadrature() {
        let s = InteractionSpec {
            g: TestDensity::Product {
                amplitude: 1.0,
                time: Density1D::normalized_bump(0.0, 0.5),
                space: Density1D::normalized_bump(0.0, 0.5),
            },
            ..spec()
        };
        let imp = norm_bound_integral(&s, 1, &norm_bound_quadrature(&s, 200_000, 2)).unwrap();
        let plain = norm_bound_integral(&s, 1, &QuadratureSpec::new(200_000, 5)).unwrap();
        let sd = (imp.err.powi(2) + plain.err.powi(2)).sqrt();
        assert!((imp.value.re - plain.value.re).abs() < 4.0 * sd);
        // |Q|^{-1/4} over unit-mass bumps exceeds 1 since |Q| < 1 on the support.
        assert!(imp.value.re > 1.0);
    }

    #[test]
    fn relative_smatrix_with_late_coupling_is_trivial() {
        // g entirely in the future of the source: higher orders vanish.
        let mut s = spec();
        s.g = TestDensity::normalized_bump(Point::new(3.0, 0.0), 0.4, 0.4);
        let h = TestDensity::normalized_bump(Point::new(0.0, 0.0), 0.4, 0.4);
        let st = state();
        let c = relative_smatrix_coeffs(&s, &st, &Perturbation::Linear(h.clone()), 2, &Probes::default(), &QuadratureSpec::new(20_000, 1))
            .unwrap();
        for e in &c[1..] {
            assert!(e.value.norm() <= 1e-12, "order {}: {}", e.order, e.value);
        }
        // Order zero is the dressed expectation of the source.
        let d = dressed_tord_with_linear(&h, &[], &[], st.hbar()).unwrap();
        let src = LinearSource::new(&h).unwrap();
        let psi = st.profile();
        let mass = src.profile.total();
        let hk = st.quadratic_form_from_moments(
            mass,
            src.profile.pair_hadamard(psi).unwrap(),
            src.profile.pair_pauli_jordan(psi).unwrap(),
        );
        let expect = d.factor * (-0.5 * st.hbar() * hk).exp();
        assert!((c[0].value - expect).norm() < 1e-9, "{} vs {expect}", c[0].value);
    }

    #[test]
    fn relative_smatrix_first_order_uses_the_dressed_phase() {
        let mut s = spec();
        s.g = TestDensity::normalized_bump(Point::new(-2.0, 0.0), 0.4, 0.4);
        let h = TestDensity::normalized_bump(Point::new(0.0, 0.0), 0.4, 0.4);
        let st = state();
        let site = SourceSite::new(&h, &st).unwrap();
        let src = &site.source;
        let x = Point::new(-2.1, 0.05);
        let ctx = SampleContext::new(&st, &[x], Some(&site)).unwrap();
        let a = s.a;
        let joint = ctx.expectation(&[Group { kind: GroupKind::TimeOrdered, members: vec![(0, a), (1, 1.0)] }]);
        let split = ctx.expectation(&[
            Group { kind: GroupKind::Plain, members: vec![(0, a)] },
            Group { kind: GroupKind::TimeOrdered, members: vec![(1, 1.0)] },
        ]);
        // The ratio is exp(-iħa(Δ_D h - ½Δh)(x)); the dressed factor supplies Δ_D h.
        let d = dressed_tord_with_linear(&h, &[a], &[x], st.hbar()).unwrap();
        let d0 = dressed_tord_with_linear(&h, &[], &[], st.hbar()).unwrap();
        let half_delta = Complex64::new(0.0, 0.5 * st.hbar() * a * src.profile.pauli_jordan(x)).exp();
        let expect = d.factor / d0.factor * half_delta;
        assert!((joint / split - expect).norm() < 1e-9, "{} vs {expect}", joint / split);
    }

    #[test]
    fn relative_smatrix_vertex_first_order_is_s1() {
        let s = spec();
        let st = state();
        let f = TestDensity::normalized_bump(Point::new(1.0, 0.0), 0.4, 0.4);
        let c = relative_smatrix_coeffs(&s, &st, &Perturbation::Vertex(f), 2, &Probes::default(), &QuadratureSpec::new(20_000, 2))
            .unwrap();
        assert_eq!(c.len(), 3);
        assert!((c[0].value - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        // S₁ expectation: (iλ/2ħ) Σ_σ ω(:e^{iσΦ(x)}:) is purely imaginary.
        assert!(c[1].value.re.abs() < 1e-12 && c[1].value.im > 0.0);
    }
}
