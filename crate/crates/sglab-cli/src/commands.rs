//! One pipeline per subcommand. Each returns deterministic values, verdicts and
//! plot series; timing and persistence are handled by the caller.

use crate::config::{KernelKind, PerturbationKind, RunConfig};
use crate::record::{ResultRecord, Series, Verdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use sglab::densities::{ChargeProbe, TestDensity};
use sglab::geometry::{causal_relation, lightcone, minkowski_square, CausalRelation};
use sglab::mc::{OrderEstimate, QuadratureSpec};
use sglab::propagators::{dual_hadamard, dual_pauli_jordan, feynman, hadamard_h, pauli_jordan, wightman_w};
use sglab::quasiequiv::{
    airy_lower_bound_check, hs_convergence, log_log_slope, lower_bound_drift, spectral_report, HsKernel,
};
use sglab::smatrix::{
    bogoliubov_control, bogoliubov_defect, factorial_growth_check, norm_bound_quadrature, relative_smatrix_coeffs,
    unitarity_defect, Perturbation,
};
use sglab::states::charge_fock_norm;
use sglab::thirring::{
    anomalous_dimension, coupling_constant, dual_star_kernel, exchange_phase, gamma_matrices,
    ope_coefficient_current, ope_coefficient_mass, ApproachPath, Direction, DualVertexWord, FermionField,
    FermionKind,
};
use sglab::vertex::{series_vs_closed_form, star_kernel, VertexWord};
use sglab::{Complex64, Point, Result, SgError};
use std::f64::consts::PI;
use std::path::Path;

/// A pipeline selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    PropagatorEval,
    PropagatorIdentities,
    StateDominance,
    StateCharge,
    SmatrixSeries,
    SmatrixUnitarity,
    SmatrixGrowth,
    SmatrixRelative,
    Bogoliubov,
    QuasiequivSpectra,
    QuasiequivHs,
    QuasiequivAiry,
    ThirringIdentities,
    ThirringOpe,
    Report,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::PropagatorEval => "propagator eval",
            Pipeline::PropagatorIdentities => "propagator identities",
            Pipeline::StateDominance => "state dominance",
            Pipeline::StateCharge => "state charge",
            Pipeline::SmatrixSeries => "smatrix series",
            Pipeline::SmatrixUnitarity => "smatrix unitarity",
            Pipeline::SmatrixGrowth => "smatrix growth",
            Pipeline::SmatrixRelative => "smatrix relative",
            Pipeline::Bogoliubov => "bogoliubov",
            Pipeline::QuasiequivSpectra => "quasiequiv spectra",
            Pipeline::QuasiequivHs => "quasiequiv hs",
            Pipeline::QuasiequivAiry => "quasiequiv airy",
            Pipeline::ThirringIdentities => "thirring identities",
            Pipeline::ThirringOpe => "thirring ope",
            Pipeline::Report => "report",
        }
    }
}

/// Deterministic part of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub values: Value,
    pub verdicts: Vec<Verdict>,
    pub series: Vec<Series>,
}

impl Outcome {
    fn new(values: Value, verdicts: Vec<Verdict>) -> Self {
        Outcome { values, verdicts, series: Vec::new() }
    }

    fn with_series(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }
}

pub fn execute(pipeline: Pipeline, config: &RunConfig, output_dir: &Path) -> Result<Outcome> {
    match pipeline {
        Pipeline::PropagatorEval => propagator_eval(config),
        Pipeline::PropagatorIdentities => propagator_identities(config),
        Pipeline::StateDominance => state_dominance(config),
        Pipeline::StateCharge => state_charge(config),
        Pipeline::SmatrixSeries => smatrix_series(config),
        Pipeline::SmatrixUnitarity => smatrix_unitarity(config),
        Pipeline::SmatrixGrowth => smatrix_growth(config),
        Pipeline::SmatrixRelative => smatrix_relative(config),
        Pipeline::Bogoliubov => bogoliubov(config),
        Pipeline::QuasiequivSpectra => quasiequiv_spectra(config),
        Pipeline::QuasiequivHs => quasiequiv_hs(config),
        Pipeline::QuasiequivAiry => quasiequiv_airy(config),
        Pipeline::ThirringIdentities => thirring_identities(config),
        Pipeline::ThirringOpe => thirring_ope(config),
        Pipeline::Report => report(output_dir),
    }
}

fn complex(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn order_estimate(e: &OrderEstimate) -> Value {
    json!({
        "order": e.order,
        "value": complex(e.value),
        "err": e.err,
        "err_re": e.err_re,
        "err_im": e.err_im,
        "samples": e.samples,
        "rejected": e.rejected,
        "sigmas": if e.sigmas().is_finite() { json!(e.sigmas()) } else { json!("inf") },
    })
}

/// `|value| ≤ 3σ`; an exactly cancelling estimator counts as consistent with zero.
fn within_three_sigma(e: &OrderEstimate) -> bool {
    e.value.norm() <= 3.0 * e.err
}

fn random_point<R: Rng>(rng: &mut R, half: f64) -> Point {
    Point::new(rng.gen_range(-half..half), rng.gen_range(-half..half))
}

/// Pair whose lightcone coordinates both exceed `min` in modulus.
fn random_off_null_pair<R: Rng>(rng: &mut R, half: f64, min: f64) -> (Point, Point) {
    loop {
        let (p, q) = (random_point(rng, half), random_point(rng, half));
        let (u, v) = lightcone(p, q);
        if u.abs() > min && v.abs() > min {
            return (p, q);
        }
    }
}

fn propagator_eval(c: &RunConfig) -> Result<Outcome> {
    let pc = &c.propagator;
    let p = Point::new(pc.dt, pc.dx);
    let q = Point::new(0.0, 0.0);
    let value = match pc.kernel {
        KernelKind::PauliJordan => Complex64::new(pauli_jordan(p, q), 0.0),
        KernelKind::Hadamard => hadamard_h(p, q, pc.mu).value,
        KernelKind::Wightman => wightman_w(p, q, pc.mu, 0.0)?.value,
        KernelKind::Feynman => feynman(p, q, pc.mu, 0.0)?.value,
        KernelKind::DualPauliJordan => Complex64::new(dual_pauli_jordan(p, q), 0.0),
        KernelKind::DualHadamard => dual_hadamard(p, q)?.value,
    };
    let relation = format!("{:?}", causal_relation(p, q));
    let finite = value.re.is_finite() && value.im.is_finite();
    Ok(Outcome::new(
        json!({ "kernel": pc.kernel, "dt": pc.dt, "dx": pc.dx, "mu": pc.mu, "relation": relation, "value": complex(value) }),
        vec![Verdict::new("finite", finite, format!("{value}"))],
    ))
}

fn propagator_identities(c: &RunConfig) -> Result<Outcome> {
    let pc = &c.propagator;
    let mut rng = ChaCha8Rng::seed_from_u64(c.quadrature.seed);
    let (mut max_w, mut max_f) = (0.0f64, 0.0f64);
    let mut spacelike = 0usize;
    for _ in 0..pc.pairs {
        let (p, q) = random_off_null_pair(&mut rng, 5.0, 1e-6);
        let w = wightman_w(p, q, pc.mu, 0.0)?.value;
        let defect = (w - w.conj() - Complex64::new(0.0, pauli_jordan(p, q))).norm();
        max_w = max_w.max(defect);
        if causal_relation(p, q) == CausalRelation::SpacelikeSeparated {
            spacelike += 1;
            max_f = max_f.max(feynman(p, q, pc.mu, 0.0)?.value.im.abs());
        }
    }
    Ok(Outcome::new(
        json!({ "pairs": pc.pairs, "spacelike_pairs": spacelike, "max_wightman_defect": max_w, "max_feynman_spacelike_imag": max_f }),
        vec![
            Verdict::new("wightman_imaginary_part", max_w <= pc.tolerance, format!("max defect {max_w:e}")),
            Verdict::new("feynman_spacelike_real", max_f <= pc.tolerance && spacelike > 0, format!("max |Im| {max_f:e}")),
        ],
    ))
}

/// Unit-mass bump with random centre in `[-2, 2]²` and half-widths in `[0.2, 0.6]`.
fn random_density<R: Rng>(rng: &mut R) -> TestDensity {
    let p = random_point(rng, 2.0);
    TestDensity::normalized_bump(p, rng.gen_range(0.2..0.6), rng.gen_range(0.2..0.6))
}

fn state_dominance(c: &RunConfig) -> Result<Outcome> {
    let state = c.state()?;
    let mut rng = ChaCha8Rng::seed_from_u64(c.quadrature.seed);
    let mut series = Series::new("eigenvalues", &["pair", "min_eigenvalue", "err", "max_eigenvalue"]);
    let mut worst = f64::INFINITY;
    for i in 0..c.state.pairs {
        let f = random_density(&mut rng);
        let g = random_density(&mut rng);
        let q = QuadratureSpec::new(c.quadrature.samples, c.quadrature.seed.wrapping_add(i as u64));
        let d = state.dominance_matrix(&f, &g, &q)?;
        let slack = if d.min_eigenvalue_err > 0.0 { d.min_eigenvalue / d.min_eigenvalue_err } else { f64::INFINITY };
        worst = worst.min(if d.min_eigenvalue >= 0.0 { f64::INFINITY } else { slack });
        series.push(&[i as f64, d.min_eigenvalue, d.min_eigenvalue_err, d.max_eigenvalue]);
    }
    let passed = worst >= -3.0;
    let worst_v = if worst.is_finite() { json!(worst) } else { json!("none negative") };
    Ok(Outcome::new(
        json!({ "pairs": c.state.pairs, "samples_per_entry": c.quadrature.samples, "most_negative_sigmas": worst_v }),
        vec![Verdict::new("min_eigenvalue_above_minus_3_sigma", passed, format!("worst {worst_v}"))],
    )
    .with_series(series))
}

fn state_charge(c: &RunConfig) -> Result<Outcome> {
    let state = c.state()?;
    let mut series = Series::new("charge", &["lambda", "integral", "err", "fock_norm"]);
    let mut max_dev = 0.0f64;
    let mut norms = Vec::new();
    let mut rows = Vec::new();
    for &lam in &c.state.lambdas {
        let probe = ChargeProbe::new(lam);
        let r = state.charge_lemma_integral(&probe)?;
        let n = charge_fock_norm(&probe)?;
        max_dev = max_dev.max((r.value + 1.0).abs());
        series.push(&[lam, r.value, r.err, n]);
        rows.push(json!({ "lambda": lam, "integral": r.value, "err": r.err, "hypothesis_holds": r.hypothesis_holds, "fock_norm": n }));
        norms.push(n);
    }
    let ratios: Vec<f64> = norms.windows(2).map(|w| w[0] / w[1]).collect();
    let ratio_ok = !ratios.is_empty() && ratios.iter().all(|r| (r / 4.0 - 1.0).abs() <= 0.25);
    Ok(Outcome::new(
        json!({ "probes": rows, "norm_ratios": ratios }),
        vec![
            Verdict::new("integral_is_minus_one", max_dev <= 1e-3, format!("max deviation {max_dev:e}")),
            Verdict::new("fock_norm_quarters_per_halving", ratio_ok, format!("ratios {ratios:?}")),
        ],
    )
    .with_series(series))
}

fn smatrix_series(c: &RunConfig) -> Result<Outcome> {
    let hbar = c.model.hbar;
    let sc = &c.smatrix;
    let mut rng = ChaCha8Rng::seed_from_u64(c.quadrature.seed);
    let mut max_defect = 0.0f64;
    let mut done = 0;
    while done < sc.series_pairs {
        let (x, y) = random_off_null_pair(&mut rng, 3.0, 1e-3);
        if causal_relation(x, y) != CausalRelation::SpacelikeSeparated {
            continue;
        }
        let (a, b) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let rho = hbar * a * b / (4.0 * PI);
        if (rho * minkowski_square(x, y).abs().ln()).abs() > 3.0 {
            continue;
        }
        let s = series_vs_closed_form(&VertexWord::single(a, x), &VertexWord::single(b, y), sc.series_terms, hbar)?;
        max_defect = max_defect.max(s.defect);
        done += 1;
    }
    Ok(Outcome::new(
        json!({ "pairs": sc.series_pairs, "terms": sc.series_terms, "max_defect": max_defect }),
        vec![Verdict::new("series_matches_closed_form", max_defect <= 1e-10, format!("max defect {max_defect:e}"))],
    ))
}

fn smatrix_unitarity(c: &RunConfig) -> Result<Outcome> {
    let spec = c.interaction()?;
    let e = unitarity_defect(&spec, &c.state()?, c.smatrix.k, &c.probes(), &c.quadrature())?;
    Ok(Outcome::new(
        json!({ "k": c.smatrix.k, "defect": order_estimate(&e) }),
        vec![Verdict::new("defect_within_3_sigma", within_three_sigma(&e), format!("{} ± {}", e.value, e.err))],
    ))
}

fn smatrix_growth(c: &RunConfig) -> Result<Outcome> {
    let spec = c.interaction()?;
    let q = norm_bound_quadrature(&spec, c.quadrature.samples, c.quadrature.seed);
    let fc = factorial_growth_check(&spec, c.smatrix.n_max, &q)?;
    let mut series = Series::new("norm_bound", &["n", "b_n", "sigma"]);
    for &(n, b, s) in &fc.b {
        series.push(&[n as f64, b, s]);
    }
    let detail = format!("C = {}, bounds {:?}", fc.fitted_c, fc.bounds);
    Ok(Outcome::new(json!({ "check": fc }), vec![Verdict::new("factorial_growth", fc.passed, detail)]).with_series(series))
}

fn smatrix_relative(c: &RunConfig) -> Result<Outcome> {
    let spec = c.interaction()?;
    let d = c.smatrix.perturbation_density.build()?;
    let f = match c.smatrix.perturbation {
        PerturbationKind::Vertex => Perturbation::Vertex(d),
        PerturbationKind::Linear => Perturbation::Linear(d),
    };
    let coeffs = relative_smatrix_coeffs(&spec, &c.state()?, &f, c.smatrix.k, &c.probes(), &c.quadrature())?;
    let finite = coeffs.iter().all(|e| e.value.re.is_finite() && e.value.im.is_finite());
    Ok(Outcome::new(
        json!({ "perturbation": c.smatrix.perturbation, "coefficients": coeffs.iter().map(order_estimate).collect::<Vec<_>>() }),
        vec![Verdict::new("finite", finite, format!("{} orders", coeffs.len()))],
    ))
}

fn bogoliubov(c: &RunConfig) -> Result<Outcome> {
    let spec = c.interaction()?;
    let state = c.state()?;
    let triple = c.causal_triple()?;
    let (k, probes, q) = (c.bogoliubov.k, c.probes(), c.quadrature());
    let (e, verdict) = if c.bogoliubov.control {
        let e = bogoliubov_control(&spec, &state, &triple, k, &probes, &q)?;
        let v = Verdict::new("control_detects_acausality", e.sigmas() >= 5.0, format!("{} ± {}", e.value, e.err));
        (e, v)
    } else {
        let e = bogoliubov_defect(&spec, &state, &triple, k, &probes, &q)?;
        let v = Verdict::new("defect_within_3_sigma", within_three_sigma(&e), format!("{} ± {}", e.value, e.err));
        (e, v)
    };
    Ok(Outcome::new(json!({ "k": k, "control": c.bogoliubov.control, "defect": order_estimate(&e) }), vec![verdict]))
}

fn quasiequiv_spectra(c: &RunConfig) -> Result<Outcome> {
    let model = c.interval_model()?;
    let qc = &c.quasiequiv;
    let reports = qc.basis_sizes.iter().map(|&n| spectral_report(&model, n)).collect::<Result<Vec<_>>>()?;
    let mut series = Series::new("spectra", &["n", "a_min", "a_max", "b_min", "b_max", "gram_condition"]);
    for r in &reports {
        series.push(&[r.n as f64, r.a.min, r.a.max, r.b.min, r.b.max, r.a.gram_condition]);
    }
    let positive = reports.iter().all(|r| r.a.min > 0.0 && r.b.min > 0.0);
    let drift_a = lower_bound_drift(&reports, |r| r.a.min);
    let drift_b = lower_bound_drift(&reports, |r| r.b.min);
    let bounds: Vec<Value> =
        reports.iter().map(|r| json!({ "n": r.n, "a": [r.a.min, r.a.max], "b": [r.b.min, r.b.max] })).collect();
    Ok(Outcome::new(
        json!({ "spectra": bounds, "drift_a": drift_a, "drift_b": drift_b }),
        vec![
            Verdict::new("spectra_positive", positive, "lower bounds of A and B"),
            Verdict::new("lower_bound_drift", drift_a < qc.max_drift && drift_b < qc.max_drift, format!("A {drift_a:.4}, B {drift_b:.4}")),
        ],
    )
    .with_series(series))
}

fn quasiequiv_hs(c: &RunConfig) -> Result<Outcome> {
    let model = c.interval_model()?;
    let qc = &c.quasiequiv;
    let mut series = Series::new("hs_norms", &["kernel", "cutoff", "value"]);
    let mut verdicts = Vec::new();
    let mut values = Vec::new();
    for kernel in [HsKernel::APrime, HsKernel::BPrime] {
        let h = hs_convergence(&model, kernel, &qc.cutoffs)?;
        let label = match kernel {
            HsKernel::APrime => "a_prime",
            HsKernel::BPrime => "b_prime",
        };
        for (cut, v) in h.cutoffs.iter().zip(&h.values) {
            series.push(&[label.to_string(), cut.to_string(), v.to_string()]);
        }
        let ok = h.last_ratio >= 0.0 && h.last_ratio <= qc.max_ratio;
        verdicts.push(Verdict::new(&format!("{label}_increments_shrink"), ok, format!("ratio {:.4}", h.last_ratio)));
        values.push(json!(h));
    }
    Ok(Outcome { values: json!({ "kernels": values }), verdicts, series: vec![series] })
}

fn quasiequiv_airy(c: &RunConfig) -> Result<Outcome> {
    let qc = &c.quasiequiv;
    let checks = qc
        .airy_lengths
        .iter()
        .map(|&l| airy_lower_bound_check(l, qc.airy_trials, c.quadrature.seed))
        .collect::<Result<Vec<_>>>()?;
    let mins: Vec<f64> = checks.iter().map(|a| a.min_observed).collect();
    let slope = log_log_slope(&qc.airy_lengths, &mins);
    let bound = checks.iter().all(|a| a.min_observed >= a.reference && a.ritz_min >= a.reference);
    let mut series = Series::new("airy", &["length", "min_observed", "ritz_min", "reference"]);
    for a in &checks {
        series.push(&[a.length, a.min_observed, a.ritz_min, a.reference]);
    }
    Ok(Outcome::new(
        json!({ "checks": checks, "slope": slope }),
        vec![
            Verdict::new("inverse_length_scaling", (slope + 1.0).abs() <= 0.2, format!("slope {slope:.4}")),
            Verdict::new("above_airy_bound", bound, "minimum quotients against 2c/|I|"),
        ],
    )
    .with_series(series))
}

fn thirring_identities(c: &RunConfig) -> Result<Outcome> {
    let tc = &c.thirring;
    let mut rng = ChaCha8Rng::seed_from_u64(c.quadrature.seed);
    let mut max_exchange = 0.0f64;
    let mut done = 0;
    while done < tc.pairs {
        let (x, y) = random_off_null_pair(&mut rng, 5.0, 1e-6);
        if causal_relation(x, y) != CausalRelation::SpacelikeSeparated {
            continue;
        }
        let alpha = rng.gen_range(0.3..3.0);
        for k1 in FermionKind::ALL {
            for k2 in FermionKind::ALL {
                let (a1, b1) = FermionField::new(k1, alpha)?.charges();
                let (a2, b2) = FermionField::new(k2, alpha)?.charges();
                max_exchange = max_exchange.max((exchange_phase(a1, b1, a2, b2, x, y) + 1.0).norm());
            }
        }
        done += 1;
    }
    let mut max_dual = 0.0f64;
    for _ in 0..tc.pairs {
        let (x, y) = random_off_null_pair(&mut rng, 5.0, 1e-3);
        let (a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let dual = dual_star_kernel(&DualVertexWord::single(a, 0.0, x), &DualVertexWord::single(b, 0.0, y))?.kernel;
        let scalar = star_kernel(&VertexWord::single(a, x), &VertexWord::single(b, y), 1.0)?.kernel;
        max_dual = max_dual.max((dual - scalar).norm());
    }
    let sqrt_pi = PI.sqrt();
    let (g0, d0) = (coupling_constant(sqrt_pi), anomalous_dimension(sqrt_pi));
    let (gam0, gam1) = gamma_matrices();
    let anti = gam0 * gam1 + gam1 * gam0;
    let gamma_ok = (gam0 * gam0).as_slice() == [1.0, 0.0, 0.0, 1.0]
        && (gam1 * gam1).as_slice() == [-1.0, 0.0, 0.0, -1.0]
        && anti.iter().all(|&v| v == 0.0);
    Ok(Outcome::new(
        json!({
            "pairs": tc.pairs,
            "max_exchange_defect": max_exchange,
            "max_dual_scalar_defect": max_dual,
            "coupling_at_free_point": g0,
            "dimension_at_free_point": d0,
            "gamma_algebra": gamma_ok,
        }),
        vec![
            Verdict::new("fermions_anticommute", max_exchange <= tc.tolerance, format!("max |phase + 1| {max_exchange:e}")),
            Verdict::new("free_point", g0.abs() <= 1e-14 && d0.abs() <= 1e-14, format!("g = {g0:e}, d = {d0:e}")),
            Verdict::new("gamma_algebra", gamma_ok, "(γ⁰)² = 1, (γ¹)² = −1, {γ⁰, γ¹} = 0"),
            Verdict::new("dual_matches_scalar", max_dual <= tc.tolerance, format!("max defect {max_dual:e}")),
        ],
    ))
}

fn thirring_ope(c: &RunConfig) -> Result<Outcome> {
    let tc = &c.thirring;
    let mut series = Series::new("ope_trace", &["alpha", "coefficient", "s", "re", "im"]);
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    let path_u = ApproachPath::new(Point::new(0.2, -0.1), 1.0, -0.6);
    let path_m = ApproachPath::new(Point::new(-0.3, 0.4), -0.5, 1.0);
    for &alpha in &tc.alphas {
        let results = [
            ("current_u", ope_coefficient_current(alpha, Direction::U, &path_u)?),
            ("current_v", ope_coefficient_current(alpha, Direction::V, &path_u)?),
            ("mass", ope_coefficient_mass(alpha, &path_m)?),
        ];
        for (name, r) in results {
            for &(s, z) in &r.trace {
                series.push(&[alpha.to_string(), name.to_string(), s.to_string(), z.re.to_string(), z.im.to_string()]);
            }
            verdicts.push(Verdict::new(
                &format!("{name}_alpha_{alpha:.6}"),
                r.rel_err <= tc.ope_tolerance,
                format!("{} vs ±{} (rel err {:.2e})", r.value, r.target, r.rel_err),
            ));
            rows.push(json!({ "alpha": alpha, "coefficient": name, "value": complex(r.value), "target": r.target, "rel_err": r.rel_err, "residual": r.residual }));
        }
    }
    Ok(Outcome { values: json!({ "coefficients": rows }), verdicts, series: vec![series] })
}

fn report(dir: &Path) -> Result<Outcome> {
    let entries = std::fs::read_dir(dir).map_err(|e| SgError::ConfigInvalid(format!("cannot read {}: {e}", dir.display())))?;
    let mut paths: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && p.file_stem().is_some_and(|s| s != "report"))
        .collect();
    paths.sort();
    let mut series = Series::new("summary", &["command", "passed", "config_hash", "error"]);
    let mut rows = Vec::new();
    let mut all = true;
    for p in &paths {
        let Ok(text) = std::fs::read_to_string(p) else { continue };
        let Ok(r) = serde_json::from_str::<ResultRecord>(&text) else { continue };
        all &= r.passed;
        let err = r.error.as_ref().map(|e| e.kind.clone()).unwrap_or_default();
        series.push(&[r.command.clone(), r.passed.to_string(), r.config_hash.clone(), err.clone()]);
        rows.push(json!({ "command": r.command, "passed": r.passed, "config_hash": r.config_hash, "error": err }));
    }
    let n = rows.len();
    Ok(Outcome::new(
        json!({ "records": rows }),
        vec![Verdict::new("all_records_pass", all && n > 0, format!("{n} records"))],
    )
    .with_series(series))
}
