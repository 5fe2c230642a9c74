//! Monte Carlo integration of c-number kernels against products of test
//! densities.
//!
//! Samples are drawn in fixed-size blocks. Block `b` uses a ChaCha8 stream
//! selected by `b` under the run seed, and block sums are reduced in block
//! order with compensated summation, so results do not depend on scheduling.

use crate::densities::TestDensity;
use crate::error::{Result, SgError};
use crate::geometry::{lightcone, Point};
use crate::quad::CompensatedSum;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Pairs closer than this to the null cone are rejected.
pub const NULL_REJECTION: f64 = 1e-12;

const BLOCK: usize = 4096;

/// How sample points are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stratification {
    /// Every point independently from its density's proposal.
    Uniform,
    /// Points `2j+1` are drawn relative to points `2j` with density
    /// `∝ |Δu|^{-exponent} |Δv|^{-exponent}`, flattening a pair singularity
    /// `|Q|^{-exponent}`.
    PairImportance { exponent: f64 },
}

/// Sampling budget and reproducibility settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub samples: usize,
    pub seed: u64,
    pub stratification: Stratification,
    /// Fail with `BudgetExceeded` when the relative standard error exceeds this.
    pub target_rel_err: Option<f64>,
}

impl QuadratureSpec {
    pub fn new(samples: usize, seed: u64) -> Self {
        QuadratureSpec { samples, seed, stratification: Stratification::Uniform, target_rel_err: None }
    }

    pub fn with_stratification(mut self, s: Stratification) -> Self {
        self.stratification = s;
        self
    }
}

/// Real value with one-standard-deviation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub err: f64,
}

/// Complex Monte Carlo estimate of one perturbative order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderEstimate {
    pub order: usize,
    pub value: Complex64,
    /// Standard error of `|value - true value|`, combining both components.
    pub err: f64,
    pub err_re: f64,
    pub err_im: f64,
    pub samples: usize,
    pub rejected: usize,
    pub wall_time_s: f64,
}

impl OrderEstimate {
    /// Exactly known value with no sampling error.
    pub fn exact(order: usize, value: Complex64) -> Self {
        OrderEstimate { order, value, err: 0.0, err_re: 0.0, err_im: 0.0, samples: 0, rejected: 0, wall_time_s: 0.0 }
    }

    /// `|value| / err`, or 0 for an exact zero.
    pub fn sigmas(&self) -> f64 {
        if self.err == 0.0 {
            if self.value.norm() == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.value.norm() / self.err
        }
    }

    /// Sum of independent estimates.
    pub fn combine(order: usize, parts: &[OrderEstimate]) -> Self {
        let mut out = OrderEstimate::exact(order, Complex64::new(0.0, 0.0));
        let (mut vr, mut vi) = (0.0, 0.0);
        for p in parts {
            out.value += p.value;
            vr += p.err_re * p.err_re;
            vi += p.err_im * p.err_im;
            out.samples += p.samples;
            out.rejected += p.rejected;
            out.wall_time_s += p.wall_time_s;
        }
        out.err_re = vr.sqrt();
        out.err_im = vi.sqrt();
        out.err = (vr + vi).sqrt();
        out
    }
}

/// Why a single sample was dropped.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleFailure {
    /// A relevant pair lies within [`NULL_REJECTION`] of the null cone.
    NearNull,
    Error(SgError),
}

impl From<SgError> for SampleFailure {
    fn from(e: SgError) -> Self {
        SampleFailure::Error(e)
    }
}

/// Kernel evaluated at a tuple of sample points.
pub trait SampleKernel {
    fn eval(&self, points: &[Point]) -> std::result::Result<Complex64, SampleFailure>;
}

impl<F> SampleKernel for F
where
    F: Fn(&[Point]) -> std::result::Result<Complex64, SampleFailure>,
{
    fn eval(&self, points: &[Point]) -> std::result::Result<Complex64, SampleFailure> {
        self(points)
    }
}

/// Rejects pairs closer than [`NULL_REJECTION`] to the null cone.
pub fn check_pair(p: Point, q: Point) -> std::result::Result<(f64, f64), SampleFailure> {
    let (u, v) = lightcone(p, q);
    if u.abs() < NULL_REJECTION || v.abs() < NULL_REJECTION {
        Err(SampleFailure::NearNull)
    } else {
        Ok((u, v))
    }
}

struct PairSampler {
    exponent: f64,
    lu: f64,
    lv: f64,
}

impl PairSampler {
    fn new(exponent: f64, base: &TestDensity, partner: &TestDensity) -> Self {
        let (a, b) = (base.support(), partner.support());
        let (bu0, bu1) = a.u_range();
        let (pu0, pu1) = b.u_range();
        let (bv0, bv1) = a.v_range();
        let (pv0, pv1) = b.v_range();
        PairSampler {
            exponent,
            lu: (pu1 - bu0).abs().max((pu0 - bu1).abs()),
            lv: (pv1 - bv0).abs().max((pv0 - bv1).abs()),
        }
    }

    /// Offset along one null direction and its probability density.
    fn draw<R: Rng>(&self, rng: &mut R, l: f64) -> (f64, f64) {
        let e = 1.0 - self.exponent;
        let r = l * rng.gen::<f64>().powf(1.0 / e);
        let s = if rng.gen::<bool>() { r } else { -r };
        let pdf = 0.5 * e * r.powf(-self.exponent) / l.powf(e);
        (s, pdf)
    }
}

/// Integrates `kernel(x_1, …, x_n) Π f_i(x_i)` by Monte Carlo.
pub fn mc_integrate<K: SampleKernel + ?Sized>(
    kernel: &K,
    densities: &[&TestDensity],
    q: &QuadratureSpec,
) -> Result<OrderEstimate> {
    let start = Instant::now();
    let n = densities.len();
    let pair_samplers: Vec<Option<PairSampler>> = match q.stratification {
        Stratification::Uniform => (0..n).map(|_| None).collect(),
        Stratification::PairImportance { exponent } => {
            if !(0.0..1.0).contains(&exponent) {
                return Err(SgError::ConfigInvalid(format!("pair exponent {exponent} outside [0, 1)")));
            }
            (0..n)
                .map(|i| (i % 2 == 1).then(|| PairSampler::new(exponent, densities[i - 1], densities[i])))
                .collect()
        }
    };
    let blocks = q.samples.div_ceil(BLOCK);
    let (mut sr, mut si, mut srr, mut sii) = (
        CompensatedSum::default(),
        CompensatedSum::default(),
        CompensatedSum::default(),
        CompensatedSum::default(),
    );
    let mut rejected = 0;
    let mut pts = vec![Point::new(0.0, 0.0); n];
    for b in 0..blocks {
        let mut rng = ChaCha8Rng::seed_from_u64(q.seed);
        rng.set_stream(b as u64);
        let count = BLOCK.min(q.samples - b * BLOCK);
        for _ in 0..count {
            let mut w = 1.0;
            for i in 0..n {
                match &pair_samplers[i] {
                    None => {
                        let (p, wi) = densities[i].sample(&mut rng);
                        pts[i] = p;
                        w *= wi;
                    }
                    Some(ps) => {
                        let (du, pu) = ps.draw(&mut rng, ps.lu);
                        let (dv, pv) = ps.draw(&mut rng, ps.lv);
                        let base = pts[i - 1];
                        let p = Point::new(base.t + 0.5 * (du + dv), base.x + 0.5 * (du - dv));
                        pts[i] = p;
                        // dt dx = ½ du dv.
                        w *= densities[i].eval(p) / (2.0 * pu * pv);
                    }
                }
            }
            if w == 0.0 {
                continue;
            }
            match kernel.eval(&pts) {
                Ok(k) => {
                    let val = k * w;
                    if !(val.re.is_finite() && val.im.is_finite()) {
                        return Err(SgError::NonFiniteSample(format!("kernel value {k} at {pts:?}")));
                    }
                    sr.add(val.re);
                    si.add(val.im);
                    srr.add(val.re * val.re);
                    sii.add(val.im * val.im);
                }
                Err(SampleFailure::NearNull) => rejected += 1,
                Err(SampleFailure::Error(e)) => return Err(e),
            }
        }
    }
    let nf = q.samples as f64;
    let mean = Complex64::new(sr.value() / nf, si.value() / nf);
    let var_re = ((srr.value() / nf - mean.re * mean.re) / (nf - 1.0).max(1.0)).max(0.0);
    let var_im = ((sii.value() / nf - mean.im * mean.im) / (nf - 1.0).max(1.0)).max(0.0);
    let out = OrderEstimate {
        order: n,
        value: mean,
        err: (var_re + var_im).sqrt(),
        err_re: var_re.sqrt(),
        err_im: var_im.sqrt(),
        samples: q.samples,
        rejected,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    if let Some(t) = q.target_rel_err {
        let rel = out.err / out.value.norm().max(f64::MIN_POSITIVE);
        if rel > t {
            return Err(SgError::BudgetExceeded { requested: t, achieved: rel });
        }
    }
    Ok(out)
}
