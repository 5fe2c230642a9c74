//! Smooth compactly supported test densities on the line and on the plane.
//!
//! All one-dimensional families are built from the standard bump
//! `b(s) = exp(-1/(1-s²))` on `(-1, 1)`. Fourier transforms use the unitary
//! convention `f̂(k) = (2π)^{-1/2} ∫ e^{-ikx} f(x) dx`.

use crate::error::{Result, SgError};
use crate::geometry::{Point, SupportBox};
use crate::quad::{integrate, integrate_with_breaks, QuadResult, Tolerance};
use crate::spline::UniformSpline;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::OnceLock;

/// `∫_{-1}^{1} exp(-1/(1-s²)) ds`.
pub const BUMP_MASS: f64 = 0.443_993_816_168_079_44;

/// Standard bump `exp(-1/(1-s²))`, zero outside the open interval.
pub fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

/// Derivative of [`bump`].
pub fn bump_prime(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        let d = 1.0 - s * s;
        bump(s) * (-2.0 * s / (d * d))
    }
}

struct BumpTables {
    cumulative: UniformSpline,
    cosine: UniformSpline,
}

const COS_TABLE_MAX: f64 = 600.0;

fn tables() -> &'static BumpTables {
    static TABLES: OnceLock<BumpTables> = OnceLock::new();
    TABLES.get_or_init(|| {
        // Normalised cumulative mass, each increment from one Gauss–Kronrod panel.
        let n = 8193;
        let h = 2.0 / (n - 1) as f64;
        let mut c = vec![0.0; n];
        for i in 1..n {
            let a = -1.0 + (i - 1) as f64 * h;
            let r = integrate(bump, a, a + h, Tolerance::new(1e-18, 1e-15)).expect("bump panel");
            c[i] = c[i - 1] + r.value / BUMP_MASS;
        }
        c[n - 1] = 1.0;
        let cumulative = UniformSpline::new(-1.0, 1.0, c);

        // Cosine transform by the trapezoidal rule, which is spectrally
        // accurate for this compactly supported smooth integrand.
        let m = 4096;
        let hs = 2.0 / m as f64;
        let nodes: Vec<(f64, f64)> = (1..m / 2)
            .map(|j| {
                let s = j as f64 * hs;
                (s, bump(s))
            })
            .collect();
        let b0 = bump(0.0);
        let dq = 0.01;
        let q_lo = -1.0;
        let nq = ((COS_TABLE_MAX - q_lo) / dq).round() as usize + 1;
        let mut vals = vec![0.0; nq];
        for (i, val) in vals.iter_mut().enumerate() {
            let q = q_lo + i as f64 * dq;
            let step = Complex64::from_polar(1.0, q * hs);
            let mut rot = Complex64::new(1.0, 0.0);
            let mut acc = 0.0;
            for &(_, bs) in &nodes {
                rot *= step;
                acc += bs * rot.re;
            }
            *val = hs * (b0 + 2.0 * acc);
        }
        let cosine = UniformSpline::new(q_lo, q_lo + (nq - 1) as f64 * dq, vals);
        BumpTables { cumulative, cosine }
    })
}

/// Normalised cumulative bump mass `∫_{-1}^{s} b / ∫ b`.
pub fn bump_cdf(s: f64) -> f64 {
    if s <= -1.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        tables().cumulative.eval(s)
    }
}

/// `∫_{-∞}^{s} bump_cdf`.
pub fn bump_cdf_integral(s: f64) -> f64 {
    let t = &tables().cumulative;
    if s <= -1.0 {
        0.0
    } else if s >= 1.0 {
        t.total() + (s - 1.0)
    } else {
        t.integral_to(s)
    }
}

/// `∫_{-1}^{1} cos(q s) b(s) ds`, tabulated for `|q| ≤ 600` and integrated
/// adaptively beyond.
pub fn bump_cosine_transform(q: f64) -> f64 {
    let q = q.abs();
    if q <= COS_TABLE_MAX {
        tables().cosine.eval(q)
    } else {
        bump_cosine_direct(q)
    }
}

/// Tabulated transform, taken as zero beyond `|q| = 600` where it is below
/// `1e-15` of its value at the origin.
fn bump_cosine_fast(q: f64) -> f64 {
    if q.abs() <= COS_TABLE_MAX {
        tables().cosine.eval(q.abs())
    } else {
        0.0
    }
}

fn bump_cosine_direct(q: f64) -> f64 {
    let panels = ((q / PI).ceil() as usize).clamp(1, 100_000);
    let breaks: Vec<f64> = (1..panels).map(|i| i as f64 / panels as f64).collect();
    integrate_with_breaks(|s| 2.0 * (q * s).cos() * bump(s), 0.0, 1.0, &breaks, Tolerance::new(1e-17, 1e-12))
        .map(|r| r.value)
        .unwrap_or(0.0)
}

/// One-dimensional test function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Density1D {
    /// `amplitude · b((x - center)/half_width)`.
    Bump { center: f64, half_width: f64, amplitude: f64 },
    /// `amplitude · P(s) · b(s)` with `s = (x - center)/half_width` and
    /// `P(s) = Σ coeffs[k] s^k`.
    PolyBump { center: f64, half_width: f64, amplitude: f64, coeffs: Vec<f64> },
    /// Equal to 1 on `[-half_length, half_length]`, falling to 0 over `ramp`.
    Plateau { half_length: f64, ramp: f64 },
    /// `amplitude · inner((x - shift)/scale)`.
    Scaled { inner: Box<Density1D>, shift: f64, scale: f64, amplitude: f64 },
    /// Derivative of the inner function.
    Derivative { inner: Box<Density1D> },
    /// Linear combination.
    Combination { terms: Vec<(f64, Density1D)> },
}

impl Density1D {
    pub fn bump(center: f64, half_width: f64, amplitude: f64) -> Self {
        Density1D::Bump { center, half_width, amplitude }
    }

    /// Bump of unit mass.
    pub fn normalized_bump(center: f64, half_width: f64) -> Self {
        Density1D::Bump { center, half_width, amplitude: 1.0 / (half_width * BUMP_MASS) }
    }

    pub fn plateau(half_length: f64, ramp: f64) -> Self {
        Density1D::Plateau { half_length, ramp }
    }

    pub fn scaled(inner: Density1D, shift: f64, scale: f64, amplitude: f64) -> Self {
        Density1D::Scaled { inner: Box::new(inner), shift, scale, amplitude }
    }

    pub fn derivative_of(inner: Density1D) -> Self {
        Density1D::Derivative { inner: Box::new(inner) }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Density1D::Bump { center, half_width, amplitude } => amplitude * bump((x - center) / half_width),
            Density1D::PolyBump { center, half_width, amplitude, coeffs } => {
                let s = (x - center) / half_width;
                let b = bump(s);
                if b == 0.0 {
                    0.0
                } else {
                    amplitude * horner(coeffs, s) * b
                }
            }
            Density1D::Plateau { half_length, ramp } => {
                let (y1, y2) = plateau_args(x, *half_length, *ramp);
                bump_cdf(y1) - bump_cdf(y2)
            }
            Density1D::Scaled { inner, shift, scale, amplitude } => amplitude * inner.eval((x - shift) / scale),
            Density1D::Derivative { inner } => inner.derivative(x),
            Density1D::Combination { terms } => terms.iter().map(|(c, d)| c * d.eval(x)).sum(),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Density1D::Bump { center, half_width, amplitude } => {
                amplitude * bump_prime((x - center) / half_width) / half_width
            }
            Density1D::PolyBump { center, half_width, amplitude, coeffs } => {
                let s = (x - center) / half_width;
                let dp: Vec<f64> = coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect();
                amplitude * (horner(&dp, s) * bump(s) + horner(coeffs, s) * bump_prime(s)) / half_width
            }
            Density1D::Plateau { half_length, ramp } => {
                let (y1, y2) = plateau_args(x, *half_length, *ramp);
                2.0 / (ramp * BUMP_MASS) * (bump(y1) - bump(y2))
            }
            Density1D::Scaled { inner, shift, scale, amplitude } => {
                amplitude * inner.derivative((x - shift) / scale) / scale
            }
            Density1D::Derivative { inner } => {
                // Five-point central difference of the inner derivative.
                let (lo, hi) = self.support();
                let h = 1e-3 * (hi - lo);
                let d = |y: f64| inner.derivative(y);
                (-d(x + 2.0 * h) + 8.0 * d(x + h) - 8.0 * d(x - h) + d(x - 2.0 * h)) / (12.0 * h)
            }
            Density1D::Combination { terms } => terms.iter().map(|(c, d)| c * d.derivative(x)).sum(),
        }
    }

    /// `∫_{-∞}^{x} f`.
    pub fn antiderivative(&self, x: f64) -> f64 {
        match self {
            Density1D::Bump { center, half_width, amplitude } => {
                amplitude * half_width * BUMP_MASS * bump_cdf((x - center) / half_width)
            }
            Density1D::PolyBump { .. } => {
                let (lo, hi) = self.support();
                if x <= lo {
                    return 0.0;
                }
                integrate(|y| self.eval(y), lo, x.min(hi), Tolerance::new(1e-14, 1e-12))
                    .map(|r| r.value)
                    .unwrap_or(f64::NAN)
            }
            Density1D::Plateau { half_length, ramp } => {
                let (y1, y2) = plateau_args(x, *half_length, *ramp);
                0.5 * ramp * (bump_cdf_integral(y1) - bump_cdf_integral(y2))
            }
            Density1D::Scaled { inner, shift, scale, amplitude } => {
                amplitude * scale * inner.antiderivative((x - shift) / scale)
            }
            Density1D::Derivative { inner } => inner.eval(x),
            Density1D::Combination { terms } => terms.iter().map(|(c, d)| c * d.antiderivative(x)).sum(),
        }
    }

    /// Closed interval containing the support.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Density1D::Bump { center, half_width, .. } | Density1D::PolyBump { center, half_width, .. } => {
                (center - half_width, center + half_width)
            }
            Density1D::Plateau { half_length, ramp } => (-half_length - ramp, half_length + ramp),
            Density1D::Scaled { inner, shift, scale, .. } => {
                let (a, b) = inner.support();
                (shift + scale * a, shift + scale * b)
            }
            Density1D::Derivative { inner } => inner.support(),
            Density1D::Combination { terms } => terms.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, (_, d)| {
                let (a, b) = d.support();
                (acc.0.min(a), acc.1.max(b))
            }),
        }
    }

    /// Break points where the function or its derivatives change character.
    fn breaks(&self, out: &mut Vec<f64>) {
        match self {
            Density1D::Bump { center, .. } | Density1D::PolyBump { center, .. } => out.push(*center),
            Density1D::Plateau { half_length, ramp } => {
                out.extend([-half_length - 0.5 * ramp, -half_length, *half_length, half_length + 0.5 * ramp])
            }
            Density1D::Scaled { inner, shift, scale, .. } => {
                let mut v = Vec::new();
                inner.breaks(&mut v);
                out.extend(v.into_iter().map(|y| shift + scale * y));
            }
            Density1D::Derivative { inner } => inner.breaks(out),
            Density1D::Combination { terms } => {
                for (_, d) in terms {
                    let (a, b) = d.support();
                    out.extend([a, b]);
                    d.breaks(out);
                }
            }
        }
    }

    /// Support breaks useful for quadrature.
    pub fn quadrature_breaks(&self) -> Vec<f64> {
        let mut v = Vec::new();
        self.breaks(&mut v);
        v
    }

    /// Closed form for the total integral, when available.
    pub fn declared_integral(&self) -> Option<f64> {
        match self {
            Density1D::Bump { half_width, amplitude, .. } => Some(amplitude * half_width * BUMP_MASS),
            Density1D::PolyBump { .. } => None,
            Density1D::Plateau { half_length, ramp } => Some(2.0 * half_length + ramp),
            Density1D::Scaled { inner, scale, amplitude, .. } => {
                inner.declared_integral().map(|v| amplitude * scale * v)
            }
            Density1D::Derivative { .. } => Some(0.0),
            Density1D::Combination { terms } => {
                terms.iter().try_fold(0.0, |acc, (c, d)| d.declared_integral().map(|v| acc + c * v))
            }
        }
    }

    /// Adaptive quadrature of the total integral.
    pub fn integral(&self) -> Result<QuadResult<f64>> {
        let (lo, hi) = self.support();
        integrate_with_breaks(|x| self.eval(x), lo, hi, &self.quadrature_breaks(), Tolerance::new(1e-13, 1e-12))
    }

    /// `∫ |f|`.
    pub fn abs_integral(&self) -> f64 {
        match self {
            Density1D::Bump { half_width, amplitude, .. } => amplitude.abs() * half_width * BUMP_MASS,
            Density1D::Plateau { half_length, ramp } => 2.0 * half_length + ramp,
            _ => {
                let (lo, hi) = self.support();
                integrate_with_breaks(|x| self.eval(x).abs(), lo, hi, &self.quadrature_breaks(), Tolerance::new(1e-12, 1e-10))
                    .map(|r| r.value)
                    .unwrap_or(f64::NAN)
            }
        }
    }

    /// Upper bound for `|f|` on its support.
    pub fn abs_bound(&self) -> f64 {
        match self {
            Density1D::Bump { amplitude, .. } => amplitude.abs() * (-1.0f64).exp(),
            Density1D::Plateau { .. } => 1.0,
            _ => {
                let (lo, hi) = self.support();
                let n = 4000;
                let m = (0..=n)
                    .map(|i| self.eval(lo + (hi - lo) * i as f64 / n as f64).abs())
                    .fold(0.0, f64::max);
                1.05 * m
            }
        }
    }

    /// Fourier transform by adaptive quadrature.
    pub fn fourier(&self, k: f64) -> Result<Complex64> {
        let (lo, hi) = self.support();
        let panels = ((k.abs() * (hi - lo) / PI).ceil() as usize).clamp(1, 100_000);
        let mut breaks: Vec<f64> = (1..panels).map(|i| lo + (hi - lo) * i as f64 / panels as f64).collect();
        breaks.extend(self.quadrature_breaks());
        let r = integrate_with_breaks(
            |x| Complex64::from_polar(self.eval(x), -k * x),
            lo,
            hi,
            &breaks,
            Tolerance::new(1e-13, 1e-11),
        )?;
        Ok(r.value / (2.0 * PI).sqrt())
    }

    /// Fourier transform from closed forms in the tabulated bump transform.
    pub fn fourier_fast(&self, k: f64) -> Complex64 {
        let norm = 1.0 / (2.0 * PI).sqrt();
        match self {
            Density1D::Bump { center, half_width, amplitude } => {
                Complex64::from_polar(norm * amplitude * half_width * bump_cosine_fast(k * half_width), -k * center)
            }
            Density1D::Plateau { half_length, ramp } => {
                let a = half_length + 0.5 * ramp;
                let s = if k == 0.0 { a } else { (k * a).sin() / k };
                Complex64::new(norm * 2.0 / BUMP_MASS * bump_cosine_fast(0.5 * k * ramp) * s, 0.0)
            }
            Density1D::Scaled { inner, shift, scale, amplitude } => {
                inner.fourier_fast(k * scale) * Complex64::from_polar(amplitude * scale, -k * shift)
            }
            Density1D::Derivative { inner } => Complex64::new(0.0, k) * inner.fourier_fast(k),
            Density1D::Combination { terms } => terms.iter().map(|(c, d)| d.fourier_fast(k) * *c).sum(),
            Density1D::PolyBump { .. } => self.fourier(k).unwrap_or(Complex64::new(f64::NAN, f64::NAN)),
        }
    }

    /// Draws from `|f| / ∫|f|` by rejection against a flat envelope.
    pub fn sample_abs<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (lo, hi) = self.support();
        let bound = self.abs_bound();
        loop {
            let x = lo + (hi - lo) * rng.gen::<f64>();
            if rng.gen::<f64>() * bound <= self.eval(x).abs() {
                return x;
            }
        }
    }
}

fn horner(c: &[f64], s: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * s + a)
}

fn plateau_args(x: f64, half_length: f64, ramp: f64) -> (f64, f64) {
    let half = 0.5 * ramp;
    ((x + half_length + half) / half, (x - half_length - half) / half)
}

/// Test density on two-dimensional Minkowski space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestDensity {
    /// `amplitude · time(t) · space(x)`.
    Product { amplitude: f64, time: Density1D, space: Density1D },
    /// Linear combination.
    Sum { terms: Vec<(f64, TestDensity)> },
}

const MARGINAL_TOL: Tolerance = Tolerance { abs: 1e-14, rel: 1e-12, max_evals: 200_000 };

impl TestDensity {
    pub fn product(amplitude: f64, time: Density1D, space: Density1D) -> Self {
        TestDensity::Product { amplitude, time, space }
    }

    /// Unit-mass product of bumps centred at `p`.
    pub fn normalized_bump(p: Point, half_width_t: f64, half_width_x: f64) -> Self {
        TestDensity::Product {
            amplitude: 1.0,
            time: Density1D::normalized_bump(p.t, half_width_t),
            space: Density1D::normalized_bump(p.x, half_width_x),
        }
    }

    /// `self - c · other`.
    pub fn minus(&self, c: f64, other: &TestDensity) -> TestDensity {
        TestDensity::Sum { terms: vec![(1.0, self.clone()), (-c, other.clone())] }
    }

    pub fn eval(&self, p: Point) -> f64 {
        match self {
            TestDensity::Product { amplitude, time, space } => {
                let a = time.eval(p.t);
                if a == 0.0 {
                    0.0
                } else {
                    amplitude * a * space.eval(p.x)
                }
            }
            TestDensity::Sum { terms } => terms.iter().map(|(c, d)| c * d.eval(p)).sum(),
        }
    }

    pub fn support(&self) -> SupportBox {
        match self {
            TestDensity::Product { time, space, .. } => {
                let (t0, t1) = time.support();
                let (x0, x1) = space.support();
                SupportBox::new(t0, t1, x0, x1)
            }
            TestDensity::Sum { terms } => {
                let mut it = terms.iter().map(|(_, d)| d.support());
                let first = it.next().expect("empty sum density");
                it.fold(first, |acc, b| acc.union(&b))
            }
        }
    }

    /// Total integral with its quadrature error.
    pub fn integral(&self) -> Result<QuadResult<f64>> {
        match self {
            TestDensity::Product { amplitude, time, space } => {
                let a = time.integral()?;
                let b = space.integral()?;
                Ok(QuadResult {
                    value: amplitude * a.value * b.value,
                    error: amplitude.abs() * (a.error * b.value.abs() + b.error * a.value.abs()),
                    evals: a.evals + b.evals,
                })
            }
            TestDensity::Sum { terms } => {
                let mut out = QuadResult { value: 0.0, error: 0.0, evals: 0 };
                for (c, d) in terms {
                    let r = d.integral()?;
                    out.value += c * r.value;
                    out.error += c.abs() * r.error;
                    out.evals += r.evals;
                }
                Ok(out)
            }
        }
    }

    /// Closed-form total integral when every factor has one.
    pub fn declared_integral(&self) -> Option<f64> {
        match self {
            TestDensity::Product { amplitude, time, space } => {
                Some(amplitude * time.declared_integral()? * space.declared_integral()?)
            }
            TestDensity::Sum { terms } => {
                terms.iter().try_fold(0.0, |acc, (c, d)| d.declared_integral().map(|v| acc + c * v))
            }
        }
    }

    /// Total integral, closed form when possible.
    pub fn total(&self) -> f64 {
        self.declared_integral()
            .unwrap_or_else(|| self.integral().map(|r| r.value).unwrap_or(f64::NAN))
    }

    /// Normaliser of the importance proposal used by [`Self::sample`].
    pub fn proposal_mass(&self) -> f64 {
        match self {
            TestDensity::Product { amplitude, time, space } => {
                amplitude.abs() * time.abs_integral() * space.abs_integral()
            }
            TestDensity::Sum { terms } => terms.iter().map(|(c, d)| c.abs() * d.proposal_mass()).sum(),
        }
    }

    /// Unnormalised proposal density; dominates `|self|` pointwise.
    pub fn proposal_weight(&self, p: Point) -> f64 {
        match self {
            TestDensity::Product { .. } => self.eval(p).abs(),
            TestDensity::Sum { terms } => terms.iter().map(|(c, d)| c.abs() * d.proposal_weight(p)).sum(),
        }
    }

    /// Draws a point from the proposal and returns it with the importance
    /// weight `self(p) · mass / proposal(p)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Point, f64) {
        let p = self.sample_point(rng);
        let w = self.proposal_weight(p);
        let val = self.eval(p);
        let weight = if w == 0.0 { 0.0 } else { val * self.proposal_mass() / w };
        (p, weight)
    }

    fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match self {
            TestDensity::Product { time, space, .. } => Point::new(time.sample_abs(rng), space.sample_abs(rng)),
            TestDensity::Sum { terms } => {
                let total = self.proposal_mass();
                let mut r = rng.gen::<f64>() * total;
                for (c, d) in terms {
                    let m = c.abs() * d.proposal_mass();
                    if r < m {
                        return d.sample_point(rng);
                    }
                    r -= m;
                }
                terms.last().expect("empty sum density").1.sample_point(rng)
            }
        }
    }

    /// `ρ_u(s) = ∫ f(t, s - t) dt`, the density of `t + x`.
    pub fn marginal_u(&self, s: f64) -> f64 {
        match self {
            TestDensity::Product { amplitude, time, space } => {
                let (t0, t1) = time.support();
                let (x0, x1) = space.support();
                let (a, b) = (t0.max(s - x1), t1.min(s - x0));
                if b <= a {
                    return 0.0;
                }
                amplitude * quad_or_nan(|t| time.eval(t) * space.eval(s - t), a, b)
            }
            TestDensity::Sum { terms } => terms.iter().map(|(c, d)| c * d.marginal_u(s)).sum(),
        }
    }

    /// `ρ_v(s) = ∫ f(t, t - s) dt`, the density of `t - x`.
    pub fn marginal_v(&self, s: f64) -> f64 {
        match self {
            TestDensity::Product { amplitude, time, space } => {
                let (t0, t1) = time.support();
                let (x0, x1) = space.support();
                let (a, b) = (t0.max(s + x0), t1.min(s + x1));
                if b <= a {
                    return 0.0;
                }
                amplitude * quad_or_nan(|t| time.eval(t) * space.eval(t - s), a, b)
            }
            TestDensity::Sum { terms } => terms.iter().map(|(c, d)| c * d.marginal_v(s)).sum(),
        }
    }

    /// `∫_{t+x < s} f`.
    pub fn cumulative_u(&self, s: f64) -> f64 {
        match self {
            TestDensity::Product { amplitude, time, space } => {
                let (t0, t1) = time.support();
                amplitude * quad_or_nan(|t| time.eval(t) * space.antiderivative(s - t), t0, t1)
            }
            TestDensity::Sum { terms } => terms.iter().map(|(c, d)| c * d.cumulative_u(s)).sum(),
        }
    }

    /// `∫_{t-x < s} f`.
    pub fn cumulative_v(&self, s: f64) -> f64 {
        match self {
            TestDensity::Product { amplitude, time, space } => {
                let (t0, t1) = time.support();
                let total_x = space.declared_integral().unwrap_or_else(|| space.antiderivative(space.support().1));
                amplitude * quad_or_nan(|t| time.eval(t) * (total_x - space.antiderivative(t - s)), t0, t1)
            }
            TestDensity::Sum { terms } => terms.iter().map(|(c, d)| c * d.cumulative_v(s)).sum(),
        }
    }

    /// Mass of the closed causal past of `p`.
    pub fn past_cone_mass(&self, p: Point) -> f64 {
        match self {
            TestDensity::Product { amplitude, time, space } => {
                let (t0, t1) = time.support();
                let hi = t1.min(p.t);
                if hi <= t0 {
                    return 0.0;
                }
                amplitude
                    * quad_or_nan(
                        |t| {
                            let d = p.t - t;
                            time.eval(t) * (space.antiderivative(p.x + d) - space.antiderivative(p.x - d))
                        },
                        t0,
                        hi,
                    )
            }
            TestDensity::Sum { terms } => terms.iter().map(|(c, d)| c * d.past_cone_mass(p)).sum(),
        }
    }

    /// Mass of the closed causal future of `p`.
    pub fn future_cone_mass(&self, p: Point) -> f64 {
        match self {
            TestDensity::Product { amplitude, time, space } => {
                let (t0, t1) = time.support();
                let lo = t0.max(p.t);
                if t1 <= lo {
                    return 0.0;
                }
                amplitude
                    * quad_or_nan(
                        |t| {
                            let d = t - p.t;
                            time.eval(t) * (space.antiderivative(p.x + d) - space.antiderivative(p.x - d))
                        },
                        lo,
                        t1,
                    )
            }
            TestDensity::Sum { terms } => terms.iter().map(|(c, d)| c * d.future_cone_mass(p)).sum(),
        }
    }
}

fn quad_or_nan<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    integrate(f, a, b, MARGINAL_TOL).map(|r| r.value).unwrap_or(f64::NAN)
}

/// Test function `χ_λ(t, x) = -λ² χ⁰'(λ t) χ¹(λ² x)` used to probe the charge
/// of the reference state; `χ⁰` has unit mass and `χ¹` equals 1 on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeProbe {
    pub lambda: f64,
    pub time_profile: Density1D,
    pub space_profile: Density1D,
}

impl ChargeProbe {
    pub fn new(lambda: f64) -> Self {
        ChargeProbe {
            lambda,
            time_profile: Density1D::normalized_bump(0.0, 1.0),
            space_profile: Density1D::plateau(1.0, 1.0),
        }
    }

    /// The probe as a two-dimensional density.
    pub fn density(&self) -> TestDensity {
        let l = self.lambda;
        TestDensity::Product {
            amplitude: -l * l,
            time: Density1D::scaled(Density1D::derivative_of(self.time_profile.clone()), 0.0, 1.0 / l, 1.0),
            space: Density1D::scaled(self.space_profile.clone(), 0.0, 1.0 / (l * l), 1.0),
        }
    }

    /// Half-length of the region where the spatial profile equals 1.
    pub fn plateau_half_length(&self) -> f64 {
        match &self.space_profile {
            Density1D::Plateau { half_length, .. } => *half_length,
            _ => 0.0,
        }
    }
}

/// Checks that a density has total mass 1 within `tol`.
pub fn check_normalized(psi: &TestDensity, tol: f64) -> Result<f64> {
    let total = psi.total();
    if (total - 1.0).abs() > tol || !total.is_finite() {
        return Err(SgError::PsiNotNormalized { integral: total });
    }
    Ok(total)
}
