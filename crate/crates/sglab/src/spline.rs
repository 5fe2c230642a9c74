//! Natural cubic splines on uniform grids.

/// Natural cubic spline through equally spaced samples.
#[derive(Debug, Clone)]
pub struct UniformSpline {
    lo: f64,
    h: f64,
    y: Vec<f64>,
    m: Vec<f64>,
    cum: Vec<f64>,
}

impl UniformSpline {
    /// Interpolates `y[i]` at `lo + i*h`. Needs at least two samples.
    pub fn new(lo: f64, hi: f64, y: Vec<f64>) -> Self {
        let n = y.len();
        assert!(n >= 2, "spline needs at least two nodes");
        let h = (hi - lo) / (n - 1) as f64;
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm for the tridiagonal system with natural ends.
            let k = n - 2;
            let mut c = vec![0.0; k];
            let mut d = vec![0.0; k];
            for i in 0..k {
                let rhs = 6.0 * (y[i + 2] - 2.0 * y[i + 1] + y[i]) / (h * h);
                if i == 0 {
                    c[i] = 1.0 / 4.0;
                    d[i] = rhs / 4.0;
                } else {
                    let denom = 4.0 - c[i - 1];
                    c[i] = 1.0 / denom;
                    d[i] = (rhs - d[i - 1]) / denom;
                }
            }
            m[k] = d[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = d[i] - c[i] * m[i + 2];
            }
        }
        let mut cum = vec![0.0; n];
        for i in 0..n - 1 {
            cum[i + 1] = cum[i] + 0.5 * h * (y[i] + y[i + 1]) - h * h * h * (m[i] + m[i + 1]) / 24.0;
        }
        UniformSpline { lo, h, y, m, cum }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.lo + self.h * (self.y.len() - 1) as f64
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let n = self.y.len();
        let s = ((x - self.lo) / self.h).clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).min(n - 2);
        (i, x - (self.lo + i as f64 * self.h))
    }

    /// Spline value; clamps to the end nodes outside the grid.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.lo {
            return self.y[0];
        }
        if x >= self.hi() {
            return self.y[self.y.len() - 1];
        }
        let (i, dx) = self.locate(x);
        let h = self.h;
        let a = h - dx;
        self.m[i] * a * a * a / (6.0 * h)
            + self.m[i + 1] * dx * dx * dx / (6.0 * h)
            + (self.y[i] / h - self.m[i] * h / 6.0) * a
            + (self.y[i + 1] / h - self.m[i + 1] * h / 6.0) * dx
    }

    /// Exact integral of the spline from the left end of the grid to `x`.
    pub fn integral_to(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi() {
            return self.cum[self.cum.len() - 1];
        }
        let (i, dx) = self.locate(x);
        let h = self.h;
        let a = h - dx;
        let prim = |dx: f64, a: f64| {
            -self.m[i] * a.powi(4) / (24.0 * h) + self.m[i + 1] * dx.powi(4) / (24.0 * h)
                - (self.y[i] / h - self.m[i] * h / 6.0) * a * a / 2.0
                + (self.y[i + 1] / h - self.m[i + 1] * h / 6.0) * dx * dx / 2.0
        };
        self.cum[i] + prim(dx, a) - prim(0.0, h)
    }

    pub fn total(&self) -> f64 {
        self.cum[self.cum.len() - 1]
    }
}
