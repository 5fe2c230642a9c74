//! Points, lightcone coordinates and causal relations in two-dimensional
//! Minkowski space with signature (+, -).
//!
//! | quantity | definition |
//! |---|---|
//! | `u`, `v` | `Δt + Δx`, `Δt - Δx` |
//! | Minkowski square | `Δt² - Δx² = u v` |
//! | boost by rapidity `θ` | `u → e^θ u`, `v → e^{-θ} v` |

use serde::{Deserialize, Serialize};

/// Spacetime point `(t, x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub t: f64,
    pub x: f64,
}

impl Point {
    pub const fn new(t: f64, x: f64) -> Self {
        Point { t, x }
    }

    pub fn u(&self) -> f64 {
        self.t + self.x
    }

    pub fn v(&self) -> f64 {
        self.t - self.x
    }

    /// Lorentz boost with rapidity `theta`.
    pub fn boost(&self, theta: f64) -> Point {
        let (s, c) = (theta.sinh(), theta.cosh());
        Point { t: c * self.t + s * self.x, x: s * self.t + c * self.x }
    }

    pub fn translate(&self, dt: f64, dx: f64) -> Point {
        Point { t: self.t + dt, x: self.x + dx }
    }
}

/// Lightcone coordinates `(u, v)` of `p - q`.
pub fn lightcone(p: Point, q: Point) -> (f64, f64) {
    let dt = p.t - q.t;
    let dx = p.x - q.x;
    (dt + dx, dt - dx)
}

/// Minkowski square of `p - q`.
pub fn minkowski_square(p: Point, q: Point) -> f64 {
    let (u, v) = lightcone(p, q);
    u * v
}

/// Causal relation of `p` relative to `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CausalRelation {
    SpacelikeSeparated,
    TimelikeFuture,
    TimelikePast,
    LightlikeFuture,
    LightlikePast,
    Coincident,
}

impl CausalRelation {
    /// Relation with the roles of the two points exchanged.
    pub fn reverse(self) -> Self {
        use CausalRelation::*;
        match self {
            TimelikeFuture => TimelikePast,
            TimelikePast => TimelikeFuture,
            LightlikeFuture => LightlikePast,
            LightlikePast => LightlikeFuture,
            other => other,
        }
    }

    pub fn is_timelike(self) -> bool {
        matches!(self, CausalRelation::TimelikeFuture | CausalRelation::TimelikePast)
    }

    pub fn is_null(self) -> bool {
        matches!(
            self,
            CausalRelation::LightlikeFuture | CausalRelation::LightlikePast | CausalRelation::Coincident
        )
    }
}

/// Classifies `p` relative to `q`, e.g. `TimelikeFuture` when `p` lies in the
/// open future cone of `q`.
pub fn causal_relation(p: Point, q: Point) -> CausalRelation {
    let (u, v) = lightcone(p, q);
    let q2 = u * v;
    if u == 0.0 && v == 0.0 {
        CausalRelation::Coincident
    } else if q2 > 0.0 {
        if u > 0.0 {
            CausalRelation::TimelikeFuture
        } else {
            CausalRelation::TimelikePast
        }
    } else if q2 < 0.0 {
        CausalRelation::SpacelikeSeparated
    } else if u + v > 0.0 {
        CausalRelation::LightlikeFuture
    } else {
        CausalRelation::LightlikePast
    }
}

/// Axis-aligned box `[t0, t1] × [x0, x1]` enclosing a support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    pub t0: f64,
    pub t1: f64,
    pub x0: f64,
    pub x1: f64,
}

impl SupportBox {
    pub fn new(t0: f64, t1: f64, x0: f64, x1: f64) -> Self {
        SupportBox { t0: t0.min(t1), t1: t0.max(t1), x0: x0.min(x1), x1: x0.max(x1) }
    }

    pub fn contains(&self, p: Point) -> bool {
        p.t >= self.t0 && p.t <= self.t1 && p.x >= self.x0 && p.x <= self.x1
    }

    pub fn corners(&self) -> [Point; 4] {
        [
            Point::new(self.t0, self.x0),
            Point::new(self.t0, self.x1),
            Point::new(self.t1, self.x0),
            Point::new(self.t1, self.x1),
        ]
    }

    pub fn union(&self, other: &SupportBox) -> SupportBox {
        SupportBox {
            t0: self.t0.min(other.t0),
            t1: self.t1.max(other.t1),
            x0: self.x0.min(other.x0),
            x1: self.x1.max(other.x1),
        }
    }

    pub fn area(&self) -> f64 {
        (self.t1 - self.t0) * (self.x1 - self.x0)
    }

    /// Range of `t + x` over the box.
    pub fn u_range(&self) -> (f64, f64) {
        (self.t0 + self.x0, self.t1 + self.x1)
    }

    /// Range of `t - x` over the box.
    pub fn v_range(&self) -> (f64, f64) {
        (self.t0 - self.x1, self.t1 - self.x0)
    }
}

/// True when no point of `f` lies in the closed causal past of a point of `h`.
///
/// The difference set `h - f` is again a box; it meets the closed future cone
/// iff its largest time is at least the distance of its `x`-range from zero.
pub fn boxes_causally_ordered(f: &SupportBox, h: &SupportBox) -> bool {
    let t_max = h.t1 - f.t0;
    let (lo, hi) = (h.x0 - f.x1, h.x1 - f.x0);
    let dist = if lo <= 0.0 && hi >= 0.0 { 0.0 } else { lo.abs().min(hi.abs()) };
    t_max < dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn classification_examples() {
        let o = Point::new(0.0, 0.0);
        assert_eq!(causal_relation(Point::new(2.0, 1.0), o), CausalRelation::TimelikeFuture);
        assert_eq!(causal_relation(Point::new(-2.0, 1.0), o), CausalRelation::TimelikePast);
        assert_eq!(causal_relation(Point::new(1.0, 2.0), o), CausalRelation::SpacelikeSeparated);
        assert_eq!(causal_relation(Point::new(1.0, -1.0), o), CausalRelation::LightlikeFuture);
        assert_eq!(causal_relation(Point::new(-1.0, 1.0), o), CausalRelation::LightlikePast);
        assert_eq!(causal_relation(o, o), CausalRelation::Coincident);
        assert_eq!(minkowski_square(Point::new(2.0, 1.0), o), 3.0);
    }

    #[test]
    fn box_ordering_examples() {
        let f = SupportBox::new(0.0, 1.0, 0.0, 1.0);
        // h lies in the future of f, so f meets the past of h.
        assert!(!boxes_causally_ordered(&f, &SupportBox::new(3.0, 4.0, 0.0, 1.0)));
        // f lies in the future of h.
        assert!(boxes_causally_ordered(&SupportBox::new(3.0, 4.0, 0.0, 1.0), &f));
        assert!(boxes_causally_ordered(&f, &SupportBox::new(0.0, 1.0, 10.0, 11.0)));
        assert!(!boxes_causally_ordered(&f, &f));
    }

    fn brute_force_ordered(f: &SupportBox, h: &SupportBox) -> bool {
        let n = 24;
        let grid = |b: &SupportBox| {
            let mut v = Vec::new();
            for i in 0..=n {
                for j in 0..=n {
                    v.push(Point::new(
                        b.t0 + (b.t1 - b.t0) * i as f64 / n as f64,
                        b.x0 + (b.x1 - b.x0) * j as f64 / n as f64,
                    ));
                }
            }
            v
        };
        let (gf, gh) = (grid(f), grid(h));
        !gf.iter().any(|p| {
            gh.iter().any(|q| {
                let (u, v) = lightcone(*q, *p);
                u >= 0.0 && v >= 0.0
            })
        })
    }

    fn arb_box() -> impl Strategy<Value = SupportBox> {
        (-5.0..5.0f64, 0.1..2.0f64, -5.0..5.0f64, 0.1..2.0f64)
            .prop_map(|(t, dt, x, dx)| SupportBox::new(t, t + dt, x, x + dx))
    }

    proptest! {
        #[test]
        fn relation_reverses_under_swap(t in -10.0..10.0f64, x in -10.0..10.0f64) {
            let p = Point::new(t, x);
            let o = Point::new(0.3, -0.2);
            prop_assert_eq!(causal_relation(o, p), causal_relation(p, o).reverse());
        }

        #[test]
        fn minkowski_square_is_boost_invariant(t in -5.0..5.0f64, x in -5.0..5.0f64, th in -2.0..2.0f64) {
            let p = Point::new(t, x);
            let q = Point::new(0.7, 0.1);
            let a = minkowski_square(p, q);
            let b = minkowski_square(p.boost(th), q.boost(th));
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()) * th.cosh().powi(2));
        }

        #[test]
        fn box_ordering_matches_grid_search(f in arb_box(), h in arb_box()) {
            let exact = boxes_causally_ordered(&f, &h);
            // Grid search can only miss intersections, never invent them.
            if !brute_force_ordered(&f, &h) {
                prop_assert!(!exact);
            }
            if exact {
                prop_assert!(brute_force_ordered(&f, &h));
            }
        }

        #[test]
        fn mutual_ordering_implies_spacelike_boxes(f in arb_box(), h in arb_box()) {
            if boxes_causally_ordered(&f, &h) && boxes_causally_ordered(&h, &f) {
                for p in f.corners() {
                    for q in h.corners() {
                        prop_assert!(minkowski_square(p, q) < 0.0);
                    }
                }
            }
        }
    }
}
