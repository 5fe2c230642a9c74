use proptest::prelude::*;
use sglab::geometry::{causal_relation, lightcone, CausalRelation};
use sglab::propagators::{feynman, pauli_jordan, wightman_w};
use sglab::thirring::{dual_star_kernel, exchange_phase, DualVertexWord};
use sglab::vertex::{star_kernel, tord_kernel, VertexWord};
use sglab::{Complex64, Point};

fn off_null_pair() -> impl Strategy<Value = (Point, Point)> {
    (-4.0..4.0f64, -4.0..4.0f64, -4.0..4.0f64, -4.0..4.0f64)
        .prop_map(|(t, x, s, y)| (Point::new(t, x), Point::new(s, y)))
        .prop_filter("off the light cone", |(p, q)| {
            let (u, v) = lightcone(*p, *q);
            u.abs() > 1e-3 && v.abs() > 1e-3
        })
}

fn close(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= 1e-11 * a.norm().max(b.norm()).max(1.0)
}

proptest! {
    #[test]
    fn star_kernel_is_the_exponentiated_two_point_function(
        (x, y) in off_null_pair(), a in -2.0..2.0f64, b in -2.0..2.0f64, hbar in 0.2..2.0f64,
    ) {
        let k = star_kernel(&VertexWord::single(a, x), &VertexWord::single(b, y), hbar).unwrap().kernel;
        let w = wightman_w(x, y, 1.0, 0.0).unwrap().value;
        prop_assert!(close(k, (-w * (hbar * a * b)).exp()));
    }

    #[test]
    fn exchanging_vertices_gives_the_commutator_phase((x, y) in off_null_pair(), a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let xy = star_kernel(&VertexWord::single(a, x), &VertexWord::single(b, y), 1.0).unwrap().kernel;
        let yx = star_kernel(&VertexWord::single(b, y), &VertexWord::single(a, x), 1.0).unwrap().kernel;
        let phase = Complex64::new(0.0, -a * b * pauli_jordan(x, y)).exp();
        prop_assert!(close(xy / yx, phase));
        // Scalar exponentials are dual words without dual charge.
        prop_assert!(close(exchange_phase(a, 0.0, b, 0.0, x, y), phase));
    }

    #[test]
    fn time_ordering_picks_the_later_point_first((x, y) in off_null_pair(), a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let t = tord_kernel(&[a, b], &[x, y], 1.0).unwrap();
        let (first, second) = if x.t >= y.t { ((a, x), (b, y)) } else { ((b, y), (a, x)) };
        let s = star_kernel(&VertexWord::single(first.0, first.1), &VertexWord::single(second.0, second.1), 1.0).unwrap().kernel;
        prop_assert!(close(t, s));
        if causal_relation(x, y) == CausalRelation::SpacelikeSeparated {
            prop_assert!(feynman(x, y, 1.0, 0.0).unwrap().value.im.abs() < 1e-15);
        }
    }

    #[test]
    fn star_kernels_are_associative(
        (x, y) in off_null_pair(), (z, _) in off_null_pair(),
        a in -1.5..1.5f64, b in -1.5..1.5f64, c in -1.5..1.5f64,
    ) {
        let (wa, wb, wc) = (VertexWord::single(a, x), VertexWord::single(b, y), VertexWord::single(c, z));
        let Ok(ab) = star_kernel(&wa, &wb, 1.0) else { return Ok(()) };
        let Ok(bc) = star_kernel(&wb, &wc, 1.0) else { return Ok(()) };
        let Ok(left) = star_kernel(&ab.merged, &wc, 1.0) else { return Ok(()) };
        let Ok(right) = star_kernel(&wa, &bc.merged, 1.0) else { return Ok(()) };
        prop_assert!(close(ab.kernel * left.kernel, bc.kernel * right.kernel));
    }

    #[test]
    fn dual_words_agree_with_scalar_words_on_several_factors(
        (x, y) in off_null_pair(), (z, w) in off_null_pair(), a in -1.5..1.5f64, b in -1.5..1.5f64,
    ) {
        let pts = [(x, z), (x, w), (y, z), (y, w)];
        prop_assume!(pts.iter().all(|&(p, q)| { let (u, v) = lightcone(p, q); u.abs() > 1e-3 && v.abs() > 1e-3 }));
        let d1 = DualVertexWord { terms: vec![(a, 0.0, x), (b, 0.0, y)], prefactor: Complex64::new(1.0, 0.0) };
        let d2 = DualVertexWord { terms: vec![(b, 0.0, z), (a, 0.0, w)], prefactor: Complex64::new(1.0, 0.0) };
        let s1 = VertexWord { terms: vec![(a, x), (b, y)], prefactor: Complex64::new(1.0, 0.0) };
        let s2 = VertexWord { terms: vec![(b, z), (a, w)], prefactor: Complex64::new(1.0, 0.0) };
        let dual = dual_star_kernel(&d1, &d2).unwrap().kernel;
        let scalar = star_kernel(&s1, &s2, 1.0).unwrap().kernel;
        prop_assert!(close(dual, scalar));
    }
}
