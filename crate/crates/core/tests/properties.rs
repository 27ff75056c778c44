//! Property tests over randomized inputs.

use proptest::prelude::*;

use rrv_core::geom::{UnitQuaternion, Vector3};
use rrv_core::preprocess::{arc_length, normalize_scale};
use rrv_core::rrv::{rrv_distance, srvf, RrvDescriptor};

fn arb_unit_quaternion() -> impl Strategy<Value = UnitQuaternion<f64>> {
    (
        -1.0..1.0f64,
        -1.0..1.0f64,
        -1.0..1.0f64,
        -1.0..1.0f64,
    )
        .prop_filter_map("nonzero quaternion", |(w, x, y, z)| {
            let q = UnitQuaternion::new(w, x, y, z);
            if q.norm() > 0.1 {
                Some(q.normalized())
            } else {
                None
            }
        })
}

fn arb_vector() -> impl Strategy<Value = Vector3<f64>> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y, z)| Vector3::new(x, y, z))
}

fn arb_descriptor() -> impl Strategy<Value = RrvDescriptor<f64>> {
    (arb_unit_quaternion(), arb_vector())
        .prop_map(|(rotation, velocity)| RrvDescriptor { rotation, velocity })
}

proptest! {
    /// q and −q encode one rotation: their matrices coincide.
    #[test]
    fn antipodal_quaternions_share_a_matrix(q in arb_unit_quaternion()) {
        let a = q.to_matrix();
        let b = (-q).to_matrix();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((a.get(i, j) - b.get(i, j)).abs() < 1e-12);
            }
        }
    }

    /// Matrix round trip reproduces the rotation.
    #[test]
    fn quaternion_matrix_round_trip(q in arb_unit_quaternion()) {
        let m = q.to_matrix();
        let back = m.to_quaternion().to_matrix();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((m.get(i, j) - back.get(i, j)).abs() < 1e-9);
            }
        }
    }

    /// The squared norm of a square-root velocity is the original speed.
    #[test]
    fn srvf_norm_encodes_speed(v in arb_vector()) {
        prop_assume!(v.norm() > 1e-6);
        let s = srvf(&v);
        prop_assert!((s.norm_squared() - v.norm()).abs() < 1e-9);
    }

    /// Descriptor distance is a metric up to floating point: symmetric,
    /// zero on the diagonal, triangle inequality.
    #[test]
    fn descriptor_distance_is_metric_like(
        a in arb_descriptor(),
        b in arb_descriptor(),
        c in arb_descriptor(),
    ) {
        prop_assert_eq!(rrv_distance(&a, &a), 0.0);
        prop_assert!((rrv_distance(&a, &b) - rrv_distance(&b, &a)).abs() < 1e-15);
        prop_assert!(rrv_distance(&a, &c) <= rrv_distance(&a, &b) + rrv_distance(&b, &c) + 1e-12);
    }

    /// The distance ignores the quaternion sign on either side.
    #[test]
    fn descriptor_distance_ignores_hemisphere(a in arb_descriptor(), b in arb_descriptor()) {
        let flipped = RrvDescriptor { rotation: -b.rotation, velocity: b.velocity };
        prop_assert!((rrv_distance(&a, &b) - rrv_distance(&a, &flipped)).abs() < 1e-12);
    }

    /// Arc-length normalization is idempotent and hits unit length.
    #[test]
    fn scale_normalization_is_idempotent(points in proptest::collection::vec(arb_vector(), 2..40)) {
        prop_assume!(arc_length(&points) > 1e-9);
        let once = normalize_scale(&points).unwrap();
        prop_assert!((arc_length(&once) - 1.0).abs() < 1e-9);
        let twice = normalize_scale(&once).unwrap();
        for (p, q) in once.iter().zip(&twice) {
            prop_assert!((*p - *q).norm() < 1e-9);
        }
    }
}
