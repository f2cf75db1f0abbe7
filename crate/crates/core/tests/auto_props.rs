//! Property suites for the automorphism lab: homomorphism identities,
//! normal forms against the quadratic-formula oracle, lattice preservation,
//! algebraic-part recovery and frame constancy of derivatives.

mod common;

use common::{char_roots, lambda, paper_auto, paper_matrix, paper_system, random_point, rng};
use heisenlab_core::auto::{
    algebraic_part, conjugate_to_diagonal, from_derivative, is_partially_hyperbolic,
    lattice_normalizer, preserves_lattice, swap_automorphism, GMatrix,
};
use heisenlab_core::heis::{frame_coords, frame_to_ambient, FrameVector, HPoint, Lattice};
use rand::Rng;

#[test]
fn homomorphism_identity_1k_pairs_in_box() {
    let phi = from_derivative(&GMatrix::new([[2.0, 1.0], [1.0, 1.0]], 0.4, -0.7)).unwrap();
    let mut r = rng(201);
    for _ in 0..1_000 {
        let u = random_point(&mut r, 5.0);
        let v = random_point(&mut r, 5.0);
        let lhs = phi.apply(&u.mul(&v));
        let rhs = phi.apply(&u).mul(&phi.apply(&v));
        assert!(lhs.euclid_dist(&rhs) < 1e-12 * (1.0 + lhs.max_abs_coord()));
    }
}

#[test]
fn eigenvalues_against_characteristic_oracle() {
    let cases: [[[f64; 2]; 2]; 4] = [
        [[2.0, 1.0], [1.0, 1.0]],
        [[1.0, 1.0], [1.0, 0.0]],
        [[3.0, 1.0], [2.0, 1.0]],
        [[2.0, 1.0], [3.0, 2.0]],
    ];
    for a in cases {
        let check = is_partially_hyperbolic(&GMatrix::from_block(a));
        let oracle = char_roots(a).unwrap();
        let got = check.eigenvalues.unwrap();
        assert!((got[0] - oracle[0]).abs() < 1e-12);
        assert!((got[1] - oracle[1]).abs() < 1e-12);
        assert!((got[2] - oracle[0] * oracle[1]).abs() < 1e-12);
        assert!(check.partially_hyperbolic);
    }
    // Rotation block: complex pair, not partially hyperbolic.
    let rot = is_partially_hyperbolic(&GMatrix::from_block([[0.0, -1.0], [1.0, 0.0]]));
    assert!(!rot.partially_hyperbolic);
    assert!(rot.eigenvalues.is_none());
}

#[test]
fn normal_form_on_random_ph_matrices() {
    let mut r = rng(202);
    let mut tested = 0;
    while tested < 100 {
        // Random integer-ish unimodular-ish blocks plus random last rows;
        // keep only the partially hyperbolic ones with center +1.
        let a = [
            [r.gen_range(1..4) as f64, r.gen_range(0..3) as f64],
            [r.gen_range(0..3) as f64, r.gen_range(1..4) as f64],
        ];
        let t = GMatrix::new(a, r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0));
        let check = is_partially_hyperbolic(&t);
        if !check.partially_hyperbolic || t.det_block() < 0.0 {
            continue;
        }
        tested += 1;
        let (p, d) = conjugate_to_diagonal(&t).unwrap();
        let prod = p.mul(&t).mul(&p.inverse().unwrap());
        assert!(prod.max_abs_diff(&d) < 1e-10, "residual {}", prod.max_abs_diff(&d));
        let ev = check.eigenvalues.unwrap();
        assert!((d.a[0][0] - ev[0]).abs() < 1e-10);
        assert!((d.a[1][1] - ev[1]).abs() < 1e-10);
    }
}

#[test]
fn composition_covariance_random() {
    let mut r = rng(203);
    for _ in 0..200 {
        let m1 = GMatrix::new(
            [
                [r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)],
                [r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)],
            ],
            r.gen_range(-1.0..1.0),
            r.gen_range(-1.0..1.0),
        );
        let m2 = GMatrix::new(
            [
                [r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)],
                [r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)],
            ],
            r.gen_range(-1.0..1.0),
            r.gen_range(-1.0..1.0),
        );
        if m1.det_block().abs() < 0.1 || m2.det_block().abs() < 0.1 {
            continue;
        }
        let p1 = from_derivative(&m1).unwrap();
        let p2 = from_derivative(&m2).unwrap();
        assert!(p1.compose(&p2).matrix().max_abs_diff(&m1.mul(&m2)) < 1e-12);
    }
}

#[test]
fn algebraic_part_recovers_generator_exactly() {
    // Unperturbed: f is its own algebraic part.
    let f0 = paper_system(0.0);
    let mut r = rng(204);
    let phi = algebraic_part(
        &|p: &HPoint| f0.apply(p),
        f0.lattice(),
        8,
        |_| random_point(&mut r, 1.0),
    )
    .unwrap();
    assert!(phi.matrix().max_abs_diff(&paper_matrix()) < 1e-12);

    // Perturbed at 0.05: the perturbation displacement stays under the
    // rounding gap, so recovery is exact.
    let f = paper_system(0.05);
    let mut r2 = rng(205);
    let phi2 = algebraic_part(
        &|p: &HPoint| f.apply(p),
        f.lattice(),
        8,
        |_| random_point(&mut r2, 1.0),
    )
    .unwrap();
    assert_eq!(phi2.matrix().a, paper_matrix().a);
    assert_eq!(phi2.matrix().alpha, 0.0);
    assert_eq!(phi2.matrix().beta, 0.0);
    // Unit determinant, exactly.
    assert_eq!(phi2.matrix().det_block().abs(), 1.0);
}

#[test]
fn algebraic_part_rejects_non_equivariant_maps() {
    // A map that is not deck-equivariant: a fixed irrational translation.
    let f = |p: &HPoint| HPoint::new(p.x * 1.3 + 0.21, p.y, p.z);
    let lat = Lattice::new(1);
    let mut r = rng(206);
    let res = algebraic_part(&f, &lat, 6, |_| random_point(&mut r, 1.0));
    assert!(res.is_err());
}

#[test]
fn unifbdd_displacement_stable_under_sample_doubling() {
    use heisenlab_core::auto::displacement_log_norm;
    let f = paper_system(0.05);
    let phi = paper_auto();
    let sup_on_grid = |n: usize| -> f64 {
        let mut sup = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let p = HPoint::new(i as f64 / n as f64, j as f64 / n as f64, 0.1);
                sup = sup.max(displacement_log_norm(&|q| f.apply(q), &phi, &p));
            }
        }
        sup
    };
    let a = sup_on_grid(64);
    let b = sup_on_grid(91); // ~2x the sample count
    assert!(a.is_finite() && a > 0.0);
    assert!((a - b).abs() / b < 0.01, "sup {a} vs {b}");
}

#[test]
fn normalizer_maps_arbitrary_generators_to_standard() {
    // a, b span a skewed copy of the integer lattice; [a, b] = c^2.
    let a = HPoint::new(1.0, 0.0, 0.25);
    let b = HPoint::new(1.0, 1.0, 0.0);
    let comm = a.commutator(&b);
    let k = 2u32;
    let c = HPoint::new(0.0, 0.0, comm.z / k as f64);
    let phi = lattice_normalizer(&a, &b, &c, k).unwrap();
    let lat = Lattice::new(k);
    assert!(phi.apply(&a).euclid_dist(&HPoint::new(1.0, 0.0, 0.0)) < 1e-10);
    assert!(phi.apply(&b).euclid_dist(&HPoint::new(0.0, 1.0, 0.0)) < 1e-10);
    assert!(phi.apply(&c).euclid_dist(&HPoint::new(0.0, 0.0, 0.5)) < 1e-10);
    // Images of arbitrary words in the generators are lattice members.
    let w = a.mul(&b).mul(&a.inv()).mul(&c);
    assert!(lat.contains(&phi.apply(&w), 1e-9));
}

#[test]
fn swap_homomorphism_residual() {
    let s = swap_automorphism();
    let mut r = rng(207);
    for _ in 0..1_000 {
        let u = random_point(&mut r, 3.0);
        let v = random_point(&mut r, 3.0);
        let lhs = s.apply(&u.mul(&v));
        let rhs = s.apply(&u).mul(&s.apply(&v));
        assert!(lhs.euclid_dist(&rhs) < 1e-12);
        // π_u ∘ Φ = π_s.
        assert!((s.apply(&u).y - u.x).abs() < 1e-15);
    }
}

#[test]
fn derivative_is_frame_constant() {
    // The frame-to-frame derivative of an automorphism is the same matrix at
    // every point: measured by finite differences at 100 random points.
    let phi = from_derivative(&GMatrix::new([[2.0, 1.0], [1.0, 1.0]], 0.3, 0.8)).unwrap();
    let m = phi.matrix().as_mat3();
    let mut r = rng(208);
    let h = 1e-6;
    let mut max_var = 0.0f64;
    for _ in 0..100 {
        let p = random_point(&mut r, 3.0);
        let fp = phi.apply(&p);
        for col in 0..3 {
            let mut e = [0.0; 3];
            e[col] = 1.0;
            let amb = frame_to_ambient(&p, &FrameVector::from_array(e));
            let plus = phi.apply(&HPoint::new(
                p.x + h * amb[0],
                p.y + h * amb[1],
                p.z + h * amb[2],
            ));
            let minus = phi.apply(&HPoint::new(
                p.x - h * amb[0],
                p.y - h * amb[1],
                p.z - h * amb[2],
            ));
            let d = plus.coord_sub(&minus);
            let fc = frame_coords(&fp, [d[0] / (2.0 * h), d[1] / (2.0 * h), d[2] / (2.0 * h)]);
            let got = [fc.vx, fc.vy, fc.vz];
            for row in 0..3 {
                max_var = max_var.max((got[row] - m[row][col]).abs());
            }
        }
    }
    assert!(max_var < 1e-7, "frame constancy variance {max_var}");
}

#[test]
fn paper_lattice_preservation_example() {
    let phi = paper_auto();
    assert!(preserves_lattice(&phi, &Lattice::new(2)));
    assert!(!preserves_lattice(&phi, &Lattice::new(1)));
    // Φ(0,1,0) = (1,1,1/2) is the witness for k = 1.
    let img = phi.apply(&HPoint::new(0.0, 1.0, 0.0));
    assert!(img.euclid_dist(&HPoint::new(1.0, 1.0, 0.5)) < 1e-15);
    assert!(!Lattice::new(1).contains(&img, 1e-9));
}

#[test]
fn unit_determinant_for_lattice_preserving_systems() {
    for m in [
        paper_matrix(),
        GMatrix::from_block([[1.0, 1.0], [1.0, 0.0]]),
        GMatrix::from_block([[2.0, 1.0], [3.0, 2.0]]),
    ] {
        let f = from_derivative(&m).unwrap();
        let mut r = rng(209);
        let k = 2;
        let rec = algebraic_part(
            &|p: &HPoint| f.apply(p),
            &Lattice::new(k),
            6,
            |_| random_point(&mut r, 1.0),
        )
        .unwrap();
        assert_eq!(rec.matrix().det_block().abs(), 1.0);
    }
}

#[test]
fn conjugation_respects_lambda_ordering() {
    // The shear example from the normal-form construction.
    let t = GMatrix::new([[2.0, 1.0], [1.0, 1.0]], 1.0, 0.0);
    let (p, d) = conjugate_to_diagonal(&t).unwrap();
    assert!((d.a[0][0] - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-12);
    assert!((d.a[1][1] - lambda()).abs() < 1e-12);
    let prod = p.mul(&t).mul(&p.inverse().unwrap());
    assert!(prod.max_abs_diff(&d) < 1e-10);
}
