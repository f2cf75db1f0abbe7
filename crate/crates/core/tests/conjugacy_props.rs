//! Property suites for the conjugacy layer: the series behind `H`, fiber
//! dichotomy, the section, the normalized flow and the assembled leaf
//! conjugacy, on both the unperturbed and perturbed worked example.

mod common;

use common::{paper_system, rng};
use heisenlab_core::conjugacy::{
    build_leaf_conjugacy, gps_intersect, semiconjugacy, verify_leaf_conjugacy, CenterFlow,
    SectionSigma, UnstableRootSolver,
};
use heisenlab_core::heis::HPoint;
use rand::Rng;

#[test]
fn series_doubling_shrinks_below_old_tail() {
    let f = paper_system(0.05);
    let mut r = rng(401);
    let h1 = semiconjugacy(&f, 15).unwrap();
    let h2 = semiconjugacy(&f, 30).unwrap();
    for _ in 0..200 {
        let p = HPoint::new(r.gen::<f64>(), r.gen::<f64>(), r.gen::<f64>());
        let a = h1.eval(&p).unwrap();
        let b = h2.eval(&p).unwrap();
        let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        assert!(d <= 2.0 * h1.tail_bound);
    }
}

#[test]
fn fiber_dichotomy_h_vs_orbit_probe() {
    let f = paper_system(0.05);
    let h = semiconjugacy(&f, 25).unwrap();
    let mut r = rng(402);
    let mut agreements = 0usize;
    let total = 300usize;
    for i in 0..total {
        let p = HPoint::new(r.gen::<f64>(), r.gen::<f64>(), r.gen::<f64>());
        // Alternate same-leaf pairs (center translates) and generic pairs.
        let q = if i % 2 == 0 {
            HPoint::new(0.0, 0.0, r.gen_range(-3..4) as f64 / 2.0).mul(&p)
        } else {
            HPoint::new(r.gen::<f64>(), r.gen::<f64>(), r.gen::<f64>())
        };
        let via_h = h.center_leaf_test(&p, &q).unwrap();
        let via_probe = h.center_leaf_probe(&p, &q, 30).unwrap();
        assert_eq!(via_h, via_probe, "disagreement at pair {i}: {p:?} {q:?}");
        if i % 2 == 0 {
            assert!(via_h, "center translate must stay on its leaf");
        }
        agreements += 1;
    }
    assert_eq!(agreements, total);
}

#[test]
fn gps_monotone_along_grown_curves() {
    let f = paper_system(0.03);
    let h = semiconjugacy(&f, 25).unwrap();
    let mut r = rng(403);
    for _ in 0..10 {
        let p = HPoint::new(r.gen::<f64>(), r.gen::<f64>(), r.gen::<f64>() / 2.0);
        let solver = UnstableRootSolver::new(&f, &p, 3.0).unwrap();
        solver.check_monotone(&h).unwrap();
    }
}

#[test]
fn gps_intersection_found_and_stable_perturbed() {
    let f = paper_system(0.03);
    let h = semiconjugacy(&f, 25).unwrap();
    let p = HPoint::new(0.2, 0.3, 0.1);
    let q = HPoint::new(0.9, -0.4, 0.3);
    let r1 = gps_intersect(&f, &h, &p, &q).unwrap();
    assert!((h.u_coord(&r1).unwrap() - h.u_coord(&p).unwrap()).abs() < 1e-8);
    // Re-seed from a vertex of the grown curve.
    let solver = UnstableRootSolver::new(&f, &q, 2.0).unwrap();
    let pts = solver.curve().points();
    let q2 = pts[pts.len() / 5];
    let r2 = gps_intersect(&f, &h, &p, &q2).unwrap();
    assert!(r1.euclid_dist(&r2) < 1e-6, "spread {}", r1.euclid_dist(&r2));
}

#[test]
fn sigma_inverts_h_perturbed() {
    let f = paper_system(0.03);
    let h = semiconjugacy(&f, 25).unwrap();
    let mut sigma = SectionSigma::new(&f, &HPoint::IDENTITY).unwrap();
    let mut r = rng(404);
    for _ in 0..20 {
        let v = [r.gen_range(-0.5..1.5), r.gen_range(-0.5..1.5)];
        let s = sigma.eval(&f, &h, v).unwrap();
        let hv = h.eval(&s).unwrap();
        let err = ((hv[0] - v[0]).powi(2) + (hv[1] - v[1]).powi(2)).sqrt();
        assert!(err < 1e-8, "H(σ(v)) error {err}");
    }
}

#[test]
fn center_flow_normalization_perturbed() {
    let f = paper_system(0.05);
    let phi = CenterFlow::new(&f);
    let mut r = rng(405);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let p = HPoint::new(r.gen::<f64>(), r.gen::<f64>(), r.gen::<f64>() / 2.0);
        let q = phi.flow_raw(&p, 1.0).unwrap();
        worst = worst.max(q.euclid_dist(&HPoint::new(0.0, 0.0, 1.0).mul(&p)));
    }
    assert!(worst < 1e-6, "phi_1 residual {worst}");
}

#[test]
fn cmptleaf_translate_passes_center_test() {
    let f = paper_system(0.05);
    let h = semiconjugacy(&f, 25).unwrap();
    let mut r = rng(406);
    for _ in 0..100 {
        let p = HPoint::new(
            r.gen_range(-2.0..2.0),
            r.gen_range(-2.0..2.0),
            r.gen_range(-1.0..1.0),
        );
        let q = HPoint::new(0.0, 0.0, 0.5).mul(&p);
        assert!(h.center_leaf_test(&p, &q).unwrap());
    }
}

#[test]
fn leaf_conjugacy_perturbed_end_to_end() {
    let f = paper_system(0.03);
    let lc = build_leaf_conjugacy(&f, 25).unwrap();
    assert!(lc.corner_residual < 1e-6, "corner {}", lc.corner_residual);
    let report = verify_leaf_conjugacy(&lc, 12, 3, 99).unwrap();
    assert!(report.pass, "{report:?}");
    assert!(report.phi1_residual < 1e-6);
    assert!(report.seam_residual < 1e-6);
    assert!(report.equivariance_residual < 1e-6);
    assert_eq!(report.same_leaf_ok, report.leaves);
}

#[test]
fn vertical_lines_map_into_single_fibers() {
    let f = paper_system(0.03);
    let lc = build_leaf_conjugacy(&f, 25).unwrap();
    let k = 2.0;
    for (x, y) in [(0.2, 0.7), (0.8, 0.4)] {
        let mut vals = Vec::new();
        for j in 0..5 {
            let z = j as f64 / (5.0 * k);
            let hp = lc.eval(&HPoint::new(x, y, z)).unwrap();
            vals.push(lc.h.eval(&hp).unwrap());
        }
        for w in vals.windows(2) {
            let d = ((w[0][0] - w[1][0]).powi(2) + (w[0][1] - w[1][1]).powi(2)).sqrt();
            assert!(d < lc.h.fiber_tol(), "fiber spread {d}");
        }
        // The circle closes up on the quotient: the (0,0,1/k) translate is
        // h of the top of the segment.
        let bottom = lc.eval(&HPoint::new(x, y, 0.0)).unwrap();
        let top = lc.eval(&HPoint::new(x, y, 1.0 / k)).unwrap();
        let translate = HPoint::new(0.0, 0.0, 1.0 / k).mul(&bottom);
        assert!(top.euclid_dist(&translate) < 1e-6);
    }
}
