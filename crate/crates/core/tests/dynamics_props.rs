//! Property suites for the dynamics layer: equivariance, cocycle
//! consistency, splitting quality, invariant-curve growth and the targeted
//! edge cases of the verification suites.

mod common;

use common::{diagonal_system, lambda, paper_system, random_point, rng};
use heisenlab_core::dynamics::{
    estimate_constants, estimate_splitting, grow_cs_plaque, grow_unstable_curve, run_check,
    segment_crossings, splitting_at, udiam_fit, DiagonalView, GrowMode, VerifyParams,
};
use heisenlab_core::heis::{HPoint, Lattice};
use heisenlab_core::linalg::mat3_apply;
use rand::Rng;

#[test]
fn equivariance_of_apply_1k() {
    let f = paper_system(0.05);
    let mut r = rng(301);
    for _ in 0..1_000 {
        let p = random_point(&mut r, 2.0);
        let g = HPoint::new(
            r.gen_range(-3..4) as f64,
            r.gen_range(-3..4) as f64,
            r.gen_range(-6..7) as f64 / 2.0,
        );
        let lhs = f.apply(&g.mul(&p));
        let rhs = f.star(&g).mul(&f.apply(&p));
        assert!(lhs.euclid_dist(&rhs) < 1e-12 * (1.0 + lhs.max_abs_coord()));
    }
}

#[test]
fn inverse_round_trip_1k() {
    let f = paper_system(0.05);
    let mut r = rng(302);
    for _ in 0..1_000 {
        let p = random_point(&mut r, 2.0);
        let q = f.apply_inverse(&f.apply(&p)).unwrap();
        assert!(q.euclid_dist(&p) < 1e-10);
    }
}

#[test]
fn cocycle_products_match_composition_derivative() {
    // A finite difference straight through f^10 is hopeless (the unstable
    // stretch amplifies the baseline into the truncation error), so the
    // oracle propagates a renormalized nearby pair step by step and
    // accumulates growth factors. Both the total growth and the final
    // direction must match the product of the analytic step derivatives.
    use heisenlab_core::heis::{frame_coords, frame_to_ambient, FrameVector};
    let f = paper_system(0.03);
    let mut r = rng(303);
    let n = 10usize;
    let h = 1e-8;
    for _ in 0..12 {
        let p0 = random_point(&mut r, 1.0);
        for e in [[1.0, 0.1, -0.2], [0.05, 1.0, 0.3], [-0.2, 0.4, 1.0]] {
            let v0 = FrameVector::from_array(e).normalized();

            // Analytic: product of step derivatives, renormalized. The base
            // orbit is reduced mod Γ (the frame cocycle is deck-periodic).
            let mut v = v0.as_array();
            let mut log_analytic = 0.0;
            let mut cur = f.lattice().reduce(&p0).1;
            for _ in 0..n {
                let d = f.derivative_frame(&cur);
                let img = mat3_apply(&d, v);
                let nr = (img[0] * img[0] + img[1] * img[1] + img[2] * img[2]).sqrt();
                log_analytic += nr.ln();
                v = [img[0] / nr, img[1] / nr, img[2] / nr];
                cur = f.lattice().reduce(&f.apply(&cur)).1;
            }

            // Oracle: a pair at frame distance h, renormalized every step and
            // co-translated into the fundamental domain so the subtraction
            // below never fights growing coordinates.
            let amb0 = frame_to_ambient(&p0, &v0.scale(h));
            let mut a = p0;
            let mut b = HPoint::new(p0.x + amb0[0], p0.y + amb0[1], p0.z + amb0[2]);
            let mut log_fd = 0.0;
            let mut final_dir = v0;
            for _ in 0..n {
                let (gamma, ar) = f.lattice().reduce(&a);
                let g_inv = gamma.inv().point();
                a = f.apply(&ar);
                b = f.apply(&g_inv.mul(&b));
                let d = b.coord_sub(&a);
                let fc = frame_coords(&a, d);
                let nr = fc.norm();
                log_fd += (nr / h).ln();
                final_dir = fc.normalized();
                let dir = fc.scale(h / nr);
                let amb = frame_to_ambient(&a, &dir);
                b = HPoint::new(a.x + amb[0], a.y + amb[1], a.z + amb[2]);
            }

            assert!(
                (log_analytic - log_fd).abs() < 1e-6 * n as f64,
                "growth mismatch: {log_analytic} vs {log_fd}"
            );
            let angle = final_dir.line_angle_to(&FrameVector::from_array(v));
            assert!(angle < 1e-5, "direction mismatch {angle}");
        }
    }
}

#[test]
fn splitting_invariance_and_domination_at_amp_003() {
    let f = paper_system(0.03);
    let mut r = rng(304);
    let mut worst = 0.0f64;
    for _ in 0..25 {
        let p = HPoint::new(r.gen::<f64>(), r.gen::<f64>(), r.gen::<f64>() / 2.0);
        let s = estimate_splitting(&f, &p, 40).unwrap();
        worst = worst.max(s.max_residual());
        assert!(s.min_angle > 1e-3);
    }
    assert!(worst < 1e-6, "worst residual {worst}");

    let pts: Vec<HPoint> = (0..40)
        .map(|i| HPoint::new((i as f64 * 0.173) % 1.0, (i as f64 * 0.311) % 1.0, 0.2))
        .collect();
    let rep = estimate_constants(&f, &pts, 25, 40).unwrap();
    assert!(rep.ordering_ok);
    assert!(rep.domination_margin > 0.1, "margin {}", rep.domination_margin);
    // Per-sample center rates sit strictly inside (λ_s, μ).
    assert!(rep.constants.gamma < rep.constants.mu);
    assert!(rep.constants.gamma_hat > rep.constants.lambda_s);
}

#[test]
fn unperturbed_constants_reproduce_matrix_eigenvalues() {
    let f = paper_system(0.0);
    let pts: Vec<HPoint> = (0..10)
        .map(|i| HPoint::new(i as f64 / 10.0, (i as f64 * 0.7) % 1.0, 0.1))
        .collect();
    let rep = estimate_constants(&f, &pts, 30, 40).unwrap();
    assert!((rep.constants.mu - lambda()).abs() < 1e-10);
    assert!((rep.constants.lambda_s - 1.0 / lambda()).abs() < 1e-10);
    assert!((rep.constants.gamma - 1.0).abs() < 1e-10);
    assert!((rep.constants.gamma_hat - 1.0).abs() < 1e-10);
}

#[test]
fn diagonal_unstable_curve_is_vertical_line_in_y() {
    let f = diagonal_system();
    let p0 = HPoint::new(0.7, -0.3, 0.4);
    let c = grow_unstable_curve(&f, &p0, 3.0, 0.02, 30, GrowMode::Integrate).unwrap();
    for p in c.points() {
        let t = p.y - p0.y;
        assert!((p.x - p0.x).abs() < 1e-9);
        assert!((p.z - (p0.z + p0.x * t)).abs() < 1e-9);
    }
}

#[test]
fn udiam_growth_rate() {
    let f = paper_system(0.03);
    let (slope, c_fit, pass) = udiam_fit(&f, &HPoint::new(0.3, 0.4, 0.1), 12).unwrap();
    assert!(pass, "slope {slope}, C {c_fit}");
    assert!(slope >= (0.9 * lambda()).ln());
    assert!(c_fit > 0.0);
}

#[test]
fn halfspace_crossing_parity() {
    let f = paper_system(0.03);
    let view = DiagonalView::new(&f).unwrap();
    let p0 = HPoint::new(0.4, 0.3, 0.2);
    let plaque = grow_cs_plaque(&f, &p0, 2.0, 0.1, 24).unwrap();
    // Plaque π_u extent in the view.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for row in &plaque.rows {
        for p in row {
            let y = view.view(p).y;
            lo = lo.min(y);
            hi = hi.max(y);
        }
    }
    let r = hi - lo;
    let center = view.view(&p0);
    // Points displaced beyond R + 0.1 on either side are separated by the
    // plaque: the connecting segment crosses it an odd number of times.
    let above = HPoint::new(center.x, hi + r + 0.1, center.z);
    let below = HPoint::new(center.x, lo - r - 0.1, center.z);
    let crossings = segment_crossings(&plaque, &view, &below, &above);
    assert_eq!(crossings % 2, 1, "expected odd crossings, got {crossings}");
    // Two points on the same side are not separated.
    let above2 = HPoint::new(center.x + 0.1, hi + r + 0.2, center.z);
    let crossings_same = segment_crossings(&plaque, &view, &above, &above2);
    assert_eq!(crossings_same % 2, 0);
}

#[test]
fn squared_view_handles_negative_center_eigenvalue() {
    use heisenlab_core::auto::{from_derivative, GMatrix};
    use heisenlab_core::dynamics::{NilDiffeo, Perturbation};
    // det = -1: the view squares the system and reports λ².
    let auto = from_derivative(&GMatrix::from_block([[1.0, 1.0], [1.0, 0.0]])).unwrap();
    let f = NilDiffeo::new(auto, Perturbation::none(), Lattice::new(2)).unwrap();
    let view = DiagonalView::new(&f).unwrap();
    assert!(view.squared);
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    assert!((view.lambda - phi * phi).abs() < 1e-10);
    // The squared view is still a conjugation of f².
    let p = HPoint::new(0.2, -0.4, 0.3);
    let lhs = view.apply(&view.view(&p));
    let rhs = view.view(&f.apply(&f.apply(&p)));
    assert!(lhs.euclid_dist(&rhs) < 1e-9);
}

#[test]
fn xbound_adversarial_failure_exists() {
    // An X-wave with y-dependence: some boundary sample must violate the
    // invariance once x0 drops below the displacement budget.
    use heisenlab_core::auto::from_derivative;
    use heisenlab_core::dynamics::{
        FrameComponent, NilDiffeo, Perturbation, PerturbationTerm, WaveKind,
    };
    let auto = from_derivative(&common::paper_matrix()).unwrap();
    let pert = Perturbation::new(vec![PerturbationTerm::new(
        FrameComponent::X,
        0,
        1,
        WaveKind::Sin,
        0.05,
    )])
    .unwrap();
    let f = NilDiffeo::new(auto, pert, Lattice::new(2)).unwrap();
    let out = run_check(&f, "xbound", &VerifyParams { samples: 200, ..Default::default() }).unwrap();
    assert!(out.pass);
    assert_eq!(out.constants["adversarial_violation_found"], 1.0);
}

#[test]
fn splitting_matches_at_horizon_pair() {
    // Estimates at p and f(p) agree after one push-forward.
    let f = paper_system(0.03);
    let p = HPoint::new(0.2, 0.8, 0.3);
    let a = splitting_at(&f, &p, 40).unwrap();
    let b = splitting_at(&f, &f.apply(&p), 40).unwrap();
    let d = f.derivative_frame(&p);
    for (va, vb) in [(a.e_u, b.e_u), (a.e_s, b.e_s), (a.e_c, b.e_c)] {
        let pushed = heisenlab_core::heis::FrameVector::from_array(mat3_apply(&d, va.as_array()));
        assert!(pushed.line_angle_to(&vb) < 1e-5);
    }
}

#[test]
fn curve_modes_agree_on_length_ten() {
    let f = paper_system(0.05);
    let p0 = HPoint::new(0.25, 0.33, 0.11);
    let len = 10.0;
    let a = grow_unstable_curve(&f, &p0, len, 0.01, 28, GrowMode::Integrate).unwrap();
    let b = grow_unstable_curve(&f, &p0, len, 0.01, 28, GrowMode::Iterate).unwrap();
    let (sa, _) = heisenlab_core::dynamics::closest_param(&a, &p0);
    let (sb, _) = heisenlab_core::dynamics::closest_param(&b, &p0);
    let half = len / 2.0 * 0.9;
    let wa = a.window(sa - half, sa + half);
    let wb = b.window(sb - half, sb + half);
    let h = wa.hausdorff(&wb);
    assert!(h < 1e-4, "Hausdorff {h}");
}

#[test]
fn volume_growth_doubles_with_seed_length() {
    use heisenlab_core::dynamics::{fit_intercept, tube_volume};
    let f = paper_system(0.0);
    let view = DiagonalView::new(&f).unwrap();
    let fit_c = |len: f64| -> f64 {
        let curve0 = view
            .unstable_curve_view(&HPoint::new(0.3, 0.4, 0.1), len, 0.02, 28)
            .unwrap();
        let mut inner = curve0.mapped(|p| view.unview(p));
        let mut logs = Vec::new();
        for n in 0..=4 {
            let vc = inner.mapped(|p| view.view(p)).resampled(0.05);
            logs.push(tube_volume(&vc, 1.0, 60_000, 7 + n).ln());
            inner = inner.mapped(|p| f.apply(p)).resampled(0.05);
        }
        // Skip the cap-dominated early points when fitting the intercept.
        fit_intercept(&logs[2..])
    };
    let c1 = fit_c(1.0);
    let c2 = fit_c(2.0);
    let ratio = (c2 - c1).exp();
    assert!(
        (1.5..2.5).contains(&ratio),
        "length-2 vs length-1 fitted C ratio {ratio}"
    );
}
