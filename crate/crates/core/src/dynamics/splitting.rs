//! Finite-horizon estimation of the invariant splitting `E^u ⊕ E^c ⊕ E^s`
//! and of the partial-hyperbolicity constants.
//!
//! Directions come from power iteration of the frame cocycle along reduced
//! orbits: the unstable vector is the forward push of a generic vector from
//! `f⁻ⁿ(p)`, the stable vector the backward pull from `fⁿ(p)`, and the
//! center is the intersection of the forward-pushed and backward-pulled
//! generic planes (propagated through the adjugate action on normals).

use super::NilDiffeo;
use crate::error::{Error, Result};
use crate::heis::{FrameVector, HPoint};
use crate::linalg::{mat3_adjugate, mat3_apply, mat3_inv, mat3_transpose};

#[derive(Debug, Clone, Copy)]
pub struct SplittingParams {
    pub horizon: usize,
}

impl Default for SplittingParams {
    fn default() -> Self {
        SplittingParams { horizon: 40 }
    }
}

/// Estimated splitting at a point, with the per-bundle invariance residuals
/// (angle between the pushed vector and the estimate at the image point).
#[derive(Debug, Clone, Copy)]
pub struct FrameSplitting {
    pub e_u: FrameVector,
    pub e_c: FrameVector,
    pub e_s: FrameVector,
    pub horizon: usize,
    /// Minimum pairwise angle between the three directions, radians.
    pub min_angle: f64,
    pub residual_u: f64,
    pub residual_c: f64,
    pub residual_s: f64,
}

impl FrameSplitting {
    pub fn max_residual(&self) -> f64 {
        self.residual_u.max(self.residual_c).max(self.residual_s)
    }
}

/// Splitting directions without residuals; the cheap building block used by
/// curve growers.
#[derive(Debug, Clone, Copy)]
pub struct SplittingCore {
    pub e_u: FrameVector,
    pub e_c: FrameVector,
    pub e_s: FrameVector,
    pub min_angle: f64,
}

const DEGENERATE_ANGLE: f64 = 1e-6;

/// Seed vector/normals for the power iterations. Fixed odd directions so the
/// generic-position assumption is deterministic.
const SEED_VECTOR: [f64; 3] = [0.537, 0.731, 0.421];
const SEED_NORMAL: [f64; 3] = [0.613, 0.459, 0.642];

fn normalize3(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn orient(v: FrameVector) -> FrameVector {
    // Deterministic sign: largest-magnitude component positive.
    let a = [v.vx.abs(), v.vy.abs(), v.vz.abs()];
    let idx = if a[0] >= a[1] && a[0] >= a[2] {
        0
    } else if a[1] >= a[2] {
        1
    } else {
        2
    };
    let comp = [v.vx, v.vy, v.vz][idx];
    if comp < 0.0 {
        v.scale(-1.0)
    } else {
        v
    }
}

/// Backward orbit of `p` (reduced when the system descends to the quotient),
/// as base points for the cocycle: index `j` holds `f^{-j}(p)` mod `Γ`.
fn backward_points(f: &NilDiffeo, p: &HPoint, n: usize) -> Result<Vec<HPoint>> {
    if f.is_lattice_equivariant() {
        f.orbit_reduced_backward(p, n)
    } else {
        let mut out = Vec::with_capacity(n + 1);
        let mut cur = *p;
        out.push(cur);
        for _ in 0..n {
            cur = f.apply_inverse(&cur)?;
            out.push(cur);
        }
        Ok(out)
    }
}

fn forward_points(f: &NilDiffeo, p: &HPoint, n: usize) -> Vec<HPoint> {
    if f.is_lattice_equivariant() {
        f.orbit_reduced(p, n)
    } else {
        f.orbit(p, n)
    }
}

/// Estimates the three directions at `p` with the given horizon.
pub fn splitting_at(f: &NilDiffeo, p: &HPoint, horizon: usize) -> Result<SplittingCore> {
    assert!(horizon >= 1, "horizon must be at least 1");
    let bwd = backward_points(f, p, horizon)?;
    let fwd = forward_points(f, p, horizon);

    // Unstable vector and cu-plane normal: push forward from f^{-n}(p).
    let mut v = normalize3(SEED_VECTOR);
    let mut n_cu = normalize3(SEED_NORMAL);
    for j in (1..=horizon).rev() {
        let d = f.derivative_frame(&bwd[j]);
        v = normalize3(mat3_apply(&d, v));
        n_cu = normalize3(mat3_apply(&mat3_transpose(&mat3_adjugate(&d)), n_cu));
    }

    // Stable vector and cs-plane normal: pull back from f^{n}(p).
    let mut w = normalize3(SEED_VECTOR);
    let mut n_cs = normalize3(SEED_NORMAL);
    for j in (0..horizon).rev() {
        let d = f.derivative_frame(&fwd[j]);
        let d_inv = mat3_inv(&d).ok_or(Error::SingularBlock { det: 0.0 })?;
        w = normalize3(mat3_apply(&d_inv, w));
        n_cs = normalize3(mat3_apply(&mat3_transpose(&d), n_cs));
    }

    let e_u = orient(FrameVector::from_array(v));
    let e_s = orient(FrameVector::from_array(w));
    let cs = FrameVector::from_array(n_cs);
    let cu = FrameVector::from_array(n_cu);
    let cross = cs.cross(&cu);
    let plane_angle = cross.norm() / (cs.norm() * cu.norm());
    if plane_angle < DEGENERATE_ANGLE {
        return Err(Error::SplittingDegenerate { angle: plane_angle });
    }
    let e_c = orient(cross.normalized());

    let min_angle = e_u
        .line_angle_to(&e_c)
        .min(e_u.line_angle_to(&e_s))
        .min(e_c.line_angle_to(&e_s));
    Ok(SplittingCore { e_u, e_c, e_s, min_angle })
}

/// Full estimate with invariance residuals: the splitting is estimated at
/// `p` and at `f(p)` with the same horizon and the pushed directions are
/// compared against the fresh estimates.
pub fn estimate_splitting(f: &NilDiffeo, p: &HPoint, horizon: usize) -> Result<FrameSplitting> {
    let here = splitting_at(f, p, horizon)?;
    let fp = f.apply(p);
    let there = splitting_at(f, &fp, horizon)?;
    let d = f.derivative_frame(p);
    let push = |v: &FrameVector| FrameVector::from_array(mat3_apply(&d, v.as_array()));
    let residual_u = push(&here.e_u).line_angle_to(&there.e_u);
    let residual_c = push(&here.e_c).line_angle_to(&there.e_c);
    let residual_s = push(&here.e_s).line_angle_to(&there.e_s);
    Ok(FrameSplitting {
        e_u: here.e_u,
        e_c: here.e_c,
        e_s: here.e_s,
        horizon,
        min_angle: here.min_angle,
        residual_u,
        residual_c,
        residual_s,
    })
}

/// The constants of the partial-hyperbolicity definition, as estimated from
/// finite-time growth rates.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PHConstants {
    pub lambda_s: f64,
    pub gamma_hat: f64,
    pub gamma: f64,
    pub mu: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

impl PHConstants {
    /// The defining ordering `0 < λ < γ̂ ≤ 1 ≤ γ < μ`, `C ≥ 1`.
    pub fn ordering_holds(&self) -> bool {
        0.0 < self.lambda_s
            && self.lambda_s < self.gamma_hat
            && self.gamma_hat <= 1.0
            && 1.0 <= self.gamma
            && self.gamma < self.mu
            && self.c >= 1.0
    }

    /// Smallest log-rate gap between the center envelope and the hyperbolic
    /// rates.
    pub fn domination_margin(&self) -> f64 {
        (self.mu.ln() - self.gamma.ln()).min(self.gamma_hat.ln() - self.lambda_s.ln())
    }
}

/// Outcome of [`estimate_constants`]: the constants plus the worst-sample
/// diagnostics. `ordering_ok == false` flags "not absolutely partially
/// hyperbolic at this resolution"; nothing passes silently.
#[derive(Debug, Clone, Copy)]
pub struct ConstantsReport {
    pub constants: PHConstants,
    pub ordering_ok: bool,
    /// Min over samples of the per-sample log gap between bundles.
    pub domination_margin: f64,
    pub samples: usize,
    pub horizon: usize,
}

/// Finite-time growth-rate extrema of `‖Dfⁿ v‖^{1/n}` over a sample set, for
/// `v` in each estimated bundle.
///
/// The unstable and center vectors are iterated forward; the stable vector is
/// iterated backward, where it dominates, and its forward rate is the
/// reciprocal — iterating a stable vector forward would drown in unstable
/// contamination after a few steps. `mu` is the minimum unstable rate,
/// `lambda_s` the maximum stable rate, the center envelope is widened to
/// include 1 (any valid bounds must contain it), and `C` is the worst
/// finite-time ratio against those rates, clamped below by 1.
pub fn estimate_constants(
    f: &NilDiffeo,
    sample_points: &[HPoint],
    n: usize,
    split_horizon: usize,
) -> Result<ConstantsReport> {
    assert!(n >= 1);
    let mut rates_u = Vec::with_capacity(sample_points.len());
    let mut rates_s = Vec::with_capacity(sample_points.len());
    let mut rates_c = Vec::with_capacity(sample_points.len());
    // Partial log-norms per sample: forward for u/c, backward for s.
    let mut partial: Vec<[Vec<f64>; 3]> = Vec::with_capacity(sample_points.len());
    let mut domination_margin = f64::INFINITY;

    for p in sample_points {
        let core = splitting_at(f, p, split_horizon)?;
        let fwd = forward_points(f, p, n);
        let bwd = backward_points(f, p, n)?;

        let mut logs_u = Vec::with_capacity(n);
        let mut logs_c = Vec::with_capacity(n);
        let mut vu = core.e_u.as_array();
        let mut vc = core.e_c.as_array();
        let mut acc_u = 0.0;
        let mut acc_c = 0.0;
        for pt in fwd.iter().take(n) {
            let d = f.derivative_frame(pt);
            let iu = mat3_apply(&d, vu);
            let nu = (iu[0] * iu[0] + iu[1] * iu[1] + iu[2] * iu[2]).sqrt();
            acc_u += nu.ln();
            logs_u.push(acc_u);
            vu = [iu[0] / nu, iu[1] / nu, iu[2] / nu];
            let ic = mat3_apply(&d, vc);
            let nc = (ic[0] * ic[0] + ic[1] * ic[1] + ic[2] * ic[2]).sqrt();
            acc_c += nc.ln();
            logs_c.push(acc_c);
            vc = [ic[0] / nc, ic[1] / nc, ic[2] / nc];
        }

        // Backward: v ← Df(f^{-(j+1)}p)^{-1} v pulls the stable vector along
        // the backward orbit, where it expands at rate 1/λ_s.
        let mut logs_s_bwd = Vec::with_capacity(n);
        let mut vs = core.e_s.as_array();
        let mut acc_s = 0.0;
        for j in 0..n {
            let d = f.derivative_frame(&bwd[j + 1]);
            let d_inv = mat3_inv(&d).ok_or(Error::SingularBlock { det: 0.0 })?;
            let is = mat3_apply(&d_inv, vs);
            let ns = (is[0] * is[0] + is[1] * is[1] + is[2] * is[2]).sqrt();
            acc_s += ns.ln();
            logs_s_bwd.push(acc_s);
            vs = [is[0] / ns, is[1] / ns, is[2] / ns];
        }

        let ru = (acc_u / n as f64).exp();
        let rc = (acc_c / n as f64).exp();
        let rs = (-acc_s / n as f64).exp();
        domination_margin = domination_margin.min((ru.ln() - rc.ln()).min(rc.ln() - rs.ln()));
        rates_u.push(ru);
        rates_c.push(rc);
        rates_s.push(rs);
        partial.push([logs_u, logs_c, logs_s_bwd]);
    }

    let mu = rates_u.iter().cloned().fold(f64::INFINITY, f64::min);
    let lambda_s = rates_s.iter().cloned().fold(0.0f64, f64::max);
    let gamma = rates_c.iter().cloned().fold(1.0f64, f64::max);
    let gamma_hat = rates_c.iter().cloned().fold(1.0f64, f64::min);

    // Worst finite-time ratio against the global rates. The stable ratios use
    // the backward inequality ‖Df⁻ᵏ v‖ ≤ C λ_s⁻ᵏ for v ∈ E^s.
    let mut c: f64 = 1.0;
    for logsets in &partial {
        for (k, ((lu, lc), ls_b)) in logsets[0]
            .iter()
            .zip(&logsets[1])
            .zip(&logsets[2])
            .enumerate()
        {
            let kk = (k + 1) as f64;
            c = c.max((kk * mu.ln() - lu).exp());
            c = c.max((ls_b + kk * lambda_s.ln()).exp());
            c = c.max((lc - kk * gamma.ln()).exp());
            c = c.max((kk * gamma_hat.ln() - lc).exp());
        }
    }

    let constants = PHConstants { lambda_s, gamma_hat, gamma, mu, c };
    Ok(ConstantsReport {
        ordering_ok: constants.ordering_holds(),
        domination_margin,
        samples: sample_points.len(),
        horizon: n,
        constants,
    })
}
