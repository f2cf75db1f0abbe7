//! From a lattice-preserving system to its induced hyperbolic toral
//! automorphism: the semiconjugacy `H` as a truncated eigen-split series,
//! center-leaf membership tests, the section of `H`, the normalized center
//! flow and the equivariant leaf conjugacy.

mod flow;
mod leaf;
mod section;

pub use flow::CenterFlow;
pub use leaf::{build_leaf_conjugacy, verify_leaf_conjugacy, LeafConjugacy, LeafConjugacyReport};
pub use section::{gps_intersect, SectionSigma, UnstableRootSolver};

use crate::dynamics::NilDiffeo;
use crate::error::{Error, Result};
use crate::heis::{proj_plane, HPoint};
use crate::linalg::{mat2_apply, mat2_eigenvalues, mat2_eigenvector, Mat2};

/// Plane displacement `δ(p) = P(f(p)) − A·P(p)` of a lift against its
/// algebraic part. Deck-periodic and bounded; identically zero exactly when
/// the perturbation's horizontal waves vanish.
pub fn displacement(f: &NilDiffeo, p: &HPoint) -> [f64; 2] {
    let a = f.auto().a;
    let fp = f.apply(p);
    let ap = mat2_apply(&a, proj_plane(p));
    [fp.x - ap[0], fp.y - ap[1]]
}

/// Evaluator of the semiconjugacy `H : H → R²` with `H ∘ f = A ∘ H`,
/// built as `P` plus a correction series split along the eigenbasis of `A`:
/// the unstable component sums the forward orbit with weights `λ₂^{-(n+1)}`,
/// the stable component the backward orbit with weights `λ₁^{n-1}`.
///
/// The series is used exactly as it comes out: subtracting `H(0,0,0)` to
/// recenter the origin would break the conjugacy identity (no nonzero
/// translate commutes with a hyperbolic `A`), and with it the leaf-conjugacy
/// property downstream. Deck equivariance `H(γ·p) = H(p) + P(γ)` holds
/// regardless, and the value at the origin is exposed for presentation.
pub struct SemiConjugacy<'a> {
    f: &'a NilDiffeo,
    pub a: Mat2,
    pub lambda_s: f64,
    pub lambda_u: f64,
    /// Right eigenvectors of `A`.
    pub v_s: [f64; 2],
    pub v_u: [f64; 2],
    /// Dual covectors: `w_s·v_s = 1`, `w_s·v_u = 0`, and symmetrically.
    pub w_s: [f64; 2],
    pub w_u: [f64; 2],
    pub truncation: usize,
    pub tail_bound: f64,
    pub delta_sup: f64,
    origin_value: [f64; 2],
}

/// Builds the truncated series evaluator. `truncation` is the number of
/// orbit terms on each side.
pub fn semiconjugacy(f: &NilDiffeo, truncation: usize) -> Result<SemiConjugacy<'_>> {
    assert!(truncation >= 1);
    if !f.is_lattice_equivariant() {
        return Err(Error::LatticeNotPreserved);
    }
    let a = f.auto().a;
    let [l_s, l_u] = mat2_eigenvalues(&a).ok_or(Error::NotPartiallyHyperbolic {
        reason: "complex eigenvalues".into(),
    })?;
    if l_s.abs() >= 1.0 || l_u.abs() <= 1.0 {
        return Err(Error::NotPartiallyHyperbolic {
            reason: format!("eigenvalues ({l_s}, {l_u}) are not hyperbolic"),
        });
    }
    let v_s = mat2_eigenvector(&a, l_s);
    let v_u = mat2_eigenvector(&a, l_u);
    let det = v_s[0] * v_u[1] - v_s[1] * v_u[0];
    // Dual basis rows of [v_s | v_u]^-1.
    let w_s = [v_u[1] / det, -v_u[0] / det];
    let w_u = [-v_s[1] / det, v_s[0] / det];

    // Rigorous-ish sup of ‖δ‖: fine grid plus a Lipschitz correction.
    let grid = 128usize;
    let mut sup = 0.0f64;
    for i in 0..grid {
        for j in 0..grid {
            let p = HPoint::new(i as f64 / grid as f64, j as f64 / grid as f64, 0.0);
            let d = displacement(f, &p);
            sup = sup.max((d[0] * d[0] + d[1] * d[1]).sqrt());
        }
    }
    let norm_a = a.iter().flatten().map(|v| v.abs()).sum::<f64>();
    let lip = norm_a * f.perturbation().margin();
    let delta_sup = sup + lip * std::f64::consts::SQRT_2 / grid as f64;

    let tail_bound = delta_sup
        * (l_u.abs().powi(-(truncation as i32)) / (l_u.abs() - 1.0)
            + l_s.abs().powi(truncation as i32) / (1.0 - l_s.abs()));

    let mut h = SemiConjugacy {
        f,
        a,
        lambda_s: l_s,
        lambda_u: l_u,
        v_s,
        v_u,
        w_s,
        w_u,
        truncation,
        tail_bound,
        delta_sup,
        origin_value: [0.0, 0.0],
    };
    h.origin_value = h.eval(&HPoint::IDENTITY)?;
    Ok(h)
}

impl<'a> SemiConjugacy<'a> {
    pub fn system(&self) -> &'a NilDiffeo {
        self.f
    }

    /// Evaluates `H(p)`; satisfies `‖H∘f − A∘H‖ ≤ 2·tail_bound`.
    pub fn eval(&self, p: &HPoint) -> Result<[f64; 2]> {
        let n = self.truncation;
        // δ is deck-periodic, so reduced orbits feed it without precision
        // loss from coordinate growth.
        let fwd = self.f.orbit_reduced(p, n.saturating_sub(1));
        let bwd = self.f.orbit_reduced_backward(p, n)?;

        let mut h_u = 0.0;
        let mut w = 1.0 / self.lambda_u;
        for pt in fwd.iter().take(n) {
            let d = displacement(self.f, pt);
            h_u += w * (self.w_u[0] * d[0] + self.w_u[1] * d[1]);
            w /= self.lambda_u;
        }
        let mut h_s = 0.0;
        let mut ws = 1.0;
        for pt in bwd.iter().skip(1) {
            let d = displacement(self.f, pt);
            h_s -= ws * (self.w_s[0] * d[0] + self.w_s[1] * d[1]);
            ws *= self.lambda_s;
        }

        let p2 = proj_plane(p);
        Ok([
            p2[0] + h_u * self.v_u[0] + h_s * self.v_s[0],
            p2[1] + h_u * self.v_u[1] + h_s * self.v_s[1],
        ])
    }

    /// `H(0,0,0)`: generally nonzero on perturbed systems. Useful when a
    /// plot wants the origin recentered; the conjugacy identity and the
    /// fiber structure belong to the unshifted values.
    pub fn origin_value(&self) -> [f64; 2] {
        self.origin_value
    }

    /// Residual of the conjugacy identity at `p`: `‖H(f p) − A·H(p)‖`.
    pub fn conjugacy_residual(&self, p: &HPoint) -> Result<f64> {
        let hf = self.eval(&self.f.apply(p))?;
        let ah = mat2_apply(&self.a, self.eval(p)?);
        Ok(((hf[0] - ah[0]).powi(2) + (hf[1] - ah[1]).powi(2)).sqrt())
    }

    /// Coordinates of a plane vector in the eigenbasis: `(c_s, c_u)`.
    pub fn eigen_coords(&self, v: [f64; 2]) -> (f64, f64) {
        (
            self.w_s[0] * v[0] + self.w_s[1] * v[1],
            self.w_u[0] * v[0] + self.w_u[1] * v[1],
        )
    }

    /// Unstable eigen-coordinate of `H(p)` (normalized evaluator).
    pub fn u_coord(&self, p: &HPoint) -> Result<f64> {
        Ok(self.eigen_coords(self.eval(p)?).1)
    }

    /// Stable eigen-coordinate of `H(p)`.
    pub fn s_coord(&self, p: &HPoint) -> Result<f64> {
        Ok(self.eigen_coords(self.eval(p)?).0)
    }

    /// Membership tolerance for fibers: twice the certified evaluation error
    /// plus root-solve slack.
    pub fn fiber_tol(&self) -> f64 {
        2.0 * self.tail_bound + 1e-6
    }

    /// Fiber test through `H`: same center leaf iff the values agree.
    pub fn center_leaf_test(&self, p: &HPoint, q: &HPoint) -> Result<bool> {
        let hp = self.eval(p)?;
        let hq = self.eval(q)?;
        let d = ((hp[0] - hq[0]).powi(2) + (hp[1] - hq[1]).powi(2)).sqrt();
        Ok(d < self.fiber_tol())
    }

    /// Bound used by the direct orbit probe: any same-leaf pair keeps its
    /// projected orbits within twice the correction sup.
    pub fn probe_bound(&self) -> f64 {
        let h_sup = self.delta_sup
            * (1.0 / (self.lambda_u.abs() - 1.0) + 1.0 / (1.0 - self.lambda_s.abs()));
        2.0 * h_sup + 0.5
    }

    /// Direct probe of the bounded-shadowing criterion:
    /// `sup_{|n| ≤ horizon} ‖P fⁿ(p) − P fⁿ(q)‖` stays under
    /// [`SemiConjugacy::probe_bound`]. Pairs are co-translated so the gap is
    /// exact while the first coordinate stays reduced; the scan stops as
    /// soon as the bound is exceeded.
    pub fn center_leaf_probe(&self, p: &HPoint, q: &HPoint, horizon: usize) -> Result<bool> {
        let bound = self.probe_bound();
        let over = |gaps: &[[f64; 2]]| {
            gaps.iter()
                .any(|g| (g[0] * g[0] + g[1] * g[1]).sqrt() >= bound)
        };
        // Short prefixes first: diverging pairs are detected before their
        // coordinates grow beyond what the inversion can resolve.
        for h in [5usize, 12, horizon] {
            let fwd = self.f.projected_gaps_forward(p, q, h.min(horizon));
            if over(&fwd) {
                return Ok(false);
            }
            let bwd = self.f.projected_gaps_backward(p, q, h.min(horizon))?;
            if over(&bwd) {
                return Ok(false);
            }
            if h >= horizon {
                break;
            }
        }
        Ok(true)
    }
}
