//! The diffeomorphisms under study: an automorphism composed with a
//! deck-commuting trigonometric perturbation, their derivative cocycle in the
//! left-invariant frame, invariant splittings, invariant curves and the
//! quantitative verification suites.

mod curve;
mod perturbation;
mod splitting;
pub mod verify;

pub use curve::{
    bundle_direction, closest_param, grow_by_iteration, grow_unstable_curve, integrate_curve,
    Bundle, CurvePolyline, GrowMode,
};
pub use perturbation::{FrameComponent, Perturbation, PerturbationTerm, WaveKind};
pub use splitting::{
    estimate_constants, estimate_splitting, splitting_at, ConstantsReport, FrameSplitting,
    PHConstants, SplittingCore, SplittingParams,
};
pub use verify::{
    fit_intercept, fit_slope, grow_cs_plaque, run_check, run_suite, segment_crossings,
    tube_volume, udiam_fit, CheckOutcome, CsPlaque, DiagonalView, VerifyParams, CHECK_NAMES,
};

use crate::auto::{preserves_lattice, HAutomorphism};
use crate::error::{Error, Result};
use crate::heis::{FrameVector, HPoint, Lattice, LatticeElement};
use crate::linalg::{mat3_mul, Mat3};

/// Tolerance and iteration cap of the fixed-point inversion.
const INVERT_TOL: f64 = 1e-13;
const INVERT_MAX_ITER: usize = 100;

/// A lift `f = Φ ∘ ψ`: automorphism composed with a `Γ`-commuting
/// perturbation. Satisfies `f(γ·p) = Φ(γ)·f(p)` for every `γ ∈ Γ_k`; when
/// `Φ` preserves the lattice this is genuine deck equivariance and `f`
/// descends to the nilmanifold.
#[derive(Debug, Clone)]
pub struct NilDiffeo {
    auto: HAutomorphism,
    auto_inv: HAutomorphism,
    pert: Perturbation,
    lattice: Lattice,
    lattice_equivariant: bool,
}

impl NilDiffeo {
    pub fn new(auto: HAutomorphism, pert: Perturbation, lattice: Lattice) -> Result<Self> {
        let auto_inv = auto.inverse()?;
        let lattice_equivariant = preserves_lattice(&auto, &lattice);
        Ok(NilDiffeo { auto, auto_inv, pert, lattice, lattice_equivariant })
    }

    /// The unperturbed system `f = Φ`.
    pub fn unperturbed(auto: HAutomorphism, lattice: Lattice) -> Result<Self> {
        NilDiffeo::new(auto, Perturbation::none(), lattice)
    }

    pub fn auto(&self) -> &HAutomorphism {
        &self.auto
    }

    pub fn perturbation(&self) -> &Perturbation {
        &self.pert
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Whether the algebraic part maps `Γ_k` onto itself, i.e. whether the
    /// lift descends to the compact quotient.
    pub fn is_lattice_equivariant(&self) -> bool {
        self.lattice_equivariant
    }

    /// `f_*(γ) = Φ(γ)`, the induced action on deck transformations.
    pub fn star(&self, gamma: &HPoint) -> HPoint {
        self.auto.apply(gamma)
    }

    /// Exact lattice image of a lattice element; only meaningful on
    /// lattice-equivariant systems.
    pub fn star_lattice(&self, gamma: &LatticeElement) -> Result<LatticeElement> {
        self.lattice
            .round_point(&self.auto.apply(&gamma.point()), 1e-6)
            .ok_or(Error::LatticeNotPreserved)
    }

    /// `f(p) = Φ(ψ(p))`.
    pub fn apply(&self, p: &HPoint) -> HPoint {
        self.auto.apply(&self.pert.apply(p))
    }

    /// `f⁻¹(p)`: solves `ψ(q) = Φ⁻¹(p)` by the contraction iteration.
    pub fn apply_inverse(&self, p: &HPoint) -> Result<HPoint> {
        self.pert
            .invert(&self.auto_inv.apply(p), INVERT_TOL, INVERT_MAX_ITER)
    }

    /// Derivative of the lift at `p`, expressed frame-to-frame (frame at `p`
    /// to frame at `f(p)`). Computed in closed form: the automorphism
    /// contributes its constant matrix, and the perturbation contributes an
    /// adjoint correction plus the differentiated wave field.
    pub fn derivative_frame(&self, p: &HPoint) -> Mat3 {
        let m_phi = self.auto.matrix().as_mat3();
        mat3_mul(&m_phi, &self.perturbation_derivative_frame(p))
    }

    /// Derivative of `ψ` alone at `p`, frame-to-frame.
    ///
    /// With `W = w(x, y)`, `E = exp_h(W)` and `J = ∂w/∂(x,y)`:
    /// the chain rule in left-trivialized coordinates gives
    /// `Dψ = Ad_{E⁻¹} + (frame-at-E ∘ d exp_h|_W ∘ J ∘ P_*)`, which reduces
    /// to the closed form below.
    pub fn perturbation_derivative_frame(&self, p: &HPoint) -> Mat3 {
        if self.pert.is_zero() {
            return crate::linalg::MAT3_IDENTITY;
        }
        let w = self.pert.field(p.x, p.y);
        let j = self.pert.field_jacobian(p.x, p.y);
        // Ad_{E^-1} for E = exp_h(W): shears Z by (W2, -W1) against (x, y).
        let mut d: Mat3 = [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [w.vy, -w.vx, 1.0],
        ];
        // Wave-field variation, pushed to the frame at E.
        for col in 0..2 {
            d[0][col] += j[0][col];
            d[1][col] += j[1][col];
            d[2][col] += j[2][col] + 0.5 * (w.vy * j[0][col] - w.vx * j[1][col]);
        }
        d
    }

    /// Derivative of `f⁻¹` at `p`, frame-to-frame: the inverse of the
    /// forward derivative at `f⁻¹(p)`.
    pub fn derivative_frame_inverse(&self, p: &HPoint) -> Result<Mat3> {
        let q = self.apply_inverse(p)?;
        crate::linalg::mat3_inv(&self.derivative_frame(&q)).ok_or(Error::SingularBlock {
            det: 0.0,
        })
    }

    /// `f` applied to a frame tangent vector: `(f(p), Df(p)·v)`.
    pub fn push_tangent(&self, p: &HPoint, v: &FrameVector) -> (HPoint, FrameVector) {
        let m = self.derivative_frame(p);
        (
            self.apply(p),
            FrameVector::from_array(crate::linalg::mat3_apply(&m, v.as_array())),
        )
    }

    /// n-fold forward orbit, plain coordinates.
    pub fn orbit(&self, p: &HPoint, n: usize) -> Vec<HPoint> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(*p);
        let mut cur = *p;
        for _ in 0..n {
            cur = self.apply(&cur);
            out.push(cur);
        }
        out
    }

    /// Forward orbit reduced to the fundamental domain at every step.
    ///
    /// The frame cocycle only depends on the base point modulo `Γ`, so the
    /// reduced orbit carries the exact same derivative data while keeping
    /// coordinates (and hence wave-argument precision) bounded. Requires a
    /// lattice-equivariant system.
    pub fn orbit_reduced(&self, p: &HPoint, n: usize) -> Vec<HPoint> {
        debug_assert!(self.lattice_equivariant);
        let mut out = Vec::with_capacity(n + 1);
        let (_, mut cur) = self.lattice.reduce(p);
        out.push(cur);
        for _ in 0..n {
            let (_, next) = self.lattice.reduce(&self.apply(&cur));
            cur = next;
            out.push(cur);
        }
        out
    }

    /// Backward orbit reduced to the fundamental domain at every step.
    pub fn orbit_reduced_backward(&self, p: &HPoint, n: usize) -> Result<Vec<HPoint>> {
        debug_assert!(self.lattice_equivariant);
        let mut out = Vec::with_capacity(n + 1);
        let (_, mut cur) = self.lattice.reduce(p);
        out.push(cur);
        for _ in 0..n {
            let (_, next) = self.lattice.reduce(&self.apply_inverse(&cur)?);
            cur = next;
            out.push(cur);
        }
        Ok(out)
    }

    /// Iterates the pair `(p, q)` forward while renormalizing `p` into the
    /// fundamental domain and translating `q` by the same deck element, so
    /// plane-projection differences are exactly preserved. Returns
    /// `P fⁿ(p) − P fⁿ(q)` for `n = 0..=horizon`.
    pub fn projected_gaps_forward(
        &self,
        p: &HPoint,
        q: &HPoint,
        horizon: usize,
    ) -> Vec<[f64; 2]> {
        debug_assert!(self.lattice_equivariant);
        let mut gaps = Vec::with_capacity(horizon + 1);
        let mut a = *p;
        let mut b = *q;
        for step in 0..=horizon {
            gaps.push([a.x - b.x, a.y - b.y]);
            if step == horizon {
                break;
            }
            let (gamma, ar) = self.lattice.reduce(&a);
            let g_inv = gamma.inv().point();
            a = self.apply(&ar);
            b = self.apply(&g_inv.mul(&b));
        }
        gaps
    }

    /// Backward counterpart of [`NilDiffeo::projected_gaps_forward`].
    pub fn projected_gaps_backward(
        &self,
        p: &HPoint,
        q: &HPoint,
        horizon: usize,
    ) -> Result<Vec<[f64; 2]>> {
        debug_assert!(self.lattice_equivariant);
        let mut gaps = Vec::with_capacity(horizon + 1);
        let mut a = *p;
        let mut b = *q;
        for step in 0..=horizon {
            gaps.push([a.x - b.x, a.y - b.y]);
            if step == horizon {
                break;
            }
            let (gamma, ar) = self.lattice.reduce(&a);
            let g_inv = gamma.inv().point();
            a = self.apply_inverse(&ar)?;
            b = self.apply_inverse(&g_inv.mul(&b))?;
        }
        Ok(gaps)
    }
}
