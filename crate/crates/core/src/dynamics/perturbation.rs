//! Trigonometric perturbation fields: `ψ(p) = p · exp_h(w(P(p)))` with `w`
//! a finite sum of integer-frequency waves per frame component. Because `w`
//! only sees `(x, y) mod Z²`, right multiplication by `exp_h(w)` commutes
//! with every deck transformation of `Γ_k`.

use crate::error::{Error, Result};
use crate::heis::{exp_h, FrameVector, HPoint};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Which frame component a wave feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrameComponent {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveKind {
    Cos,
    Sin,
}

/// One wave `amplitude · kind(2π(m·x + n·y))` on a single frame component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationTerm {
    pub component: FrameComponent,
    pub m: i32,
    pub n: i32,
    pub kind: WaveKind,
    pub amplitude: f64,
}

impl PerturbationTerm {
    pub fn new(component: FrameComponent, m: i32, n: i32, kind: WaveKind, amplitude: f64) -> Self {
        PerturbationTerm { component, m, n, kind, amplitude }
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        let arg = TAU * (self.m as f64 * x + self.n as f64 * y);
        match self.kind {
            WaveKind::Cos => self.amplitude * arg.cos(),
            WaveKind::Sin => self.amplitude * arg.sin(),
        }
    }

    /// Gradient with respect to `(x, y)`.
    fn grad(&self, x: f64, y: f64) -> [f64; 2] {
        let arg = TAU * (self.m as f64 * x + self.n as f64 * y);
        let d = match self.kind {
            WaveKind::Cos => -self.amplitude * arg.sin(),
            WaveKind::Sin => self.amplitude * arg.cos(),
        };
        [d * TAU * self.m as f64, d * TAU * self.n as f64]
    }
}

/// A `Z²`-periodic frame field `w: R² → h` applied as a right multiplication.
///
/// Construction enforces the invertibility margin
/// `2π Σ |amp|·max(|m|,|n|) < 1/2`, which makes the horizontal part of
/// `p ↦ p·exp_h(w(P(p)))` a contraction-correctable shift and keeps the
/// fixed-point inversion convergent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    terms: Vec<PerturbationTerm>,
}

impl Perturbation {
    pub const MARGIN_LIMIT: f64 = 0.5;

    pub fn none() -> Self {
        Perturbation { terms: Vec::new() }
    }

    pub fn new(terms: Vec<PerturbationTerm>) -> Result<Self> {
        let margin = Self::margin_of(&terms);
        if margin >= Self::MARGIN_LIMIT {
            return Err(Error::PerturbationTooLarge { margin });
        }
        Ok(Perturbation { terms })
    }

    /// `2π Σ |amp|·max(|m|,|n|)` — the Lipschitz budget of the field.
    pub fn margin_of(terms: &[PerturbationTerm]) -> f64 {
        TAU * terms
            .iter()
            .map(|t| t.amplitude.abs() * (t.m.abs().max(t.n.abs()) as f64))
            .sum::<f64>()
    }

    pub fn margin(&self) -> f64 {
        Self::margin_of(&self.terms)
    }

    pub fn terms(&self) -> &[PerturbationTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.amplitude == 0.0)
    }

    /// The algebra-valued field at `(x, y)`.
    pub fn field(&self, x: f64, y: f64) -> FrameVector {
        let mut w = FrameVector::default();
        for t in &self.terms {
            let v = t.eval(x, y);
            match t.component {
                FrameComponent::X => w.vx += v,
                FrameComponent::Y => w.vy += v,
                FrameComponent::Z => w.vz += v,
            }
        }
        w
    }

    /// Jacobian of the field with respect to `(x, y)`: rows are the three
    /// frame components.
    pub fn field_jacobian(&self, x: f64, y: f64) -> [[f64; 2]; 3] {
        let mut j = [[0.0; 2]; 3];
        for t in &self.terms {
            let g = t.grad(x, y);
            let row = match t.component {
                FrameComponent::X => 0,
                FrameComponent::Y => 1,
                FrameComponent::Z => 2,
            };
            j[row][0] += g[0];
            j[row][1] += g[1];
        }
        j
    }

    /// `ψ(p) = p · exp_h(w(x, y))`.
    pub fn apply(&self, p: &HPoint) -> HPoint {
        p.mul(&exp_h(&self.field(p.x, p.y)))
    }

    /// Solves `ψ(q) = target` by fixed-point iteration
    /// `q ← target · exp_h(w(P(q)))⁻¹`; the margin bound makes the horizontal
    /// update a contraction with rate below 1/2.
    pub fn invert(&self, target: &HPoint, tol: f64, max_iter: usize) -> Result<HPoint> {
        if self.terms.is_empty() {
            return Ok(*target);
        }
        let mut q = *target;
        for _ in 0..max_iter {
            let next = target.mul(&exp_h(&self.field(q.x, q.y)).inv());
            let step = next.euclid_dist(&q);
            q = next;
            // Relative floor: far from the origin an absolute step bound
            // sits below the representable resolution.
            if step <= tol * (1.0 + q.max_abs_coord()) {
                return Ok(q);
            }
        }
        Err(Error::FixedPointDiverged { iterations: max_iter })
    }
}
