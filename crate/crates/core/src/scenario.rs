//! Scenario files: the JSON description of a system under study, validated
//! at load into a [`NilDiffeo`].

use crate::auto::{from_derivative, is_partially_hyperbolic, preserves_lattice, GMatrix};
use crate::dynamics::{
    FrameComponent, NilDiffeo, Perturbation, PerturbationTerm, VerifyParams, WaveKind,
};
use crate::error::{Error, Result};
use crate::heis::Lattice;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Optional per-scenario overrides of the suite knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Horizons {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub splitting: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Tolerances {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

/// A full scenario: lattice, associated matrix, perturbation waves, seed and
/// optional overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub lattice: Lattice,
    pub matrix: GMatrix,
    pub perturbation: Vec<PerturbationTerm>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "is_default_horizons")]
    pub horizons: Horizons,
    #[serde(default, skip_serializing_if = "is_default_tolerances")]
    pub tolerances: Tolerances,
}

fn is_default_horizons(h: &Horizons) -> bool {
    *h == Horizons::default()
}

fn is_default_tolerances(t: &Tolerances) -> bool {
    *t == Tolerances::default()
}

impl Scenario {
    /// The worked example: the hyperbolic block `[[2,1],[1,1]]` on `Γ_2`,
    /// with the canonical three-wave perturbation of total weight `amplitude`
    /// (which is exactly the Lipschitz budget, so the margin gate reads
    /// `2π·amplitude < 1/2`).
    pub fn paper_example(k: u32, amplitude: f64, seed: u64) -> Scenario {
        Scenario {
            lattice: Lattice::new(k),
            matrix: GMatrix::from_block([[2.0, 1.0], [1.0, 1.0]]),
            perturbation: canonical_perturbation(amplitude),
            seed,
            horizons: Horizons::default(),
            tolerances: Tolerances::default(),
        }
    }

    pub fn from_json(s: &str) -> Result<Scenario> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Gate checks: partially hyperbolic matrix, lattice preservation,
    /// perturbation margin, positive index. Returns the validated system.
    pub fn build(&self) -> Result<NilDiffeo> {
        if self.lattice.k < 1 {
            return Err(Error::Scenario("lattice index k must be >= 1".into()));
        }
        let check = is_partially_hyperbolic(&self.matrix);
        if !check.partially_hyperbolic {
            return Err(Error::Scenario(
                "matrix gate: associated matrix is not partially hyperbolic".into(),
            ));
        }
        let auto = from_derivative(&self.matrix).map_err(|e| Error::Scenario(e.to_string()))?;
        if !preserves_lattice(&auto, &self.lattice) {
            return Err(Error::Scenario(format!(
                "matrix gate: automorphism does not preserve the lattice (k = {})",
                self.lattice.k
            )));
        }
        let pert = Perturbation::new(self.perturbation.clone())
            .map_err(|e| Error::Scenario(e.to_string()))?;
        NilDiffeo::new(auto, pert, self.lattice)
    }

    /// Suite parameters with the scenario's seed and overrides applied.
    pub fn verify_params(&self) -> VerifyParams {
        let mut p = VerifyParams {
            seed: self.seed,
            ..Default::default()
        };
        if let Some(h) = self.horizons.splitting {
            p.split_horizon = h;
        }
        if let Some(n) = self.horizons.constants {
            p.constants_n = n;
        }
        if let Some(t) = self.tolerances.residual {
            p.residual_tol = t;
        }
        p
    }

    /// SHA-256 of the canonical serialization, hex-encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("scenario serializes");
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        let digest = hasher.finalize();
        let mut s = String::with_capacity(64);
        for b in digest {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }
}

/// Three waves split `(1/2, 3/10, 1/5)` of the weight across the X, Y and Z
/// components, all at unit wave numbers.
pub fn canonical_perturbation(amplitude: f64) -> Vec<PerturbationTerm> {
    if amplitude == 0.0 {
        return Vec::new();
    }
    vec![
        PerturbationTerm::new(FrameComponent::X, 0, 1, WaveKind::Sin, 0.5 * amplitude),
        PerturbationTerm::new(FrameComponent::Y, 1, 0, WaveKind::Cos, 0.3 * amplitude),
        PerturbationTerm::new(FrameComponent::Z, 1, 1, WaveKind::Cos, 0.2 * amplitude),
    ]
}
