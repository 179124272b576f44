//! Default numerical tolerances. `Tolerances::scaled` multiplies every tolerance (never a count).

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Boundary tolerance relative to the domain diameter.
    pub boundary_rel: f64,
    /// Angle tolerance for complex hyperplanes.
    pub hyperplane_angle: f64,
    /// Iteration cap of the projected-gradient boundary projection.
    pub projection_max_iter: usize,
    /// Safety factor applied to the sampled inradius.
    pub inradius_safety: f64,
    /// Number of supporting-hyperplane directions used by lower bounds.
    pub hyperplane_directions: usize,
    /// Degree of the optional polynomial-disc refinement.
    pub disc_degree: usize,
    /// Whether the polynomial-disc refinement runs.
    pub disc_refinement: bool,
    /// Path refinement stops below this improvement.
    pub path_improvement: f64,
    /// Path refinement evaluation budget.
    pub path_evaluations: usize,
    /// Kobayashi radius below which an orbit counts as bounded.
    pub elliptic_radius: f64,
    /// Iterations of the bounded-orbit test.
    pub elliptic_iterations: usize,
    /// Face tolerance separating parabolic from hyperbolic.
    pub face_tol: f64,
    /// Cap of the diagonal word search.
    pub word_cap: usize,
    /// Local Hausdorff convergence threshold of the rescaling pipeline.
    pub hausdorff_threshold: f64,
    /// Radius ladder of the local Hausdorff test.
    pub radius_ladder: Vec<f64>,
    /// Conditioning abort threshold of the normalizers.
    pub condition_abort: f64,
    /// Cauchy threshold for the maps Phi_n.
    pub cauchy_tol: f64,
    /// Size of the Cauchy probe set.
    pub cauchy_probes: usize,
    /// Number of consecutive indices required by convergence tests.
    pub consecutive: usize,
    /// Number of perturbations in the stability probe.
    pub stability_samples: usize,
    /// Probe count of the north/south test.
    pub north_south_probes: usize,
    /// Points per spoke in the normalisation membership check.
    pub spoke_points: usize,
    /// Eigenvalue cluster merge tolerance (relative).
    pub eigen_merge: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            boundary_rel: 1e-9,
            hyperplane_angle: 1e-6,
            projection_max_iter: 1000,
            inradius_safety: 0.9,
            hyperplane_directions: 64,
            disc_degree: 8,
            disc_refinement: false,
            path_improvement: 1e-6,
            path_evaluations: 10_000,
            elliptic_radius: 10.0,
            elliptic_iterations: 200,
            face_tol: 1e-4,
            word_cap: 64,
            hausdorff_threshold: 1e-2,
            radius_ladder: vec![1.0, 2.0, 4.0, 8.0],
            condition_abort: 1e12,
            cauchy_tol: 1e-4,
            cauchy_probes: 50,
            consecutive: 3,
            stability_samples: 32,
            north_south_probes: 1000,
            spoke_points: 256,
            eigen_merge: 1e-5,
        }
    }
}

impl Tolerances {
    pub fn scaled(&self, factor: f64) -> Tolerances {
        let mut t = self.clone();
        t.boundary_rel *= factor;
        t.hyperplane_angle *= factor;
        t.path_improvement *= factor;
        t.face_tol *= factor;
        t.hausdorff_threshold *= factor;
        t.cauchy_tol *= factor;
        t.eigen_merge *= factor;
        t
    }
}
