#pragma once

#include <cstdint>

#include "sgreg/volume.hpp"

namespace sgreg {

enum class PhantomShape { sphere, two_spheres, cuboid_with_notch };

/// Intensity transformation simulating a modality change. contrast_fold is
/// deliberately non-monotone (a tent over [0,1]) so edge directions flip.
enum class ModalityRemap { identity, invert, square, piecewise_monotone, contrast_fold };

enum class DeformationKind { zero, translation, gaussian_bump };

struct PhantomSpec {
    Dims dims{48, 48, 48};
    Vec3 spacing{1.0, 1.0, 1.0};
    PhantomShape shape = PhantomShape::sphere;
    ModalityRemap remap = ModalityRemap::identity;
    DeformationKind deformation = DeformationKind::zero;
    Vec3 translation{0.0, 0.0, 0.0};  // voxels
    Vec3 bump_center{0.0, 0.0, 0.0};  // voxel coords; (0,0,0) means grid center
    Vec3 bump_amplitude{0.0, 0.0, 0.0};
    double bump_sigma = 6.0;          // voxels
    double noise_sigma = 0.0;         // additive Gaussian on the fixed image
    std::uint64_t seed = 0;
};

struct PhantomPair {
    Volume moving;
    Volume fixed;
    Volume moving_label;
    Volume fixed_label;
    DisplacementField truth; // defined on the fixed grid: moving = remap(warp(base, truth))
};

/// Builds fixed = base shape (+seeded noise) and moving = remap(warp(base,
/// truth)); labels are the thresholded shapes transported consistently.
/// Deformations whose max |dW/dx| reaches 1 (folding risk) are rejected.
PhantomPair generate_pair(const PhantomSpec &spec);

/// Mean Euclidean norm of (estimate - truth) over voxels where mask > 0,
/// in voxels. Error on an empty mask.
double endpoint_error(const DisplacementField &estimate, const DisplacementField &truth,
                      const Volume &mask);

} // namespace sgreg
