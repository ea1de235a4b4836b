#pragma once

#include "sgreg/segi.hpp"
#include "sgreg/volume.hpp"

namespace sgreg {

struct RegistrationConfig; // optim.hpp

struct LossBreakdown {
    double l_sg = 0.0;
    double l_cc = 0.0;
    double psi_u = 0.0;
    double psi_v = 0.0;
    double total = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
};

/// Mean absolute restoration error: warping by u then v should give back the
/// moving image.
double cycle_loss(const Volume &moving, const DisplacementField &u,
                  const DisplacementField &v);

/// Diffusion regularizer: mean over voxels and components of the squared
/// forward-difference spatial gradient (no contribution at the far boundary
/// slice per axis). Zero exactly for voxelwise-constant fields.
double smoothness(const DisplacementField &d);

/// total = l_sg + lambda1*l_cc + lambda2*(psi_u + psi_v), with
/// l_sg = segi_loss(segi(warp(moving,u)), segi(fixed)). When
/// cfg.symmetric_similarity is set, l_sg is the mean of the forward term and
/// the backward term segi_loss(segi(warp(fixed,v)), segi(moving)).
LossBreakdown total_loss(const Volume &moving, const Volume &fixed,
                         const DisplacementField &u, const DisplacementField &v,
                         const RegistrationConfig &cfg);

} // namespace sgreg
