#pragma once

#include "fpm/forward.hpp"
#include "fpm/optics.hpp"

namespace fpm {

// Low-pass a field to a numerical aperture: zero every spectrum pixel whose
// radial frequency exceeds na / wavelength.
ComplexField band_limit(const ComplexField& field, double na, const OpticalConfig& cfg);

// Least-squares complex scale c minimizing |c*recon - truth|^2; removes the
// global phase and intensity-count scale of a reconstruction.
Complex global_alignment(const ComplexField& recon, const ComplexField& truth);

double amplitude_rmse(const ComplexField& a, const ComplexField& b);

// RMSE of the wrapped phase difference, radians.
double phase_rmse(const ComplexField& a, const ComplexField& b);

// Mean absolute phase jump across a seam midline (between column/row index
// seam-1 and seam along the given dimension).
double seam_phase_jump(const ComplexField& field, int seam, bool vertical_seam);

// Normalized gradient-energy sharpness of an amplitude image.
double sharpness(const RealField& amplitude);

// Brute-force defocus search: refocus the tile's on-axis frame with each
// candidate and keep the sharpest. Stand-in for a proper autofocus.
double defocus_search(const FrameSet& frames, int x0, int y0, const OpticalConfig& cfg,
                      const std::vector<double>& z_candidates_um);

} // namespace fpm
