#pragma once

#include "rk/linop.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace rk {

/// Square deblurring problem on a side x side pixel grid: 2D convolution
/// with a normalized Gaussian PSF under zero boundary conditions.
/// b = A x_true + e with ||e||/||A x_true|| = noise_level exactly.
InverseProblem make_blur_problem(int side, double psf_width, double noise_level,
                                 std::uint64_t seed);

/// Straight-ray travel-time tomography on a side x side grid with unit pixel
/// width: num_rays rays from a random point on the left/bottom boundary to a
/// random point on the right/top boundary; row i of A holds per-pixel
/// intersection lengths.
InverseProblem make_tomo_problem(int side, int num_rays, double noise_level,
                                 std::uint64_t seed);

/// Intersection lengths of the segment (x0,y0)-(x1,y1) with the pixels of a
/// side x side grid over [0,side]^2, as (pixel index, length) pairs.
std::vector<std::pair<Index, double>> tomo_ray_row(int side, double x0, double y0,
                                                   double x1, double y1);

/// Fixed analytic phantoms (values in [0,1], length side^2, row-major).
Vector blur_phantom(int side);
Vector tomo_phantom(int side);

/// Adds seeded Gaussian noise rescaled so that ||e|| = noise_level*||b_exact||,
/// filling b, noise_norm and noise_level of the problem.
void add_noise(InverseProblem& problem, const Vector& b_exact,
               double noise_level, std::uint64_t seed);

} // namespace rk
