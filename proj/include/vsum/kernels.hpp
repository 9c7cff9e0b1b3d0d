#ifndef VSUM_KERNELS_HPP
#define VSUM_KERNELS_HPP

// Data-parallel inner loops. Each kernel has a serial reference in `serial` and an OpenMP
// version in `parallel`; both produce identical, order-deterministic results.

#include <cstddef>
#include <span>
#include <vector>

#include "vsum/scene_division.hpp"

namespace vsum::kernels {

namespace serial {

std::vector<scene::PHash> hash_frames(std::span<const scene::RgbImage> frames);
std::vector<double> hamming_profile(std::span<const scene::PHash> hashes);

/// Assigns each row of `data` (n x dim) to its nearest centroid (k x dim); returns the WCSS.
/// Ties go to the lower centroid index.
double assign_nearest(std::span<const double> data, std::size_t dim, std::span<const double> centroids,
                      std::span<std::size_t> labels);

}  // namespace serial

namespace parallel {

std::vector<scene::PHash> hash_frames(std::span<const scene::RgbImage> frames);
std::vector<double> hamming_profile(std::span<const scene::PHash> hashes);
double assign_nearest(std::span<const double> data, std::size_t dim, std::span<const double> centroids,
                      std::span<std::size_t> labels);

}  // namespace parallel

/// Threads available to the parallel kernels (1 when built without OpenMP).
int max_threads();

}  // namespace vsum::kernels

#endif  // VSUM_KERNELS_HPP
