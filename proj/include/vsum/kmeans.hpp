#ifndef VSUM_KMEANS_HPP
#define VSUM_KMEANS_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "vsum/segmentation.hpp"

namespace vsum::cluster {

enum class Backend { Serial, Parallel };

struct ClusterModel {
    std::size_t k = 0;
    std::size_t dim = 0;
    std::vector<double> centroids;  // k x dim, row-major
    std::vector<std::size_t> labels;
    double wcss = 0.0;
    /// WCSS after each assignment step.
    std::vector<double> history;
};

inline constexpr int kMaxLloydIterations = 100;
inline constexpr std::size_t kMaxElbowK = 10;

/// Lloyd iterations from seeded k-means++ style initialization. Throws InvalidInput if k > n.
ClusterModel fit_kmeans(const FrameEmbeddings& emb, std::size_t k, std::uint64_t seed,
                        Backend backend = Backend::Parallel);

/// Models for K = 1..k_max. Each K starts from the K-1 solution plus one D^2-sampled centre,
/// so WCSS is non-increasing in K.
std::vector<ClusterModel> fit_kmeans_path(const FrameEmbeddings& emb, std::size_t k_max, std::uint64_t seed,
                                          Backend backend = Backend::Parallel);

/// wcss[j] holds WCSS for K = j + 1. Returns the K with the largest second difference over
/// K in [2, Kmax-1] (ties to the smaller K), or 1 when fewer than 3 values are given.
std::size_t elbow_k(std::span<const double> wcss);

}  // namespace vsum::cluster

#endif  // VSUM_KMEANS_HPP
