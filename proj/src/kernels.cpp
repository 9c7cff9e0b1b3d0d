#include "vsum/kernels.hpp"

#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace vsum::kernels {

namespace {

double nearest(const double* point, std::size_t dim, std::span<const double> centroids, std::size_t& label) {
    const std::size_t k = centroids.size() / dim;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_c = 0;
    for (std::size_t c = 0; c < k; ++c) {
        const double* centre = centroids.data() + c * dim;
        double d2 = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            const double diff = point[j] - centre[j];
            d2 += diff * diff;
        }
        if (d2 < best) {
            best = d2;
            best_c = c;
        }
    }
    label = best_c;
    return best;
}

}  // namespace

namespace serial {

std::vector<scene::PHash> hash_frames(std::span<const scene::RgbImage> frames) {
    std::vector<scene::PHash> out(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        out[i] = scene::phash(scene::preprocess_frame(frames[i], i));
    }
    return out;
}

std::vector<double> hamming_profile(std::span<const scene::PHash> hashes) {
    std::vector<double> out(hashes.empty() ? 0 : hashes.size() - 1);
    for (std::size_t t = 0; t < out.size(); ++t) {
        out[t] = scene::hamming_norm(hashes[t], hashes[t + 1]);
    }
    return out;
}

double assign_nearest(std::span<const double> data, std::size_t dim, std::span<const double> centroids,
                      std::span<std::size_t> labels) {
    double wcss = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        wcss += nearest(data.data() + i * dim, dim, centroids, labels[i]);
    }
    return wcss;
}

}  // namespace serial

namespace parallel {

std::vector<scene::PHash> hash_frames(std::span<const scene::RgbImage> frames) {
    std::vector<scene::PHash> out(frames.size());
    const auto n = static_cast<std::ptrdiff_t>(frames.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        out[k] = scene::phash(scene::preprocess_frame(frames[k], k));
    }
    return out;
}

std::vector<double> hamming_profile(std::span<const scene::PHash> hashes) {
    std::vector<double> out(hashes.empty() ? 0 : hashes.size() - 1);
    const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t t = 0; t < n; ++t) {
        const auto k = static_cast<std::size_t>(t);
        out[k] = scene::hamming_norm(hashes[k], hashes[k + 1]);
    }
    return out;
}

double assign_nearest(std::span<const double> data, std::size_t dim, std::span<const double> centroids,
                      std::span<std::size_t> labels) {
    // Per-point distances are summed serially afterwards so the result does not depend on thread count.
    std::vector<double> dist(labels.size());
    const auto n = static_cast<std::ptrdiff_t>(labels.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        dist[k] = nearest(data.data() + k * dim, dim, centroids, labels[k]);
    }
    double wcss = 0.0;
    for (double d : dist) {
        wcss += d;
    }
    return wcss;
}

}  // namespace parallel

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace vsum::kernels
