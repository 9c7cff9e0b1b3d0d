#include "vsum/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <string>

#include "vsum/error.hpp"
#include "vsum/kernels.hpp"

namespace vsum::cluster {

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::vector<double> to_double(const FrameEmbeddings& emb) {
    return {emb.values().begin(), emb.values().end()};
}

double sq_dist(const double* a, const double* b, std::size_t dim) {
    double s = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

// D^2 sampling of one more centre given the current ones.
std::size_t sample_next_centre(const std::vector<double>& data, std::size_t n, std::size_t dim,
                               const std::vector<double>& centroids, std::mt19937_64& rng) {
    const std::size_t k = centroids.size() / dim;
    std::vector<double> d2(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            best = std::min(best, sq_dist(&data[i * dim], &centroids[c * dim], dim));
        }
        d2[i] = best;
        total += best;
    }
    if (total <= 0.0) {
        return static_cast<std::size_t>(rng() % n);
    }
    const double target = uniform01(rng) * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
            return i;
        }
    }
    // Rounding left the target past the running sum; take the last point with positive mass.
    for (std::size_t i = n; i > 0; --i) {
        if (d2[i - 1] > 0.0) {
            return i - 1;
        }
    }
    return n - 1;
}

ClusterModel lloyd(const std::vector<double>& data, std::size_t n, std::size_t dim, std::vector<double> centroids,
                   Backend backend) {
    const std::size_t k = centroids.size() / dim;
    ClusterModel m;
    m.k = k;
    m.dim = dim;
    m.labels.assign(n, 0);
    std::vector<std::size_t> previous;
    auto assign = [&](std::vector<std::size_t>& labels) {
        return backend == Backend::Parallel ? kernels::parallel::assign_nearest(data, dim, centroids, labels)
                                            : kernels::serial::assign_nearest(data, dim, centroids, labels);
    };
    for (int iter = 0; iter < kMaxLloydIterations; ++iter) {
        previous = m.labels;
        m.wcss = assign(m.labels);
        m.history.push_back(m.wcss);
        if (iter > 0 && previous == m.labels) {
            break;
        }
        std::vector<double> sums(k * dim, 0.0);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = m.labels[i];
            ++counts[c];
            for (std::size_t j = 0; j < dim; ++j) {
                sums[c * dim + j] += data[i * dim + j];
            }
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                continue;  // empty cluster keeps its centre
            }
            for (std::size_t j = 0; j < dim; ++j) {
                centroids[c * dim + j] = sums[c * dim + j] / static_cast<double>(counts[c]);
            }
        }
    }
    m.centroids = std::move(centroids);
    return m;
}

}  // namespace

std::vector<ClusterModel> fit_kmeans_path(const FrameEmbeddings& emb, std::size_t k_max, std::uint64_t seed,
                                          Backend backend) {
    const std::size_t n = emb.n_frames();
    const std::size_t dim = emb.dim();
    if (k_max == 0 || k_max > n) {
        throw InvalidInput("fit_kmeans: K=" + std::to_string(k_max) + " must be in [1, " + std::to_string(n) + "]");
    }
    const auto data = to_double(emb);
    std::mt19937_64 rng(seed);

    std::vector<ClusterModel> path;
    path.reserve(k_max);
    std::vector<double> centroids;
    const std::size_t first = static_cast<std::size_t>(rng() % n);
    centroids.assign(data.begin() + static_cast<std::ptrdiff_t>(first * dim),
                     data.begin() + static_cast<std::ptrdiff_t>((first + 1) * dim));
    for (std::size_t k = 1; k <= k_max; ++k) {
        if (k > 1) {
            centroids = path.back().centroids;
            const std::size_t next = sample_next_centre(data, n, dim, centroids, rng);
            centroids.insert(centroids.end(), data.begin() + static_cast<std::ptrdiff_t>(next * dim),
                             data.begin() + static_cast<std::ptrdiff_t>((next + 1) * dim));
        }
        path.push_back(lloyd(data, n, dim, centroids, backend));
    }
    return path;
}

ClusterModel fit_kmeans(const FrameEmbeddings& emb, std::size_t k, std::uint64_t seed, Backend backend) {
    auto path = fit_kmeans_path(emb, k, seed, backend);
    return std::move(path.back());
}

std::size_t elbow_k(std::span<const double> wcss) {
    if (wcss.size() < 3) {
        return 1;
    }
    std::size_t best_k = 2;
    double best = wcss[0] - 2.0 * wcss[1] + wcss[2];
    for (std::size_t k = 3; k + 1 <= wcss.size(); ++k) {
        // K is 1-based: wcss[K-1] holds WCSS(K).
        const double second = wcss[k - 2] - 2.0 * wcss[k - 1] + wcss[k];
        if (second > best) {
            best = second;
            best_k = k;
        }
    }
    return best_k;
}

}  // namespace vsum::cluster
