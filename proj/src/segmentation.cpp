#include "vsum/segmentation.hpp"

#include <cmath>
#include <string>

#include "vsum/error.hpp"

namespace vsum {

SceneSegmentation::SceneSegmentation(std::vector<Interval> intervals, std::size_t n_frames)
    : intervals_(std::move(intervals)), n_frames_(n_frames) {
    if (n_frames_ == 0) {
        throw InvalidInput("segmentation: n_frames must be positive");
    }
    if (intervals_.empty()) {
        throw InvalidInput("segmentation: no intervals");
    }
    std::size_t expected = 0;
    for (std::size_t i = 0; i < intervals_.size(); ++i) {
        const auto& iv = intervals_[i];
        if (iv.start != expected) {
            throw InvalidInput("segmentation: interval " + std::to_string(i) + " starts at " +
                               std::to_string(iv.start) + ", expected " + std::to_string(expected));
        }
        if (iv.end <= iv.start) {
            throw InvalidInput("segmentation: interval " + std::to_string(i) + " is empty");
        }
        expected = iv.end;
    }
    if (expected != n_frames_) {
        throw InvalidInput("segmentation: intervals cover " + std::to_string(expected) + " of " +
                           std::to_string(n_frames_) + " frames");
    }
}

SceneSegmentation SceneSegmentation::from_boundaries(std::span<const std::size_t> boundaries,
                                                     std::size_t n_frames) {
    std::vector<Interval> out;
    std::size_t start = 0;
    for (std::size_t b : boundaries) {
        if (b + 1 >= n_frames || b + 1 <= start) {
            throw InvalidInput("segmentation: boundary " + std::to_string(b) + " out of order or range");
        }
        out.push_back({start, b + 1});
        start = b + 1;
    }
    out.push_back({start, n_frames});
    return SceneSegmentation(std::move(out), n_frames);
}

SceneSegmentation SceneSegmentation::whole(std::size_t n_frames) {
    return SceneSegmentation({{0, n_frames}}, n_frames);
}

std::vector<std::size_t> SceneSegmentation::boundaries() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i + 1 < intervals_.size(); ++i) {
        out.push_back(intervals_[i].end - 1);
    }
    return out;
}

std::vector<std::size_t> SceneSegmentation::frame_labels() const {
    std::vector<std::size_t> labels(n_frames_);
    for (std::size_t i = 0; i < intervals_.size(); ++i) {
        for (std::size_t t = intervals_[i].start; t < intervals_[i].end; ++t) {
            labels[t] = i;
        }
    }
    return labels;
}

FrameEmbeddings::FrameEmbeddings(std::size_t n_frames, std::size_t dim)
    : n_frames_(n_frames), dim_(dim), values_(n_frames * dim, 0.0f) {}

FrameEmbeddings::FrameEmbeddings(std::size_t n_frames, std::size_t dim, std::vector<float> values)
    : n_frames_(n_frames), dim_(dim), values_(std::move(values)) {
    if (values_.size() != n_frames_ * dim_) {
        throw InvalidInput("embeddings: expected " + std::to_string(n_frames_ * dim_) + " values, got " +
                           std::to_string(values_.size()));
    }
    for (float v : values_) {
        if (!std::isfinite(v)) {
            throw InvalidInput("embeddings: non-finite value");
        }
    }
}

FrameEmbeddings FrameEmbeddings::slice(std::size_t first, std::size_t last) const {
    if (first > last || last > n_frames_) {
        throw InvalidInput("embeddings: slice out of range");
    }
    std::vector<float> v(values_.begin() + static_cast<std::ptrdiff_t>(first * dim_),
                         values_.begin() + static_cast<std::ptrdiff_t>(last * dim_));
    return FrameEmbeddings(last - first, dim_, std::move(v));
}

std::vector<double> FrameEmbeddings::mean(std::size_t first, std::size_t last) const {
    std::vector<double> m(dim_, 0.0);
    if (last <= first) {
        return m;
    }
    for (std::size_t t = first; t < last; ++t) {
        auto r = row(t);
        for (std::size_t d = 0; d < dim_; ++d) {
            m[d] += r[d];
        }
    }
    const double n = static_cast<double>(last - first);
    for (double& x : m) {
        x /= n;
    }
    return m;
}

}  // namespace vsum
