#ifndef VSUM_SEGMENTATION_HPP
#define VSUM_SEGMENTATION_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace vsum {

/// Half-open frame interval [start, end).
struct Interval {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t length() const noexcept { return end - start; }
    /// Real-valued midpoint (start + end - 1) / 2.
    double midpoint() const noexcept { return (static_cast<double>(start) + static_cast<double>(end) - 1.0) / 2.0; }
    bool operator==(const Interval&) const = default;
};

/// Ordered, contiguous, non-empty intervals that partition [0, n_frames).
class SceneSegmentation {
public:
    SceneSegmentation() = default;

    /// Throws InvalidInput unless the intervals partition [0, n_frames).
    SceneSegmentation(std::vector<Interval> intervals, std::size_t n_frames);

    /// Boundary index t splits between frames t and t+1.
    static SceneSegmentation from_boundaries(std::span<const std::size_t> boundaries, std::size_t n_frames);

    /// Single interval covering the whole video.
    static SceneSegmentation whole(std::size_t n_frames);

    const std::vector<Interval>& intervals() const noexcept { return intervals_; }
    std::size_t size() const noexcept { return intervals_.size(); }
    std::size_t n_frames() const noexcept { return n_frames_; }
    const Interval& operator[](std::size_t i) const { return intervals_[i]; }

    /// Last frame index of every interval except the final one.
    std::vector<std::size_t> boundaries() const;

    /// Scene index for every frame.
    std::vector<std::size_t> frame_labels() const;

    bool operator==(const SceneSegmentation&) const = default;

private:
    std::vector<Interval> intervals_;
    std::size_t n_frames_ = 0;
};

/// Row-major n_frames x dim embedding matrix.
class FrameEmbeddings {
public:
    FrameEmbeddings() = default;
    FrameEmbeddings(std::size_t n_frames, std::size_t dim);
    FrameEmbeddings(std::size_t n_frames, std::size_t dim, std::vector<float> values);

    std::size_t n_frames() const noexcept { return n_frames_; }
    std::size_t dim() const noexcept { return dim_; }

    std::span<const float> row(std::size_t i) const { return {values_.data() + i * dim_, dim_}; }
    std::span<float> row(std::size_t i) { return {values_.data() + i * dim_, dim_}; }
    const std::vector<float>& values() const noexcept { return values_; }

    /// Rows [first, last) as a new matrix.
    FrameEmbeddings slice(std::size_t first, std::size_t last) const;

    /// Mean of rows in [first, last), accumulated in double precision.
    std::vector<double> mean(std::size_t first, std::size_t last) const;

    bool operator==(const FrameEmbeddings&) const = default;

private:
    std::size_t n_frames_ = 0;
    std::size_t dim_ = 0;
    std::vector<float> values_;
};

}  // namespace vsum

#endif  // VSUM_SEGMENTATION_HPP
