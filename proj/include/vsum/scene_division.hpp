#ifndef VSUM_SCENE_DIVISION_HPP
#define VSUM_SCENE_DIVISION_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vsum/segmentation.hpp"

namespace vsum::scene {

inline constexpr std::size_t kFrameSide = 32;
inline constexpr std::size_t kHashSide = 8;
inline constexpr std::size_t kHashBits = kHashSide * kHashSide;

/// Interleaved 8-bit RGB raster.
struct RgbImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;  // width * height * 3

    static RgbImage filled(std::size_t width, std::size_t height, std::uint8_t r, std::uint8_t g, std::uint8_t b);
    void set(std::size_t x, std::size_t y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
};

/// 32x32 luma matrix, row-major, values in [0, 255].
struct GrayFrame {
    std::array<double, kFrameSide * kFrameSide> pixels{};
    std::size_t frame_index = 0;

    double at(std::size_t row, std::size_t col) const { return pixels[row * kFrameSide + col]; }
};

/// 64-bit perceptual hash; bit m belongs to coefficient m of the 8x8 block in row-major order.
struct PHash {
    std::uint64_t bits = 0;

    bool bit(std::size_t m) const { return ((bits >> m) & 1u) != 0; }
    std::size_t popcount() const;
    std::string hex() const;
    static PHash from_hex(const std::string& hex);
    bool operator==(const PHash&) const = default;
};

/// Grayscale (0.299R + 0.587G + 0.114B) then bilinear resize to 32x32.
GrayFrame preprocess_frame(const RgbImage& image, std::size_t frame_index = 0);

/// Low-frequency 8x8 block of the unnormalized 2-D type-II DCT, row-major.
std::array<double, kHashBits> low_frequency_dct(const GrayFrame& frame);

PHash phash(const GrayFrame& frame);

double hamming_norm(PHash a, PHash b);
/// Generic form over explicit bit vectors; throws InvalidInput on length mismatch.
double hamming_norm(const std::vector<bool>& a, const std::vector<bool>& b);

class ThresholdGrid {
public:
    ThresholdGrid() : ThresholdGrid(0.05, 0.60, 0.05) {}
    ThresholdGrid(double tau_min, double tau_max, double delta_tau);

    double tau_min() const noexcept { return tau_min_; }
    double tau_max() const noexcept { return tau_max_; }
    double delta_tau() const noexcept { return delta_tau_; }
    const std::vector<double>& points() const noexcept { return points_; }

private:
    double tau_min_;
    double tau_max_;
    double delta_tau_;
    std::vector<double> points_;
};

/// Indices t with hamming_norm(h[t], h[t+1]) >= tau, ascending.
std::vector<std::size_t> detect_boundaries(std::span<const PHash> hashes, double tau);

/// Index of the grid point maximizing -(N[i+1] - N[i]) / delta over i < P-1; ties go to the smaller index.
std::size_t steepest_drop_index(std::span<const std::size_t> scene_counts, double delta_tau);

/// Scene count N(tau) = 1 + boundaries at each grid point.
std::vector<std::size_t> scene_count_curve(std::span<const PHash> hashes, const ThresholdGrid& grid);

double select_threshold(std::span<const PHash> hashes, const ThresholdGrid& grid);

struct SegmentTrace {
    double tau_star = 0.0;
    std::vector<std::size_t> scene_counts;
};

SceneSegmentation segment(std::span<const PHash> hashes, const ThresholdGrid& grid, SegmentTrace* trace = nullptr);

inline constexpr std::size_t kDefaultMinSceneFrames = 150;

/// Minimum scene length in frames from a duration in seconds.
std::size_t min_len_from_seconds(double seconds, double fps);

/// Cosine similarity; zero-norm vectors give 0.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Merges every scene shorter than min_len into its cosine-nearer neighbor, left to right until fixpoint.
SceneSegmentation refine_short_scenes(const SceneSegmentation& seg, const FrameEmbeddings& emb,
                                      std::size_t min_len = kDefaultMinSceneFrames);

}  // namespace vsum::scene

#endif  // VSUM_SCENE_DIVISION_HPP
