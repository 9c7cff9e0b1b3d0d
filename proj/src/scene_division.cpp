#include "vsum/scene_division.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include "vsum/error.hpp"
#include "vsum/kernels.hpp"

namespace vsum::scene {

namespace {

// Non-DC coefficients of a flat block cancel analytically but leave ~1e-9 rounding residue at
// full-scale DC; anything below this is treated as an exact zero before the median test.
constexpr double kDctZero = 1e-6;

struct CosineTable {
    // 2 cos(pi k (2n + 1) / 2N) for k < 8, n < 32.
    std::array<double, kHashSide * kFrameSide> c{};
    CosineTable() {
        for (std::size_t k = 0; k < kHashSide; ++k) {
            for (std::size_t n = 0; n < kFrameSide; ++n) {
                c[k * kFrameSide + n] =
                    2.0 * std::cos(std::numbers::pi * static_cast<double>(k) * (2.0 * static_cast<double>(n) + 1.0) /
                                   (2.0 * static_cast<double>(kFrameSide)));
            }
        }
    }
};

const CosineTable& cosine_table() {
    static const CosineTable table;
    return table;
}

}  // namespace

RgbImage RgbImage::filled(std::size_t width, std::size_t height, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    RgbImage img{width, height, std::vector<std::uint8_t>(width * height * 3)};
    for (std::size_t i = 0; i < width * height; ++i) {
        img.pixels[3 * i] = r;
        img.pixels[3 * i + 1] = g;
        img.pixels[3 * i + 2] = b;
    }
    return img;
}

void RgbImage::set(std::size_t x, std::size_t y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    const std::size_t i = 3 * (y * width + x);
    pixels[i] = r;
    pixels[i + 1] = g;
    pixels[i + 2] = b;
}

std::size_t PHash::popcount() const { return static_cast<std::size_t>(std::popcount(bits)); }

std::string PHash::hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (std::size_t i = 0; i < 16; ++i) {
        out[15 - i] = digits[(bits >> (4 * i)) & 0xF];
    }
    return out;
}

PHash PHash::from_hex(const std::string& hex) {
    if (hex.size() != 16) {
        throw InvalidInput("phash: expected 16 hex digits, got '" + hex + "'");
    }
    std::uint64_t v = 0;
    for (char ch : hex) {
        v <<= 4;
        if (ch >= '0' && ch <= '9') {
            v |= static_cast<std::uint64_t>(ch - '0');
        } else if (ch >= 'a' && ch <= 'f') {
            v |= static_cast<std::uint64_t>(ch - 'a' + 10);
        } else if (ch >= 'A' && ch <= 'F') {
            v |= static_cast<std::uint64_t>(ch - 'A' + 10);
        } else {
            throw InvalidInput("phash: bad hex digit in '" + hex + "'");
        }
    }
    return PHash{v};
}

GrayFrame preprocess_frame(const RgbImage& image, std::size_t frame_index) {
    if (image.width == 0 || image.height == 0 || image.pixels.size() != image.width * image.height * 3) {
        throw InvalidInput("preprocess_frame: empty or inconsistent image");
    }
    const std::size_t w = image.width;
    const std::size_t h = image.height;
    std::vector<double> luma(w * h);
    for (std::size_t i = 0; i < w * h; ++i) {
        luma[i] = 0.299 * image.pixels[3 * i] + 0.587 * image.pixels[3 * i + 1] + 0.114 * image.pixels[3 * i + 2];
    }

    // Half-pixel-centre bilinear sampling with edge clamping.
    auto source_coord = [](std::size_t dst, std::size_t src_len) {
        double s = (static_cast<double>(dst) + 0.5) * static_cast<double>(src_len) / static_cast<double>(kFrameSide) - 0.5;
        s = std::clamp(s, 0.0, static_cast<double>(src_len - 1));
        const auto i0 = static_cast<std::size_t>(std::floor(s));
        const std::size_t i1 = std::min(i0 + 1, src_len - 1);
        return std::tuple{i0, i1, s - static_cast<double>(i0)};
    };

    GrayFrame out;
    out.frame_index = frame_index;
    for (std::size_t y = 0; y < kFrameSide; ++y) {
        const auto [y0, y1, fy] = source_coord(y, h);
        for (std::size_t x = 0; x < kFrameSide; ++x) {
            const auto [x0, x1, fx] = source_coord(x, w);
            const double top = (1.0 - fx) * luma[y0 * w + x0] + fx * luma[y0 * w + x1];
            const double bottom = (1.0 - fx) * luma[y1 * w + x0] + fx * luma[y1 * w + x1];
            out.pixels[y * kFrameSide + x] = std::clamp((1.0 - fy) * top + fy * bottom, 0.0, 255.0);
        }
    }
    return out;
}

std::array<double, kHashBits> low_frequency_dct(const GrayFrame& frame) {
    const auto& c = cosine_table().c;
    // rows: 8x32 = C8 * X
    std::array<double, kHashSide * kFrameSide> partial{};
    for (std::size_t u = 0; u < kHashSide; ++u) {
        for (std::size_t x = 0; x < kFrameSide; ++x) {
            double acc = 0.0;
            for (std::size_t y = 0; y < kFrameSide; ++y) {
                acc += c[u * kFrameSide + y] * frame.pixels[y * kFrameSide + x];
            }
            partial[u * kFrameSide + x] = acc;
        }
    }
    std::array<double, kHashBits> block{};
    for (std::size_t u = 0; u < kHashSide; ++u) {
        for (std::size_t v = 0; v < kHashSide; ++v) {
            double acc = 0.0;
            for (std::size_t x = 0; x < kFrameSide; ++x) {
                acc += partial[u * kFrameSide + x] * c[v * kFrameSide + x];
            }
            block[u * kHashSide + v] = std::abs(acc) < kDctZero ? 0.0 : acc;
        }
    }
    return block;
}

PHash phash(const GrayFrame& frame) {
    const auto block = low_frequency_dct(frame);
    auto sorted = block;
    std::sort(sorted.begin(), sorted.end());
    const double median = 0.5 * (sorted[kHashBits / 2 - 1] + sorted[kHashBits / 2]);
    PHash h;
    for (std::size_t m = 0; m < kHashBits; ++m) {
        if (block[m] > median) {
            h.bits |= (std::uint64_t{1} << m);
        }
    }
    return h;
}

double hamming_norm(PHash a, PHash b) {
    return static_cast<double>(std::popcount(a.bits ^ b.bits)) / static_cast<double>(kHashBits);
}

double hamming_norm(const std::vector<bool>& a, const std::vector<bool>& b) {
    if (a.size() != b.size()) {
        throw InvalidInput("hamming_norm: length mismatch (" + std::to_string(a.size()) + " vs " +
                           std::to_string(b.size()) + ")");
    }
    if (a.empty()) {
        throw InvalidInput("hamming_norm: empty hashes");
    }
    std::size_t diff = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += a[i] != b[i] ? 1 : 0;
    }
    return static_cast<double>(diff) / static_cast<double>(a.size());
}

ThresholdGrid::ThresholdGrid(double tau_min, double tau_max, double delta_tau)
    : tau_min_(tau_min), tau_max_(tau_max), delta_tau_(delta_tau) {
    if (!(tau_min > 0.0 && tau_min < 1.0) || !(tau_max > 0.0 && tau_max < 1.0)) {
        throw InvalidInput("threshold grid: endpoints must lie in (0, 1)");
    }
    if (!(tau_min < tau_max)) {
        throw InvalidInput("threshold grid: tau_min must be below tau_max");
    }
    if (!(delta_tau > 0.0) || !std::isfinite(delta_tau)) {
        throw InvalidInput("threshold grid: delta_tau must be positive");
    }
    const auto steps = static_cast<std::size_t>(std::floor((tau_max - tau_min) / delta_tau + 1e-9));
    for (std::size_t i = 0; i <= steps; ++i) {
        points_.push_back(tau_min + static_cast<double>(i) * delta_tau);
    }
    if (points_.size() < 3) {
        throw InvalidInput("threshold grid: needs at least 3 points, got " + std::to_string(points_.size()));
    }
}

std::vector<std::size_t> detect_boundaries(std::span<const PHash> hashes, double tau) {
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t + 1 < hashes.size(); ++t) {
        if (hamming_norm(hashes[t], hashes[t + 1]) >= tau) {
            out.push_back(t);
        }
    }
    return out;
}

std::size_t steepest_drop_index(std::span<const std::size_t> scene_counts, double delta_tau) {
    if (scene_counts.size() < 2) {
        throw InvalidInput("select_threshold: fewer than 2 grid points");
    }
    std::size_t best = 0;
    double best_drop = -(static_cast<double>(scene_counts[1]) - static_cast<double>(scene_counts[0])) / delta_tau;
    for (std::size_t i = 1; i + 1 < scene_counts.size(); ++i) {
        const double drop =
            -(static_cast<double>(scene_counts[i + 1]) - static_cast<double>(scene_counts[i])) / delta_tau;
        if (drop > best_drop) {
            best_drop = drop;
            best = i;
        }
    }
    return best;
}

std::vector<std::size_t> scene_count_curve(std::span<const PHash> hashes, const ThresholdGrid& grid) {
    const auto distances = kernels::parallel::hamming_profile(hashes);
    std::vector<std::size_t> counts;
    counts.reserve(grid.points().size());
    for (double tau : grid.points()) {
        const auto n = static_cast<std::size_t>(
            std::count_if(distances.begin(), distances.end(), [tau](double d) { return d >= tau; }));
        counts.push_back(1 + n);
    }
    return counts;
}

double select_threshold(std::span<const PHash> hashes, const ThresholdGrid& grid) {
    const auto counts = scene_count_curve(hashes, grid);
    return grid.points()[steepest_drop_index(counts, grid.delta_tau())];
}

SceneSegmentation segment(std::span<const PHash> hashes, const ThresholdGrid& grid, SegmentTrace* trace) {
    if (hashes.empty()) {
        throw InvalidInput("segment: no frames");
    }
    const auto counts = scene_count_curve(hashes, grid);
    const double tau = grid.points()[steepest_drop_index(counts, grid.delta_tau())];
    if (trace != nullptr) {
        trace->tau_star = tau;
        trace->scene_counts = counts;
    }
    const auto boundaries = detect_boundaries(hashes, tau);
    return SceneSegmentation::from_boundaries(boundaries, hashes.size());
}

std::size_t min_len_from_seconds(double seconds, double fps) {
    if (!(seconds > 0.0) || !(fps > 0.0)) {
        throw InvalidInput("min_len_from_seconds: seconds and fps must be positive");
    }
    return static_cast<std::size_t>(std::llround(seconds * fps));
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

SceneSegmentation refine_short_scenes(const SceneSegmentation& seg, const FrameEmbeddings& emb, std::size_t min_len) {
    if (emb.n_frames() != seg.n_frames()) {
        throw InvalidInput("refine_short_scenes: embeddings cover " + std::to_string(emb.n_frames()) +
                           " frames, segmentation covers " + std::to_string(seg.n_frames()));
    }
    struct Piece {
        Interval iv;
        std::vector<double> sum;
    };
    const std::size_t dim = emb.dim();
    std::vector<Piece> pieces;
    pieces.reserve(seg.size());
    for (const auto& iv : seg.intervals()) {
        auto m = emb.mean(iv.start, iv.end);
        for (double& x : m) {
            x *= static_cast<double>(iv.length());
        }
        pieces.push_back({iv, std::move(m)});
    }
    auto mean_of = [dim](const Piece& p) {
        std::vector<double> m(dim);
        for (std::size_t d = 0; d < dim; ++d) {
            m[d] = p.sum[d] / static_cast<double>(p.iv.length());
        }
        return m;
    };

    std::size_t i = 0;
    while (pieces.size() > 1 && i < pieces.size()) {
        if (pieces[i].iv.length() >= min_len) {
            ++i;
            continue;
        }
        std::size_t target;
        if (i == 0) {
            target = 1;
        } else if (i + 1 == pieces.size()) {
            target = i - 1;
        } else {
            const auto self = mean_of(pieces[i]);
            const double sim_prev = cosine_similarity(self, mean_of(pieces[i - 1]));
            const double sim_next = cosine_similarity(self, mean_of(pieces[i + 1]));
            target = sim_next > sim_prev ? i + 1 : i - 1;
        }
        const std::size_t keep = std::min(i, target);
        const std::size_t drop = std::max(i, target);
        pieces[keep].iv.end = pieces[drop].iv.end;
        for (std::size_t d = 0; d < dim; ++d) {
            pieces[keep].sum[d] += pieces[drop].sum[d];
        }
        pieces.erase(pieces.begin() + static_cast<std::ptrdiff_t>(drop));
        i = keep;
    }

    std::vector<Interval> out;
    out.reserve(pieces.size());
    for (const auto& p : pieces) {
        out.push_back(p.iv);
    }
    return SceneSegmentation(std::move(out), seg.n_frames());
}

}  // namespace vsum::scene
