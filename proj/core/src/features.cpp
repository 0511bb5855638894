#include "liketrack/features.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace liketrack {

namespace {

struct Plane {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

Plane to_plane(const ImageRaster& gray) {
    Plane p{gray.width(), gray.height(), {}};
    p.values.assign(gray.values().begin(), gray.values().end());
    return p;
}

Plane resize_plane(const Plane& src, int dw, int dh) {
    if (src.width == dw && src.height == dh) {
        return src;
    }
    Plane dst{dw, dh, std::vector<double>(static_cast<std::size_t>(dw) * dh)};
    if (src.width % dw == 0 && src.height % dh == 0) {
        const int fx = src.width / dw;
        const int fy = src.height / dh;
        const double norm = 1.0 / (fx * fy);
        for (int y = 0; y < dh; ++y) {
            for (int x = 0; x < dw; ++x) {
                double acc = 0.0;
                for (int j = 0; j < fy; ++j) {
                    for (int i = 0; i < fx; ++i) {
                        acc += src.at(x * fx + i, y * fy + j);
                    }
                }
                dst.values[static_cast<std::size_t>(y) * dw + x] = acc * norm;
            }
        }
        return dst;
    }
    const double sx = static_cast<double>(src.width) / dw;
    const double sy = static_cast<double>(src.height) / dh;
    for (int y = 0; y < dh; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.height - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, src.height - 1);
        const double ay = fy - y0;
        for (int x = 0; x < dw; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.width - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, src.width - 1);
            const double ax = fx - x0;
            const double top = (1.0 - ax) * src.at(x0, y0) + ax * src.at(x1, y0);
            const double bottom = (1.0 - ax) * src.at(x0, y1) + ax * src.at(x1, y1);
            dst.values[static_cast<std::size_t>(y) * dw + x] = (1.0 - ay) * top + ay * bottom;
        }
    }
    return dst;
}

// Mean over non-overlapping cell x cell blocks; trailing partial cells are dropped.
void pool_into(const std::vector<double>& src, int width, int cell, std::span<double> dst, int rows, int cols) {
    const double norm = 1.0 / (cell * cell);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (int j = 0; j < cell; ++j) {
                const double* row = &src[static_cast<std::size_t>(r * cell + j) * width + c * cell];
                for (int i = 0; i < cell; ++i) {
                    acc += row[i];
                }
            }
            dst[static_cast<std::size_t>(r) * cols + c] = acc * norm;
        }
    }
}

FeatureLayer grayscale_layer(const Plane& gray, const ExtractorConfig& cfg, int index, double weight) {
    const int cell = cfg.gray_cell_size;
    const int n = cfg.feature_size;
    const Plane sized = resize_plane(gray, n * cell, n * cell);
    FeatureLayer layer(index, 1, n, n, weight);
    pool_into(sized.values, sized.width, cell, layer.channel(0), n, n);
    // Window-weighted mean: the windowed layer then has an exactly zero sum,
    // so its filter carries no unstable DC term.
    const auto hann = hann_window(n);
    double weighted = 0.0;
    double total = 0.0;
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const double w = hann[r] * hann[c];
            weighted += w * layer.values[static_cast<std::size_t>(r) * n + c];
            total += w;
        }
    }
    const double mean = total > 0.0 ? weighted / total : 0.0;
    double energy = 0.0;
    for (double& v : layer.values) {
        v -= mean;
        energy += v * v;
    }
    const double rms = std::sqrt(energy / static_cast<double>(layer.values.size()));
    if (cfg.normalize && rms > 1e-12) {
        for (double& v : layer.values) {
            v /= rms;
        }
    }
    return layer;
}

// atan(z) for z in [0, 1]; minimax polynomial, |error| < 2e-5 rad.
double atan_unit(double z) {
    const double z2 = z * z;
    return z * (0.99997726 + z2 * (-0.33262347 + z2 * (0.19354346 + z2 * (-0.11643287 + z2 * (0.05265332 -
                                                                                             0.01172120 * z2)))));
}

FeatureLayer gradient_layer(const Plane& gray, const ExtractorConfig& cfg, int index, double weight) {
    const int cell = cfg.gradient_cell_size;
    const int n = cfg.feature_size;
    const int bins = cfg.orientation_bins;
    const Plane sized = resize_plane(gray, n * cell, n * cell);
    const int w = sized.width;
    const int h = sized.height;

    // Bin centers at b * pi / bins, linear soft assignment, averaged per cell.
    FeatureLayer layer(index, bins, n, n, weight);
    const std::size_t plane = layer.plane_size();
    const double inv_bin_width = bins / std::numbers::pi;
    const double norm = 1.0 / (cell * cell);
    std::vector<double> mag(w);
    std::vector<double> pos(w);
    for (int y = 0; y < h; ++y) {
        const double* row = &sized.values[static_cast<std::size_t>(y) * w];
        const double* above = &sized.values[static_cast<std::size_t>(std::max(y - 1, 0)) * w];
        const double* below = &sized.values[static_cast<std::size_t>(std::min(y + 1, h - 1)) * w];
        // Branch-free first pass so the compiler can vectorize it.
        for (int x = 0; x < w; ++x) {
            const double gx = 0.5 * (row[x + 1 < w ? x + 1 : w - 1] - row[x > 0 ? x - 1 : 0]);
            const double gy = 0.5 * (below[x] - above[x]);
            const double ax = std::abs(gx);
            const double ay = std::abs(gy);
            const double hi = std::max(ax, ay);
            const double lo = std::min(ax, ay);
            const double t = atan_unit(hi > 0.0 ? lo / hi : 0.0);
            double a = ay > ax ? std::numbers::pi / 2 - t : t;
            a = gx * gy < 0.0 ? std::numbers::pi - a : a;
            mag[x] = std::sqrt(gx * gx + gy * gy) * norm;
            pos[x] = a * inv_bin_width;
        }
        const std::size_t cell_row = static_cast<std::size_t>(y / cell) * n;
        for (int x = 0; x < w; ++x) {
            if (mag[x] == 0.0) {
                continue;
            }
            const int b0 = std::min(static_cast<int>(pos[x]), bins - 1);
            const int b1 = b0 + 1 == bins ? 0 : b0 + 1;
            const double frac = pos[x] - b0;
            const std::size_t idx = cell_row + static_cast<std::size_t>(x / cell);
            layer.values[b0 * plane + idx] += (1.0 - frac) * mag[x];
            layer.values[b1 * plane + idx] += frac * mag[x];
        }
    }
    if (cfg.normalize) {
        const double total = std::accumulate(layer.values.begin(), layer.values.end(), 0.0);
        const double mean = total / static_cast<double>(plane);
        if (mean > 1e-12) {
            for (double& v : layer.values) {
                v /= mean;
            }
        }
    }
    return layer;
}

}  // namespace

void ExtractorConfig::validate() const {
    if (!(padding > 1.0) || !std::isfinite(padding)) {
        throw std::invalid_argument("padding must exceed 1");
    }
    if (orientation_bins < 2) {
        throw std::invalid_argument("orientation_bins must be at least 2");
    }
    if (gray_cell_size < 1 || gradient_cell_size < 1) {
        throw std::invalid_argument("cell sizes must be positive");
    }
    if (feature_size < 1) {
        throw std::invalid_argument("feature_size must be positive");
    }
    if (kind == FeatureKind::Combined) {
        if (layer_weights.size() != 2) {
            throw std::invalid_argument("combined features need exactly 2 layer weights");
        }
        if (layer_weights[0] < 0.0 || layer_weights[1] < 0.0 || layer_weights[0] + layer_weights[1] <= 0.0) {
            throw std::invalid_argument("layer weights must be non-negative with a positive sum");
        }
    }
}

int ExtractorConfig::patch_raster_size() const {
    switch (kind) {
        case FeatureKind::Grayscale:
            return feature_size * gray_cell_size;
        case FeatureKind::Gradient:
            return feature_size * gradient_cell_size;
        case FeatureKind::Combined:
        case FeatureKind::External:
            break;
    }
    return feature_size * std::max(gray_cell_size, gradient_cell_size);
}

FeatureLayer::FeatureLayer(int index, int channels, int rows, int cols, double weight)
    : index(index),
      channels(channels),
      rows(rows),
      cols(cols),
      weight(weight),
      values(static_cast<std::size_t>(channels) * rows * cols, 0.0) {}

void FeaturePyramid::validate() const {
    if (layers.empty()) {
        throw std::invalid_argument("feature pyramid needs at least one layer");
    }
    double weight_sum = 0.0;
    for (const auto& layer : layers) {
        if (layer.channels < 1 || layer.rows < 1 || layer.cols < 1) {
            throw std::invalid_argument("feature layer needs at least one channel and one cell");
        }
        if (layer.values.size() != static_cast<std::size_t>(layer.channels) * layer.plane_size()) {
            throw std::invalid_argument("feature layer value count does not match dimensions");
        }
        if (!(layer.weight >= 0.0) || !std::isfinite(layer.weight)) {
            throw std::invalid_argument("layer weight must be finite and non-negative");
        }
        if (!std::all_of(layer.values.begin(), layer.values.end(), [](double v) { return std::isfinite(v); })) {
            throw std::invalid_argument("feature values must be finite");
        }
        weight_sum += layer.weight;
    }
    if (weight_sum <= 0.0) {
        throw std::invalid_argument("layer weights must sum to a positive value");
    }
}

namespace {

// Bilinear window sampling shared by extract_patch and features_at; `out`
// receives raster_w * raster_h * channels samples.
template <typename T>
void sample_window(const ImageRaster& frame, const BoundingBox& box, double padding, int raster_w, int raster_h,
                   T* out) {
    if (!box.valid()) {
        throw std::invalid_argument("degenerate box: non-finite or non-positive size");
    }
    if (raster_w < 1 || raster_h < 1) {
        throw std::invalid_argument("patch raster must be non-empty");
    }
    const double pw = padding * box.w;
    const double ph = padding * box.h;
    const double left = box.cx - pw / 2.0;
    const double top = box.cy - ph / 2.0;
    const double sx = pw / raster_w;
    const double sy = ph / raster_h;
    const int fw = frame.width();
    const int fh = frame.height();
    const int ch = frame.channels();
    const std::span<const float> px = frame.values();

    std::vector<int> x0s(raster_w), x1s(raster_w);
    std::vector<float> axs(raster_w);
    for (int j = 0; j < raster_w; ++j) {
        const double fx = std::clamp(left + (j + 0.5) * sx - 0.5, 0.0, fw - 1.0);
        x0s[j] = static_cast<int>(fx);
        x1s[j] = std::min(x0s[j] + 1, fw - 1);
        axs[j] = static_cast<float>(fx - x0s[j]);
    }
    for (int i = 0; i < raster_h; ++i) {
        const double fy = std::clamp(top + (i + 0.5) * sy - 0.5, 0.0, fh - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, fh - 1);
        const auto ay = static_cast<float>(fy - y0);
        const float* r0 = &px[static_cast<std::size_t>(y0) * fw * ch];
        const float* r1 = &px[static_cast<std::size_t>(y1) * fw * ch];
        T* dst = out + static_cast<std::size_t>(i) * raster_w * ch;
        for (int j = 0; j < raster_w; ++j) {
            const float ax = axs[j];
            const int a = x0s[j] * ch;
            const int b = x1s[j] * ch;
            for (int c = 0; c < ch; ++c) {
                const float t = (1.0F - ax) * r0[a + c] + ax * r0[b + c];
                const float u = (1.0F - ax) * r1[a + c] + ax * r1[b + c];
                dst[j * ch + c] = static_cast<T>(std::clamp((1.0F - ay) * t + ay * u, 0.0F, 1.0F));
            }
        }
    }
}

}  // namespace

ImageRaster extract_patch(const ImageRaster& frame, const BoundingBox& box, double padding, int raster_w,
                          int raster_h) {
    std::vector<float> out(static_cast<std::size_t>(std::max(raster_w, 0)) * std::max(raster_h, 0) *
                           frame.channels());
    sample_window(frame, box, padding, raster_w, raster_h, out.data());
    return ImageRaster(raster_w, raster_h, frame.channels(), std::move(out));
}

ImageRaster extract_patch(const ImageRaster& frame, const BoundingBox& box, const ExtractorConfig& cfg) {
    const int side = cfg.patch_raster_size();
    return extract_patch(frame, box, cfg.padding, side, side);
}

namespace {

void check_extractable(int width, int height, const ExtractorConfig& cfg) {
    cfg.validate();
    if (cfg.kind == FeatureKind::External) {
        throw std::invalid_argument("external features are loaded from file, not extracted");
    }
    int min_cell = 1;
    if (cfg.kind != FeatureKind::Gradient) {
        min_cell = std::max(min_cell, cfg.gray_cell_size);
    }
    if (cfg.kind != FeatureKind::Grayscale) {
        min_cell = std::max(min_cell, cfg.gradient_cell_size);
    }
    if (width < min_cell || height < min_cell) {
        throw std::invalid_argument("patch is smaller than one feature cell");
    }
}

FeaturePyramid pyramid_from_plane(const Plane& gray, const ExtractorConfig& cfg) {
    FeaturePyramid pyramid;
    switch (cfg.kind) {
        case FeatureKind::Grayscale:
            pyramid.layers.push_back(grayscale_layer(gray, cfg, 0, 1.0));
            break;
        case FeatureKind::Gradient:
            pyramid.layers.push_back(gradient_layer(gray, cfg, 0, 1.0));
            break;
        case FeatureKind::Combined:
            pyramid.layers.push_back(grayscale_layer(gray, cfg, 0, cfg.layer_weights[0]));
            pyramid.layers.push_back(gradient_layer(gray, cfg, 1, cfg.layer_weights[1]));
            break;
        case FeatureKind::External:
            break;
    }
    return pyramid;
}

}  // namespace

FeaturePyramid extract_features(const ImageRaster& patch, const ExtractorConfig& cfg) {
    check_extractable(patch.width(), patch.height(), cfg);
    return pyramid_from_plane(to_plane(patch.to_grayscale()), cfg);
}

FeaturePyramid features_at(const ImageRaster& frame, const BoundingBox& box, const ExtractorConfig& cfg) {
    FeaturePyramid pyramid;
    if (frame.channels() == 1) {
        // Same samples as extract_patch, written straight into a double plane.
        const int side = cfg.patch_raster_size();
        check_extractable(side, side, cfg);
        Plane gray{side, side, std::vector<double>(static_cast<std::size_t>(side) * side)};
        sample_window(frame, box, cfg.padding, side, side, gray.values.data());
        pyramid = pyramid_from_plane(gray, cfg);
    } else {
        pyramid = extract_features(extract_patch(frame, box, cfg), cfg);
    }
    pyramid.patch_box = {box.cx, box.cy, box.w * cfg.padding, box.h * cfg.padding};
    return apply_cosine_window(std::move(pyramid));
}

std::vector<double> hann_window(int n) {
    if (n <= 1) {
        return std::vector<double>(static_cast<std::size_t>(std::max(n, 0)), 1.0);
    }
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) {
        w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / (n - 1)));
    }
    return w;
}

FeaturePyramid apply_cosine_window(FeaturePyramid pyramid) {
    for (auto& layer : pyramid.layers) {
        const auto wr = hann_window(layer.rows);
        const auto wc = hann_window(layer.cols);
        for (int o = 0; o < layer.channels; ++o) {
            auto ch = layer.channel(o);
            for (int r = 0; r < layer.rows; ++r) {
                for (int c = 0; c < layer.cols; ++c) {
                    ch[static_cast<std::size_t>(r) * layer.cols + c] *= wr[r] * wc[c];
                }
            }
        }
    }
    return pyramid;
}

// ---------------------------------------------------------------------------
// Feature-tensor files

namespace {

constexpr std::array<char, 4> kMagic{'F', 'P', 'Y', 'R'};
constexpr std::uint8_t kVersion = 1;

class LeReader {
public:
    explicit LeReader(std::istream& in) : in_(in) {}

    // Returns false on clean EOF before the first byte.
    bool try_bytes(char* dst, std::size_t n) {
        in_.read(dst, static_cast<std::streamsize>(n));
        const auto got = static_cast<std::size_t>(in_.gcount());
        if (got == n) {
            return true;
        }
        if (got == 0) {
            return false;
        }
        throw FeatureFileError(FeatureFileError::Kind::Truncated, "feature file truncated");
    }
    void bytes(char* dst, std::size_t n, const char* what) {
        if (!try_bytes(dst, n)) {
            throw FeatureFileError(FeatureFileError::Kind::Truncated,
                                   std::string("feature file truncated while reading ") + what);
        }
    }
    template <typename T>
    T uint(const char* what) {
        std::array<unsigned char, sizeof(T)> buf{};
        bytes(reinterpret_cast<char*>(buf.data()), buf.size(), what);
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            v |= static_cast<T>(buf[i]) << (8 * i);
        }
        return v;
    }
    float f32(const char* what) { return std::bit_cast<float>(uint<std::uint32_t>(what)); }

private:
    std::istream& in_;
};

struct LayerHeader {
    std::uint16_t channels;
    std::uint16_t rows;
    std::uint16_t cols;
    float weight;
};

template <typename T>
void put_uint(std::ostream& out, T v) {
    std::array<char, sizeof(T)> buf{};
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    }
    out.write(buf.data(), buf.size());
}

}  // namespace

FeaturePyramid load_external_features(const std::filesystem::path& path, std::uint32_t frame_index) {
    using Kind = FeatureFileError::Kind;
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open feature file " + path.string());
    }
    LeReader reader(in);
    std::array<char, 4> magic{};
    if (!reader.try_bytes(magic.data(), magic.size()) || magic != kMagic) {
        throw FeatureFileError(Kind::MalformedHeader, "feature file " + path.string() + ": bad magic");
    }
    if (const auto version = reader.uint<std::uint8_t>("version"); version != kVersion) {
        throw FeatureFileError(Kind::MalformedHeader,
                               "feature file " + path.string() + ": unsupported version " + std::to_string(version));
    }

    for (;;) {
        std::array<char, 4> idx_bytes{};
        if (!reader.try_bytes(idx_bytes.data(), idx_bytes.size())) {
            throw FeatureFileError(Kind::FrameNotFound, "frame " + std::to_string(frame_index) + " not in " +
                                                            path.string());
        }
        std::uint32_t index = 0;
        for (std::size_t i = 0; i < 4; ++i) {
            index |= static_cast<std::uint32_t>(static_cast<unsigned char>(idx_bytes[i])) << (8 * i);
        }
        const auto layer_count = reader.uint<std::uint16_t>("layer count");
        if (layer_count == 0) {
            throw FeatureFileError(Kind::MalformedHeader, "frame header declares zero layers");
        }
        std::vector<LayerHeader> headers(layer_count);
        std::size_t payload = 0;
        for (auto& lh : headers) {
            lh.channels = reader.uint<std::uint16_t>("layer header");
            lh.rows = reader.uint<std::uint16_t>("layer header");
            lh.cols = reader.uint<std::uint16_t>("layer header");
            lh.weight = reader.f32("layer weight");
            if (lh.channels == 0 || lh.rows == 0 || lh.cols == 0) {
                throw FeatureFileError(Kind::MalformedHeader, "layer header declares an empty dimension");
            }
            if (!std::isfinite(lh.weight) || lh.weight < 0.0F) {
                throw FeatureFileError(Kind::MalformedHeader, "layer weight must be finite and non-negative");
            }
            payload += static_cast<std::size_t>(lh.channels) * lh.rows * lh.cols;
        }
        for (const auto& lh : headers) {
            if (lh.rows != headers.front().rows || lh.cols != headers.front().cols) {
                throw FeatureFileError(Kind::DimensionMismatch,
                                       "layers of frame " + std::to_string(index) + " have different spatial dims");
            }
        }

        if (index != frame_index) {
            std::vector<char> skip(payload * 4);
            reader.bytes(skip.data(), skip.size(), "payload");
            continue;
        }

        FeaturePyramid pyramid;
        for (std::size_t l = 0; l < headers.size(); ++l) {
            const auto& lh = headers[l];
            FeatureLayer layer(static_cast<int>(l), lh.channels, lh.rows, lh.cols, lh.weight);
            for (double& v : layer.values) {
                const float f = reader.f32("payload");
                if (!std::isfinite(f)) {
                    throw FeatureFileError(Kind::InvalidValue, "non-finite feature value");
                }
                v = f;
            }
            pyramid.layers.push_back(std::move(layer));
        }
        return pyramid;
    }
}

void save_external_features(const std::filesystem::path& path,
                            std::span<const std::pair<std::uint32_t, FeaturePyramid>> frames) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write feature file " + path.string());
    }
    out.write(kMagic.data(), kMagic.size());
    put_uint<std::uint8_t>(out, kVersion);
    for (const auto& [index, pyramid] : frames) {
        pyramid.validate();
        put_uint<std::uint32_t>(out, index);
        put_uint<std::uint16_t>(out, static_cast<std::uint16_t>(pyramid.layers.size()));
        for (const auto& layer : pyramid.layers) {
            put_uint<std::uint16_t>(out, static_cast<std::uint16_t>(layer.channels));
            put_uint<std::uint16_t>(out, static_cast<std::uint16_t>(layer.rows));
            put_uint<std::uint16_t>(out, static_cast<std::uint16_t>(layer.cols));
            put_uint<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(layer.weight)));
        }
        for (const auto& layer : pyramid.layers) {
            for (double v : layer.values) {
                put_uint<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
            }
        }
    }
    if (!out) {
        throw DataError("failed writing feature file " + path.string());
    }
}

}  // namespace liketrack
