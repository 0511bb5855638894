#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "liketrack/error.hpp"
#include "liketrack/grid.hpp"

namespace liketrack {

enum class FeatureKind {
    Grayscale,  // 1 layer x 1 channel, mean-subtracted intensity
    Gradient,   // 1 layer x orientation_bins channels
    Combined,   // grayscale (coarse) + gradients (fine)
    External,   // read from a feature-tensor file
};

struct ExtractorConfig {
    FeatureKind kind = FeatureKind::Combined;
    int orientation_bins = 9;
    int gray_cell_size = 1;
    int gradient_cell_size = 4;
    double padding = 2.5;
    int feature_size = 48;  // cells per side of every layer
    std::vector<double> layer_weights{0.5, 1.0};  // coarse -> fine
    // Grayscale to unit RMS, gradients to unit mean magnitude, per patch.
    bool normalize = false;

    // Throws std::invalid_argument.
    void validate() const;
    // Side length in pixels of the raster extract_patch should produce.
    int patch_raster_size() const;
};

struct FeatureLayer {
    int index = 0;
    int channels = 0;
    int rows = 0;
    int cols = 0;
    double weight = 1.0;
    std::vector<double> values;  // (channel, row, col)

    FeatureLayer() = default;
    FeatureLayer(int index, int channels, int rows, int cols, double weight);

    std::size_t plane_size() const { return static_cast<std::size_t>(rows) * cols; }
    std::span<double> channel(int o) { return {values.data() + o * plane_size(), plane_size()}; }
    std::span<const double> channel(int o) const { return {values.data() + o * plane_size(), plane_size()}; }
};

struct FeaturePyramid {
    std::vector<FeatureLayer> layers;
    BoundingBox patch_box;

    // Throws std::invalid_argument when layers are empty, ragged or non-finite.
    void validate() const;
};

// Padded window (padding*w x padding*h) around the box center, bilinearly
// resampled to raster_w x raster_h. Out-of-frame samples replicate the edge.
ImageRaster extract_patch(const ImageRaster& frame, const BoundingBox& box, double padding, int raster_w,
                          int raster_h);
ImageRaster extract_patch(const ImageRaster& frame, const BoundingBox& box, const ExtractorConfig& cfg);

FeaturePyramid extract_features(const ImageRaster& patch, const ExtractorConfig& cfg);

// Convenience: extract_patch + extract_features + apply_cosine_window, with
// patch_box set to the padded window.
FeaturePyramid features_at(const ImageRaster& frame, const BoundingBox& box, const ExtractorConfig& cfg);

// 0.5 * (1 - cos(2 pi n / (N - 1))); a single sample window is {1}.
std::vector<double> hann_window(int n);

FeaturePyramid apply_cosine_window(FeaturePyramid pyramid);

class FeatureFileError : public DataError {
public:
    enum class Kind { MalformedHeader, Truncated, DimensionMismatch, FrameNotFound, InvalidValue };

    FeatureFileError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

// Feature-tensor file: "FPYR", u8 version = 1, then per frame a little-endian
// header (u32 frame_index, u16 L, per layer u16 O, u16 rows, u16 cols,
// f32 layer_weight) followed by f32 values in (layer, channel, row, col) order.
FeaturePyramid load_external_features(const std::filesystem::path& path, std::uint32_t frame_index);

void save_external_features(const std::filesystem::path& path,
                            std::span<const std::pair<std::uint32_t, FeaturePyramid>> frames);

}  // namespace liketrack
