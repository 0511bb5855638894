#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace liketrack {

// Continuous image coordinates. Pixel (col j, row i) covers [j, j+1) x [i, i+1),
// so its center sits at (j + 0.5, i + 0.5).
struct ImagePoint {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const ImagePoint&, const ImagePoint&) = default;
};

struct GridPoint {
    int m = 0;  // row
    int q = 0;  // column

    friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

// Center-convention box. Centers may leave the frame during occlusion.
struct BoundingBox {
    double cx = 0.0;
    double cy = 0.0;
    double w = 1.0;
    double h = 1.0;

    static BoundingBox from_top_left(double x, double y, double w, double h) {
        return {x + w / 2.0, y + h / 2.0, w, h};
    }
    double left() const { return cx - w / 2.0; }
    double top() const { return cy - h / 2.0; }
    ImagePoint center() const { return {cx, cy}; }
    bool valid() const;

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// Row-major interleaved raster with intensities normalized to [0, 1].
class ImageRaster {
public:
    ImageRaster() = default;
    // Throws std::invalid_argument when the invariants do not hold.
    ImageRaster(int width, int height, int channels, std::vector<float> values);
    // Constant-valued raster.
    ImageRaster(int width, int height, int channels, float fill = 0.0F);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    bool empty() const { return values_.empty(); }

    float at(int x, int y, int c = 0) const {
        return values_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }
    float& at(int x, int y, int c = 0) {
        return values_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }
    std::span<const float> values() const { return values_; }
    std::span<float> values() { return values_; }

    // Luma (Rec. 601) for 3-channel rasters, a copy otherwise.
    ImageRaster to_grayscale() const;

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 1;
    std::vector<float> values_;
};

// Dense M x Q score grid with an affine cell -> image mapping:
//   image_pos(m, q) = origin + cell_size * (q, m)
class ResponseMap {
public:
    ResponseMap() = default;
    ResponseMap(int rows, int cols, std::vector<double> scores, ImagePoint origin = {},
                ImagePoint cell_size = {1.0, 1.0});

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    ImagePoint origin() const { return origin_; }
    ImagePoint cell_size() const { return cell_size_; }
    void set_geometry(ImagePoint origin, ImagePoint cell_size);

    double operator()(int m, int q) const { return scores_[static_cast<std::size_t>(m) * cols_ + q]; }
    double& operator()(int m, int q) { return scores_[static_cast<std::size_t>(m) * cols_ + q]; }
    std::span<const double> scores() const { return scores_; }
    std::span<double> scores() { return scores_; }

    bool contains(GridPoint p) const { return p.m >= 0 && p.m < rows_ && p.q >= 0 && p.q < cols_; }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> scores_;
    ImagePoint origin_{};
    ImagePoint cell_size_{1.0, 1.0};
};

struct Peak {
    GridPoint point;
    double score = 0.0;
};

// Maximal cell; ties resolve to the smallest (m, then q).
Peak peak(const ResponseMap& map);

double map_mean(const ResponseMap& map);

// Throws std::out_of_range for cells outside the map.
ImagePoint grid_to_image(const ResponseMap& map, GridPoint p);

// Nearest cell to an image position. The result may lie outside the map;
// check with ResponseMap::contains.
GridPoint image_to_grid(const ResponseMap& map, ImagePoint pos);

}  // namespace liketrack
