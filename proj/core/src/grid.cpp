#include "liketrack/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace liketrack {

bool BoundingBox::valid() const {
    return std::isfinite(cx) && std::isfinite(cy) && std::isfinite(w) && std::isfinite(h) && w > 0.0 &&
           h > 0.0;
}

ImageRaster::ImageRaster(int width, int height, int channels, std::vector<float> values)
    : width_(width), height_(height), channels_(channels), values_(std::move(values)) {
    if (width <= 0 || height <= 0) {
        throw std::invalid_argument("raster dimensions must be positive");
    }
    if (channels != 1 && channels != 3) {
        throw std::invalid_argument("raster must have 1 or 3 channels");
    }
    if (values_.size() != static_cast<std::size_t>(width) * height * channels) {
        throw std::invalid_argument("raster value count does not match dimensions");
    }
    for (float v : values_) {
        if (!std::isfinite(v) || v < 0.0F || v > 1.0F) {
            throw std::invalid_argument("raster values must be finite and in [0, 1]");
        }
    }
}

ImageRaster::ImageRaster(int width, int height, int channels, float fill)
    : ImageRaster(width, height, channels,
                  std::vector<float>(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0) *
                                         std::max(channels, 0),
                                     fill)) {}

ImageRaster ImageRaster::to_grayscale() const {
    if (channels_ == 1) {
        return *this;
    }
    std::vector<float> gray(static_cast<std::size_t>(width_) * height_);
    for (std::size_t i = 0; i < gray.size(); ++i) {
        const float* px = &values_[i * 3];
        gray[i] = std::clamp(0.299F * px[0] + 0.587F * px[1] + 0.114F * px[2], 0.0F, 1.0F);
    }
    return ImageRaster(width_, height_, 1, std::move(gray));
}

ResponseMap::ResponseMap(int rows, int cols, std::vector<double> scores, ImagePoint origin,
                         ImagePoint cell_size)
    : rows_(rows), cols_(cols), scores_(std::move(scores)) {
    if (rows <= 0 || cols <= 0) {
        throw std::invalid_argument("response map dimensions must be positive");
    }
    if (scores_.size() != static_cast<std::size_t>(rows) * cols) {
        throw std::invalid_argument("response map score count does not match dimensions");
    }
    for (double s : scores_) {
        if (!std::isfinite(s)) {
            throw std::invalid_argument("response map scores must be finite");
        }
    }
    set_geometry(origin, cell_size);
}

void ResponseMap::set_geometry(ImagePoint origin, ImagePoint cell_size) {
    if (!(cell_size.x > 0.0) || !(cell_size.y > 0.0) || !std::isfinite(cell_size.x) ||
        !std::isfinite(cell_size.y) || !std::isfinite(origin.x) || !std::isfinite(origin.y)) {
        throw std::invalid_argument("response map geometry must be finite with positive cell size");
    }
    origin_ = origin;
    cell_size_ = cell_size;
}

Peak peak(const ResponseMap& map) {
    // Strict comparison keeps the first maximum in row-major order.
    const auto scores = map.scores();
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[best]) {
            best = i;
        }
    }
    const int cols = map.cols();
    return {{static_cast<int>(best / cols), static_cast<int>(best % cols)}, scores[best]};
}

double map_mean(const ResponseMap& map) {
    const auto scores = map.scores();
    return std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
}

ImagePoint grid_to_image(const ResponseMap& map, GridPoint p) {
    if (!map.contains(p)) {
        throw std::out_of_range("grid point (" + std::to_string(p.m) + "," + std::to_string(p.q) +
                                ") outside response map");
    }
    return {map.origin().x + map.cell_size().x * p.q, map.origin().y + map.cell_size().y * p.m};
}

GridPoint image_to_grid(const ResponseMap& map, ImagePoint pos) {
    return {static_cast<int>(std::lround((pos.y - map.origin().y) / map.cell_size().y)),
            static_cast<int>(std::lround((pos.x - map.origin().x) / map.cell_size().x))};
}

}  // namespace liketrack
