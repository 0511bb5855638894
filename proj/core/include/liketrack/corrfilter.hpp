#pragma once

#include <complex>
#include <vector>

#include "liketrack/features.hpp"
#include "liketrack/grid.hpp"

namespace liketrack {

struct FilterConfig {
    double label_sigma_factor = 0.1;  // of the target diagonal, in cells
    double lambda = 1e-4;
    double learning_rate = 0.01;
    double padding = 2.5;  // padding used at extraction; fixes the target extent in cells
};

// Half-spectrum (rows x (cols/2 + 1)) ridge-regression filter for one layer.
struct LayerFilter {
    int rows = 0;
    int cols = 0;
    double weight = 1.0;
    std::vector<std::vector<std::complex<double>>> numerators;  // per channel: conj(G) * F
    std::vector<double> denominator;                            // sum_o |F_o|^2 (lambda added at use)
};

class CorrelationModel {
public:
    CorrelationModel() = default;
    CorrelationModel(std::vector<LayerFilter> layers, FilterConfig cfg);

    const std::vector<LayerFilter>& layers() const { return layers_; }
    const FilterConfig& config() const { return cfg_; }
    bool empty() const { return layers_.empty(); }

    // Replaces per-layer weights; used to probe the weighted sum.
    CorrelationModel with_layer_weights(const std::vector<double>& weights) const;

private:
    std::vector<LayerFilter> layers_;
    FilterConfig cfg_;
};

struct ResponseScore {
    ResponseMap map;
    GridPoint peak_point;
    double peak_value = 0.0;
    double mean_value = 0.0;
};

// Gaussian desired response centered on cell (rows/2, cols/2).
std::vector<double> gaussian_label(int rows, int cols, double sigma);
double label_sigma(int rows, int cols, const FilterConfig& cfg);

CorrelationModel train_model(const FeaturePyramid& pyramid, const FilterConfig& cfg);

// Throws std::invalid_argument on dimension mismatch. The map's geometry
// places the raster center cell on the pyramid's patch center, with one cell
// spanning patch_box / raster pixels.
ResponseScore respond(const CorrelationModel& model, const FeaturePyramid& pyramid);

double likelihood_value(const ResponseScore& score);

// (1 - eta) * old + eta * train_model(pyramid); eta is taken from the argument.
CorrelationModel update_model(const CorrelationModel& model, const FeaturePyramid& pyramid, double eta);

}  // namespace liketrack
