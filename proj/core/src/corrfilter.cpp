#include "liketrack/corrfilter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fft.hpp"

namespace liketrack {

using detail::Complex;
using detail::RealFft2d;

CorrelationModel::CorrelationModel(std::vector<LayerFilter> layers, FilterConfig cfg)
    : layers_(std::move(layers)), cfg_(cfg) {}

CorrelationModel CorrelationModel::with_layer_weights(const std::vector<double>& weights) const {
    if (weights.size() != layers_.size()) {
        throw std::invalid_argument("one weight per layer required");
    }
    CorrelationModel out = *this;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        out.layers_[l].weight = weights[l];
    }
    return out;
}

std::vector<double> gaussian_label(int rows, int cols, double sigma) {
    std::vector<double> g(static_cast<std::size_t>(rows) * cols);
    const int cm = rows / 2;
    const int cq = cols / 2;
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int m = 0; m < rows; ++m) {
        for (int q = 0; q < cols; ++q) {
            const double d2 = static_cast<double>((m - cm) * (m - cm) + (q - cq) * (q - cq));
            g[static_cast<std::size_t>(m) * cols + q] = std::exp(-d2 * inv);
        }
    }
    return g;
}

double label_sigma(int rows, int cols, const FilterConfig& cfg) {
    const double tw = cols / cfg.padding;
    const double th = rows / cfg.padding;
    return cfg.label_sigma_factor * std::hypot(tw, th);
}

CorrelationModel train_model(const FeaturePyramid& pyramid, const FilterConfig& cfg) {
    pyramid.validate();
    std::vector<LayerFilter> layers;
    layers.reserve(pyramid.layers.size());
    for (const auto& layer : pyramid.layers) {
        const RealFft2d fft(layer.rows, layer.cols);
        const auto label = gaussian_label(layer.rows, layer.cols, label_sigma(layer.rows, layer.cols, cfg));
        std::vector<Complex> label_hat(fft.spectrum_size());
        fft.forward(label, label_hat);

        LayerFilter lf;
        lf.rows = layer.rows;
        lf.cols = layer.cols;
        lf.weight = layer.weight;
        lf.denominator.assign(fft.spectrum_size(), 0.0);
        std::vector<Complex> f_hat(fft.spectrum_size());
        for (int o = 0; o < layer.channels; ++o) {
            fft.forward(layer.channel(o), f_hat);
            std::vector<Complex> num(fft.spectrum_size());
            for (std::size_t k = 0; k < num.size(); ++k) {
                num[k] = std::conj(label_hat[k]) * f_hat[k];
                lf.denominator[k] += std::norm(f_hat[k]);
            }
            lf.numerators.push_back(std::move(num));
        }
        layers.push_back(std::move(lf));
    }
    return CorrelationModel(std::move(layers), cfg);
}

ResponseScore respond(const CorrelationModel& model, const FeaturePyramid& pyramid) {
    const auto& filters = model.layers();
    if (filters.size() != pyramid.layers.size()) {
        throw std::invalid_argument("pyramid layer count does not match the model");
    }
    const int rows = filters.front().rows;
    const int cols = filters.front().cols;
    std::vector<double> scores(static_cast<std::size_t>(rows) * cols, 0.0);
    std::vector<double> layer_map(scores.size());
    const double lambda = model.config().lambda;

    for (std::size_t l = 0; l < filters.size(); ++l) {
        const auto& lf = filters[l];
        const auto& layer = pyramid.layers[l];
        if (layer.rows != lf.rows || layer.cols != lf.cols ||
            layer.channels != static_cast<int>(lf.numerators.size()) || lf.rows != rows || lf.cols != cols) {
            throw std::invalid_argument("pyramid dimensions do not match the model");
        }
        if (lf.weight == 0.0) {
            continue;
        }
        const RealFft2d fft(rows, cols);
        std::vector<Complex> acc(fft.spectrum_size(), Complex{});
        std::vector<Complex> z_hat(fft.spectrum_size());
        for (int o = 0; o < layer.channels; ++o) {
            fft.forward(layer.channel(o), z_hat);
            const auto& num = lf.numerators[o];
            // conj(num) * Z = G * conj(F) * Z: a content shift of +d moves the peak by +d.
            for (std::size_t k = 0; k < acc.size(); ++k) {
                acc[k] += std::conj(num[k]) * z_hat[k];
            }
        }
        for (std::size_t k = 0; k < acc.size(); ++k) {
            acc[k] /= lf.denominator[k] + lambda;
        }
        fft.inverse(acc, layer_map);
        for (std::size_t i = 0; i < scores.size(); ++i) {
            scores[i] += lf.weight * layer_map[i];
        }
    }

    const BoundingBox& pb = pyramid.patch_box;
    const ImagePoint cell{pb.w / cols, pb.h / rows};
    const ImagePoint origin{pb.cx - (cols / 2) * cell.x, pb.cy - (rows / 2) * cell.y};
    ResponseScore score;
    score.map = ResponseMap(rows, cols, std::move(scores), origin, cell);
    const Peak p = peak(score.map);
    score.peak_point = p.point;
    score.peak_value = p.score;
    score.mean_value = map_mean(score.map);
    return score;
}

double likelihood_value(const ResponseScore& score) { return std::max(score.mean_value, 0.0); }

CorrelationModel update_model(const CorrelationModel& model, const FeaturePyramid& pyramid, double eta) {
    if (eta < 0.0 || eta > 1.0) {
        throw std::invalid_argument("learning rate must lie in [0, 1]");
    }
    const CorrelationModel fresh = train_model(pyramid, model.config());
    if (fresh.layers().size() != model.layers().size()) {
        throw std::invalid_argument("pyramid layer count does not match the model");
    }
    std::vector<LayerFilter> layers = model.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        auto& old = layers[l];
        const auto& now = fresh.layers()[l];
        if (old.rows != now.rows || old.cols != now.cols || old.numerators.size() != now.numerators.size()) {
            throw std::invalid_argument("pyramid dimensions do not match the model");
        }
        for (std::size_t o = 0; o < old.numerators.size(); ++o) {
            for (std::size_t k = 0; k < old.numerators[o].size(); ++k) {
                old.numerators[o][k] = (1.0 - eta) * old.numerators[o][k] + eta * now.numerators[o][k];
            }
        }
        for (std::size_t k = 0; k < old.denominator.size(); ++k) {
            old.denominator[k] = (1.0 - eta) * old.denominator[k] + eta * now.denominator[k];
        }
    }
    return CorrelationModel(std::move(layers), model.config());
}

}  // namespace liketrack
