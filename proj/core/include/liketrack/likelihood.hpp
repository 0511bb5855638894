#pragma once

#include <span>
#include <vector>

#include "liketrack/grid.hpp"

namespace liketrack {

// A supra-threshold response cell, in image coordinates, with its source cell.
struct WeightedPoint {
    ImagePoint position;
    double probability = 0.0;
    GridPoint cell;
};

struct GaussianComponent {
    ImagePoint mean;
    ImagePoint variance;  // per axis, pixels^2
    double mass = 0.0;    // sum of member probabilities
    int member_count = 0;
};

struct LikelihoodMixture {
    std::vector<GaussianComponent> components;  // sorted by descending mass
    double tau = 0.0;                            // absolute threshold that was applied
    bool mass_weighted = true;                   // false: equal component weights

    std::size_t k() const { return components.size(); }
    double weight(std::size_t j) const;
};

struct ThresholdResult {
    std::vector<WeightedPoint> points;
    double tau_abs = 0.0;
};

// Keeps cells scoring strictly above tau_rel * peak. Throws DegenerateMapError
// when the peak is not positive.
ThresholdResult threshold_map(const ResponseMap& map, double tau_rel);

struct ClusterOptions {
    double seed_tau_rel = 0.5;  // seeds: probability > seed_tau_rel * max probability
    double sigma2_floor = 1e-4;
    int max_iterations = 100;
    double tolerance = 1e-6;  // on the mean weighted log-likelihood
};

// Seeds clusters by 8-connected components of the seed cells, merges the
// lightest into their nearest neighbour until at most k_max remain, refines
// with weighted diagonal-Gaussian EM and hard-assigns every point.
std::vector<std::vector<WeightedPoint>> cluster_points(std::span<const WeightedPoint> points, int k_max,
                                                       const ClusterOptions& opts = {});

// Weighted mean and per-axis weighted variance, variance floored.
GaussianComponent component_moments(std::span<const WeightedPoint> cluster, double sigma2_floor);

// Fraction of a thresholded Gaussian's per-axis variance retained when only
// the region above exp(-u) of its peak is kept: (1 - (1+u)e^-u) / (1 - e^-u).
double truncated_variance_ratio(double u);

struct LikelihoodConfig {
    double tau_rel = 0.3;
    double seed_tau_rel = 0.5;
    int k_max = 3;
    double sigma2_floor = 1e-4;  // pixels^2
    bool truncation_correction = true;
    bool mass_weighted = true;
    int em_max_iterations = 100;
    double em_tolerance = 1e-6;
};

LikelihoodMixture estimate_likelihood(const ResponseMap& map, const LikelihoodConfig& cfg);

inline constexpr double kDensityFloor = 1e-12;

double mixture_density(const LikelihoodMixture& mix, ImagePoint pos);

}  // namespace liketrack
