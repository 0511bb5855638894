#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "liketrack/corrfilter.hpp"
#include "liketrack/features.hpp"
#include "liketrack/grid.hpp"
#include "liketrack/likelihood.hpp"

namespace liketrack {

using Rng = std::mt19937_64;
using Vec4 = std::array<double, 4>;  // cx, cy, w, h

BoundingBox to_box(const Vec4& v);
Vec4 to_vec(const BoundingBox& b);

struct StateVector {
    Vec4 position{};
    Vec4 velocity{};

    BoundingBox box() const { return to_box(position); }
    bool valid() const;
};

using TransitionMatrix = std::array<std::array<double, 8>, 8>;

// First-order constant-velocity model over z = [x, x_dot].
struct MotionModel {
    Vec4 sigma{1.0, 1.0, 1.0, 1.0};  // transition std per axis, pixels

    // Position axes scale with (w, h) by pos_factor, size axes by size_factor.
    static MotionModel for_size(double w, double h, double pos_factor, double size_factor);
    // [[I4, I4], [0, I4]]
    static TransitionMatrix matrix();
};

enum class Proposal { Likelihood, Transition };
enum class EstimateMode { WeightedMean, MaxWeight };
enum class InitialMapCenter { Predicted, Previous };

struct PFConfig {
    int particles = 100;
    Proposal proposal = Proposal::Likelihood;
    double tau_rel = 0.3;
    double seed_tau_rel = 0.5;
    int k_max = 3;
    double sigma_floor_factor = 0.01;  // sigma floor = factor * target width
    bool truncation_correction = true;
    bool mass_weighted = true;
    double trans_pos_factor = 0.2;
    double trans_size_factor = 0.02;
    double velocity_gamma = 0.5;
    double min_component_fraction = 0.1;
    // Normalized weights are capped at weight_cap * sqrt(N) / N, then
    // renormalized (truncated importance sampling); 0 disables.
    double weight_cap = 1.0;
    EstimateMode estimate = EstimateMode::WeightedMean;
    bool recompute_at_shift = true;
    InitialMapCenter initial_map_at = InitialMapCenter::Predicted;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrackerConfig {
    ExtractorConfig features;
    FilterConfig filter;
    PFConfig pf;

    // Throws std::invalid_argument.
    void validate() const;
    LikelihoodConfig likelihood_for(double target_width) const;
};

struct Particle {
    Vec4 sampled{};
    Vec4 shifted{};
    int component = -1;  // mixture component it was drawn from, -1 for transition draws
    ResponseScore response;          // at the sampled state
    ResponseScore shifted_response;  // at the shifted state (when recomputed)
    double likelihood = 0.0;
    double transition = 0.0;
    double proposal = 1.0;
    double weight = 0.0;       // unnormalized
    double norm_weight = 0.0;  // normalized

    // Positions at which each weight factor was evaluated.
    ImagePoint likelihood_at;
    ImagePoint transition_at;
    ImagePoint proposal_at;
};

struct Posterior {
    std::vector<std::pair<Vec4, double>> particles;  // shifted support, normalized weight
    StateVector estimate;
};

StateVector predict_state(const StateVector& prev);

// Stratified categorical draw: every component with mass fraction at least
// min_fraction gets ceil(min_fraction * n) particles when that fits in n.
std::vector<int> allocate_components(const LikelihoodMixture& mix, int n, double min_fraction, Rng& rng);

std::vector<Particle> sample_particles(const LikelihoodMixture& mix, const StateVector& prev,
                                       const MotionModel& motion, int n, double min_fraction, Rng& rng);

// Transition-proposal draws: centers around each reference particle advanced by
// the velocity, sizes around the previous estimate (as in sample_particles).
std::vector<Particle> sample_from_transition(std::span<const Vec4> reference, const StateVector& prev,
                                             const MotionModel& motion, int n, Rng& rng);

// Moves (cx, cy) to the image position of the response peak; size unchanged.
Particle shift_particle(Particle p);

double transition_density(const Vec4& shifted, const StateVector& predicted, const MotionModel& motion);

struct WeighOutcome {
    std::vector<Particle> particles;
    bool degenerate = false;  // all weights were zero; uniform weights used
};

// Likelihood-proposal weights evaluated at the shifted support:
//   w_i = likelihood_i * p(x~_i | x_{t-1}) / p(x~_i | y_t)
// `mix` may be null, in which case the proposal factor is 1.
WeighOutcome weigh_particles(std::vector<Particle> particles, const LikelihoodMixture* mix,
                             const StateVector& predicted, const MotionModel& motion);

// Normalizes the particles' unnormalized weights in place; returns false when
// they sum to zero (uniform weights are assigned).
bool normalize_weights(std::span<Particle> particles);

// Caps normalized weights at cap_factor * sqrt(n) / n and renormalizes;
// returns the number of capped particles. cap_factor <= 0 is a no-op.
int truncate_weights(std::span<Particle> particles, double cap_factor);

Posterior estimate_posterior(std::span<const Particle> particles, const StateVector& prev, double gamma,
                             EstimateMode mode = EstimateMode::WeightedMean);

// Systematic resampling: n offspring indices from normalized weights.
std::vector<std::size_t> systematic_resample(std::span<const double> weights, std::size_t n, Rng& rng);

std::vector<Vec4> resample(std::span<const Particle> particles, Rng& rng);

struct TrackerState {
    StateVector state;
    CorrelationModel model;
    std::vector<Vec4> particles;  // equally weighted after resampling
};

struct FrameOutcome {
    Posterior posterior;
    TrackerState next;
    LikelihoodMixture mixture;  // empty when the initial map was degenerate or unused
    std::vector<Particle> particles;
    bool quality_flag = false;
    bool used_fallback = false;
};

TrackerState initialize_tracker(const ImageRaster& frame, const BoundingBox& box, const TrackerConfig& cfg);

// One frame of the likelihood-proposal tracker.
FrameOutcome track_frame(const ImageRaster& frame, const TrackerState& prev, const TrackerConfig& cfg, Rng& rng);

// One frame of the transition-proposal baseline: weights from responses at the
// sampled states, posterior placed on the shifted states.
FrameOutcome track_frame_baseline(const ImageRaster& frame, const TrackerState& prev, const TrackerConfig& cfg,
                                  Rng& rng);

// Owns the state and the random generator of one tracking run.
class Tracker {
public:
    explicit Tracker(TrackerConfig cfg);

    // Trains on the first frame; the returned outcome reports the given box.
    FrameOutcome initialize(const ImageRaster& frame, const BoundingBox& box);
    FrameOutcome step(const ImageRaster& frame);

    const TrackerState& state() const { return state_; }
    const TrackerConfig& config() const { return cfg_; }

private:
    TrackerConfig cfg_;
    TrackerState state_;
    Rng rng_;
    bool initialized_ = false;
};

}  // namespace liketrack
