#include "liketrack/pfilter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "liketrack/error.hpp"

namespace liketrack {

BoundingBox to_box(const Vec4& v) { return {v[0], v[1], v[2], v[3]}; }
Vec4 to_vec(const BoundingBox& b) { return {b.cx, b.cy, b.w, b.h}; }

bool StateVector::valid() const {
    for (int i = 0; i < 4; ++i) {
        if (!std::isfinite(position[i]) || !std::isfinite(velocity[i])) {
            return false;
        }
    }
    return position[2] > 0.0 && position[3] > 0.0;
}

MotionModel MotionModel::for_size(double w, double h, double pos_factor, double size_factor) {
    return {{pos_factor * w, pos_factor * h, size_factor * w, size_factor * h}};
}

TransitionMatrix MotionModel::matrix() {
    TransitionMatrix a{};
    for (int i = 0; i < 8; ++i) {
        a[i][i] = 1.0;
    }
    for (int i = 0; i < 4; ++i) {
        a[i][i + 4] = 1.0;
    }
    return a;
}

void PFConfig::validate() const {
    if (particles < 1) {
        throw std::invalid_argument("particle count must be at least 1");
    }
    if (!(tau_rel >= 0.0 && tau_rel < 1.0) || !(seed_tau_rel >= 0.0 && seed_tau_rel < 1.0)) {
        throw std::invalid_argument("thresholds must lie in [0, 1)");
    }
    if (k_max < 1) {
        throw std::invalid_argument("k_max must be at least 1");
    }
    if (!(sigma_floor_factor > 0.0) || !(trans_pos_factor > 0.0) || !(trans_size_factor > 0.0)) {
        throw std::invalid_argument("sigma factors must be positive");
    }
    if (velocity_gamma < 0.0 || velocity_gamma > 1.0) {
        throw std::invalid_argument("velocity_gamma must lie in [0, 1]");
    }
    if (min_component_fraction < 0.0 || min_component_fraction > 1.0) {
        throw std::invalid_argument("min_component_fraction must lie in [0, 1]");
    }
    if (!(weight_cap >= 0.0) || !std::isfinite(weight_cap)) {
        throw std::invalid_argument("weight_cap must be finite and non-negative");
    }
}

void TrackerConfig::validate() const {
    features.validate();
    if (features.kind == FeatureKind::External) {
        throw std::invalid_argument("tracking needs extracted features; external features cannot follow particles");
    }
    if (!(filter.lambda > 0.0) || !(filter.label_sigma_factor > 0.0)) {
        throw std::invalid_argument("lambda and label_sigma_factor must be positive");
    }
    if (filter.learning_rate < 0.0 || filter.learning_rate > 1.0) {
        throw std::invalid_argument("learning_rate must lie in [0, 1]");
    }
    pf.validate();
}

LikelihoodConfig TrackerConfig::likelihood_for(double target_width) const {
    LikelihoodConfig lc;
    lc.tau_rel = pf.tau_rel;
    lc.seed_tau_rel = pf.seed_tau_rel;
    lc.k_max = pf.k_max;
    const double floor_sigma = pf.sigma_floor_factor * target_width;
    lc.sigma2_floor = floor_sigma * floor_sigma;
    lc.truncation_correction = pf.truncation_correction;
    lc.mass_weighted = pf.mass_weighted;
    return lc;
}

StateVector predict_state(const StateVector& prev) {
    StateVector out = prev;
    for (int i = 0; i < 4; ++i) {
        out.position[i] += prev.velocity[i];
    }
    return out;
}

namespace {

double positive_size(double v) { return std::max(v, 1.0); }

double gauss_1d(double x, double mu, double sigma) {
    const double d = (x - mu) / sigma;
    return std::exp(-0.5 * d * d) / (std::sqrt(2.0 * std::numbers::pi) * sigma);
}

ImagePoint response_center(const ResponseScore& s) {
    return grid_to_image(s.map, {s.map.rows() / 2, s.map.cols() / 2});
}

}  // namespace

std::vector<int> allocate_components(const LikelihoodMixture& mix, int n, double min_fraction, Rng& rng) {
    const std::size_t k = mix.k();
    std::vector<double> w(k);
    for (std::size_t j = 0; j < k; ++j) {
        w[j] = mix.weight(j);
    }
    std::vector<int> counts(k, 0);
    const int floor_count = static_cast<int>(std::ceil(min_fraction * n));
    int eligible = 0;
    for (double wj : w) {
        eligible += wj >= min_fraction ? 1 : 0;
    }
    if (min_fraction > 0.0 && eligible * floor_count <= n) {
        for (std::size_t j = 0; j < k; ++j) {
            if (w[j] >= min_fraction) {
                counts[j] = floor_count;
            }
        }
    }
    const int assigned = std::accumulate(counts.begin(), counts.end(), 0);
    std::discrete_distribution<int> pick(w.begin(), w.end());
    for (int i = assigned; i < n; ++i) {
        ++counts[pick(rng)];
    }
    std::vector<int> out;
    out.reserve(n);
    for (std::size_t j = 0; j < k; ++j) {
        out.insert(out.end(), counts[j], static_cast<int>(j));
    }
    return out;
}

std::vector<Particle> sample_particles(const LikelihoodMixture& mix, const StateVector& prev,
                                       const MotionModel& motion, int n, double min_fraction, Rng& rng) {
    if (mix.components.empty()) {
        throw std::invalid_argument("cannot sample from an empty mixture");
    }
    const auto assignment = allocate_components(mix, n, min_fraction, rng);
    std::normal_distribution<double> unit(0.0, 1.0);
    std::vector<Particle> out;
    out.reserve(n);
    for (int j : assignment) {
        const auto& c = mix.components[j];
        Particle p;
        p.component = j;
        p.sampled[0] = c.mean.x + std::sqrt(c.variance.x) * unit(rng);
        p.sampled[1] = c.mean.y + std::sqrt(c.variance.y) * unit(rng);
        p.sampled[2] = positive_size(prev.position[2] + motion.sigma[2] * unit(rng));
        p.sampled[3] = positive_size(prev.position[3] + motion.sigma[3] * unit(rng));
        p.shifted = p.sampled;
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<Particle> sample_from_transition(std::span<const Vec4> reference, const StateVector& prev,
                                             const MotionModel& motion, int n, Rng& rng) {
    if (reference.empty()) {
        throw std::invalid_argument("transition sampling needs at least one reference state");
    }
    std::normal_distribution<double> unit(0.0, 1.0);
    std::vector<Particle> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        const Vec4& ref = reference[static_cast<std::size_t>(i) % reference.size()];
        Particle p;
        p.sampled[0] = ref[0] + prev.velocity[0] + motion.sigma[0] * unit(rng);
        p.sampled[1] = ref[1] + prev.velocity[1] + motion.sigma[1] * unit(rng);
        // Sizes as in sample_particles: the likelihood barely constrains scale, so
        // per-particle size momentum would random-walk the box out of shape.
        p.sampled[2] = positive_size(prev.position[2] + motion.sigma[2] * unit(rng));
        p.sampled[3] = positive_size(prev.position[3] + motion.sigma[3] * unit(rng));
        p.shifted = p.sampled;
        out.push_back(std::move(p));
    }
    return out;
}

Particle shift_particle(Particle p) {
    const ImagePoint at = grid_to_image(p.response.map, p.response.peak_point);
    p.shifted = {at.x, at.y, p.sampled[2], p.sampled[3]};
    return p;
}

double transition_density(const Vec4& shifted, const StateVector& predicted, const MotionModel& motion) {
    double d = 1.0;
    for (int a = 0; a < 4; ++a) {
        d *= gauss_1d(shifted[a], predicted.position[a], motion.sigma[a]);
    }
    return std::max(d, kDensityFloor);
}

bool normalize_weights(std::span<Particle> particles) {
    double total = 0.0;
    for (const auto& p : particles) {
        total += p.weight;
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
        for (auto& p : particles) {
            p.norm_weight = 1.0 / static_cast<double>(particles.size());
        }
        return false;
    }
    for (auto& p : particles) {
        p.norm_weight = p.weight / total;
    }
    return true;
}

int truncate_weights(std::span<Particle> particles, double cap_factor) {
    if (cap_factor <= 0.0 || particles.empty()) {
        return 0;
    }
    const auto n = static_cast<double>(particles.size());
    // Normalized weights have mean 1/n; the cap is cap_factor * sqrt(n) times that.
    const double cap = cap_factor * std::sqrt(n) / n;
    int capped = 0;
    double total = 0.0;
    for (auto& p : particles) {
        if (p.norm_weight > cap) {
            p.norm_weight = cap;
            ++capped;
        }
        total += p.norm_weight;
    }
    if (capped > 0) {
        for (auto& p : particles) {
            p.norm_weight /= total;
        }
    }
    return capped;
}

WeighOutcome weigh_particles(std::vector<Particle> particles, const LikelihoodMixture* mix,
                             const StateVector& predicted, const MotionModel& motion) {
    for (auto& p : particles) {
        const ResponseScore& at_support = p.shifted_response.map.rows() > 0 ? p.shifted_response : p.response;
        const ImagePoint support{p.shifted[0], p.shifted[1]};
        p.likelihood = likelihood_value(at_support);
        p.likelihood_at = response_center(at_support);
        p.transition = transition_density(p.shifted, predicted, motion);
        p.transition_at = support;
        if (mix != nullptr) {
            p.proposal = mixture_density(*mix, support);
            p.proposal_at = support;
        } else {
            p.proposal = 1.0;
            p.proposal_at = support;
        }
        p.weight = p.likelihood * p.transition / p.proposal;
    }
    WeighOutcome out;
    out.degenerate = !normalize_weights(particles);
    out.particles = std::move(particles);
    return out;
}

Posterior estimate_posterior(std::span<const Particle> particles, const StateVector& prev, double gamma,
                             EstimateMode mode) {
    if (particles.empty()) {
        throw std::invalid_argument("posterior needs at least one particle");
    }
    Posterior post;
    post.particles.reserve(particles.size());
    Vec4 est{};
    for (const auto& p : particles) {
        post.particles.emplace_back(p.shifted, p.norm_weight);
        for (int a = 0; a < 4; ++a) {
            est[a] += p.norm_weight * p.shifted[a];
        }
    }
    if (mode == EstimateMode::MaxWeight) {
        const auto best = std::max_element(particles.begin(), particles.end(), [](const auto& a, const auto& b) {
            return a.norm_weight < b.norm_weight;
        });
        est = best->shifted;
    }
    post.estimate.position = est;
    for (int a = 0; a < 4; ++a) {
        post.estimate.velocity[a] = gamma * (est[a] - prev.position[a]) + (1.0 - gamma) * prev.velocity[a];
    }
    return post;
}

std::vector<std::size_t> systematic_resample(std::span<const double> weights, std::size_t n, Rng& rng) {
    if (weights.empty()) {
        throw std::invalid_argument("cannot resample an empty set");
    }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::uniform_real_distribution<double> offset(0.0, 1.0);
    const double u0 = offset(rng);
    std::vector<std::size_t> out;
    out.reserve(n);
    std::size_t i = 0;
    double cumulative = weights[0] / total;
    for (std::size_t j = 0; j < n; ++j) {
        const double target = (static_cast<double>(j) + u0) / static_cast<double>(n);
        while (target > cumulative && i + 1 < weights.size()) {
            ++i;
            cumulative += weights[i] / total;
        }
        out.push_back(i);
    }
    return out;
}

std::vector<Vec4> resample(std::span<const Particle> particles, Rng& rng) {
    std::vector<double> w;
    w.reserve(particles.size());
    for (const auto& p : particles) {
        w.push_back(p.norm_weight);
    }
    std::vector<Vec4> out;
    out.reserve(particles.size());
    for (std::size_t idx : systematic_resample(w, particles.size(), rng)) {
        out.push_back(particles[idx].shifted);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tracking loop

namespace {

ResponseScore response_at(const ImageRaster& frame, const Vec4& state, const CorrelationModel& model,
                          const ExtractorConfig& fcfg) {
    return respond(model, features_at(frame, to_box(state), fcfg));
}

CorrelationModel refresh_model(const ImageRaster& frame, const StateVector& estimate, const CorrelationModel& model,
                               const TrackerConfig& cfg) {
    return update_model(model, features_at(frame, estimate.box(), cfg.features), cfg.filter.learning_rate);
}

// Color frames are converted once per frame rather than once per patch.
const ImageRaster& luma(const ImageRaster& frame, ImageRaster& storage) {
    if (frame.channels() == 1) {
        return frame;
    }
    storage = frame.to_grayscale();
    return storage;
}

void finish_frame(FrameOutcome& out, const ImageRaster& frame, const TrackerState& prev, const TrackerConfig& cfg,
                  Rng& rng) {
    out.posterior = estimate_posterior(out.particles, prev.state, cfg.pf.velocity_gamma, cfg.pf.estimate);
    out.next.state = out.posterior.estimate;
    out.next.particles = resample(out.particles, rng);
    out.next.model = refresh_model(frame, out.next.state, prev.model, cfg);
}

}  // namespace

TrackerState initialize_tracker(const ImageRaster& frame, const BoundingBox& box, const TrackerConfig& cfg) {
    cfg.validate();
    if (!box.valid()) {
        throw DataError("initial box must be finite with positive size");
    }
    FilterConfig fc = cfg.filter;
    fc.padding = cfg.features.padding;
    TrackerState st;
    st.state.position = to_vec(box);
    st.model = train_model(features_at(frame, box, cfg.features), fc);
    st.particles.assign(static_cast<std::size_t>(cfg.pf.particles), st.state.position);
    return st;
}

FrameOutcome track_frame(const ImageRaster& input, const TrackerState& prev, const TrackerConfig& cfg, Rng& rng) {
    ImageRaster storage;
    const ImageRaster& frame = luma(input, storage);
    const StateVector predicted = predict_state(prev.state);
    const MotionModel motion = MotionModel::for_size(prev.state.position[2], prev.state.position[3],
                                                     cfg.pf.trans_pos_factor, cfg.pf.trans_size_factor);
    const int n = cfg.pf.particles;
    FrameOutcome out;

    const Vec4& initial_center =
        cfg.pf.initial_map_at == InitialMapCenter::Predicted ? predicted.position : prev.state.position;
    // The initial patch keeps the previous size; velocity only moves the center.
    const Vec4 initial_state{initial_center[0], initial_center[1], prev.state.position[2], prev.state.position[3]};
    const ResponseScore initial = response_at(frame, initial_state, prev.model, cfg.features);

    std::vector<Particle> particles;
    try {
        out.mixture = estimate_likelihood(initial.map, cfg.likelihood_for(prev.state.position[2]));
        particles = sample_particles(out.mixture, prev.state, motion, n, cfg.pf.min_component_fraction, rng);
    } catch (const DegenerateMapError&) {
        out.mixture = {};
        out.used_fallback = true;
        out.quality_flag = true;
        particles = sample_from_transition(prev.particles, prev.state, motion, n, rng);
    }

    for (auto& p : particles) {
        p.response = response_at(frame, p.sampled, prev.model, cfg.features);
        p = shift_particle(std::move(p));
        if (cfg.pf.recompute_at_shift) {
            p.shifted_response = response_at(frame, p.shifted, prev.model, cfg.features);
        }
    }

    WeighOutcome weighed =
        weigh_particles(std::move(particles), out.used_fallback ? nullptr : &out.mixture, predicted, motion);
    if (out.used_fallback) {
        // Transition draws: the proposal cancels the transition factor.
        for (auto& p : weighed.particles) {
            p.weight = p.likelihood;
            p.proposal = p.transition;
        }
        weighed.degenerate = !normalize_weights(weighed.particles);
    }
    out.quality_flag = out.quality_flag || weighed.degenerate;
    truncate_weights(weighed.particles, cfg.pf.weight_cap);
    out.particles = std::move(weighed.particles);
    finish_frame(out, frame, prev, cfg, rng);
    return out;
}

FrameOutcome track_frame_baseline(const ImageRaster& input, const TrackerState& prev, const TrackerConfig& cfg,
                                  Rng& rng) {
    ImageRaster storage;
    const ImageRaster& frame = luma(input, storage);
    const MotionModel motion = MotionModel::for_size(prev.state.position[2], prev.state.position[3],
                                                     cfg.pf.trans_pos_factor, cfg.pf.trans_size_factor);
    FrameOutcome out;
    std::vector<Particle> particles =
        sample_from_transition(prev.particles, prev.state, motion, cfg.pf.particles, rng);
    for (auto& p : particles) {
        p.response = response_at(frame, p.sampled, prev.model, cfg.features);
        p = shift_particle(std::move(p));
        // Weight from the unshifted response; support moves to the peak.
        p.likelihood = likelihood_value(p.response);
        p.likelihood_at = response_center(p.response);
        p.transition = 1.0;
        p.transition_at = {p.sampled[0], p.sampled[1]};
        p.proposal = 1.0;
        p.proposal_at = {p.sampled[0], p.sampled[1]};
        p.weight = p.likelihood;
    }
    out.quality_flag = !normalize_weights(particles);
    truncate_weights(particles, cfg.pf.weight_cap);
    out.particles = std::move(particles);
    finish_frame(out, frame, prev, cfg, rng);
    return out;
}

Tracker::Tracker(TrackerConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.pf.seed) { cfg_.validate(); }

FrameOutcome Tracker::initialize(const ImageRaster& frame, const BoundingBox& box) {
    rng_.seed(cfg_.pf.seed);
    state_ = initialize_tracker(frame, box, cfg_);
    initialized_ = true;
    FrameOutcome out;
    out.posterior.estimate = state_.state;
    out.posterior.particles.emplace_back(state_.state.position, 1.0);
    out.next = state_;
    return out;
}

FrameOutcome Tracker::step(const ImageRaster& frame) {
    if (!initialized_) {
        throw std::logic_error("tracker used before initialize()");
    }
    FrameOutcome out = cfg_.pf.proposal == Proposal::Likelihood ? track_frame(frame, state_, cfg_, rng_)
                                                                : track_frame_baseline(frame, state_, cfg_, rng_);
    state_ = out.next;
    return out;
}

}  // namespace liketrack
