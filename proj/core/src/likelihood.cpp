#include "liketrack/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "liketrack/error.hpp"

namespace liketrack {

double LikelihoodMixture::weight(std::size_t j) const {
    if (!mass_weighted) {
        return 1.0 / static_cast<double>(components.size());
    }
    double total = 0.0;
    for (const auto& c : components) {
        total += c.mass;
    }
    return components[j].mass / total;
}

ThresholdResult threshold_map(const ResponseMap& map, double tau_rel) {
    const Peak top = peak(map);
    if (!(top.score > 0.0)) {
        throw DegenerateMapError();
    }
    ThresholdResult out;
    out.tau_abs = tau_rel * top.score;
    for (int m = 0; m < map.rows(); ++m) {
        for (int q = 0; q < map.cols(); ++q) {
            const double s = map(m, q);
            if (s > out.tau_abs) {
                out.points.push_back({grid_to_image(map, {m, q}), s, {m, q}});
            }
        }
    }
    return out;
}

GaussianComponent component_moments(std::span<const WeightedPoint> cluster, double sigma2_floor) {
    GaussianComponent c;
    double mx = 0.0;
    double my = 0.0;
    for (const auto& p : cluster) {
        c.mass += p.probability;
        mx += p.probability * p.position.x;
        my += p.probability * p.position.y;
    }
    mx /= c.mass;
    my /= c.mass;
    double vx = 0.0;
    double vy = 0.0;
    for (const auto& p : cluster) {
        vx += p.probability * (p.position.x - mx) * (p.position.x - mx);
        vy += p.probability * (p.position.y - my) * (p.position.y - my);
    }
    c.mean = {mx, my};
    c.variance = {std::max(vx / c.mass, sigma2_floor), std::max(vy / c.mass, sigma2_floor)};
    c.member_count = static_cast<int>(cluster.size());
    return c;
}

namespace {

// 8-connected components over the points' source cells.
std::vector<int> label_components(std::span<const WeightedPoint> pts, int& count) {
    int m0 = std::numeric_limits<int>::max();
    int q0 = m0;
    int m1 = std::numeric_limits<int>::min();
    int q1 = m1;
    for (const auto& p : pts) {
        m0 = std::min(m0, p.cell.m);
        q0 = std::min(q0, p.cell.q);
        m1 = std::max(m1, p.cell.m);
        q1 = std::max(q1, p.cell.q);
    }
    const int rows = m1 - m0 + 1;
    const int cols = q1 - q0 + 1;
    std::vector<int> grid(static_cast<std::size_t>(rows) * cols, -1);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        grid[static_cast<std::size_t>(pts[i].cell.m - m0) * cols + (pts[i].cell.q - q0)] = static_cast<int>(i);
    }

    std::vector<int> label(pts.size(), -1);
    std::vector<int> stack;
    count = 0;
    for (std::size_t start = 0; start < pts.size(); ++start) {
        if (label[start] >= 0) {
            continue;
        }
        label[start] = count;
        stack.push_back(static_cast<int>(start));
        while (!stack.empty()) {
            const auto& p = pts[stack.back()];
            stack.pop_back();
            for (int dm = -1; dm <= 1; ++dm) {
                for (int dq = -1; dq <= 1; ++dq) {
                    const int m = p.cell.m - m0 + dm;
                    const int q = p.cell.q - q0 + dq;
                    if (m < 0 || m >= rows || q < 0 || q >= cols) {
                        continue;
                    }
                    const int n = grid[static_cast<std::size_t>(m) * cols + q];
                    if (n >= 0 && label[n] < 0) {
                        label[n] = count;
                        stack.push_back(n);
                    }
                }
            }
        }
        ++count;
    }
    return label;
}

struct EmComponent {
    double weight;
    ImagePoint mean;
    ImagePoint var;
};

double log_gauss(const EmComponent& c, ImagePoint x) {
    const double dx = x.x - c.mean.x;
    const double dy = x.y - c.mean.y;
    return -0.5 * (dx * dx / c.var.x + dy * dy / c.var.y) -
           std::log(2.0 * std::numbers::pi * std::sqrt(c.var.x * c.var.y));
}

}  // namespace

std::vector<std::vector<WeightedPoint>> cluster_points(std::span<const WeightedPoint> points, int k_max,
                                                       const ClusterOptions& opts) {
    if (points.empty()) {
        return {};
    }
    k_max = std::max(k_max, 1);
    const double max_prob =
        std::max_element(points.begin(), points.end(), [](const auto& a, const auto& b) {
            return a.probability < b.probability;
        })->probability;

    std::vector<WeightedPoint> seeds;
    for (const auto& p : points) {
        if (p.probability > opts.seed_tau_rel * max_prob) {
            seeds.push_back(p);
        }
    }
    if (seeds.empty()) {
        seeds.assign(points.begin(), points.end());
    }

    int count = 0;
    const std::vector<int> label = label_components(seeds, count);
    std::vector<std::vector<WeightedPoint>> groups(count);
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        groups[label[i]].push_back(seeds[i]);
    }
    std::vector<GaussianComponent> init;
    init.reserve(groups.size());
    for (const auto& g : groups) {
        init.push_back(component_moments(g, opts.sigma2_floor));
    }

    while (static_cast<int>(init.size()) > k_max) {
        const auto lightest = static_cast<std::size_t>(std::distance(
            init.begin(),
            std::min_element(init.begin(), init.end(), [](const auto& a, const auto& b) { return a.mass < b.mass; })));
        std::size_t nearest = lightest == 0 ? 1 : 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < init.size(); ++j) {
            if (j == lightest) {
                continue;
            }
            const double d = std::hypot(init[j].mean.x - init[lightest].mean.x, init[j].mean.y - init[lightest].mean.y);
            if (d < best) {
                best = d;
                nearest = j;
            }
        }
        groups[nearest].insert(groups[nearest].end(), groups[lightest].begin(), groups[lightest].end());
        init[nearest] = component_moments(groups[nearest], opts.sigma2_floor);
        groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(lightest));
        init.erase(init.begin() + static_cast<std::ptrdiff_t>(lightest));
    }

    const std::size_t k = init.size();
    if (k == 1) {
        return {std::vector<WeightedPoint>(points.begin(), points.end())};
    }

    std::vector<EmComponent> comps(k);
    double seed_mass = 0.0;
    for (const auto& c : init) {
        seed_mass += c.mass;
    }
    for (std::size_t j = 0; j < k; ++j) {
        comps[j] = {init[j].mass / seed_mass, init[j].mean, init[j].variance};
    }

    const std::size_t n = points.size();
    double total_q = 0.0;
    for (const auto& p : points) {
        total_q += p.probability;
    }
    std::vector<double> resp(n * k);
    std::vector<double> logp(k);
    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        // E-step in the log domain.
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double hi = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < k; ++j) {
                logp[j] = comps[j].weight > 0.0 ? std::log(comps[j].weight) + log_gauss(comps[j], points[i].position)
                                                : -std::numeric_limits<double>::infinity();
                hi = std::max(hi, logp[j]);
            }
            double sum = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                sum += std::exp(logp[j] - hi);
            }
            for (std::size_t j = 0; j < k; ++j) {
                resp[i * k + j] = std::exp(logp[j] - hi) / sum;
            }
            ll += points[i].probability * (hi + std::log(sum));
        }
        ll /= total_q;

        // M-step with point weights q_i * r_ij.
        for (std::size_t j = 0; j < k; ++j) {
            double mass = 0.0;
            double mx = 0.0;
            double my = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double w = points[i].probability * resp[i * k + j];
                mass += w;
                mx += w * points[i].position.x;
                my += w * points[i].position.y;
            }
            if (mass <= 0.0) {
                comps[j].weight = 0.0;
                continue;
            }
            mx /= mass;
            my /= mass;
            double vx = 0.0;
            double vy = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double w = points[i].probability * resp[i * k + j];
                vx += w * (points[i].position.x - mx) * (points[i].position.x - mx);
                vy += w * (points[i].position.y - my) * (points[i].position.y - my);
            }
            comps[j] = {mass / total_q, {mx, my},
                        {std::max(vx / mass, opts.sigma2_floor), std::max(vy / mass, opts.sigma2_floor)}};
        }

        if (std::abs(ll - prev_ll) < opts.tolerance) {
            break;
        }
        prev_ll = ll;
    }

    std::vector<std::vector<WeightedPoint>> clusters(k);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        double best_lp = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < k; ++j) {
            if (comps[j].weight <= 0.0) {
                continue;
            }
            const double lp = std::log(comps[j].weight) + log_gauss(comps[j], points[i].position);
            if (lp > best_lp) {
                best_lp = lp;
                best = j;
            }
        }
        clusters[best].push_back(points[i]);
    }
    std::erase_if(clusters, [](const auto& c) { return c.empty(); });
    return clusters;
}

double truncated_variance_ratio(double u) {
    if (u <= 0.0) {
        return 0.0;
    }
    const double e = std::exp(-u);
    return (1.0 - (1.0 + u) * e) / (1.0 - e);
}

LikelihoodMixture estimate_likelihood(const ResponseMap& map, const LikelihoodConfig& cfg) {
    const ThresholdResult th = threshold_map(map, cfg.tau_rel);
    ClusterOptions opts;
    opts.seed_tau_rel = cfg.seed_tau_rel;
    opts.sigma2_floor = cfg.sigma2_floor;
    opts.max_iterations = cfg.em_max_iterations;
    opts.tolerance = cfg.em_tolerance;
    const auto clusters = cluster_points(th.points, cfg.k_max, opts);

    LikelihoodMixture mix;
    mix.tau = th.tau_abs;
    mix.mass_weighted = cfg.mass_weighted;
    for (const auto& cluster : clusters) {
        GaussianComponent c = component_moments(cluster, 0.0);
        if (cfg.truncation_correction) {
            double top = 0.0;
            for (const auto& p : cluster) {
                top = std::max(top, p.probability);
            }
            // Below a quarter the correction would amplify discretization noise.
            const double ratio = std::max(truncated_variance_ratio(std::log(top / th.tau_abs)), 0.25);
            c.variance.x /= ratio;
            c.variance.y /= ratio;
        }
        c.variance.x = std::max(c.variance.x, cfg.sigma2_floor);
        c.variance.y = std::max(c.variance.y, cfg.sigma2_floor);
        mix.components.push_back(c);
    }
    std::stable_sort(mix.components.begin(), mix.components.end(),
                     [](const auto& a, const auto& b) { return a.mass > b.mass; });
    return mix;
}

double mixture_density(const LikelihoodMixture& mix, ImagePoint pos) {
    double total = 0.0;
    for (std::size_t j = 0; j < mix.components.size(); ++j) {
        const auto& c = mix.components[j];
        const double dx = pos.x - c.mean.x;
        const double dy = pos.y - c.mean.y;
        const double e = -0.5 * (dx * dx / c.variance.x + dy * dy / c.variance.y);
        total += mix.weight(j) * std::exp(e) / (2.0 * std::numbers::pi * std::sqrt(c.variance.x * c.variance.y));
    }
    return std::max(total, kDensityFloor);
}

}  // namespace liketrack
