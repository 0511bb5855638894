#include "liketrack/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace liketrack {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string num(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

struct BadValue {
    std::string expected;
};

double to_double(const std::string& v) {
    double d = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        throw BadValue{"a number"};
    }
    return d;
}

int to_int(const std::string& v) {
    int i = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), i);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        throw BadValue{"an integer"};
    }
    return i;
}

std::uint64_t to_u64(const std::string& v) {
    std::uint64_t i = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), i);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        throw BadValue{"an unsigned integer"};
    }
    return i;
}

bool to_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") {
        return true;
    }
    if (v == "false" || v == "0" || v == "no") {
        return false;
    }
    throw BadValue{"true or false"};
}

std::vector<double> to_list(const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(to_double(trim(item)));
    }
    if (out.empty()) {
        throw BadValue{"a comma-separated list of numbers"};
    }
    return out;
}

template <typename E>
E to_enum(const std::string& v, std::initializer_list<std::pair<const char*, E>> names) {
    std::string expected;
    for (const auto& [name, value] : names) {
        if (v == name) {
            return value;
        }
        expected += expected.empty() ? "" : " | ";
        expected += name;
    }
    throw BadValue{expected};
}

template <typename E>
std::string enum_name(E v, std::initializer_list<std::pair<const char*, E>> names) {
    for (const auto& [name, value] : names) {
        if (v == value) {
            return name;
        }
    }
    return "?";
}

const std::initializer_list<std::pair<const char*, FeatureKind>> kKinds = {
    {"grayscale", FeatureKind::Grayscale},
    {"gradient", FeatureKind::Gradient},
    {"combined", FeatureKind::Combined},
    {"external", FeatureKind::External},
};
const std::initializer_list<std::pair<const char*, Proposal>> kProposals = {
    {"likelihood", Proposal::Likelihood},
    {"transition", Proposal::Transition},
};
const std::initializer_list<std::pair<const char*, EstimateMode>> kEstimates = {
    {"weighted_mean", EstimateMode::WeightedMean},
    {"max_weight", EstimateMode::MaxWeight},
};
const std::initializer_list<std::pair<const char*, InitialMapCenter>> kCenters = {
    {"predicted", InitialMapCenter::Predicted},
    {"previous", InitialMapCenter::Previous},
};

struct Key {
    std::function<void(AppConfig&, const std::string&)> set;
    std::function<std::string(const AppConfig&)> get;
};

// Ordered so that format_config groups keys by section.
const std::vector<std::pair<std::string, Key>>& keys() {
    static const std::vector<std::pair<std::string, Key>> table = {
        {"features.kind",
         {[](AppConfig& c, const std::string& v) { c.tracker.features.kind = to_enum(v, kKinds); },
          [](const AppConfig& c) { return enum_name(c.tracker.features.kind, kKinds); }}},
        {"features.orientation_bins",
         {[](AppConfig& c, const std::string& v) { c.tracker.features.orientation_bins = to_int(v); },
          [](const AppConfig& c) { return std::to_string(c.tracker.features.orientation_bins); }}},
        {"features.gray_cell_size",
         {[](AppConfig& c, const std::string& v) { c.tracker.features.gray_cell_size = to_int(v); },
          [](const AppConfig& c) { return std::to_string(c.tracker.features.gray_cell_size); }}},
        {"features.gradient_cell_size",
         {[](AppConfig& c, const std::string& v) { c.tracker.features.gradient_cell_size = to_int(v); },
          [](const AppConfig& c) { return std::to_string(c.tracker.features.gradient_cell_size); }}},
        {"features.padding",
         {[](AppConfig& c, const std::string& v) { c.tracker.features.padding = to_double(v); },
          [](const AppConfig& c) { return num(c.tracker.features.padding); }}},
        {"features.feature_size",
         {[](AppConfig& c, const std::string& v) { c.tracker.features.feature_size = to_int(v); },
          [](const AppConfig& c) { return std::to_string(c.tracker.features.feature_size); }}},
        {"features.normalize",
         {[](AppConfig& c, const std::string& v) { c.tracker.features.normalize = to_bool(v); },
          [](const AppConfig& c) { return std::string(c.tracker.features.normalize ? "true" : "false"); }}},
        {"features.layer_weights",
         {[](AppConfig& c, const std::string& v) { c.tracker.features.layer_weights = to_list(v); },
          [](const AppConfig& c) {
              std::string s;
              for (double w : c.tracker.features.layer_weights) {
                  s += (s.empty() ? "" : ",") + num(w);
              }
              return s;
          }}},
        {"filter.label_sigma_factor",
         {[](AppConfig& c, const std::string& v) { c.tracker.filter.label_sigma_factor = to_double(v); },
          [](const AppConfig& c) { return num(c.tracker.filter.label_sigma_factor); }}},
        {"filter.lambda",
         {[](AppConfig& c, const std::string& v) { c.tracker.filter.lambda = to_double(v); },
          [](const AppConfig& c) { return num(c.tracker.filter.lambda); }}},
        {"filter.learning_rate",
         {[](AppConfig& c, const std::string& v) { c.tracker.filter.learning_rate = to_double(v); },
          [](const AppConfig& c) { return num(c.tracker.filter.learning_rate); }}},
        {"pf.particles",
         {[](AppConfig& c, const std::string& v) { c.tracker.pf.particles = to_int(v); },
          [](const AppConfig& c) { return std::to_string(c.tracker.pf.particles); }}},
        {"pf.proposal",
         {[](AppConfig& c, const std::string& v) { c.tracker.pf.proposal = to_enum(v, kProposals); },
          [](const AppConfig& c) { return enum_name(c.tracker.pf.proposal, kProposals); }}},
        {"pf.tau_rel",
         {[](AppConfig& c, const std::string& v) { c.tracker.pf.tau_rel = to_double(v); },
          [](const AppConfig& c) { return num(c.tracker.pf.tau_rel); }}},
        {"pf.seed_tau_rel",
         {[](AppConfig& c, const std::string& v) { c.tracker.pf.seed_tau_rel = to_double(v); },
          [](const AppConfig& c) { return num(c.tracker.pf.seed_tau_rel); }}},
        {"pf.k_max",
         {[](AppConfig& c, const std::string& v) { c.tracker.pf.k_max = to_int(v); },
          [](const AppConfig& c) { return std::to_string(c.tracker.pf.k_max); }}},
        {"pf.sigma_floor_factor",
         {[](AppConfig& c, const std::string& v) { c.tracker.pf.sigma_floor_factor = to_double(v); },
          [](const AppConfig& c) { return num(c.tracker.pf.sigma_floor_factor); }}},
        {"pf.truncation_correction",
         {[](AppConfig& c, const std::string& v) { c.tracker.pf.truncation_correction = to_bool(v); },
          [](const AppConfig& c) { return std::string(c.tracker.pf.truncation_correction ? "true" : "false"); }}},
        {"pf.mass_weighted",
         {[](AppConfig& c, const std::string& v) { c.tracker.pf.mass_weighted = to_bool(v); },
          [](const AppConfig& c) { return std::string(c.tracker.pf.mass_weighted ? "true" : "false"); }}},
        {"pf.trans_pos_factor",
         {[](AppConfig& c, const std::string& v) { c.tracker.pf.trans_pos_factor = to_double(v); },
          [](const AppConfig& c) { return num(c.tracker.pf.trans_pos_factor); }}},
        {"pf.trans_size_factor",
         {[](AppConfig& c, const std::string& v) { c.tracker.pf.trans_size_factor = to_double(v); },
          [](const AppConfig& c) { return num(c.tracker.pf.trans_size_factor); }}},
        {"pf.velocity_gamma",
         {[](AppConfig& c, const std::string& v) { c.tracker.pf.velocity_gamma = to_double(v); },
          [](const AppConfig& c) { return num(c.tracker.pf.velocity_gamma); }}},
        {"pf.min_component_fraction",
         {[](AppConfig& c, const std::string& v) { c.tracker.pf.min_component_fraction = to_double(v); },
          [](const AppConfig& c) { return num(c.tracker.pf.min_component_fraction); }}},
        {"pf.weight_cap",
         {[](AppConfig& c, const std::string& v) { c.tracker.pf.weight_cap = to_double(v); },
          [](const AppConfig& c) { return num(c.tracker.pf.weight_cap); }}},
        {"pf.estimate",
         {[](AppConfig& c, const std::string& v) { c.tracker.pf.estimate = to_enum(v, kEstimates); },
          [](const AppConfig& c) { return enum_name(c.tracker.pf.estimate, kEstimates); }}},
        {"pf.recompute_at_shift",
         {[](AppConfig& c, const std::string& v) { c.tracker.pf.recompute_at_shift = to_bool(v); },
          [](const AppConfig& c) { return std::string(c.tracker.pf.recompute_at_shift ? "true" : "false"); }}},
        {"pf.initial_map_at",
         {[](AppConfig& c, const std::string& v) { c.tracker.pf.initial_map_at = to_enum(v, kCenters); },
          [](const AppConfig& c) { return enum_name(c.tracker.pf.initial_map_at, kCenters); }}},
        {"pf.seed",
         {[](AppConfig& c, const std::string& v) { c.tracker.pf.seed = to_u64(v); },
          [](const AppConfig& c) { return std::to_string(c.tracker.pf.seed); }}},
        {"eval.skip_first_frame",
         {[](AppConfig& c, const std::string& v) { c.ope.skip_first_frame = to_bool(v); },
          [](const AppConfig& c) { return std::string(c.ope.skip_first_frame ? "true" : "false"); }}},
    };
    return table;
}

}  // namespace

AppConfig parse_config(const std::string& text) {
    AppConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.resize(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw DataError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto& table = keys();
        const auto it =
            std::find_if(table.begin(), table.end(), [&](const auto& entry) { return entry.first == key; });
        if (it == table.end()) {
            throw DataError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
        try {
            it->second.set(cfg, value);
        } catch (const BadValue& bad) {
            throw DataError("config line " + std::to_string(line_no) + ": " + key + " expects " + bad.expected +
                            ", got '" + value + "'");
        }
    }
    cfg.tracker.filter.padding = cfg.tracker.features.padding;
    try {
        cfg.tracker.validate();
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("config: ") + e.what());
    }
    return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot read config file " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string format_config(const AppConfig& cfg) {
    std::string out;
    std::string section;
    for (const auto& [key, entry] : keys()) {
        const std::string s = key.substr(0, key.find('.'));
        if (s != section) {
            out += (section.empty() ? "" : "\n");
            section = s;
        }
        out += key + " = " + entry.get(cfg) + '\n';
    }
    return out;
}

}  // namespace liketrack
