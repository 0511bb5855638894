#include "liketrack/sequences.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
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

std::vector<std::string> split_fields(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || c == '\t' || c == ' ' || c == '\r') {
            if (!cur.empty()) {
                out.push_back(cur);
                cur.clear();
            }
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) {
        out.push_back(cur);
    }
    return out;
}

bool parse_double(const std::string& s, double& v) {
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    return ec == std::errc{} && ptr == end && std::isfinite(v);
}

std::string shortest(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string frame_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d.ppm", index);
    return buf;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Sequence

void Sequence::validate() const {
    if (frames.size() < 2) {
        throw DataError("sequence '" + name + "' needs at least 2 frames");
    }
    if (ground_truth && ground_truth->size() != frames.size()) {
        throw DataError("sequence '" + name + "': " + std::to_string(ground_truth->size()) +
                        " ground-truth boxes for " + std::to_string(frames.size()) + " frames");
    }
}

std::vector<BoundingBox> parse_ground_truth(const std::string& text) {
    std::vector<BoundingBox> boxes;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split_fields(trim(line));
        std::array<double, 4> v{};
        bool ok = fields.size() == 4;
        for (std::size_t i = 0; ok && i < 4; ++i) {
            ok = parse_double(fields[i], v[i]);
        }
        if (!ok || v[2] <= 0.0 || v[3] <= 0.0) {
            throw DataError("ground truth line " + std::to_string(line_no) + ": expected x,y,w,h with w,h > 0, got '" +
                            trim(line) + "'");
        }
        boxes.push_back(BoundingBox::from_top_left(v[0], v[1], v[2], v[3]));
    }
    return boxes;
}

Sequence load_sequence(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    const fs::path img_dir = dir / "img";
    if (!fs::is_directory(img_dir)) {
        throw DataError("missing frame directory " + img_dir.string());
    }
    const fs::path gt_path = dir / "groundtruth_rect.txt";
    if (!fs::exists(gt_path)) {
        throw DataError("missing ground truth file " + gt_path.string());
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(img_dir)) {
        const auto ext = entry.path().extension().string();
        if (entry.is_regular_file() && (ext == ".ppm" || ext == ".pgm")) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
        return a.filename().string() < b.filename().string();
    });

    Sequence seq;
    seq.name = fs::absolute(dir).lexically_normal().filename().string();
    if (seq.name.empty()) {
        seq.name = fs::absolute(dir).lexically_normal().parent_path().filename().string();
    }
    if (fs::exists(dir / "attribute.txt")) {
        seq.attribute = trim(read_file(dir / "attribute.txt"));
    }
    seq.frames.reserve(files.size());
    for (const auto& f : files) {
        seq.frames.push_back(read_pnm(f));
    }
    seq.ground_truth = parse_ground_truth(read_file(gt_path));
    if (seq.ground_truth->size() != seq.frames.size()) {
        throw DataError(dir.string() + ": " + std::to_string(seq.ground_truth->size()) + " ground-truth lines for " +
                        std::to_string(seq.frames.size()) + " frames");
    }
    seq.validate();
    return seq;
}

void save_sequence(const std::filesystem::path& dir, const Sequence& seq) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "img");
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        write_ppm_rgb(dir / "img" / frame_name(static_cast<int>(i) + 1), seq.frames[i]);
    }
    std::ofstream gt(dir / "groundtruth_rect.txt");
    if (!gt) {
        throw DataError("cannot write " + (dir / "groundtruth_rect.txt").string());
    }
    if (seq.ground_truth) {
        for (const auto& b : *seq.ground_truth) {
            gt << shortest(b.left()) << ',' << shortest(b.top()) << ',' << shortest(b.w) << ',' << shortest(b.h)
               << '\n';
        }
    }
    std::ofstream attr(dir / "attribute.txt");
    attr << seq.attribute << '\n';
}

// ---------------------------------------------------------------------------
// Results

std::string format_results(const std::vector<ResultRow>& rows) {
    std::string out = "frame,cx,cy,w,h,quality_flag\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%.3f,%.3f,%.3f,%.3f,%d\n", r.frame, r.box.cx, r.box.cy, r.box.w, r.box.h,
                      r.quality_flag ? 1 : 0);
        out += buf;
    }
    return out;
}

void save_results(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write results " + path.string());
    }
    out << format_results(rows);
    if (!out) {
        throw DataError("failed writing results " + path.string());
    }
}

std::vector<ResultRow> load_results(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line) || trim(line) != "frame,cx,cy,w,h,quality_flag") {
        throw DataError(path.string() + ": missing results header");
    }
    std::vector<ResultRow> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto f = split_fields(trim(line));
        std::array<double, 6> v{};
        bool ok = f.size() == 6;
        for (std::size_t i = 0; ok && i < 6; ++i) {
            ok = parse_double(f[i], v[i]);
        }
        if (!ok) {
            throw DataError(path.string() + " line " + std::to_string(line_no) + ": malformed result row");
        }
        rows.push_back({static_cast<int>(v[0]), {v[1], v[2], v[3], v[4]}, v[5] != 0.0});
    }
    return rows;
}

ImageRaster draw_box(const ImageRaster& frame, const BoundingBox& box) {
    ImageRaster out(frame.width(), frame.height(), 3, 0.0F);
    for (int y = 0; y < frame.height(); ++y) {
        for (int x = 0; x < frame.width(); ++x) {
            for (int c = 0; c < 3; ++c) {
                out.at(x, y, c) = frame.at(x, y, frame.channels() == 3 ? c : 0);
            }
        }
    }
    const auto x0 = static_cast<int>(std::floor(box.left()));
    const auto y0 = static_cast<int>(std::floor(box.top()));
    const auto x1 = static_cast<int>(std::floor(box.left() + box.w)) - 1;
    const auto y1 = static_cast<int>(std::floor(box.top() + box.h)) - 1;
    auto paint = [&](int x, int y) {
        if (x >= 0 && y >= 0 && x < out.width() && y < out.height()) {
            out.at(x, y, 0) = 1.0F;
            out.at(x, y, 1) = 0.0F;
            out.at(x, y, 2) = 0.0F;
        }
    };
    for (int t = 0; t < 2; ++t) {
        for (int x = x0; x <= x1; ++x) {
            paint(x, y0 + t);
            paint(x, y1 - t);
        }
        for (int y = y0; y <= y1; ++y) {
            paint(x0 + t, y);
            paint(x1 - t, y);
        }
    }
    return out;
}

void save_overlays(const std::filesystem::path& dir, const Sequence& seq, const std::vector<BoundingBox>& boxes) {
    std::filesystem::create_directories(dir);
    const std::size_t n = std::min(seq.frames.size(), boxes.size());
    for (std::size_t i = 0; i < n; ++i) {
        write_ppm_rgb(dir / frame_name(static_cast<int>(i) + 1), draw_box(seq.frames[i], boxes[i]));
    }
}

// ---------------------------------------------------------------------------
// Synthetic specs

void SynthSpec::validate() const {
    auto fail = [this](const std::string& what) { throw DataError("synthetic spec '" + name + "': " + what); };
    if (frames < 2) {
        fail("frames must be at least 2");
    }
    if (canvas_width < 8 || canvas_height < 8) {
        fail("canvas too small");
    }
    if (!(target_width >= 4.0) || !(target_height >= 4.0)) {
        fail("target_size must be at least 4x4");
    }
    if (waypoints.empty()) {
        fail("at least one waypoint required");
    }
    for (const auto& w : waypoints) {
        if (w.frame < 0 || w.frame >= frames) {
            fail("waypoint frame " + std::to_string(w.frame) + " outside sequence");
        }
        if (w.cx < 0.0 || w.cy < 0.0 || w.cx > canvas_width || w.cy > canvas_height) {
            fail("waypoint at frame " + std::to_string(w.frame) + " outside canvas");
        }
    }
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
        if (waypoints[i].frame <= waypoints[i - 1].frame) {
            fail("waypoint frames must increase");
        }
    }
    auto check_range = [&](int s, int e, const char* kind) {
        if (s < 0 || e < s || e >= frames) {
            fail(std::string(kind) + " frame range " + std::to_string(s) + "-" + std::to_string(e) +
                 " outside sequence");
        }
    };
    for (const auto& o : occlusions) {
        check_range(o.start, o.end, "occlusion");
        if (!o.occluder.valid() || (o.occluder_end && !o.occluder_end->valid())) {
            fail("occluder box must have positive size");
        }
    }
    for (const auto& b : blurs) {
        check_range(b.start, b.end, "blur");
        if (b.length < 1) {
            fail("blur length must be positive");
        }
    }
    for (const auto& c : clutter) {
        if (c.count < 0) {
            fail("clutter count must be non-negative");
        }
    }
    if (position_noise < 0.0 || pixel_noise < 0.0 || background_contrast < 0.0) {
        fail("noise levels must be non-negative");
    }
}

std::string SynthSpec::derived_attribute() const {
    if (!attribute.empty()) {
        return attribute;
    }
    if (!occlusions.empty()) {
        return "occlusion";
    }
    if (!blurs.empty()) {
        return "blur";
    }
    if (std::any_of(clutter.begin(), clutter.end(), [](const auto& c) { return c.count > 0; })) {
        return "clutter";
    }
    return "easy";
}

ImagePoint SynthSpec::path_at(int frame) const {
    if (frame <= waypoints.front().frame) {
        return {waypoints.front().cx, waypoints.front().cy};
    }
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
        if (frame <= waypoints[i].frame) {
            const auto& a = waypoints[i - 1];
            const auto& b = waypoints[i];
            const double t = static_cast<double>(frame - a.frame) / (b.frame - a.frame);
            return {a.cx + t * (b.cx - a.cx), a.cy + t * (b.cy - a.cy)};
        }
    }
    return {waypoints.back().cx, waypoints.back().cy};
}

namespace {

struct SpecParser {
    SynthSpec spec;
    enum class Stanza { None, Occlusion, Blur, Clutter } stanza = Stanza::None;
    int line_no = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw DataError("synthetic spec line " + std::to_string(line_no) + ": " + what);
    }
    double num(const std::string& v) const {
        double d = 0.0;
        if (!parse_double(v, d)) {
            fail("expected a number, got '" + v + "'");
        }
        return d;
    }
    int integer(const std::string& v) const {
        const double d = num(v);
        if (d != std::floor(d)) {
            fail("expected an integer, got '" + v + "'");
        }
        return static_cast<int>(d);
    }
    std::uint64_t seed(const std::string& v) const {
        std::uint64_t s = 0;
        auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), s);
        if (ec != std::errc{} || ptr != v.data() + v.size()) {
            fail("expected an unsigned seed, got '" + v + "'");
        }
        return s;
    }
    std::pair<double, double> dims(const std::string& v) const {
        const auto x = v.find('x');
        if (x == std::string::npos) {
            fail("expected WxH, got '" + v + "'");
        }
        return {num(v.substr(0, x)), num(v.substr(x + 1))};
    }
    std::vector<double> list(const std::string& v, std::size_t n) const {
        const auto f = split_fields(v);
        if (f.size() != n) {
            fail("expected " + std::to_string(n) + " comma-separated values, got '" + v + "'");
        }
        std::vector<double> out;
        for (const auto& s : f) {
            out.push_back(num(s));
        }
        return out;
    }
    BoundingBox box(const std::string& v) const {
        const auto b = list(v, 4);
        return {b[0], b[1], b[2], b[3]};
    }
    bool flag(const std::string& v) const {
        if (v == "true" || v == "1") {
            return true;
        }
        if (v == "false" || v == "0") {
            return false;
        }
        fail("expected true/false, got '" + v + "'");
    }

    void top_level(const std::string& key, const std::string& v) {
        if (key == "name") {
            spec.name = v;
        } else if (key == "attribute") {
            spec.attribute = v;
        } else if (key == "frames") {
            spec.frames = integer(v);
        } else if (key == "canvas") {
            const auto [w, h] = dims(v);
            spec.canvas_width = static_cast<int>(w);
            spec.canvas_height = static_cast<int>(h);
        } else if (key == "target_size") {
            std::tie(spec.target_width, spec.target_height) = dims(v);
        } else if (key == "texture_seed") {
            spec.texture_seed = seed(v);
        } else if (key == "background_seed") {
            spec.background_seed = seed(v);
        } else if (key == "background_contrast") {
            spec.background_contrast = num(v);
        } else if (key == "waypoint") {
            const auto w = list(v, 3);
            spec.waypoints.push_back({static_cast<int>(w[0]), w[1], w[2]});
        } else if (key == "position_noise") {
            spec.position_noise = num(v);
        } else if (key == "pixel_noise") {
            spec.pixel_noise = num(v);
        } else {
            fail("unknown key '" + key + "'");
        }
    }

    void event_key(const std::string& key, const std::string& v) {
        switch (stanza) {
            case Stanza::Occlusion: {
                auto& o = spec.occlusions.back();
                if (key == "start") {
                    o.start = integer(v);
                } else if (key == "end") {
                    o.end = integer(v);
                } else if (key == "occluder") {
                    o.occluder = box(v);
                } else if (key == "occluder_end") {
                    o.occluder_end = box(v);
                } else if (key == "texture_seed") {
                    o.texture_seed = seed(v);
                } else if (key == "flat") {
                    o.flat = flag(v);
                } else {
                    fail("key '" + key + "' not valid in an occlusion event");
                }
                break;
            }
            case Stanza::Blur: {
                auto& b = spec.blurs.back();
                if (key == "start") {
                    b.start = integer(v);
                } else if (key == "end") {
                    b.end = integer(v);
                } else if (key == "length") {
                    b.length = integer(v);
                } else {
                    fail("key '" + key + "' not valid in a blur event");
                }
                break;
            }
            case Stanza::Clutter: {
                auto& c = spec.clutter.back();
                if (key == "count") {
                    c.count = integer(v);
                } else if (key == "seed") {
                    c.seed = seed(v);
                } else {
                    fail("key '" + key + "' not valid in a clutter event");
                }
                break;
            }
            case Stanza::None:
                top_level(key, v);
                break;
        }
    }

    void line(const std::string& raw) {
        ++line_no;
        std::string text = raw;
        if (const auto hash = text.find('#'); hash != std::string::npos) {
            text.resize(hash);
        }
        text = trim(text);
        if (text.empty()) {
            return;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            fail("expected key=value");
        }
        const std::string key = trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));
        if (key == "event") {
            if (value == "occlusion") {
                spec.occlusions.emplace_back();
                stanza = Stanza::Occlusion;
            } else if (value == "blur") {
                spec.blurs.emplace_back();
                stanza = Stanza::Blur;
            } else if (value == "clutter") {
                spec.clutter.emplace_back();
                stanza = Stanza::Clutter;
            } else {
                fail("unknown event kind '" + value + "'");
            }
            return;
        }
        event_key(key, value);
    }
};

}  // namespace

SynthSpec parse_synth_spec(const std::string& text) {
    SpecParser parser;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        parser.line(line);
    }
    parser.spec.validate();
    return parser.spec;
}

SynthSpec load_synth_spec(const std::filesystem::path& path) { return parse_synth_spec(read_file(path)); }

std::string format_synth_spec(const SynthSpec& s) {
    std::ostringstream out;
    auto bx = [](const BoundingBox& b) {
        return shortest(b.cx) + "," + shortest(b.cy) + "," + shortest(b.w) + "," + shortest(b.h);
    };
    out << "name = " << s.name << '\n';
    if (!s.attribute.empty()) {
        out << "attribute = " << s.attribute << '\n';
    }
    out << "frames = " << s.frames << '\n'
        << "canvas = " << s.canvas_width << 'x' << s.canvas_height << '\n'
        << "target_size = " << shortest(s.target_width) << 'x' << shortest(s.target_height) << '\n'
        << "texture_seed = " << s.texture_seed << '\n'
        << "background_seed = " << s.background_seed << '\n'
        << "background_contrast = " << shortest(s.background_contrast) << '\n'
        << "position_noise = " << shortest(s.position_noise) << '\n'
        << "pixel_noise = " << shortest(s.pixel_noise) << '\n';
    for (const auto& w : s.waypoints) {
        out << "waypoint = " << w.frame << ',' << shortest(w.cx) << ',' << shortest(w.cy) << '\n';
    }
    for (const auto& o : s.occlusions) {
        out << "event = occlusion\nstart = " << o.start << "\nend = " << o.end << "\noccluder = " << bx(o.occluder)
            << '\n';
        if (o.occluder_end) {
            out << "occluder_end = " << bx(*o.occluder_end) << '\n';
        }
        if (o.texture_seed) {
            out << "texture_seed = " << *o.texture_seed << '\n';
        }
        if (o.flat) {
            out << "flat = true\n";
        }
    }
    for (const auto& b : s.blurs) {
        out << "event = blur\nstart = " << b.start << "\nend = " << b.end << "\nlength = " << b.length << '\n';
    }
    for (const auto& c : s.clutter) {
        out << "event = clutter\ncount = " << c.count << "\nseed = " << c.seed << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Rendering

ImageRaster render_texture(std::uint64_t seed, int width, int height) {
    // 4 x 4 blocks of random intensity: strong, well-localized edges.
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 0x1234567ULL);
    std::uniform_real_distribution<float> level(0.05F, 0.95F);
    std::array<float, 16> blocks{};
    for (auto& b : blocks) {
        b = level(rng);
    }
    ImageRaster tex(width, height, 1, 0.0F);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const int bx = std::min(x * 4 / width, 3);
            const int by = std::min(y * 4 / height, 3);
            tex.at(x, y) = blocks[by * 4 + bx];
        }
    }
    return tex;
}

namespace {

ImageRaster render_background(const SynthSpec& spec) {
    constexpr int kGrid = 16;
    const int gw = spec.canvas_width / kGrid + 2;
    const int gh = spec.canvas_height / kGrid + 2;
    std::mt19937_64 rng(spec.background_seed * 0xD1B54A32D192ED03ULL + 7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> grid(static_cast<std::size_t>(gw) * gh);
    for (auto& g : grid) {
        g = u(rng);
    }
    ImageRaster bg(spec.canvas_width, spec.canvas_height, 1, 0.0F);
    for (int y = 0; y < spec.canvas_height; ++y) {
        const double fy = (y + 0.5) / kGrid;
        const int y0 = static_cast<int>(fy);
        const double ay = fy - y0;
        for (int x = 0; x < spec.canvas_width; ++x) {
            const double fx = (x + 0.5) / kGrid;
            const int x0 = static_cast<int>(fx);
            const double ax = fx - x0;
            auto g = [&](int i, int j) { return grid[static_cast<std::size_t>(j) * gw + i]; };
            const double v = (1 - ay) * ((1 - ax) * g(x0, y0) + ax * g(x0 + 1, y0)) +
                             ay * ((1 - ax) * g(x0, y0 + 1) + ax * g(x0 + 1, y0 + 1));
            bg.at(x, y) = static_cast<float>(std::clamp(0.5 + spec.background_contrast * v, 0.0, 1.0));
        }
    }
    return bg;
}

// Paints a texture stretched over a box; pixels whose centers fall inside are covered.
void paint(ImageRaster& img, const BoundingBox& box, const ImageRaster* tex, float flat_value) {
    const int x0 = std::max(0, static_cast<int>(std::floor(box.left())));
    const int y0 = std::max(0, static_cast<int>(std::floor(box.top())));
    const int x1 = std::min(img.width() - 1, static_cast<int>(std::ceil(box.left() + box.w)));
    const int y1 = std::min(img.height() - 1, static_cast<int>(std::ceil(box.top() + box.h)));
    for (int y = y0; y <= y1; ++y) {
        const double v = (y + 0.5 - box.top()) / box.h;
        if (v < 0.0 || v >= 1.0) {
            continue;
        }
        for (int x = x0; x <= x1; ++x) {
            const double u = (x + 0.5 - box.left()) / box.w;
            if (u < 0.0 || u >= 1.0) {
                continue;
            }
            if (tex == nullptr) {
                img.at(x, y) = flat_value;
            } else {
                const int tx = std::min(static_cast<int>(u * tex->width()), tex->width() - 1);
                const int ty = std::min(static_cast<int>(v * tex->height()), tex->height() - 1);
                img.at(x, y) = tex->at(tx, ty);
            }
        }
    }
}

float bilinear(const ImageRaster& img, double x, double y) {
    const double fx = std::clamp(x - 0.5, 0.0, img.width() - 1.0);
    const double fy = std::clamp(y - 0.5, 0.0, img.height() - 1.0);
    const int x0 = static_cast<int>(fx);
    const int y0 = static_cast<int>(fy);
    const int x1 = std::min(x0 + 1, img.width() - 1);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double ax = fx - x0;
    const double ay = fy - y0;
    return static_cast<float>((1 - ay) * ((1 - ax) * img.at(x0, y0) + ax * img.at(x1, y0)) +
                              ay * ((1 - ax) * img.at(x0, y1) + ax * img.at(x1, y1)));
}

ImageRaster motion_blur(const ImageRaster& img, ImagePoint direction, int length) {
    const double norm = std::hypot(direction.x, direction.y);
    const ImagePoint d = norm > 0.0 ? ImagePoint{direction.x / norm, direction.y / norm} : ImagePoint{1.0, 0.0};
    ImageRaster out(img.width(), img.height(), 1, 0.0F);
    const double half = (length - 1) / 2.0;
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            double acc = 0.0;
            for (int k = 0; k < length; ++k) {
                const double t = k - half;
                acc += bilinear(img, x + 0.5 + t * d.x, y + 0.5 + t * d.y);
            }
            out.at(x, y) = static_cast<float>(std::clamp(acc / length, 0.0, 1.0));
        }
    }
    return out;
}

}  // namespace

Sequence generate_synthetic(const SynthSpec& spec, std::uint64_t seed) {
    spec.validate();
    const ImageRaster background = render_background(spec);
    const int tw = std::max(1, static_cast<int>(std::lround(spec.target_width)));
    const int th = std::max(1, static_cast<int>(std::lround(spec.target_height)));
    const ImageRaster target_tex = render_texture(spec.texture_seed, tw, th);

    std::mt19937_64 rng(seed ^ 0xA0761D6478BD642FULL);
    std::normal_distribution<double> unit(0.0, 1.0);

    // Static decoys, kept clear of the trajectory.
    struct Decoy {
        BoundingBox box;
        ImageRaster tex;
    };
    std::vector<Decoy> decoys;
    for (const auto& c : spec.clutter) {
        std::mt19937_64 place(c.seed * 0x94D049BB133111EBULL + seed);
        std::uniform_real_distribution<double> ux(spec.target_width / 2, spec.canvas_width - spec.target_width / 2);
        std::uniform_real_distribution<double> uy(spec.target_height / 2, spec.canvas_height - spec.target_height / 2);
        const double clearance = 1.2 * std::hypot(spec.target_width, spec.target_height);
        for (int i = 0; i < c.count; ++i) {
            BoundingBox b{ux(place), uy(place), spec.target_width, spec.target_height};
            for (int attempt = 0; attempt < 200; ++attempt) {
                bool clear = true;
                for (int f = 0; f < spec.frames && clear; f += 5) {
                    const auto p = spec.path_at(f);
                    clear = std::hypot(p.x - b.cx, p.y - b.cy) > clearance;
                }
                if (clear) {
                    break;
                }
                b.cx = ux(place);
                b.cy = uy(place);
            }
            decoys.push_back({b, render_texture(c.seed * 1000 + i + 1, tw, th)});
        }
    }

    Sequence seq;
    seq.name = spec.name;
    seq.attribute = spec.derived_attribute();
    seq.ground_truth.emplace();
    seq.frames.reserve(spec.frames);
    for (int f = 0; f < spec.frames; ++f) {
        ImageRaster frame = background;
        for (const auto& d : decoys) {
            paint(frame, d.box, &d.tex, 0.0F);
        }
        ImagePoint c = spec.path_at(f);
        if (spec.position_noise > 0.0) {
            c.x += spec.position_noise * unit(rng);
            c.y += spec.position_noise * unit(rng);
        }
        const BoundingBox target{c.x, c.y, spec.target_width, spec.target_height};
        paint(frame, target, &target_tex, 0.0F);

        for (const auto& o : spec.occlusions) {
            if (f < o.start || f > o.end) {
                continue;
            }
            BoundingBox ob = o.occluder;
            if (o.occluder_end && o.end > o.start) {
                const double t = static_cast<double>(f - o.start) / (o.end - o.start);
                ob = {o.occluder.cx + t * (o.occluder_end->cx - o.occluder.cx),
                      o.occluder.cy + t * (o.occluder_end->cy - o.occluder.cy),
                      o.occluder.w + t * (o.occluder_end->w - o.occluder.w),
                      o.occluder.h + t * (o.occluder_end->h - o.occluder.h)};
            }
            if (o.flat) {
                paint(frame, ob, nullptr, 0.5F);
            } else {
                const ImageRaster tex = render_texture(o.texture_seed.value_or(spec.texture_seed),
                                                       std::max(1, static_cast<int>(std::lround(ob.w))),
                                                       std::max(1, static_cast<int>(std::lround(ob.h))));
                paint(frame, ob, &tex, 0.0F);
            }
        }

        for (const auto& b : spec.blurs) {
            if (f >= b.start && f <= b.end && b.length > 1) {
                const ImagePoint a = spec.path_at(std::max(f - 1, 0));
                const ImagePoint z = spec.path_at(std::min(f + 1, spec.frames - 1));
                frame = motion_blur(frame, {z.x - a.x, z.y - a.y}, b.length);
            }
        }

        if (spec.pixel_noise > 0.0) {
            for (float& v : frame.values()) {
                v = static_cast<float>(std::clamp(v + spec.pixel_noise * unit(rng), 0.0, 1.0));
            }
        }
        seq.frames.push_back(std::move(frame));
        seq.ground_truth->push_back(target);
    }
    return seq;
}

}  // namespace liketrack
