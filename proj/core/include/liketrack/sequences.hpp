#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "liketrack/error.hpp"
#include "liketrack/grid.hpp"

namespace liketrack {

// Binary portable any-map (P5 graymap / P6 pixmap), maxval up to 65535.
// RGB files whose channels are all equal load as one channel.
ImageRaster read_pnm(const std::filesystem::path& path);
// P5 for one channel, P6 for three; 8-bit.
void write_pnm(const std::filesystem::path& path, const ImageRaster& image);
// Always P6; gray rasters are replicated into RGB.
void write_ppm_rgb(const std::filesystem::path& path, const ImageRaster& image);

struct Sequence {
    std::string name;
    std::string attribute = "unknown";  // occlusion | blur | clutter | easy | unknown
    std::vector<ImageRaster> frames;
    std::optional<std::vector<BoundingBox>> ground_truth;

    // Throws DataError.
    void validate() const;
};

struct Waypoint {
    int frame = 0;
    double cx = 0.0;
    double cy = 0.0;
};

struct OcclusionEvent {
    int start = 0;
    int end = 0;  // inclusive
    BoundingBox occluder;
    std::optional<BoundingBox> occluder_end;  // linear motion from occluder to occluder_end
    // Texture seed of the occluder; unset draws the target's own texture (a look-alike).
    std::optional<std::uint64_t> texture_seed;
    bool flat = false;  // flat gray occluder instead of a texture
};

struct BlurEvent {
    int start = 0;
    int end = 0;  // inclusive
    int length = 9;
};

struct ClutterEvent {
    int count = 0;
    std::uint64_t seed = 1;
};

struct SynthSpec {
    std::string name = "synthetic";
    std::string attribute;  // empty: derived from the events
    int frames = 100;
    int canvas_width = 320;
    int canvas_height = 240;
    double target_width = 32.0;
    double target_height = 32.0;
    std::uint64_t texture_seed = 1;
    std::uint64_t background_seed = 2;
    double background_contrast = 0.08;
    std::vector<Waypoint> waypoints;
    double position_noise = 0.0;  // per-frame trajectory jitter, pixels
    double pixel_noise = 0.0;     // additive intensity noise std
    std::vector<OcclusionEvent> occlusions;
    std::vector<BlurEvent> blurs;
    std::vector<ClutterEvent> clutter;

    // Throws DataError naming the offending field.
    void validate() const;
    std::string derived_attribute() const;
    // Noise-free trajectory position at a frame (0-based).
    ImagePoint path_at(int frame) const;
};

// Flat key=value text; "event = <kind>" opens a stanza whose keys follow.
SynthSpec parse_synth_spec(const std::string& text);
SynthSpec load_synth_spec(const std::filesystem::path& path);
std::string format_synth_spec(const SynthSpec& spec);

Sequence generate_synthetic(const SynthSpec& spec, std::uint64_t seed);

// Renders the target texture (size w x h) for a seed into a raster; used by
// the generator and by template-match checks.
ImageRaster render_texture(std::uint64_t seed, int width, int height);

// <dir>/img/NNNN.ppm and <dir>/groundtruth_rect.txt (top-left x,y,w,h).
Sequence load_sequence(const std::filesystem::path& dir);
void save_sequence(const std::filesystem::path& dir, const Sequence& seq);

// Parses ground truth lines (comma, tab or space separated) into center boxes.
std::vector<BoundingBox> parse_ground_truth(const std::string& text);

struct ResultRow {
    int frame = 0;  // 1-based
    BoundingBox box;
    bool quality_flag = false;
};

// Header "frame,cx,cy,w,h,quality_flag"; floats with 3 decimals.
std::string format_results(const std::vector<ResultRow>& rows);
void save_results(const std::filesystem::path& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> load_results(const std::filesystem::path& path);

// Draws a 2-pixel red outline per frame into <dir>/NNNN.ppm, clipped to the frame.
ImageRaster draw_box(const ImageRaster& frame, const BoundingBox& box);
void save_overlays(const std::filesystem::path& dir, const Sequence& seq, const std::vector<BoundingBox>& boxes);

}  // namespace liketrack
