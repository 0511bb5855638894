#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "liketrack/sequences.hpp"

namespace liketrack {

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
    std::string tok;
    int c = in.get();
    for (;;) {
        while (c != EOF && std::isspace(c)) {
            c = in.get();
        }
        if (c == '#') {
            while (c != EOF && c != '\n') {
                c = in.get();
            }
            continue;
        }
        break;
    }
    while (c != EOF && !std::isspace(c)) {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    }
    // The single whitespace byte after the last header token has been consumed.
    return tok;
}

int header_int(std::istream& in, const std::filesystem::path& path, const char* what) {
    const std::string tok = next_token(in);
    try {
        std::size_t used = 0;
        const int v = std::stoi(tok, &used);
        if (used != tok.size() || v <= 0) {
            throw std::invalid_argument(tok);
        }
        return v;
    } catch (const std::exception&) {
        throw DataError(path.string() + ": bad " + what + " '" + tok + "' in header");
    }
}

}  // namespace

ImageRaster read_pnm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open image " + path.string());
    }
    const std::string magic = next_token(in);
    if (magic != "P5" && magic != "P6") {
        throw DataError(path.string() + ": unsupported image format (need binary P5/P6)");
    }
    const int channels = magic == "P6" ? 3 : 1;
    const int width = header_int(in, path, "width");
    const int height = header_int(in, path, "height");
    const int maxval = header_int(in, path, "maxval");
    if (maxval > 65535) {
        throw DataError(path.string() + ": maxval above 65535");
    }
    const int bytes_per_sample = maxval > 255 ? 2 : 1;
    const std::size_t samples = static_cast<std::size_t>(width) * height * channels;
    std::vector<unsigned char> raw(samples * bytes_per_sample);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
        throw DataError(path.string() + ": truncated pixel data");
    }
    std::vector<float> values(samples);
    const auto scale = static_cast<float>(maxval);
    for (std::size_t i = 0; i < samples; ++i) {
        const unsigned v = bytes_per_sample == 1 ? raw[i] : (static_cast<unsigned>(raw[2 * i]) << 8) | raw[2 * i + 1];
        values[i] = std::min(static_cast<float>(v) / scale, 1.0F);
    }
    if (channels == 3) {
        bool gray = true;
        for (std::size_t i = 0; i < samples && gray; i += 3) {
            gray = values[i] == values[i + 1] && values[i] == values[i + 2];
        }
        if (gray) {
            std::vector<float> one(samples / 3);
            for (std::size_t i = 0; i < one.size(); ++i) {
                one[i] = values[3 * i];
            }
            return ImageRaster(width, height, 1, std::move(one));
        }
    }
    return ImageRaster(width, height, channels, std::move(values));
}

namespace {

void write_raw(const std::filesystem::path& path, const ImageRaster& image, bool force_rgb) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write image " + path.string());
    }
    const bool rgb = force_rgb || image.channels() == 3;
    out << (rgb ? "P6" : "P5") << '\n' << image.width() << ' ' << image.height() << "\n255\n";
    const int out_channels = rgb ? 3 : 1;
    std::vector<unsigned char> buf(static_cast<std::size_t>(image.width()) * image.height() * out_channels);
    std::size_t k = 0;
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            for (int c = 0; c < out_channels; ++c) {
                const float v = image.at(x, y, image.channels() == 3 ? c : 0);
                buf[k++] = static_cast<unsigned char>(std::lround(v * 255.0F));
            }
        }
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) {
        throw DataError("failed writing image " + path.string());
    }
}

}  // namespace

void write_pnm(const std::filesystem::path& path, const ImageRaster& image) { write_raw(path, image, false); }

void write_ppm_rgb(const std::filesystem::path& path, const ImageRaster& image) { write_raw(path, image, true); }

}  // namespace liketrack
