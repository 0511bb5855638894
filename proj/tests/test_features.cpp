#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "liketrack/features.hpp"

namespace liketrack {
namespace {

ImageRaster random_image(int w, int h, std::mt19937_64& rng) {
    std::uniform_real_distribution<float> u(0.0F, 1.0F);
    std::vector<float> v(static_cast<std::size_t>(w) * h);
    for (auto& x : v) {
        x = u(rng);
    }
    return ImageRaster(w, h, 1, std::move(v));
}

// Smooth pattern so gradients are well defined everywhere.
ImageRaster smooth_image(int w, int h, double phase_x) {
    std::vector<float> v(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double s = 0.5 + 0.2 * std::sin(0.21 * (x + phase_x) + 0.05 * y) +
                             0.2 * std::cos(0.13 * y - 0.07 * (x + phase_x));
            v[static_cast<std::size_t>(y) * w + x] = static_cast<float>(s);
        }
    }
    return ImageRaster(w, h, 1, std::move(v));
}

ExtractorConfig gradient_config(int feature_size, int cell) {
    ExtractorConfig cfg;
    cfg.kind = FeatureKind::Gradient;
    cfg.feature_size = feature_size;
    cfg.gradient_cell_size = cell;
    return cfg;
}

TEST(ExtractPatch, ExactCropInsideFrame) {
    std::mt19937_64 rng(1);
    const ImageRaster frame = random_image(40, 30, rng);
    // 20x20 window from (10, 5) resampled to 20x20: pixel centers line up.
    const ImageRaster patch = extract_patch(frame, {20.0, 15.0, 10.0, 10.0}, 2.0, 20, 20);
    ASSERT_EQ(patch.width(), 20);
    for (int y = 0; y < 20; ++y) {
        for (int x = 0; x < 20; ++x) {
            EXPECT_FLOAT_EQ(patch.at(x, y), frame.at(10 + x, 5 + y));
        }
    }
}

TEST(ExtractPatch, EdgeReplicationOutsideFrame) {
    std::mt19937_64 rng(2);
    const ImageRaster frame = random_image(16, 16, rng);
    const ImageRaster patch = extract_patch(frame, {0.0, 8.0, 8.0, 8.0}, 2.0, 16, 16);
    for (float v : patch.values()) {
        EXPECT_TRUE(std::isfinite(v));
    }
    // The left half of the window lies at x < 0 and replicates column 0.
    for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 8; ++x) {
            EXPECT_FLOAT_EQ(patch.at(x, y), frame.at(0, y));
        }
    }
}

TEST(ExtractPatch, ConstantImageGivesConstantPatch) {
    const ImageRaster frame(50, 40, 1, 0.37F);
    const ImageRaster patch = extract_patch(frame, {45.0, 3.0, 17.5, 9.25}, 1.8, 33, 21);
    for (float v : patch.values()) {
        EXPECT_FLOAT_EQ(v, 0.37F);
    }
}

TEST(ExtractPatch, RejectsDegenerateBox) {
    const ImageRaster frame(8, 8, 1, 0.5F);
    EXPECT_THROW(extract_patch(frame, {NAN, 1.0, 2.0, 2.0}, 2.0, 4, 4), std::invalid_argument);
    EXPECT_THROW(extract_patch(frame, {1.0, 1.0, 0.0, 2.0}, 2.0, 4, 4), std::invalid_argument);
}

TEST(ExtractFeatures, ConstantPatchHasZeroGradients) {
    const auto cfg = gradient_config(8, 4);
    const FeaturePyramid p = extract_features(ImageRaster(32, 32, 1, 0.6F), cfg);
    ASSERT_EQ(p.layers.size(), 1U);
    EXPECT_EQ(p.layers[0].channels, 9);
    for (double v : p.layers[0].values) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(ExtractFeatures, VerticalEdgeFillsHorizontalGradientBin) {
    // 8x8 toy: left half dark, right half bright. Brute force: central
    // differences give gx > 0, gy = 0 on the two edge columns, i.e. angle 0,
    // which is the center of bin 0.
    std::vector<float> v(64);
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
            v[y * 8 + x] = x < 4 ? 0.1F : 0.9F;
        }
    }
    const auto cfg = gradient_config(8, 1);
    const FeaturePyramid p = extract_features(ImageRaster(8, 8, 1, std::move(v)), cfg);
    const FeatureLayer& layer = p.layers[0];
    double bin0 = 0.0;
    double rest = 0.0;
    for (int o = 0; o < layer.channels; ++o) {
        for (double x : layer.channel(o)) {
            (o == 0 ? bin0 : rest) += x;
        }
    }
    // Columns 3 and 4 each carry |gx| = 0.4 on all 8 rows.
    EXPECT_NEAR(bin0, 2 * 8 * 0.4, 1e-4);
    EXPECT_NEAR(rest, 0.0, 1e-4);
    for (int y = 0; y < 8; ++y) {
        EXPECT_NEAR(layer.channel(0)[y * 8 + 3], 0.4, 1e-4);
        EXPECT_NEAR(layer.channel(0)[y * 8 + 4], 0.4, 1e-4);
    }
}

TEST(ExtractFeatures, OrientationMatchesBruteForceAngle) {
    // Diagonal ramp: gradient direction 45 degrees sits between bins 2 and 3 of 9.
    std::vector<float> v(256);
    for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 16; ++x) {
            v[y * 16 + x] = static_cast<float>(0.02 * (x + y));
        }
    }
    const auto cfg = gradient_config(16, 1);
    const FeaturePyramid p = extract_features(ImageRaster(16, 16, 1, std::move(v)), cfg);
    const FeatureLayer& layer = p.layers[0];
    const double pos = (std::numbers::pi / 4) / (std::numbers::pi / 9);  // 2.25 bins
    const double mag = std::hypot(0.02F, 0.02F);
    const std::size_t mid = 8 * 16 + 8;
    EXPECT_NEAR(layer.channel(2)[mid], (3.0 - pos) * mag, 1e-4);
    EXPECT_NEAR(layer.channel(3)[mid], (pos - 2.0) * mag, 1e-4);
}

TEST(ExtractFeatures, Deterministic) {
    std::mt19937_64 rng(3);
    const ImageRaster patch = random_image(96, 96, rng);
    ExtractorConfig cfg;
    cfg.feature_size = 24;
    const FeaturePyramid a = extract_features(patch, cfg);
    const FeaturePyramid b = extract_features(patch, cfg);
    ASSERT_EQ(a.layers.size(), 2U);
    for (std::size_t l = 0; l < 2; ++l) {
        EXPECT_EQ(a.layers[l].values, b.layers[l].values);
    }
    EXPECT_EQ(a.layers[0].weight, 0.5);
    EXPECT_EQ(a.layers[1].weight, 1.0);
    EXPECT_EQ(a.layers[1].channels, 9);
}

TEST(ExtractFeatures, GrayscaleIsWindowMeanCentered) {
    std::mt19937_64 rng(4);
    ExtractorConfig cfg;
    cfg.kind = FeatureKind::Grayscale;
    cfg.feature_size = 20;
    FeaturePyramid p = extract_features(random_image(20, 20, rng), cfg);
    p = apply_cosine_window(std::move(p));
    double sum = 0.0;
    for (double v : p.layers[0].values) {
        sum += v;
    }
    EXPECT_NEAR(sum, 0.0, 1e-12);
}

TEST(ExtractFeatures, TranslationCovariantAtCellGranularity) {
    const int cell = 4;
    const int n = 12;
    const auto cfg = gradient_config(n, cell);
    const int side = n * cell;
    const FeaturePyramid a = extract_features(smooth_image(side, side, 0.0), cfg);
    // Content moved right by one cell: pixel x of b shows pixel x - cell of a.
    const FeaturePyramid b = extract_features(smooth_image(side, side, -cell), cfg);
    const FeatureLayer& la = a.layers[0];
    const FeatureLayer& lb = b.layers[0];
    for (int o = 0; o < la.channels; ++o) {
        for (int r = 1; r < n - 1; ++r) {
            for (int c = 1; c < n - 2; ++c) {
                EXPECT_NEAR(lb.channel(o)[r * n + c + 1], la.channel(o)[r * n + c], 1e-9);
            }
        }
    }
}

TEST(ExtractFeatures, RejectsPatchSmallerThanCell) {
    EXPECT_THROW(extract_features(ImageRaster(3, 3, 1, 0.5F), gradient_config(8, 4)), std::invalid_argument);
}

TEST(ExtractFeatures, FiniteOnExtremeInputs) {
    std::vector<float> v(64 * 64);
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = (i / 3) % 2 == 0 ? 0.0F : 1.0F;
    }
    ExtractorConfig cfg;
    cfg.feature_size = 16;
    for (bool normalize : {false, true}) {
        cfg.normalize = normalize;
        for (const auto& layer : extract_features(ImageRaster(64, 64, 1, v), cfg).layers) {
            for (double x : layer.values) {
                EXPECT_TRUE(std::isfinite(x));
            }
        }
        for (const auto& layer : extract_features(ImageRaster(64, 64, 1, 0.0F), cfg).layers) {
            for (double x : layer.values) {
                EXPECT_EQ(x, 0.0);
            }
        }
    }
}

TEST(FeaturesAt, MatchesPatchThenExtract) {
    std::mt19937_64 rng(9);
    const ImageRaster frame = random_image(120, 90, rng);
    ExtractorConfig cfg;
    cfg.feature_size = 16;
    const BoundingBox box{47.3, 52.9, 21.0, 17.5};
    const FeaturePyramid fast = features_at(frame, box, cfg);
    FeaturePyramid slow = apply_cosine_window(extract_features(extract_patch(frame, box, cfg), cfg));
    ASSERT_EQ(fast.layers.size(), slow.layers.size());
    for (std::size_t l = 0; l < fast.layers.size(); ++l) {
        for (std::size_t i = 0; i < fast.layers[l].values.size(); ++i) {
            EXPECT_NEAR(fast.layers[l].values[i], slow.layers[l].values[i], 1e-6);
        }
    }
    EXPECT_DOUBLE_EQ(fast.patch_box.w, 21.0 * cfg.padding);
    EXPECT_DOUBLE_EQ(fast.patch_box.cx, 47.3);
}

TEST(HannWindow, ClosedForm) {
    const auto w = hann_window(4);
    ASSERT_EQ(w.size(), 4U);
    for (int i = 0; i < 4; ++i) {
        EXPECT_NEAR(w[i], 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / 3.0)), 1e-15);
    }
    EXPECT_EQ(hann_window(1), std::vector<double>{1.0});
}

TEST(CosineWindow, MatchesSeparableHannProduct) {
    FeaturePyramid p;
    FeatureLayer layer(0, 2, 4, 4, 1.0);
    std::fill(layer.values.begin(), layer.values.end(), 2.0);
    p.layers.push_back(layer);
    const FeaturePyramid w = apply_cosine_window(p);
    for (int o = 0; o < 2; ++o) {
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) {
                const double hr = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * r / 3.0));
                const double hc = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * c / 3.0));
                EXPECT_NEAR(w.layers[0].channel(o)[r * 4 + c], 2.0 * hr * hc, 1e-15);
            }
        }
    }
}

TEST(CosineWindow, ZeroBorderAndNoGrowth) {
    std::mt19937_64 rng(12);
    const FeaturePyramid p = testing::random_pyramid(2, 3, 10, 14, rng);
    const FeaturePyramid w = apply_cosine_window(p);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        const auto& a = p.layers[l];
        const auto& b = w.layers[l];
        for (int o = 0; o < a.channels; ++o) {
            double max_a = 0.0;
            double max_b = 0.0;
            for (int r = 0; r < a.rows; ++r) {
                for (int c = 0; c < a.cols; ++c) {
                    const double v = b.channel(o)[r * a.cols + c];
                    if (r == 0 || c == 0 || r == a.rows - 1 || c == a.cols - 1) {
                        EXPECT_EQ(v, 0.0);
                    }
                    max_a = std::max(max_a, std::abs(a.channel(o)[r * a.cols + c]));
                    max_b = std::max(max_b, std::abs(v));
                }
            }
            EXPECT_LE(max_b, max_a);
        }
    }
}

TEST(CosineWindow, SingleCellUnchanged) {
    FeaturePyramid p;
    FeatureLayer layer(0, 1, 1, 1, 1.0);
    layer.values[0] = 4.25;
    p.layers.push_back(layer);
    EXPECT_EQ(apply_cosine_window(p).layers[0].values[0], 4.25);
}

TEST(ExternalFeatures, ZeroTensor) {
    testing::TempDir dir("fpyr");
    FeaturePyramid p;
    p.layers.emplace_back(0, 1, 4, 4, 1.0);
    const std::pair<std::uint32_t, FeaturePyramid> frames[] = {{0, p}};
    save_external_features(dir / "zero.fpyr", frames);
    const FeaturePyramid back = load_external_features(dir / "zero.fpyr", 0);
    ASSERT_EQ(back.layers.size(), 1U);
    EXPECT_EQ(back.layers[0].channels, 1);
    EXPECT_EQ(back.layers[0].rows, 4);
    for (double v : back.layers[0].values) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(ExternalFeatures, RoundTripIsBitExact) {
    testing::TempDir dir("fpyr");
    std::mt19937_64 rng(13);
    std::vector<std::pair<std::uint32_t, FeaturePyramid>> frames;
    for (std::uint32_t f = 0; f < 3; ++f) {
        FeaturePyramid p = testing::random_pyramid(2, 3, 6, 7, rng);
        for (auto& layer : p.layers) {
            for (double& v : layer.values) {
                v = static_cast<float>(v);  // the format stores f32
            }
        }
        frames.emplace_back(f + 10, std::move(p));
    }
    save_external_features(dir / "r.fpyr", frames);
    for (const auto& [index, p] : frames) {
        const FeaturePyramid back = load_external_features(dir / "r.fpyr", index);
        ASSERT_EQ(back.layers.size(), p.layers.size());
        for (std::size_t l = 0; l < p.layers.size(); ++l) {
            EXPECT_EQ(back.layers[l].values, p.layers[l].values);
            EXPECT_EQ(back.layers[l].weight, static_cast<float>(p.layers[l].weight));
        }
    }
}

FeatureFileError::Kind load_error(const std::filesystem::path& path, std::uint32_t frame) {
    try {
        load_external_features(path, frame);
    } catch (const FeatureFileError& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no FeatureFileError";
    return FeatureFileError::Kind::InvalidValue;
}

void write_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

TEST(ExternalFeatures, DistinctErrors) {
    using Kind = FeatureFileError::Kind;
    testing::TempDir dir("fpyr");
    write_bytes(dir / "magic.fpyr", {'N', 'O', 'P', 'E', 1});
    EXPECT_EQ(load_error(dir / "magic.fpyr", 0), Kind::MalformedHeader);

    // Header declares 2 layers of 1x2x2 but only one layer of payload follows.
    std::vector<unsigned char> two = {'F', 'P', 'Y', 'R', 1, 0, 0, 0, 0, 2, 0};
    for (int l = 0; l < 2; ++l) {
        two.insert(two.end(), {1, 0, 2, 0, 2, 0, 0, 0, 0x80, 0x3F});
    }
    two.insert(two.end(), 16, 0);
    write_bytes(dir / "short.fpyr", two);
    EXPECT_EQ(load_error(dir / "short.fpyr", 0), Kind::Truncated);

    std::vector<unsigned char> ragged = {'F', 'P', 'Y', 'R', 1, 0, 0, 0, 0, 2, 0};
    ragged.insert(ragged.end(), {1, 0, 2, 0, 2, 0, 0, 0, 0x80, 0x3F});
    ragged.insert(ragged.end(), {1, 0, 3, 0, 2, 0, 0, 0, 0x80, 0x3F});
    ragged.insert(ragged.end(), 40, 0);
    write_bytes(dir / "ragged.fpyr", ragged);
    EXPECT_EQ(load_error(dir / "ragged.fpyr", 0), Kind::DimensionMismatch);

    FeaturePyramid p;
    p.layers.emplace_back(0, 1, 2, 2, 1.0);
    const std::pair<std::uint32_t, FeaturePyramid> frames[] = {{4, p}};
    save_external_features(dir / "one.fpyr", frames);
    EXPECT_EQ(load_error(dir / "one.fpyr", 5), Kind::FrameNotFound);

    EXPECT_THROW(load_external_features(dir / "missing.fpyr", 0), DataError);
}

TEST(ExtractorConfig, Validation) {
    ExtractorConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.padding = 1.0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.orientation_bins = 1;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.layer_weights = {0.0, 0.0};
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace liketrack
