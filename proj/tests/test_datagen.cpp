#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <unistd.h>

#include "fgl/datagen.hpp"
#include "fgl/explain.hpp"
#include "fgl/rng.hpp"

using namespace fgl;
using namespace fgl::datagen;

namespace {

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() / (tag + "_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

double area_fraction(const BinaryMask& m) {
    return static_cast<double>(m.positive_count()) / (static_cast<double>(m.width) * m.height);
}

bool connected(const BinaryMask& m) {
    std::vector<std::uint8_t> seen(m.data.size(), 0);
    std::size_t first = m.data.size();
    for (std::size_t i = 0; i < m.data.size(); ++i)
        if (m.data[i]) {
            first = i;
            break;
        }
    if (first == m.data.size()) return false;
    std::vector<std::size_t> stack{first};
    seen[first] = 1;
    std::size_t count = 0;
    while (!stack.empty()) {
        const std::size_t p = stack.back();
        stack.pop_back();
        ++count;
        const int x = static_cast<int>(p % m.width), y = static_cast<int>(p / m.width);
        const int nx[4] = {x - 1, x + 1, x, x}, ny[4] = {y, y, y - 1, y + 1};
        for (int i = 0; i < 4; ++i) {
            if (nx[i] < 0 || nx[i] >= m.width || ny[i] < 0 || ny[i] >= m.height) continue;
            const std::size_t q = static_cast<std::size_t>(ny[i]) * m.width + nx[i];
            if (m.data[q] && !seen[q]) {
                seen[q] = 1;
                stack.push_back(q);
            }
        }
    }
    return count == m.positive_count();
}

}  // namespace

TEST_CASE("make_mask lands in the requested band and is deterministic") {
    MaskGranularity g{0.05, 0.10, MaskGranularity::Regime::blob};
    BinaryMask m = make_mask(7, g, 64, 64);
    const auto area = m.positive_count();
    CHECK(area >= 205);  // 0.05 * 4096
    CHECK(area <= 410);  // 0.10 * 4096
    CHECK(connected(m));

    BinaryMask m2 = make_mask(7, g, 64, 64);
    CHECK(m2.data == m.data);
}

TEST_CASE("make_mask area distribution stays in band across seeds and regimes") {
    for (auto regime : {MaskGranularity::Regime::blob, MaskGranularity::Regime::polygon}) {
        MaskGranularity g{0.05, 0.20, regime};
        int inside = 0;
        const int n = 300;
        for (int s = 0; s < n; ++s) {
            BinaryMask m = make_mask(1000 + s, g, 64, 64);
            const double frac = area_fraction(m);
            if (frac >= g.lo && frac <= g.hi) ++inside;
            CHECK(connected(m));
        }
        CHECK(inside >= static_cast<int>(0.99 * n));
    }
}

TEST_CASE("splice copies donor inside the mask and source outside") {
    RasterImage src = texture_image(1, 64, 64);
    RasterImage donor = texture_image(2, 64, 64);
    MaskGranularity g{0.05, 0.20, MaskGranularity::Regime::blob};
    BinaryMask mask = make_mask(3, g, 64, 64);

    auto [forged, gt] = splice(src, donor, mask);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            for (int c = 0; c < 3; ++c)
                CHECK(forged.at(x, y, c) == (mask.at(x, y) ? donor.at(x, y, c) : src.at(x, y, c)));

    auto [same, gt0] = splice(src, donor, BinaryMask::zeros(64, 64));
    CHECK(same.data == src.data);

    BinaryMask all_ones(64, 64, std::vector<std::uint8_t>(64 * 64, 1));
    auto [swapped, gt1] = splice(src, donor, all_ones);
    CHECK(swapped.data == donor.data);

    RasterImage small = texture_image(4, 32, 32);
    CHECK_THROWS_AS(splice(src, small, mask), ShapeError);
}

TEST_CASE("copy_move translates the region byte-exactly and masks the destination") {
    RasterImage src = texture_image(11, 64, 64);
    BinaryMask mask = BinaryMask::zeros(64, 64);
    for (int y = 8; y < 20; ++y)
        for (int x = 8; x < 20; ++x) mask.at(x, y) = 1;

    auto [forged, dest] = copy_move(src, mask, 16, 0);
    for (int y = 8; y < 20; ++y)
        for (int x = 8; x < 20; ++x) {
            CHECK(dest.at(x + 16, y) == 1);
            for (int c = 0; c < 3; ++c) CHECK(forged.at(x + 16, y, c) == src.at(x, y, c));
        }
    // pixels differ from the source only inside the destination mask
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            if (!dest.at(x, y))
                for (int c = 0; c < 3; ++c) CHECK(forged.at(x, y, c) == src.at(x, y, c));

    CHECK_THROWS_AS(copy_move(src, mask, 0, 0), GeometryError);
    CHECK_THROWS_AS(copy_move(src, mask, 60, 0), GeometryError);
}

TEST_CASE("removal_fill keeps a constant image fixed and never touches the outside") {
    RasterImage flat = RasterImage::filled(64, 64, 128);
    MaskGranularity g{0.02, 0.10, MaskGranularity::Regime::polygon};
    BinaryMask mask = make_mask(5, g, 64, 64);

    auto [filled, gt] = removal_fill(flat, mask);
    CHECK(filled.data == flat.data);  // diffusion fixed point

    RasterImage tex = texture_image(6, 64, 64);
    auto [out, gt2] = removal_fill(tex, mask);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            if (!mask.at(x, y))
                for (int c = 0; c < 3; ++c) CHECK(out.at(x, y, c) == tex.at(x, y, c));
}

TEST_CASE("removal_fill reproduces a linear gradient (discrete harmonic oracle)") {
    // v(x, y) = 20 + x + y is integer valued and harmonic, so the fill must
    // converge to it inside the hole.
    RasterImage grad = RasterImage::filled(64, 64, 0);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            for (int c = 0; c < 3; ++c) grad.at(x, y, c) = static_cast<std::uint8_t>(20 + x + y);

    BinaryMask mask = BinaryMask::zeros(64, 64);
    for (int y = 26; y < 38; ++y)
        for (int x = 26; x < 38; ++x) mask.at(x, y) = 1;

    auto [out, gt] = removal_fill(grad, mask);
    int max_err = 0;
    for (int y = 26; y < 38; ++y)
        for (int x = 26; x < 38; ++x)
            for (int c = 0; c < 3; ++c)
                max_err = std::max(max_err, std::abs(static_cast<int>(out.at(x, y, c)) - (20 + x + y)));
    CHECK(max_err <= 2);
}

TEST_CASE("removal_fill rejects oversized masks and full-border masks") {
    RasterImage img = texture_image(9, 64, 64);
    BinaryMask half(64, 64, std::vector<std::uint8_t>(64 * 64, 0));
    for (int i = 0; i < 64 * 32; ++i) half.data[i] = 1;  // 50%
    CHECK_THROWS_AS(removal_fill(img, half), ContractError);

    BinaryMask ring = BinaryMask::zeros(64, 64);
    for (int i = 0; i < 64; ++i) {
        ring.at(i, 0) = 1;
        ring.at(i, 63) = 1;
        ring.at(0, i) = 1;
        ring.at(63, i) = 1;
    }
    CHECK_THROWS_AS(removal_fill(img, ring), GenerationError);
}

TEST_CASE("resize distortion uses round-half-up output dimensions") {
    RasterImage img = texture_image(21, 64, 64);
    RasterImage small = apply_distortion(img, DistortionSpec::resize(0.78), 0);
    CHECK(small.width == 50);
    CHECK(small.height == 50);
    RasterImage quarter = apply_distortion(img, DistortionSpec::resize(0.25), 0);
    CHECK(quarter.width == 16);
}

TEST_CASE("zero-sigma noise is the identity") {
    RasterImage img = texture_image(22, 64, 64);
    RasterImage same = apply_distortion(img, DistortionSpec::noise(0.0), 99);
    CHECK(same.data == img.data);
    RasterImage noisy = apply_distortion(img, DistortionSpec::noise(15.0), 99);
    CHECK(noisy.data != img.data);
    RasterImage noisy2 = apply_distortion(img, DistortionSpec::noise(15.0), 99);
    CHECK(noisy2.data == noisy.data);  // seeded
}

TEST_CASE("jpeg quality ordering by PSNR") {
    RasterImage img = texture_image(23, 64, 64);
    auto psnr = [&](const RasterImage& other) {
        double mse = 0.0;
        for (std::size_t i = 0; i < img.data.size(); ++i) {
            const double d = static_cast<double>(img.data[i]) - other.data[i];
            mse += d * d;
        }
        mse /= static_cast<double>(img.data.size());
        return 10.0 * std::log10(255.0 * 255.0 / std::max(mse, 1e-12));
    };
    RasterImage q100 = apply_distortion(img, DistortionSpec::jpeg(100), 0);
    RasterImage q50 = apply_distortion(img, DistortionSpec::jpeg(50), 0);
    CHECK(psnr(q100) >= psnr(q50));
}

TEST_CASE("stronger blur does not increase total variation") {
    RasterImage img = texture_image(24, 64, 64);
    auto tv = [](const RasterImage& im) {
        double t = 0.0;
        for (int y = 0; y < im.height; ++y)
            for (int x = 0; x + 1 < im.width; ++x)
                for (int c = 0; c < 3; ++c)
                    t += std::abs(static_cast<int>(im.at(x + 1, y, c)) - im.at(x, y, c));
        return t;
    };
    RasterImage b3 = apply_distortion(img, DistortionSpec::blur(3), 0);
    RasterImage b15 = apply_distortion(img, DistortionSpec::blur(15), 0);
    CHECK(tv(b15) <= tv(b3));
}

TEST_CASE("synthesized samples differ from the source only inside the mask") {
    for (auto type : {ForgeryType::splicing, ForgeryType::copy_move, ForgeryType::removal}) {
        for (std::uint64_t seed = 50; seed < 60; ++seed) {
            SynthesizedSample s = synthesize_sample(seed, type, 64);
            CHECK(s.mask.positive_count() > 0);
            bool outside_clean = true;
            for (int y = 0; y < 64; ++y)
                for (int x = 0; x < 64; ++x)
                    if (!s.mask.at(x, y))
                        for (int c = 0; c < 3; ++c)
                            outside_clean = outside_clean && s.forged.at(x, y, c) == s.source.at(x, y, c);
            CAPTURE(static_cast<int>(type));
            CAPTURE(seed);
            CHECK(outside_clean);
        }
    }
}

TEST_CASE("build_dataset produces the requested mix and validates clean") {
    TempDir dir("fgl_build");
    SynthesisRequest req;
    req.n_forged = 6;
    req.n_authentic = 6;
    req.seed = 42;
    DatasetManifest m = build_dataset(req, dir.path.string());
    REQUIRE(m.entries.size() == 12);

    int counts[3] = {0, 0, 0};
    for (const auto& e : m.entries) {
        if (e.forgery_type == ForgeryType::splicing) ++counts[0];
        if (e.forgery_type == ForgeryType::copy_move) ++counts[1];
        if (e.forgery_type == ForgeryType::removal) ++counts[2];
    }
    CHECK(counts[0] == 2);
    CHECK(counts[1] == 2);
    CHECK(counts[2] == 2);
    CHECK(validate_manifest(m, dir.path.string()).empty());
}

TEST_CASE("rebuilding from the same seed is byte-identical") {
    TempDir a("fgl_rebuild_a"), b("fgl_rebuild_b");
    SynthesisRequest req;
    req.n_forged = 4;
    req.n_authentic = 2;
    req.seed = 7;
    req.distortion_policy = {DistortionSpec::noise(3.0), DistortionSpec::jpeg(80)};
    DatasetManifest ma = build_dataset(req, a.path.string());
    DatasetManifest mb = build_dataset(req, b.path.string(), 3);
    REQUIRE(ma.entries.size() == mb.entries.size());
    for (std::size_t i = 0; i < ma.entries.size(); ++i) {
        CHECK(ma.entries[i].seed == mb.entries[i].seed);
        RasterImage ia = load_image(resolve_path(a.path.string(), ma.entries[i].image_path));
        RasterImage ib = load_image(resolve_path(b.path.string(), mb.entries[i].image_path));
        CHECK(ia.data == ib.data);
        BinaryMask ka = load_mask(resolve_path(a.path.string(), ma.entries[i].mask_path));
        BinaryMask kb = load_mask(resolve_path(b.path.string(), mb.entries[i].mask_path));
        CHECK(ka.data == kb.data);
    }
}

TEST_CASE("empty request is a config error") {
    SynthesisRequest req;
    req.n_forged = 0;
    req.n_authentic = 0;
    CHECK_THROWS_AS(build_dataset(req, "/tmp/unused"), ConfigError);
}

TEST_CASE("explanation rendering") {
    ScoreMap full(64, 64, std::vector<float>(64 * 64, 1.0f));
    const std::string text = render_explanation(Label::forged, ForgeryType::splicing, full);
    CHECK(text.find("100%") != std::string::npos);
    CHECK(text.find("[0, 0, 63, 63]") != std::string::npos);
    CHECK(text.find("splicing") != std::string::npos);
    CHECK(render_explanation(Label::forged, ForgeryType::splicing, full) == text);

    CHECK(render_explanation(Label::authentic, ForgeryType::none, ScoreMap()) ==
          "No, there is no forgery information in this image.");

    ScoreMap empty(8, 8, std::vector<float>(64, 0.0f));
    CHECK_THROWS_AS(render_explanation(Label::forged, ForgeryType::removal, empty), ContractError);
}
