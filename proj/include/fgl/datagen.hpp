#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fgl/image.hpp"
#include "fgl/manifest.hpp"

namespace fgl::datagen {

// Target area band and shape family for generated ground-truth masks.
struct MaskGranularity {
    double lo = 0.05;
    double hi = 0.25;
    enum class Regime { blob, polygon } regime = Regime::blob;

    void validate() const {
        if (!(lo > 0.0 && lo < hi && hi <= 0.5))
            throw ConfigError("mask granularity band must satisfy 0 < lo < hi <= 0.5");
    }
};

// Single connected region whose area fraction lands inside the band;
// deterministic given the seed. Blob masks threshold smoothed noise, polygon
// masks rasterize a random star-shaped polygon. Fails after 100 attempts.
BinaryMask make_mask(std::uint64_t seed, const MaskGranularity& granularity, int width, int height);

// Donor pixels inside the mask, source pixels outside, both byte-exact.
std::pair<RasterImage, BinaryMask> splice(const RasterImage& src, const RasterImage& donor,
                                          const BinaryMask& mask);

// Copies the masked region by (dx, dy); the returned mask marks the
// destination region. Zero shift and out-of-bounds shifts are rejected.
std::pair<RasterImage, BinaryMask> copy_move(const RasterImage& src, const BinaryMask& mask, int dx, int dy);

// Replaces the masked region with an iterative Laplacian diffusion fill from
// its boundary (200 sweeps). Mask area fraction must be <= 0.25 and the mask
// must not touch all four image borders.
std::pair<RasterImage, BinaryMask> removal_fill(const RasterImage& src, const BinaryMask& mask);

RasterImage apply_distortion(const RasterImage& img, const DistortionSpec& spec, std::uint64_t rng_seed);

// Multi-frequency procedural texture; the default self-contained source pool.
RasterImage texture_image(std::uint64_t seed, int width, int height);

struct SynthesizedSample {
    RasterImage source;
    RasterImage forged;  // pre-distortion
    BinaryMask mask;
    ForgeryType type = ForgeryType::splicing;
};

// Pure function of (seed, type, size); build_dataset derives everything from
// it so any manifest entry can be regenerated byte-exactly.
SynthesizedSample synthesize_sample(std::uint64_t seed, ForgeryType type, int image_size);

struct SynthesisRequest {
    int n_forged = 6;
    int n_authentic = 6;
    std::vector<ForgeryType> type_mix = {ForgeryType::splicing, ForgeryType::copy_move, ForgeryType::removal};
    std::uint64_t seed = 0;
    int image_size = 64;
    // When nonempty, each forged entry applies one spec picked uniformly from
    // the policy (seeded per entry).
    std::vector<DistortionSpec> distortion_policy;
};

// Writes images/, masks/ and manifest.json under out_dir and returns the
// manifest. Per-entry work is pure given the entry seed, so jobs > 1 only
// changes wall time.
DatasetManifest build_dataset(const SynthesisRequest& req, const std::string& out_dir, int jobs = 1);

}  // namespace fgl::datagen
