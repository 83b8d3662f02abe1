#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fgl/error.hpp"

namespace fgl {

// 8-bit RGB image, row-major.
struct RasterImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // width*height*3

    RasterImage() = default;
    RasterImage(int w, int h, std::vector<std::uint8_t> d) : width(w), height(h), data(std::move(d)) { validate(); }
    static RasterImage filled(int w, int h, std::uint8_t v) {
        return RasterImage(w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3, v));
    }

    std::uint8_t& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    std::uint8_t at(int x, int y, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }

    void validate() const {
        if (width < 16 || height < 16) throw ContractError("RasterImage: dimensions must be at least 16x16");
        if (data.size() != static_cast<std::size_t>(width) * height * 3)
            throw ContractError("RasterImage: data length != width*height*3");
    }
};

// Per-pixel ground truth, values in {0, 1}.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    BinaryMask() = default;
    BinaryMask(int w, int h, std::vector<std::uint8_t> d) : width(w), height(h), data(std::move(d)) { validate(); }
    static BinaryMask zeros(int w, int h) {
        return BinaryMask(w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h, 0));
    }

    std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

    std::size_t positive_count() const {
        std::size_t n = 0;
        for (auto v : data) n += v;
        return n;
    }

    void validate() const {
        if (width <= 0 || height <= 0) throw ContractError("BinaryMask: empty dimensions");
        if (data.size() != static_cast<std::size_t>(width) * height)
            throw ContractError("BinaryMask: data length != width*height");
        for (auto v : data)
            if (v > 1) throw ContractError("BinaryMask: values must be 0 or 1");
    }
};

// Per-pixel forgery probability in [0, 1]. Out-of-range values are rejected,
// never clamped.
struct ScoreMap {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    ScoreMap() = default;
    ScoreMap(int w, int h, std::vector<float> d) : width(w), height(h), data(std::move(d)) { validate(); }

    float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

    void validate() const {
        if (width <= 0 || height <= 0) throw ContractError("ScoreMap: empty dimensions");
        if (data.size() != static_cast<std::size_t>(width) * height)
            throw ContractError("ScoreMap: data length != width*height");
        for (float v : data)
            if (!(v >= 0.0f && v <= 1.0f)) throw ContractError("ScoreMap: value outside [0,1]");
    }
};

// PNG / JPEG decode; PNG decode round-trips save_image bit-exactly.
RasterImage load_image(const std::string& path);
void save_image(const RasterImage& img, const std::string& path);

// Masks are stored as single-channel {0,255} PNG and thresholded at 128 on load.
BinaryMask load_mask(const std::string& path);
void save_mask(const BinaryMask& mask, const std::string& path);

// Score maps are stored as raw little-endian float32 plus a "<path>.json"
// sidecar carrying {width, height}.
ScoreMap load_score(const std::string& path);
void save_score(const ScoreMap& score, const std::string& path);

BinaryMask threshold_score(const ScoreMap& score, float tau = 0.5f);
ScoreMap mask_to_score(const BinaryMask& mask);
BinaryMask resize_mask_nearest(const BinaryMask& mask, int out_w, int out_h);

}  // namespace fgl
