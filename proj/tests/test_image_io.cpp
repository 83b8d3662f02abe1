#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <opencv2/imgcodecs.hpp>

#include "fgl/image.hpp"
#include "fgl/rng.hpp"

using namespace fgl;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("all-black PNG decodes to all-zero bytes") {
    const std::string path = temp_path("fgl_black.png");
    save_image(RasterImage::filled(64, 64, 0), path);
    RasterImage img = load_image(path);
    CHECK(img.width == 64);
    CHECK(img.height == 64);
    for (auto v : img.data) CHECK(v == 0);
    std::remove(path.c_str());
}

TEST_CASE("PNG save then load returns identical bytes") {
    Rng rng(7);
    RasterImage img = RasterImage::filled(32, 24, 0);
    for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    const std::string path = temp_path("fgl_roundtrip.png");
    save_image(img, path);
    RasterImage back = load_image(path);
    CHECK(back.width == img.width);
    CHECK(back.height == img.height);
    CHECK(back.data == img.data);
    std::remove(path.c_str());
}

TEST_CASE("truncated file raises a format error") {
    const std::string path = temp_path("fgl_truncated.png");
    std::ofstream(path, std::ios::binary) << "\x89PNG\r\n";
    CHECK_THROWS_AS(load_image(path), FormatError);
    std::remove(path.c_str());
}

TEST_CASE("missing file raises an I/O error") {
    CHECK_THROWS_AS(load_image(temp_path("fgl_does_not_exist_1234.png")), IoError);
}

TEST_CASE("mask PNG stores 0/255 and round-trips") {
    BinaryMask ones(4, 4, std::vector<std::uint8_t>(16, 1));
    const std::string path = temp_path("fgl_mask_ones.png");
    save_mask(ones, path);
    {
        cv::Mat raw = cv::imread(path, cv::IMREAD_GRAYSCALE);
        REQUIRE(raw.total() == 16);
        for (int y = 0; y < raw.rows; ++y)
            for (int x = 0; x < raw.cols; ++x) CHECK(raw.at<std::uint8_t>(y, x) == 255);
    }
    CHECK(load_mask(path).data == ones.data);

    BinaryMask zeros = BinaryMask::zeros(4, 4);
    save_mask(zeros, path);
    CHECK(load_mask(path).positive_count() == 0);

    BinaryMask checker(2, 2, {1, 0, 0, 1});
    save_mask(checker, path);
    CHECK(load_mask(path).data == checker.data);
    std::remove(path.c_str());
}

TEST_CASE("mask values other than 0/1 are rejected") {
    CHECK_THROWS_AS(BinaryMask(2, 2, {0, 1, 2, 0}), ContractError);
}

TEST_CASE("raster image minimum size is enforced") {
    CHECK_THROWS_AS(RasterImage::filled(8, 8, 0), ContractError);
}

TEST_CASE("score map round-trips through .f32 plus sidecar") {
    Rng rng(11);
    std::vector<float> vals(12 * 5);
    for (auto& v : vals) v = static_cast<float>(rng.uniform());
    ScoreMap score(12, 5, vals);
    const std::string path = temp_path("fgl_score.f32");
    save_score(score, path);
    ScoreMap back = load_score(path);
    CHECK(back.width == 12);
    CHECK(back.height == 5);
    CHECK(back.data == vals);
    std::remove(path.c_str());
    std::remove((path + ".json").c_str());
}

TEST_CASE("score map rejects out-of-range values instead of clamping") {
    CHECK_THROWS_AS(ScoreMap(2, 1, {0.5f, 1.5f}), ContractError);
    CHECK_THROWS_AS(ScoreMap(2, 1, {-0.1f, 0.5f}), ContractError);
    CHECK_THROWS_AS(ScoreMap(2, 1, {std::nanf(""), 0.5f}), ContractError);
}

TEST_CASE("threshold and mask/score conversions") {
    ScoreMap s(2, 2, {0.1f, 0.5f, 0.9f, 0.49f});
    BinaryMask m = threshold_score(s);
    CHECK(m.data == std::vector<std::uint8_t>{0, 1, 1, 0});
    ScoreMap s2 = mask_to_score(m);
    CHECK(s2.data == std::vector<float>{0.0f, 1.0f, 1.0f, 0.0f});
}
