#include "fgl/image.hpp"

#include <fstream>

#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace fgl {

RasterImage load_image(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open image: " + path);
    probe.close();

    cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
    if (bgr.empty()) throw FormatError("cannot decode image (PNG/JPEG expected): " + path);
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    std::vector<std::uint8_t> data(rgb.total() * 3);
    for (int y = 0; y < rgb.rows; ++y)
        std::copy_n(rgb.ptr<std::uint8_t>(y), static_cast<std::size_t>(rgb.cols) * 3,
                    data.data() + static_cast<std::size_t>(y) * rgb.cols * 3);
    return RasterImage(rgb.cols, rgb.rows, std::move(data));
}

void save_image(const RasterImage& img, const std::string& path) {
    img.validate();
    cv::Mat rgb(img.height, img.width, CV_8UC3, const_cast<std::uint8_t*>(img.data.data()));
    cv::Mat bgr;
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
    if (!cv::imwrite(path, bgr)) throw IoError("cannot write image: " + path);
}

BinaryMask load_mask(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open mask: " + path);
    probe.close();

    cv::Mat gray = cv::imread(path, cv::IMREAD_GRAYSCALE);
    if (gray.empty()) throw FormatError("cannot decode mask: " + path);
    std::vector<std::uint8_t> data(gray.total());
    for (int y = 0; y < gray.rows; ++y)
        for (int x = 0; x < gray.cols; ++x)
            data[static_cast<std::size_t>(y) * gray.cols + x] = gray.at<std::uint8_t>(y, x) >= 128 ? 1 : 0;
    return BinaryMask(gray.cols, gray.rows, std::move(data));
}

void save_mask(const BinaryMask& mask, const std::string& path) {
    mask.validate();
    cv::Mat gray(mask.height, mask.width, CV_8UC1);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            gray.at<std::uint8_t>(y, x) = mask.at(x, y) ? 255 : 0;
    if (!cv::imwrite(path, gray)) throw IoError("cannot write mask: " + path);
}

ScoreMap load_score(const std::string& path) {
    std::ifstream side(path + ".json");
    if (!side) throw IoError("cannot open score sidecar: " + path + ".json");
    nlohmann::json meta;
    try {
        side >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad score sidecar: ") + e.what());
    }
    const int w = meta.at("width").get<int>();
    const int h = meta.at("height").get<int>();

    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open score map: " + path);
    std::vector<float> data(static_cast<std::size_t>(w) * h);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)));
    if (!in || in.gcount() != static_cast<std::streamsize>(data.size() * sizeof(float)))
        throw FormatError("score map payload truncated: " + path);
    return ScoreMap(w, h, std::move(data));
}

void save_score(const ScoreMap& score, const std::string& path) {
    score.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write score map: " + path);
    out.write(reinterpret_cast<const char*>(score.data.data()),
              static_cast<std::streamsize>(score.data.size() * sizeof(float)));
    if (!out) throw IoError("write failure: " + path);

    nlohmann::json meta;
    meta["width"] = score.width;
    meta["height"] = score.height;
    std::ofstream side(path + ".json");
    if (!side) throw IoError("cannot write score sidecar: " + path + ".json");
    side << meta.dump(2) << "\n";
}

BinaryMask threshold_score(const ScoreMap& score, float tau) {
    std::vector<std::uint8_t> data(score.data.size());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = score.data[i] >= tau ? 1 : 0;
    return BinaryMask(score.width, score.height, std::move(data));
}

ScoreMap mask_to_score(const BinaryMask& mask) {
    std::vector<float> data(mask.data.size());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = mask.data[i] ? 1.0f : 0.0f;
    return ScoreMap(mask.width, mask.height, std::move(data));
}

BinaryMask resize_mask_nearest(const BinaryMask& mask, int out_w, int out_h) {
    if (out_w <= 0 || out_h <= 0) throw ContractError("resize_mask_nearest: bad target size");
    std::vector<std::uint8_t> data(static_cast<std::size_t>(out_w) * out_h);
    for (int y = 0; y < out_h; ++y) {
        const int sy = std::min(static_cast<int>((y + 0.5) * mask.height / out_h), mask.height - 1);
        for (int x = 0; x < out_w; ++x) {
            const int sx = std::min(static_cast<int>((x + 0.5) * mask.width / out_w), mask.width - 1);
            data[static_cast<std::size_t>(y) * out_w + x] = mask.at(sx, sy);
        }
    }
    return BinaryMask(out_w, out_h, std::move(data));
}

}  // namespace fgl
