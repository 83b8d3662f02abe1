#include "fgl/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <thread>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "fgl/explain.hpp"
#include "fgl/rng.hpp"

namespace fgl::datagen {

namespace {

// Largest 4-connected component of a boolean field; everything else cleared.
BinaryMask largest_component(int w, int h, const std::vector<std::uint8_t>& on) {
    std::vector<int> label(on.size(), -1);
    int best_label = -1;
    std::size_t best_size = 0;
    int next = 0;
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < on.size(); ++start) {
        if (!on[start] || label[start] != -1) continue;
        std::size_t size = 0;
        stack.push_back(start);
        label[start] = next;
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            ++size;
            const int x = static_cast<int>(p % w), y = static_cast<int>(p / w);
            const int nx[4] = {x - 1, x + 1, x, x};
            const int ny[4] = {y, y, y - 1, y + 1};
            for (int i = 0; i < 4; ++i) {
                if (nx[i] < 0 || nx[i] >= w || ny[i] < 0 || ny[i] >= h) continue;
                const std::size_t q = static_cast<std::size_t>(ny[i]) * w + nx[i];
                if (on[q] && label[q] == -1) {
                    label[q] = next;
                    stack.push_back(q);
                }
            }
        }
        if (size > best_size) {
            best_size = size;
            best_label = next;
        }
        ++next;
    }
    std::vector<std::uint8_t> data(on.size(), 0);
    for (std::size_t i = 0; i < on.size(); ++i) data[i] = (on[i] && label[i] == best_label) ? 1 : 0;
    return BinaryMask(w, h, std::move(data));
}

BinaryMask blob_mask(Rng& rng, double target, int w, int h) {
    cv::Mat field(h, w, CV_64FC1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) field.at<double>(y, x) = rng.normal();
    const double sigma = std::min(w, h) / 8.0;
    cv::GaussianBlur(field, field, cv::Size(0, 0), sigma, sigma);

    std::vector<double> values(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) values[static_cast<std::size_t>(y) * w + x] = field.at<double>(y, x);
    std::vector<double> sorted = values;
    const std::size_t k = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(target * w * h)));
    std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end(), std::greater<>());
    const double threshold = sorted[k - 1];

    std::vector<std::uint8_t> on(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) on[i] = values[i] >= threshold ? 1 : 0;
    return largest_component(w, h, on);
}

BinaryMask polygon_mask(Rng& rng, double target, int w, int h) {
    const double r0 = std::sqrt(target * w * h / M_PI);
    const double margin = std::min(r0 * 1.35 + 2.0, std::min(w, h) / 2.0 - 1.0);
    if (margin <= 0 || margin >= w - margin || margin >= h - margin)
        return BinaryMask::zeros(w, h);  // infeasible; caller retries
    const double cx = rng.uniform(margin, w - margin);
    const double cy = rng.uniform(margin, h - margin);

    const int nv = rng.uniform_int(5, 9);
    std::vector<double> angles(nv);
    for (double& a : angles) a = rng.uniform(0.0, 2.0 * M_PI);
    std::sort(angles.begin(), angles.end());
    std::vector<double> px(nv), py(nv);
    for (int i = 0; i < nv; ++i) {
        const double r = r0 * rng.uniform(0.75, 1.3);
        px[i] = cx + r * std::cos(angles[i]);
        py[i] = cy + r * std::sin(angles[i]);
    }

    std::vector<std::uint8_t> on(static_cast<std::size_t>(w) * h, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double qx = x + 0.5, qy = y + 0.5;
            bool inside = false;
            for (int i = 0, j = nv - 1; i < nv; j = i++) {
                if ((py[i] > qy) != (py[j] > qy) &&
                    qx < (px[j] - px[i]) * (qy - py[i]) / (py[j] - py[i]) + px[i])
                    inside = !inside;
            }
            if (inside) on[static_cast<std::size_t>(y) * w + x] = 1;
        }
    }
    return largest_component(w, h, on);
}

}  // namespace

BinaryMask make_mask(std::uint64_t seed, const MaskGranularity& granularity, int width, int height) {
    granularity.validate();
    if (width < 4 || height < 4) throw ConfigError("make_mask: size too small");
    for (int attempt = 0; attempt < 100; ++attempt) {
        Rng rng(mix_seed(seed, 0x6d61736bULL + attempt));
        const double target = rng.uniform(granularity.lo, granularity.hi);
        BinaryMask mask = granularity.regime == MaskGranularity::Regime::blob
                              ? blob_mask(rng, target, width, height)
                              : polygon_mask(rng, target, width, height);
        const double frac = static_cast<double>(mask.positive_count()) / (static_cast<double>(width) * height);
        if (frac >= granularity.lo && frac <= granularity.hi) return mask;
    }
    throw GenerationError("make_mask: no mask inside the area band after 100 attempts");
}

std::pair<RasterImage, BinaryMask> splice(const RasterImage& src, const RasterImage& donor,
                                          const BinaryMask& mask) {
    if (src.width != donor.width || src.height != donor.height || src.width != mask.width ||
        src.height != mask.height)
        throw ShapeError("splice: image and mask dimensions must match");
    RasterImage out = src;
    for (int y = 0; y < src.height; ++y)
        for (int x = 0; x < src.width; ++x)
            if (mask.at(x, y))
                for (int c = 0; c < 3; ++c) out.at(x, y, c) = donor.at(x, y, c);
    return {std::move(out), mask};
}

std::pair<RasterImage, BinaryMask> copy_move(const RasterImage& src, const BinaryMask& mask, int dx, int dy) {
    if (src.width != mask.width || src.height != mask.height)
        throw ShapeError("copy_move: image and mask dimensions must match");
    if (dx == 0 && dy == 0) throw GeometryError("copy_move: zero shift, destination equals source region");
    if (mask.positive_count() == 0) throw GeometryError("copy_move: empty source region");

    BinaryMask dest = BinaryMask::zeros(src.width, src.height);
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            if (!mask.at(x, y)) continue;
            const int tx = x + dx, ty = y + dy;
            if (tx < 0 || tx >= src.width || ty < 0 || ty >= src.height)
                throw GeometryError("copy_move: shifted region leaves the image");
            dest.at(tx, ty) = 1;
        }
    }
    RasterImage out = src;
    for (int y = 0; y < src.height; ++y)
        for (int x = 0; x < src.width; ++x)
            if (mask.at(x, y))
                for (int c = 0; c < 3; ++c) out.at(x + dx, y + dy, c) = src.at(x, y, c);
    return {std::move(out), std::move(dest)};
}

std::pair<RasterImage, BinaryMask> removal_fill(const RasterImage& src, const BinaryMask& mask) {
    if (src.width != mask.width || src.height != mask.height)
        throw ShapeError("removal_fill: image and mask dimensions must match");
    const double frac = static_cast<double>(mask.positive_count()) / (static_cast<double>(src.width) * src.height);
    if (frac > 0.25) throw ContractError("removal_fill: mask area fraction must be <= 0.25");

    bool top = false, bottom = false, left = false, right = false;
    for (int x = 0; x < src.width; ++x) {
        top = top || mask.at(x, 0);
        bottom = bottom || mask.at(x, src.height - 1);
    }
    for (int y = 0; y < src.height; ++y) {
        left = left || mask.at(0, y);
        right = right || mask.at(src.width - 1, y);
    }
    if (top && bottom && left && right)
        throw GenerationError("removal_fill: mask touches all four image borders");

    const int w = src.width, h = src.height;
    RasterImage out = src;
    for (int c = 0; c < 3; ++c) {
        std::vector<double> field(static_cast<std::size_t>(w) * h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) field[static_cast<std::size_t>(y) * w + x] = src.at(x, y, c);

        // boundary mean seeds the hole
        double boundary_sum = 0.0;
        long boundary_count = 0;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (mask.at(x, y)) continue;
                const bool adj = (x > 0 && mask.at(x - 1, y)) || (x + 1 < w && mask.at(x + 1, y)) ||
                                 (y > 0 && mask.at(x, y - 1)) || (y + 1 < h && mask.at(x, y + 1));
                if (adj) {
                    boundary_sum += field[static_cast<std::size_t>(y) * w + x];
                    ++boundary_count;
                }
            }
        }
        const double seed_value = boundary_count ? boundary_sum / boundary_count : 0.0;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (mask.at(x, y)) field[static_cast<std::size_t>(y) * w + x] = seed_value;

        std::vector<double> next = field;
        for (int iter = 0; iter < 200; ++iter) {
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    if (!mask.at(x, y)) continue;
                    double sum = 0.0;
                    int count = 0;
                    if (x > 0) { sum += field[static_cast<std::size_t>(y) * w + x - 1]; ++count; }
                    if (x + 1 < w) { sum += field[static_cast<std::size_t>(y) * w + x + 1]; ++count; }
                    if (y > 0) { sum += field[static_cast<std::size_t>(y - 1) * w + x]; ++count; }
                    if (y + 1 < h) { sum += field[static_cast<std::size_t>(y + 1) * w + x]; ++count; }
                    next[static_cast<std::size_t>(y) * w + x] = sum / count;
                }
            }
            std::swap(field, next);
        }
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (mask.at(x, y))
                    out.at(x, y, c) = static_cast<std::uint8_t>(
                        std::clamp<long>(std::lround(field[static_cast<std::size_t>(y) * w + x]), 0, 255));
    }
    return {std::move(out), mask};
}

RasterImage apply_distortion(const RasterImage& img, const DistortionSpec& spec, std::uint64_t rng_seed) {
    spec.validate();
    switch (spec.kind) {
        case DistortionKind::resize: {
            const int ow = static_cast<int>(std::floor(spec.value * img.width + 0.5));
            const int oh = static_cast<int>(std::floor(spec.value * img.height + 0.5));
            cv::Mat rgb(img.height, img.width, CV_8UC3, const_cast<std::uint8_t*>(img.data.data()));
            cv::Mat resized;
            cv::resize(rgb, resized, cv::Size(ow, oh), 0, 0, cv::INTER_LINEAR);
            std::vector<std::uint8_t> data(resized.total() * 3);
            for (int y = 0; y < resized.rows; ++y)
                std::copy_n(resized.ptr<std::uint8_t>(y), static_cast<std::size_t>(resized.cols) * 3,
                            data.data() + static_cast<std::size_t>(y) * resized.cols * 3);
            return RasterImage(ow, oh, std::move(data));
        }
        case DistortionKind::blur: {
            const int k = static_cast<int>(spec.value);
            const double sigma = 0.3 * ((k - 1) / 2.0 - 1.0) + 0.8;
            cv::Mat rgb(img.height, img.width, CV_8UC3, const_cast<std::uint8_t*>(img.data.data()));
            cv::Mat blurred;
            cv::GaussianBlur(rgb, blurred, cv::Size(k, k), sigma, sigma);
            std::vector<std::uint8_t> data(blurred.total() * 3);
            for (int y = 0; y < blurred.rows; ++y)
                std::copy_n(blurred.ptr<std::uint8_t>(y), static_cast<std::size_t>(blurred.cols) * 3,
                            data.data() + static_cast<std::size_t>(y) * blurred.cols * 3);
            return RasterImage(img.width, img.height, std::move(data));
        }
        case DistortionKind::noise: {
            Rng rng(mix_seed(rng_seed, 0x6e6f6973ULL));
            RasterImage out = img;
            for (auto& v : out.data) {
                const double noisy = v + rng.normal(0.0, spec.value);
                v = static_cast<std::uint8_t>(std::clamp<long>(std::lround(noisy), 0, 255));
            }
            return out;
        }
        case DistortionKind::jpeg: {
            cv::Mat rgb(img.height, img.width, CV_8UC3, const_cast<std::uint8_t*>(img.data.data()));
            cv::Mat bgr;
            cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
            std::vector<std::uint8_t> buf;
            cv::imencode(".jpg", bgr, buf, {cv::IMWRITE_JPEG_QUALITY, static_cast<int>(spec.value)});
            cv::Mat decoded = cv::imdecode(buf, cv::IMREAD_COLOR);
            cv::Mat back;
            cv::cvtColor(decoded, back, cv::COLOR_BGR2RGB);
            std::vector<std::uint8_t> data(back.total() * 3);
            for (int y = 0; y < back.rows; ++y)
                std::copy_n(back.ptr<std::uint8_t>(y), static_cast<std::size_t>(back.cols) * 3,
                            data.data() + static_cast<std::size_t>(y) * back.cols * 3);
            return RasterImage(back.cols, back.rows, std::move(data));
        }
    }
    throw ConfigError("apply_distortion: bad kind");
}

RasterImage texture_image(std::uint64_t seed, int width, int height) {
    Rng rng(mix_seed(seed, 0x74657874ULL));
    struct Wave {
        double fx, fy, phase, amp;
    };
    RasterImage out = RasterImage::filled(width, height, 0);
    for (int c = 0; c < 3; ++c) {
        std::vector<Wave> waves(4);
        double total_amp = 0.0;
        for (auto& wv : waves) {
            wv.fx = rng.uniform(0.5, 6.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
            wv.fy = rng.uniform(0.5, 6.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
            wv.phase = rng.uniform(0.0, 2.0 * M_PI);
            wv.amp = rng.uniform(0.3, 1.0);
            total_amp += wv.amp;
        }
        const double gx = rng.uniform(-1.0, 1.0), gy = rng.uniform(-1.0, 1.0);
        const double base = rng.uniform(90.0, 165.0);
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                double v = 0.0;
                for (const auto& wv : waves)
                    v += wv.amp * std::sin(2.0 * M_PI * (wv.fx * x + wv.fy * y) / width + wv.phase);
                v = base + 60.0 * v / total_amp + 25.0 * (gx * x + gy * y) / width + rng.normal(0.0, 2.0);
                out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255));
            }
        }
    }
    return out;
}

SynthesizedSample synthesize_sample(std::uint64_t seed, ForgeryType type, int image_size) {
    if (type == ForgeryType::none) throw ConfigError("synthesize_sample: forged types only");
    Rng rng(mix_seed(seed, 0x73796e74ULL));
    SynthesizedSample s;
    s.type = type;
    s.source = texture_image(mix_seed(seed, 1), image_size, image_size);

    const MaskGranularity::Regime regime =
        rng.uniform() < 0.5 ? MaskGranularity::Regime::blob : MaskGranularity::Regime::polygon;
    static const std::pair<double, double> bands[] = {{0.03, 0.08}, {0.08, 0.18}, {0.18, 0.35}};

    switch (type) {
        case ForgeryType::splicing: {
            const auto band = bands[rng.uniform_int(0, 2)];
            MaskGranularity g{band.first, band.second, regime};
            BinaryMask mask = make_mask(mix_seed(seed, 3), g, image_size, image_size);
            RasterImage donor = texture_image(mix_seed(seed, 2), image_size, image_size);
            auto [forged, gt] = splice(s.source, donor, mask);
            s.forged = std::move(forged);
            s.mask = std::move(gt);
            break;
        }
        case ForgeryType::copy_move: {
            const auto band = bands[rng.uniform_int(0, 1)];
            MaskGranularity g{band.first, band.second, regime};
            for (int attempt = 0;; ++attempt) {
                if (attempt >= 100) throw GenerationError("copy_move synthesis: no in-bounds shift found");
                BinaryMask mask = make_mask(mix_seed(seed, 3 + attempt), g, image_size, image_size);
                const int span = std::max(2, image_size / 3);
                int dx = rng.uniform_int(-span, span), dy = rng.uniform_int(-span, span);
                if (dx == 0 && dy == 0) dx = span / 2 + 1;
                try {
                    auto [forged, gt] = copy_move(s.source, mask, dx, dy);
                    s.forged = std::move(forged);
                    s.mask = std::move(gt);
                    break;
                } catch (const GeometryError&) {
                    continue;
                }
            }
            break;
        }
        case ForgeryType::removal: {
            MaskGranularity g{0.02, 0.10, MaskGranularity::Regime::polygon};
            BinaryMask mask = make_mask(mix_seed(seed, 3), g, image_size, image_size);
            auto [forged, gt] = removal_fill(s.source, mask);
            s.forged = std::move(forged);
            s.mask = std::move(gt);
            break;
        }
        case ForgeryType::none:
            break;
    }
    return s;
}

DatasetManifest build_dataset(const SynthesisRequest& req, const std::string& out_dir, int jobs) {
    if (req.n_forged < 0 || req.n_authentic < 0 || req.n_forged + req.n_authentic == 0)
        throw ConfigError("build_dataset: empty request");
    if (req.n_forged > 0 && req.type_mix.empty())
        throw ConfigError("build_dataset: type mix must be nonempty");
    for (const auto& t : req.type_mix)
        if (t == ForgeryType::none) throw ConfigError("build_dataset: type mix must hold forged types");
    for (const auto& d : req.distortion_policy) d.validate();
    if (req.image_size < 16) throw ConfigError("build_dataset: image_size too small");

    namespace fs = std::filesystem;
    fs::create_directories(fs::path(out_dir) / "images");
    fs::create_directories(fs::path(out_dir) / "masks");

    const int total = req.n_forged + req.n_authentic;
    std::vector<ManifestEntry> entries(total);

    auto worker = [&](int begin, int end) {
        char idbuf[16];
        for (int i = begin; i < end; ++i) {
            std::snprintf(idbuf, sizeof(idbuf), "e%04d", i);
            ManifestEntry e;
            e.id = idbuf;
            e.image_path = std::string("images/") + idbuf + ".png";
            e.mask_path = std::string("masks/") + idbuf + "_mask.png";
            e.seed = mix_seed(req.seed, static_cast<std::uint64_t>(i) + 1);

            if (i < req.n_forged) {
                const ForgeryType type = req.type_mix[i % req.type_mix.size()];
                SynthesizedSample s = synthesize_sample(e.seed, type, req.image_size);
                RasterImage image = s.forged;
                BinaryMask mask = s.mask;
                if (!req.distortion_policy.empty()) {
                    Rng pick(mix_seed(e.seed, 0xd157ULL));
                    const auto& spec =
                        req.distortion_policy[pick.uniform_int(0, static_cast<int>(req.distortion_policy.size()) - 1)];
                    image = apply_distortion(image, spec, e.seed);
                    if (image.width != mask.width || image.height != mask.height)
                        mask = resize_mask_nearest(mask, image.width, image.height);
                    e.distortions.push_back(spec);
                }
                e.label = Label::forged;
                e.forgery_type = type;
                e.caption = reference_caption(Label::forged, type, mask);
                save_image(image, (fs::path(out_dir) / e.image_path).string());
                save_mask(mask, (fs::path(out_dir) / e.mask_path).string());
            } else {
                RasterImage image = texture_image(mix_seed(e.seed, 1), req.image_size, req.image_size);
                BinaryMask mask = BinaryMask::zeros(req.image_size, req.image_size);
                e.label = Label::authentic;
                e.forgery_type = ForgeryType::none;
                e.caption = reference_caption(Label::authentic, ForgeryType::none, mask);
                save_image(image, (fs::path(out_dir) / e.image_path).string());
                save_mask(mask, (fs::path(out_dir) / e.mask_path).string());
            }
            entries[i] = std::move(e);
        }
    };

    jobs = std::max(1, jobs);
    if (jobs == 1) {
        worker(0, total);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (total + jobs - 1) / jobs;
        for (int j = 0; j < jobs; ++j) {
            const int begin = j * chunk, end = std::min(total, begin + chunk);
            if (begin < end) pool.emplace_back(worker, begin, end);
        }
        for (auto& t : pool) t.join();
    }

    DatasetManifest manifest;
    manifest.entries = std::move(entries);
    manifest.save((fs::path(out_dir) / "manifest.json").string());
    return manifest;
}

}  // namespace fgl::datagen
