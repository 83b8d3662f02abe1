#include "fgl/harness.hpp"

#include <fstream>

#include "fgl/datagen.hpp"
#include "fgl/explain.hpp"
#include "fgl/rng.hpp"

namespace fgl::eval {

LocalizationResult evaluate_localization(const expert::FlExpert& model, const DatasetManifest& manifest,
                                         const std::string& base_dir) {
    if (manifest.entries.empty()) throw ConfigError("evaluate_localization: empty manifest");
    LocalizationResult result;
    double auc_sum = 0.0, f1_sum = 0.0;
    int auc_count = 0;
    for (const auto& e : manifest.entries) {
        RasterImage img = load_image(resolve_path(base_dir, e.image_path));
        BinaryMask gt = load_mask(resolve_path(base_dir, e.mask_path));
        ScoreMap score = model.localize(img);

        LocalizationResult::PerImage row;
        row.id = e.id;
        row.f1 = pixel_f1(score, gt);
        f1_sum += row.f1;
        const auto pos = gt.positive_count();
        if (pos > 0 && pos < gt.data.size()) {
            row.auc = pixel_auc(score, gt);
            row.auc_defined = true;
            auc_sum += row.auc;
            ++auc_count;
        } else {
            ++result.skipped;
        }
        result.per_image.push_back(std::move(row));
    }
    result.mean_auc = auc_count ? auc_sum / auc_count : 0.0;
    result.mean_f1 = f1_sum / static_cast<double>(manifest.entries.size());
    return result;
}

DetectionResult evaluate_detection(const bridge::Bridge& model, const DatasetManifest& manifest,
                                   const std::string& base_dir, bool use_gt_mask) {
    if (manifest.entries.empty()) throw ConfigError("evaluate_detection: empty manifest");
    DetectionResult result;
    std::vector<int> verdicts, labels;
    for (const auto& e : manifest.entries) {
        RasterImage img = load_image(resolve_path(base_dir, e.image_path));
        bridge::Decision d;
        if (use_gt_mask) {
            BinaryMask gt = load_mask(resolve_path(base_dir, e.mask_path));
            ScoreMap gt_score = mask_to_score(gt);
            d = model.detect(img, &gt_score);
        } else {
            d = model.detect(img);
        }
        result.per_image.push_back({e.id, d.verdict, d.logit_authentic, d.logit_forged});
        verdicts.push_back(d.verdict == Label::forged ? 1 : 0);
        labels.push_back(e.label == Label::forged ? 1 : 0);
    }
    result.accuracy = image_accuracy(verdicts, labels);
    return result;
}

ExplanationResult evaluate_explanations(const bridge::Bridge& model, const DatasetManifest& manifest,
                                        const std::string& base_dir) {
    if (manifest.entries.empty()) throw ConfigError("evaluate_explanations: empty manifest");
    ExplanationResult result;
    RougeScores sum;
    auto add_triple = [](RougeTriple& acc, const RougeTriple& t) {
        acc.precision += t.precision;
        acc.recall += t.recall;
        acc.f1 += t.f1;
    };
    for (const auto& e : manifest.entries) {
        RasterImage img = load_image(resolve_path(base_dir, e.image_path));
        const std::string text = model.explain(img, e.forgery_type);
        RougeScores s = rouge(text, e.caption);
        add_triple(sum.rouge1, s.rouge1);
        add_triple(sum.rouge2, s.rouge2);
        add_triple(sum.rougeL, s.rougeL);
        result.per_image.push_back({e.id, s});
    }
    const double n = static_cast<double>(manifest.entries.size());
    auto mean_of = [n](RougeTriple t) {
        t.precision /= n;
        t.recall /= n;
        t.f1 /= n;
        return t;
    };
    result.mean.rouge1 = mean_of(sum.rouge1);
    result.mean.rouge2 = mean_of(sum.rouge2);
    result.mean.rougeL = mean_of(sum.rougeL);
    return result;
}

std::vector<DistortionSpec> default_robustness_ladder() {
    return {DistortionSpec::resize(0.78), DistortionSpec::resize(0.25), DistortionSpec::blur(3),
            DistortionSpec::blur(15),     DistortionSpec::noise(3.0),   DistortionSpec::noise(15.0),
            DistortionSpec::jpeg(100),    DistortionSpec::jpeg(50)};
}

namespace {

std::string rung_name(const DistortionSpec& spec) {
    switch (spec.kind) {
        case DistortionKind::resize: {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "resize(%.2fx)", spec.value);
            return buf;
        }
        case DistortionKind::blur: return "blur(k=" + std::to_string(static_cast<int>(spec.value)) + ")";
        case DistortionKind::noise: {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "noise(sigma=%g)", spec.value);
            return buf;
        }
        case DistortionKind::jpeg: return "compress(q=" + std::to_string(static_cast<int>(spec.value)) + ")";
    }
    return "?";
}

}  // namespace

std::vector<RobustnessRow> robustness_sweep(const expert::FlExpert& model, const DatasetManifest& manifest,
                                            const std::string& base_dir,
                                            const std::vector<DistortionSpec>& ladder) {
    for (const auto& spec : ladder) spec.validate();

    struct Item {
        RasterImage image;
        BinaryMask gt;
        std::uint64_t seed;
    };
    std::vector<Item> forged;
    for (const auto& e : manifest.entries) {
        if (e.label != Label::forged) continue;
        forged.push_back({load_image(resolve_path(base_dir, e.image_path)),
                          load_mask(resolve_path(base_dir, e.mask_path)), e.seed});
    }
    if (forged.empty()) throw ConfigError("robustness_sweep: manifest holds no forged entries");

    auto mean_auc = [&](const std::optional<DistortionSpec>& spec, std::size_t rung_index) {
        double sum = 0.0;
        int count = 0;
        for (const auto& item : forged) {
            RasterImage image = item.image;
            BinaryMask gt = item.gt;
            if (spec) {
                image = datagen::apply_distortion(image, *spec, mix_seed(item.seed, 0xd0 + rung_index));
                if (image.width != gt.width || image.height != gt.height)
                    gt = resize_mask_nearest(gt, image.width, image.height);
            }
            const auto pos = gt.positive_count();
            if (pos == 0 || pos == gt.data.size()) continue;
            ScoreMap score = model.localize(image);
            sum += pixel_auc(score, gt);
            ++count;
        }
        return std::pair<double, int>{count ? sum / count : 0.0, count};
    };

    std::vector<RobustnessRow> rows;
    auto [base_auc, base_n] = mean_auc(std::nullopt, 0);
    rows.push_back({"none", std::nullopt, base_auc, base_n});
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        auto [auc, n] = mean_auc(ladder[i], i + 1);
        rows.push_back({rung_name(ladder[i]), ladder[i], auc, n});
    }
    return rows;
}

std::vector<EmbedSweepRow> embed_size_sweep(const DatasetManifest& manifest, const std::string& base_dir,
                                            const ToyConfig& cfg, const std::vector<int>& m_values,
                                            int steps, double learning_rate) {
    if (m_values.empty()) throw ConfigError("embed_size_sweep: m_values must be nonempty");
    std::vector<EmbedSweepRow> rows;
    for (int m : m_values) {
        ToyConfig variant_cfg = cfg;
        variant_cfg.object_embed_len = m;
        variant_cfg.validate();
        expert::FlExpert model(variant_cfg);
        expert::TrainOptions opts;
        opts.steps = steps;
        opts.learning_rate = learning_rate;
        expert::train_flexpert(model, manifest, base_dir, opts);
        LocalizationResult loc = evaluate_localization(model, manifest, base_dir);
        rows.push_back({m, loc.mean_f1, loc.mean_auc});
    }
    return rows;
}

std::vector<AblationRow> ablation_table(const DatasetManifest& manifest, const std::string& base_dir,
                                        const ToyConfig& cfg, int steps, double learning_rate) {
    struct Spec {
        std::string name;
        expert::FlExpertVariant variant;
        bool last_tap_only;
    };
    const std::vector<Spec> specs = {
        {"full", {}, false},
        {"w/o Object", {.object_prompt = false, .vocab_encoder = true}, false},
        {"w/o Vocab", {.object_prompt = true, .vocab_encoder = false}, false},
        {"w/o Multi-scale", {}, true},
    };

    std::vector<AblationRow> rows;
    for (const auto& spec : specs) {
        ToyConfig variant_cfg = cfg;
        if (spec.last_tap_only) variant_cfg.tap_blocks = {cfg.tap_blocks.back()};
        expert::FlExpert model(variant_cfg, spec.variant);
        expert::TrainOptions opts;
        opts.steps = steps;
        opts.learning_rate = learning_rate;
        expert::train_flexpert(model, manifest, base_dir, opts);
        LocalizationResult loc = evaluate_localization(model, manifest, base_dir);
        rows.push_back({spec.name, loc.mean_auc, loc.mean_f1});
    }
    return rows;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write CSV: " + path);
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << "\n";
    }
}

}  // namespace fgl::eval
