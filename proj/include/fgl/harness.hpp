#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fgl/bridge.hpp"
#include "fgl/metrics.hpp"

namespace fgl::eval {

struct LocalizationResult {
    struct PerImage {
        std::string id;
        double auc = 0.0;
        double f1 = 0.0;
        bool auc_defined = false;  // single-class ground truth is skipped
    };
    std::vector<PerImage> per_image;
    double mean_auc = 0.0;  // over images with a defined AUC
    double mean_f1 = 0.0;   // over all images
    int skipped = 0;
};

LocalizationResult evaluate_localization(const expert::FlExpert& model, const DatasetManifest& manifest,
                                         const std::string& base_dir);

struct DetectionResult {
    struct PerImage {
        std::string id;
        Label verdict = Label::authentic;
        double logit_authentic = 0.0, logit_forged = 0.0;
    };
    std::vector<PerImage> per_image;
    double accuracy = 0.0;
};

// use_gt_mask feeds the ground-truth mask to the mask encoder instead of the
// FL-Expert prediction.
DetectionResult evaluate_detection(const bridge::Bridge& model, const DatasetManifest& manifest,
                                   const std::string& base_dir, bool use_gt_mask = false);

struct ExplanationResult {
    struct PerImage {
        std::string id;
        RougeScores scores;
    };
    std::vector<PerImage> per_image;
    RougeScores mean;
};

// Renders an explanation per entry (predicted verdict + predicted mask, the
// manifest's forgery type as the type slot) and scores it against the
// manifest caption.
ExplanationResult evaluate_explanations(const bridge::Bridge& model, const DatasetManifest& manifest,
                                        const std::string& base_dir);

struct RobustnessRow {
    std::string rung;  // "none" baseline first
    std::optional<DistortionSpec> spec;
    double mean_auc = 0.0;
    int images = 0;
};

// Distorts the forged entries per rung and reports mean pixel AUC; resize
// rungs score against nearest-neighbor-resized ground truth.
std::vector<RobustnessRow> robustness_sweep(const expert::FlExpert& model, const DatasetManifest& manifest,
                                            const std::string& base_dir,
                                            const std::vector<DistortionSpec>& ladder);

// Resize 0.78/0.25, blur 3/15, noise 3/15, jpeg 100/50.
std::vector<DistortionSpec> default_robustness_ladder();

struct EmbedSweepRow {
    int m = 0;
    double mean_f1 = 0.0;
    double mean_auc = 0.0;
};

// Trains a fresh FL-Expert per object-embedding length with a shared seed
// and reports training-set pixel F1/AUC.
std::vector<EmbedSweepRow> embed_size_sweep(const DatasetManifest& manifest, const std::string& base_dir,
                                            const ToyConfig& cfg, const std::vector<int>& m_values,
                                            int steps, double learning_rate = 3e-3);

struct AblationRow {
    std::string variant;
    double mean_auc = 0.0;
    double mean_f1 = 0.0;
};

// full / w-o-object / w-o-vocab / w-o-multiscale, each trained fresh with the
// same seed and step budget.
std::vector<AblationRow> ablation_table(const DatasetManifest& manifest, const std::string& base_dir,
                                        const ToyConfig& cfg, int steps, double learning_rate = 3e-3);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace fgl::eval
