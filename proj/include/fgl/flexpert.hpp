#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fgl/encoders.hpp"
#include "fgl/manifest.hpp"

namespace fgl::expert {

using nn::Params;
using nn::Tensor;
using nn::Var;

// Fixed authentic/forged template embeddings plus the learnable
// object-agnostic word embeddings. Templates come from the frozen text
// tower's token table ("a photo of a pristine" / "a photo of a forged").
class PromptBank {
public:
    PromptBank(Params& params, const enc::TextTower& tower, const ToyConfig& cfg);

    Var authentic_sequence(bool object_prompt) const;  // (E+m) x d, or (E+1) x d when disabled
    Var forged_sequence(bool object_prompt) const;

private:
    Var authentic_template_, forged_template_;  // E x d, frozen
    Var object_p_, object_n_;                   // m x d, learnable
    Var object_word_;                           // 1 x d, frozen literal "object" embedding
};

// F_text: row 0 authentic, row 1 forged; both unit-norm.
Var encode_text_prompts(const PromptBank& bank, const enc::TextTower& tower, bool object_prompt = true);

// Per-patch class distribution, Eq-style: mean over stages of
// softmax(F~patch_i F_text^T) with the softmax across the two text classes.
Var cross_modal_reasoning(const std::vector<Var>& projected_patch, const Var& f_text);

// Mean over stages of softmax(F~patch_i F~vocab_i^T / sqrt(key_dim)) F~vocab_i.
Var attention_fusion(const std::vector<Var>& projected_patch, const std::vector<Var>& projected_vocab,
                     int key_dim);

// 1 - (2*sum(p*y) + eps) / (sum(p) + sum(y) + eps); exact 0 when p == y.
Var dice_loss(const Var& pred, const Tensor& target, double eps = 1.0);

// Four 3x3 convolutions with two interleaved 2x bilinear upsamplings, skip
// concatenation of the resized input grid before the last two convolutions,
// a bilinear resize to the output resolution and a final sigmoid.
class DecoderNet {
public:
    DecoderNet(Params& params, const ToyConfig& cfg);
    // inputs are P x 2, P x d, P x d; output 1 x out_h x out_w in [0,1]
    Var decode(const Var& f_cross, const Var& f_enhanced, const Var& f_vocab, int out_h, int out_w) const;

private:
    int width_;
    Var w1_, b1_, w2_, b2_, w3_, b3_, w4_, b4_;
};

struct FlExpertVariant {
    bool object_prompt = true;  // false: learnable embeddings replaced by the "object" token
    bool vocab_encoder = true;  // false: frozen patch features reused on the vocabulary side
};

// Patchified pixels plus the frozen patch-tower activations for one image.
// Training loops compute this once per image; the frozen tower never changes.
struct PreparedInput {
    Tensor patches;
    std::vector<Tensor> patch_taps;
    Tensor patch_final;
};

class FlExpert {
public:
    explicit FlExpert(const ToyConfig& cfg, FlExpertVariant variant = {},
                      std::shared_ptr<Params> params = nullptr);

    Params& params() { return *params_; }
    const Params& params() const { return *params_; }
    std::shared_ptr<Params> params_ptr() const { return params_; }
    const ToyConfig& config() const { return cfg_; }
    const FlExpertVariant& variant() const { return variant_; }

    PreparedInput prepare(const RasterImage& img) const;

    // Full forward pass producing the 1 x H x W score map variable.
    Var forward(const RasterImage& img) const;
    Var forward_prepared(const PreparedInput& in, const Var& f_text) const;

    // Inference on an arbitrary PNG/JPEG-sized image: inputs are bilinearly
    // resized to the model resolution and the score map is resized back.
    ScoreMap localize(const RasterImage& img) const;

    Var text_features() const;

    const enc::VisionTower& patch_tower() const { return patch_tower_; }
    const enc::TextTower& text_tower() const { return text_tower_; }
    const PromptBank& prompt_bank() const { return bank_; }
    const enc::StageProjections& projections() const { return proj_; }

private:
    ToyConfig cfg_;
    FlExpertVariant variant_;
    std::shared_ptr<Params> params_;
    enc::VisionTower patch_tower_;
    enc::VisionTower vocab_tower_;
    enc::TextTower text_tower_;
    PromptBank bank_;
    enc::StageProjections proj_;
    DecoderNet decoder_;
};

struct TrainOptions {
    int steps = 200;
    double learning_rate = 3e-3;
    int warmup_steps = 20;  // linear learning-rate ramp
    std::string checkpoint_out;  // written when nonempty
    std::string curve_out;       // CSV "step,dice,pixel_auc" when nonempty
};

struct TrainStats {
    std::vector<double> dice_curve;
    std::vector<double> auc_curve;  // mean pixel AUC over defined images, per step
    double final_dice = 1.0;
    double final_auc = 0.0;
};

// Full-batch Adam on the dice objective weighted by cfg.lambda2. One step
// consumes the whole manifest, so steps and epochs coincide.
TrainStats train_flexpert(FlExpert& model, const DatasetManifest& manifest, const std::string& base_dir,
                          const TrainOptions& opts);

}  // namespace fgl::expert
