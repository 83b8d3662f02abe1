#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fgl/flexpert.hpp"

namespace fgl::bridge {

using nn::Params;
using nn::Tensor;
using nn::Var;

// Ordered token stream [image][prompt][mask][text] with recorded role spans;
// the learnable prompt tokens sit strictly between image and mask tokens.
struct TokenSequence {
    Var tokens;  // L x d
    int image_len = 0, prompt_len = 0, mask_len = 0, text_len = 0;

    int length() const { return image_len + prompt_len + mask_len + text_len; }
    int prompt_begin() const { return image_len; }
    int mask_begin() const { return image_len + prompt_len; }
    int text_begin() const { return image_len + prompt_len + mask_len; }
};

TokenSequence assemble_token_sequence(const Var& image_tokens, const Var& prompt_tokens,
                                      const Var& mask_tokens, const Var& text_tokens);

// Patch embedding over the score map, a small transformer, and one
// cross-attention block with k learned query tokens.
class MaskEncoder {
public:
    MaskEncoder(Params& params, const ToyConfig& cfg);
    Var encode(const ScoreMap& score) const;  // k x d

private:
    ToyConfig cfg_;
    std::unique_ptr<enc::VisionTower> backbone_;
    Var queries_, wq_, bq_, wk_, bk_, wv_, bv_, wo_, bo_;
};

// Two-block transformer with role and position embeddings, mean-pooled into
// a 2-logit readout; the verdict is the argmax, never a threshold.
class DecisionHead {
public:
    DecisionHead(Params& params, const ToyConfig& cfg);
    Var logits(const TokenSequence& seq) const;  // 1 x 2

private:
    ToyConfig cfg_;
    Var role_, pos_, readout_w_, readout_b_;
    std::vector<enc::TransformerBlock> blocks_;
};

struct Decision {
    Label verdict = Label::authentic;
    double logit_authentic = 0.0;
    double logit_forged = 0.0;
};

Decision classify(const Var& logits);

// FL-Expert plus the LLM-facing half: frozen image projector, learnable
// prompt tokens, mask encoder and decision head in one parameter registry.
class Bridge {
public:
    explicit Bridge(const ToyConfig& cfg, expert::FlExpertVariant variant = {});

    Params& params() { return flexpert_.params(); }
    const ToyConfig& config() const { return cfg_; }
    expert::FlExpert& flexpert() { return flexpert_; }
    const expert::FlExpert& flexpert() const { return flexpert_; }
    const MaskEncoder& mask_encoder() const { return *mask_encoder_; }
    const DecisionHead& head() const { return *head_; }

    // Builds the token sequence for one image. `mask` is the score map fed to
    // the mask encoder (detached data, not part of the autograd graph).
    TokenSequence tokens_for(const expert::PreparedInput& input, const ScoreMap& mask) const;

    // End-to-end detection: FL-Expert localizes, the mask tokens condition
    // the head. When `mask_override` is given (e.g. ground truth), it
    // replaces the predicted map.
    Decision detect(const RasterImage& img, const ScoreMap* mask_override = nullptr) const;

    ScoreMap localize(const RasterImage& img) const { return flexpert_.localize(img); }

    std::string explain(const RasterImage& img, ForgeryType type_hint) const;

private:
    ToyConfig cfg_;
    expert::FlExpert flexpert_;
    std::unique_ptr<enc::ImageProjector> image_projector_;
    Var prompt_tokens_;
    std::unique_ptr<MaskEncoder> mask_encoder_;
    std::unique_ptr<DecisionHead> head_;
    std::vector<int> instruction_ids_;
};

struct BridgeTrainOptions {
    int steps = 300;
    double learning_rate = 2e-3;
    int warmup_steps = 20;
    std::string checkpoint_out;
    std::string curve_out;  // CSV "step,loss,accuracy,dice"
};

struct BridgeTrainStats {
    std::vector<double> loss_curve;
    std::vector<double> accuracy_curve;
    std::vector<double> dice_curve;
    double final_accuracy = 0.0;
};

// Joint objective lambda1 * CE(logits, label) + lambda2 * dice(G_out, Y).
// The mask fed to the mask encoder is the current predicted map, detached;
// the dice term reaches the FL-Expert trainables directly.
BridgeTrainStats train_bridge(Bridge& model, const DatasetManifest& manifest, const std::string& base_dir,
                              const BridgeTrainOptions& opts);

}  // namespace fgl::bridge
