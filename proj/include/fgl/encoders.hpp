#pragma once

#include <string>
#include <vector>

#include "fgl/config.hpp"
#include "fgl/image.hpp"
#include "fgl/ops.hpp"

namespace fgl::enc {

using nn::Params;
using nn::Tensor;
using nn::Var;

// Image pixels scaled to [0,1] and flattened per patch, raster order:
// P x (patch*patch*3).
Tensor patchify_image(const RasterImage& img, int patch_size);
// Same for a single-channel score map: P x (patch*patch).
Tensor patchify_score(const ScoreMap& score, int patch_size);

struct TowerOutput {
    std::vector<Var> taps;  // one P x d matrix per tap block
    Var final;              // after the closing layer norm
};

// Pre-LN transformer block: x += attn(LN(x)); x += mlp(LN(x)).
class TransformerBlock {
public:
    TransformerBlock(Params& params, const std::string& prefix, int dim, int key_dim, int hidden,
                     bool trainable, std::uint64_t seed);
    Var forward(const Var& x) const;

private:
    int key_dim_;
    Var ln1_g_, ln1_b_, wq_, bq_, wk_, bk_, wv_, bv_, wo_, bo_;
    Var ln2_g_, ln2_b_, mlp_w1_, mlp_b1_, mlp_w2_, mlp_b2_;
};

// Pre-LN ViT-style tower used for the frozen patch encoder, the trainable
// visual vocabulary encoder and the mask encoder backbone. Parameters are
// registered under `prefix`.
class VisionTower {
public:
    struct Options {
        int in_channels = 3;
        bool trainable = false;
        bool use_pos_embed = true;
        int depth = 0;  // 0 = cfg.encoder_depth
    };

    VisionTower(Params& params, const std::string& prefix, const ToyConfig& cfg, Options opt);

    // `patch_matrix` is a patchified input (constant); result taps follow
    // cfg.tap_blocks (taps beyond the tower depth are ignored).
    TowerOutput encode(const Tensor& patch_matrix) const;

private:
    const ToyConfig cfg_;
    Options opt_;
    Var embed_w_, embed_b_, pos_;
    std::vector<TransformerBlock> blocks_;
    Var final_ln_g_, final_ln_b_;
};

// Frozen token-embedding table plus a two-block transformer; pools to the
// last token state and L2-normalizes. The embedding vocabulary is a fixed
// word list, so template token ids are stable across runs.
class TextTower {
public:
    TextTower(Params& params, const std::string& prefix, const ToyConfig& cfg);

    // tokens: L x d -> 1 x d unit-norm
    Var encode_sequence(const Var& tokens) const;
    Var embed_tokens(const std::vector<int>& ids) const;

    static const std::vector<std::string>& vocabulary();
    static int token_id(const std::string& word);
    static std::vector<int> tokenize(const std::string& text);

private:
    const ToyConfig cfg_;
    Var table_, pos_;
    std::vector<TransformerBlock> blocks_;
    Var final_ln_g_, final_ln_b_;
};

// Stage-specific trainable linear maps aligning intermediate features with
// the text space; patch and vocabulary sides are unshared. Initialized to
// identity with zero bias.
class StageProjections {
public:
    StageProjections(Params& params, const ToyConfig& cfg);
    Var patch(int stage, const Var& raw) const;
    Var vocab(int stage, const Var& raw) const;
    int stages() const { return static_cast<int>(patch_w_.size()); }

private:
    std::vector<Var> patch_w_, patch_b_, vocab_w_, vocab_b_;
};

// Two-layer MLP mapping encoder features into the decision-head token space.
class ImageProjector {
public:
    ImageProjector(Params& params, const std::string& prefix, const ToyConfig& cfg, bool trainable);
    Var project(const Var& rows) const;

private:
    Var w1_, b1_, w2_, b2_;
};

}  // namespace fgl::enc
