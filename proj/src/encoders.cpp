#include "fgl/encoders.hpp"

#include <algorithm>
#include <cctype>

namespace fgl::enc {

using namespace fgl::nn;

Tensor patchify_image(const RasterImage& img, int patch_size) {
    img.validate();
    if (img.width % patch_size != 0 || img.height % patch_size != 0)
        throw ShapeError("patchify_image: image size must be a multiple of patch size");
    const int gx = img.width / patch_size, gy = img.height / patch_size;
    const int cols = patch_size * patch_size * 3;
    Tensor out = Tensor::zeros({gx * gy, cols});
    for (int py = 0; py < gy; ++py) {
        for (int px = 0; px < gx; ++px) {
            const int row = py * gx + px;
            int col = 0;
            for (int dy = 0; dy < patch_size; ++dy)
                for (int dx = 0; dx < patch_size; ++dx)
                    for (int c = 0; c < 3; ++c)
                        out.at(row, col++) = img.at(px * patch_size + dx, py * patch_size + dy, c) / 255.0;
        }
    }
    return out;
}

Tensor patchify_score(const ScoreMap& score, int patch_size) {
    score.validate();
    if (score.width % patch_size != 0 || score.height % patch_size != 0)
        throw ShapeError("patchify_score: map size must be a multiple of patch size");
    const int gx = score.width / patch_size, gy = score.height / patch_size;
    const int cols = patch_size * patch_size;
    Tensor out = Tensor::zeros({gx * gy, cols});
    for (int py = 0; py < gy; ++py) {
        for (int px = 0; px < gx; ++px) {
            const int row = py * gx + px;
            int col = 0;
            for (int dy = 0; dy < patch_size; ++dy)
                for (int dx = 0; dx < patch_size; ++dx)
                    out.at(row, col++) = score.at(px * patch_size + dx, py * patch_size + dy);
        }
    }
    return out;
}

TransformerBlock::TransformerBlock(Params& params, const std::string& prefix, int dim, int key_dim,
                                   int hidden, bool trainable, std::uint64_t seed)
    : key_dim_(key_dim) {
    auto w = [&](const std::string& name, int in, int out) {
        return params.create(prefix + "/" + name, glorot_init({in, out}, in, out, seed, prefix + "/" + name),
                             trainable);
    };
    auto zeros = [&](const std::string& name, int n) {
        return params.create(prefix + "/" + name, Tensor::zeros({n}), trainable);
    };
    ln1_g_ = params.create(prefix + "/ln1_g", Tensor::full({dim}, 1.0), trainable);
    ln1_b_ = zeros("ln1_b", dim);
    wq_ = w("wq", dim, key_dim);
    bq_ = zeros("bq", key_dim);
    wk_ = w("wk", dim, key_dim);
    bk_ = zeros("bk", key_dim);
    wv_ = w("wv", dim, dim);
    bv_ = zeros("bv", dim);
    wo_ = w("wo", dim, dim);
    bo_ = zeros("bo", dim);
    ln2_g_ = params.create(prefix + "/ln2_g", Tensor::full({dim}, 1.0), trainable);
    ln2_b_ = zeros("ln2_b", dim);
    mlp_w1_ = w("mlp_w1", dim, hidden);
    mlp_b1_ = zeros("mlp_b1", hidden);
    mlp_w2_ = w("mlp_w2", hidden, dim);
    mlp_b2_ = zeros("mlp_b2", dim);
}

Var TransformerBlock::forward(const Var& x) const {
    Var h = layer_norm(x, ln1_g_, ln1_b_);
    Var att = scaled_dot_attention(linear(h, wq_, bq_), linear(h, wk_, bk_), linear(h, wv_, bv_), key_dim_);
    Var y = add(x, linear(att, wo_, bo_));
    Var m = layer_norm(y, ln2_g_, ln2_b_);
    m = linear(gelu(linear(m, mlp_w1_, mlp_b1_)), mlp_w2_, mlp_b2_);
    return add(y, m);
}

VisionTower::VisionTower(Params& params, const std::string& prefix, const ToyConfig& cfg, Options opt)
    : cfg_(cfg), opt_(opt) {
    cfg.validate();
    const int d = cfg.embed_dim;
    const int depth = opt.depth > 0 ? opt.depth : cfg.encoder_depth;
    opt_.depth = depth;
    const int in_dim = cfg.patch_size * cfg.patch_size * opt.in_channels;
    const std::uint64_t seed = cfg.rng_seed;

    embed_w_ = params.create(prefix + "/embed_w", glorot_init({in_dim, d}, in_dim, d, seed, prefix + "/embed_w"),
                             opt.trainable);
    embed_b_ = params.create(prefix + "/embed_b", Tensor::zeros({d}), opt.trainable);
    pos_ = params.create(prefix + "/pos", normal_init({cfg.patches(), d}, 0.02, seed, prefix + "/pos"),
                         opt.trainable);

    for (int i = 0; i < depth; ++i)
        blocks_.emplace_back(params, prefix + "/block" + std::to_string(i + 1), d, cfg.key_dim, 2 * d,
                             opt.trainable, seed);
    final_ln_g_ = params.create(prefix + "/final_ln_g", Tensor::full({d}, 1.0), opt.trainable);
    final_ln_b_ = params.create(prefix + "/final_ln_b", Tensor::zeros({d}), opt.trainable);
}

TowerOutput VisionTower::encode(const Tensor& patch_matrix) const {
    if (patch_matrix.ndim() != 2 || patch_matrix.rows() != cfg_.patches() ||
        patch_matrix.cols() != embed_w_->value.rows())
        throw ShapeError("VisionTower::encode: patch matrix is " + patch_matrix.shape_str());

    Var x = linear(constant(patch_matrix), embed_w_, embed_b_);
    if (opt_.use_pos_embed) x = add(x, pos_);

    TowerOutput out;
    std::size_t next_tap = 0;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        x = blocks_[i].forward(x);
        if (next_tap < cfg_.tap_blocks.size() &&
            cfg_.tap_blocks[next_tap] == static_cast<int>(i) + 1) {
            out.taps.push_back(x);
            ++next_tap;
        }
    }
    out.final = layer_norm(x, final_ln_g_, final_ln_b_);
    return out;
}

const std::vector<std::string>& TextTower::vocabulary() {
    static const std::vector<std::string> words = {
        "a",     "photo",   "of",          "pristine", "forged", "object", "an",   "image", "is",
        "there", "any",     "forgery",     "in",       "this",   "the",    "region", "authentic",
        "information"};
    return words;
}

int TextTower::token_id(const std::string& word) {
    const auto& words = vocabulary();
    for (std::size_t i = 0; i < words.size(); ++i)
        if (words[i] == word) return static_cast<int>(i);
    throw ConfigError("TextTower: word not in vocabulary: " + word);
}

std::vector<int> TextTower::tokenize(const std::string& text) {
    std::vector<int> ids;
    std::string word;
    for (char ch : text + " ") {
        if (std::isalnum(static_cast<unsigned char>(ch))) {
            word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        } else if (!word.empty()) {
            ids.push_back(token_id(word));
            word.clear();
        }
    }
    return ids;
}

TextTower::TextTower(Params& params, const std::string& prefix, const ToyConfig& cfg) : cfg_(cfg) {
    const int d = cfg.embed_dim;
    const int vocab = static_cast<int>(vocabulary().size());
    const int max_len = cfg.template_len + std::max(cfg.object_embed_len, 32);
    const std::uint64_t seed = cfg.rng_seed;

    table_ = params.create(prefix + "/table", normal_init({vocab, d}, 0.5, seed, prefix + "/table"), false);
    pos_ = params.create(prefix + "/pos", normal_init({max_len, d}, 0.02, seed, prefix + "/pos"), false);
    for (int i = 0; i < 2; ++i)
        blocks_.emplace_back(params, prefix + "/block" + std::to_string(i + 1), d, cfg.key_dim, 2 * d, false,
                             seed);
    final_ln_g_ = params.create(prefix + "/final_ln_g", Tensor::full({d}, 1.0), false);
    final_ln_b_ = params.create(prefix + "/final_ln_b", Tensor::zeros({d}), false);
}

Var TextTower::embed_tokens(const std::vector<int>& ids) const { return select_rows(table_, ids); }

Var TextTower::encode_sequence(const Var& tokens) const {
    tokens->value.require_ndim(2);
    const int len = tokens->value.rows();
    if (len < 1 || len > pos_->value.rows())
        throw ConfigError("TextTower: sequence length " + std::to_string(len) + " out of range");
    Var x = add(tokens, slice_rows(pos_, 0, len));
    for (const auto& b : blocks_) x = b.forward(x);
    x = layer_norm(x, final_ln_g_, final_ln_b_);
    return l2_normalize_rows(slice_rows(x, len - 1, len));
}

StageProjections::StageProjections(Params& params, const ToyConfig& cfg) {
    const int d = cfg.embed_dim;
    for (std::size_t i = 0; i < cfg.tap_blocks.size(); ++i) {
        const std::string idx = std::to_string(i + 1);
        patch_w_.push_back(params.create("proj/stage" + idx + "/patch_w", identity_init(d), true));
        patch_b_.push_back(params.create("proj/stage" + idx + "/patch_b", Tensor::zeros({d}), true));
        vocab_w_.push_back(params.create("proj/stage" + idx + "/vocab_w", identity_init(d), true));
        vocab_b_.push_back(params.create("proj/stage" + idx + "/vocab_b", Tensor::zeros({d}), true));
    }
}

Var StageProjections::patch(int stage, const Var& raw) const {
    if (stage < 0 || stage >= stages()) throw ConfigError("project_stage: unknown stage");
    return linear(raw, patch_w_[stage], patch_b_[stage]);
}

Var StageProjections::vocab(int stage, const Var& raw) const {
    if (stage < 0 || stage >= stages()) throw ConfigError("project_stage: unknown stage");
    return linear(raw, vocab_w_[stage], vocab_b_[stage]);
}

ImageProjector::ImageProjector(Params& params, const std::string& prefix, const ToyConfig& cfg, bool trainable) {
    const int d = cfg.embed_dim;
    const std::uint64_t seed = cfg.rng_seed;
    w1_ = params.create(prefix + "/w1", glorot_init({d, d}, d, d, seed, prefix + "/w1"), trainable);
    b1_ = params.create(prefix + "/b1", Tensor::zeros({d}), trainable);
    w2_ = params.create(prefix + "/w2", glorot_init({d, d}, d, d, seed, prefix + "/w2"), trainable);
    b2_ = params.create(prefix + "/b2", Tensor::zeros({d}), trainable);
}

Var ImageProjector::project(const Var& rows) const {
    return linear(gelu(linear(rows, w1_, b1_)), w2_, b2_);
}

}  // namespace fgl::enc
