#include "fgl/bridge.hpp"

#include <cmath>
#include <fstream>

#include "fgl/checkpoint.hpp"
#include "fgl/explain.hpp"
#include "fgl/metrics.hpp"
#include "fgl/optim.hpp"

namespace fgl::bridge {

using namespace fgl::nn;

TokenSequence assemble_token_sequence(const Var& image_tokens, const Var& prompt_tokens,
                                      const Var& mask_tokens, const Var& text_tokens) {
    const int d = image_tokens->value.cols();
    for (const Var& part : {prompt_tokens, mask_tokens, text_tokens})
        if (part->value.ndim() != 2 || part->value.cols() != d)
            throw ShapeError("assemble_token_sequence: token dimension mismatch");
    TokenSequence seq;
    seq.image_len = image_tokens->value.rows();
    seq.prompt_len = prompt_tokens->value.rows();
    seq.mask_len = mask_tokens->value.rows();
    seq.text_len = text_tokens->value.rows();
    std::vector<Var> parts;
    for (const Var& part : {image_tokens, prompt_tokens, mask_tokens, text_tokens})
        if (part->value.rows() > 0) parts.push_back(part);
    seq.tokens = concat_rows(parts);
    return seq;
}

MaskEncoder::MaskEncoder(Params& params, const ToyConfig& cfg) : cfg_(cfg) {
    ToyConfig backbone_cfg = cfg;
    backbone_cfg.tap_blocks = {1};  // taps unused by the backbone
    backbone_ = std::make_unique<enc::VisionTower>(
        params, "mask_enc/backbone", backbone_cfg,
        enc::VisionTower::Options{.in_channels = 1, .trainable = true, .use_pos_embed = true, .depth = 2});

    const int d = cfg.embed_dim;
    const std::uint64_t seed = cfg.rng_seed;
    queries_ = params.create("mask_enc/queries", normal_init({cfg.mask_tokens, d}, 0.2, seed, "mask_enc/queries"),
                             true);
    auto w = [&](const std::string& name, int in, int out) {
        return params.create("mask_enc/" + name, glorot_init({in, out}, in, out, seed, "mask_enc/" + name), true);
    };
    auto zeros = [&](const std::string& name, int n) {
        return params.create("mask_enc/" + name, Tensor::zeros({n}), true);
    };
    wq_ = w("cross_wq", d, cfg.key_dim);
    bq_ = zeros("cross_bq", cfg.key_dim);
    wk_ = w("cross_wk", d, cfg.key_dim);
    bk_ = zeros("cross_bk", cfg.key_dim);
    wv_ = w("cross_wv", d, d);
    bv_ = zeros("cross_bv", d);
    wo_ = w("cross_wo", d, d);
    bo_ = zeros("cross_bo", d);
}

Var MaskEncoder::encode(const ScoreMap& score) const {
    if (score.width != cfg_.image_size || score.height != cfg_.image_size)
        throw ShapeError("MaskEncoder: score map must be " + std::to_string(cfg_.image_size) + "x" +
                         std::to_string(cfg_.image_size));
    enc::TowerOutput states = backbone_->encode(enc::patchify_score(score, cfg_.patch_size));
    Var att = scaled_dot_attention(linear(queries_, wq_, bq_), linear(states.final, wk_, bk_),
                                   linear(states.final, wv_, bv_), cfg_.key_dim);
    return linear(att, wo_, bo_);
}

DecisionHead::DecisionHead(Params& params, const ToyConfig& cfg) : cfg_(cfg) {
    const int d = cfg.embed_dim;
    const std::uint64_t seed = cfg.rng_seed;
    const int max_len = cfg.patches() + cfg.prompt_tokens + cfg.mask_tokens + 32;
    role_ = params.create("head/role", normal_init({4, d}, 0.02, seed, "head/role"), true);
    pos_ = params.create("head/pos", normal_init({max_len, d}, 0.02, seed, "head/pos"), true);
    for (int i = 0; i < 2; ++i)
        blocks_.emplace_back(params, "head/block" + std::to_string(i + 1), d, cfg.key_dim, 2 * d, true, seed);
    readout_w_ = params.create("head/readout_w", glorot_init({d, 2}, d, 2, seed, "head/readout_w"), true);
    readout_b_ = params.create("head/readout_b", Tensor::zeros({2}), true);
}

Var DecisionHead::logits(const TokenSequence& seq) const {
    const int len = seq.length();
    if (len < 1 || len > pos_->value.rows()) throw ShapeError("DecisionHead: sequence length out of range");
    if (seq.tokens->value.rows() != len) throw ShapeError("DecisionHead: inconsistent sequence");

    Tensor role_select = Tensor::zeros({len, 4});
    for (int i = 0; i < len; ++i) {
        int role = 0;
        if (i >= seq.prompt_begin()) role = 1;
        if (i >= seq.mask_begin()) role = 2;
        if (i >= seq.text_begin()) role = 3;
        role_select.at(i, role) = 1.0;
    }
    Var x = add(seq.tokens, add(matmul(constant(role_select), role_), slice_rows(pos_, 0, len)));
    for (const auto& b : blocks_) x = b.forward(x);

    Tensor pool = Tensor::full({1, len}, 1.0 / static_cast<double>(len));
    Var mean = matmul(constant(pool), x);
    return linear(mean, readout_w_, readout_b_);
}

Decision classify(const Var& logits) {
    if (logits->value.numel() != 2) throw ShapeError("classify: expected 2 logits");
    Decision d;
    d.logit_authentic = logits->value.data[0];
    d.logit_forged = logits->value.data[1];
    d.verdict = d.logit_forged > d.logit_authentic ? Label::forged : Label::authentic;
    return d;
}

Bridge::Bridge(const ToyConfig& cfg, expert::FlExpertVariant variant) : cfg_(cfg), flexpert_(cfg, variant) {
    Params& params = flexpert_.params();
    // stage-1 image-text alignment is out of scope, so the projector is fixed
    image_projector_ = std::make_unique<enc::ImageProjector>(params, "img_proj", cfg, false);
    prompt_tokens_ = params.create(
        "prompt_tokens/tokens",
        normal_init({cfg.prompt_tokens, cfg.embed_dim}, 0.1, cfg.rng_seed, "prompt_tokens/tokens"), true);
    mask_encoder_ = std::make_unique<MaskEncoder>(params, cfg);
    head_ = std::make_unique<DecisionHead>(params, cfg);
    instruction_ids_ = enc::TextTower::tokenize("is there any forgery information in this image");
}

TokenSequence Bridge::tokens_for(const expert::PreparedInput& input, const ScoreMap& mask) const {
    Var image_tokens = image_projector_->project(constant(input.patch_final));
    Var mask_tokens = mask_encoder_->encode(mask);
    Var text_tokens = flexpert_.text_tower().embed_tokens(instruction_ids_);
    return assemble_token_sequence(image_tokens, prompt_tokens_, mask_tokens, text_tokens);
}

Decision Bridge::detect(const RasterImage& img, const ScoreMap* mask_override) const {
    expert::PreparedInput input = flexpert_.prepare(img);
    const ScoreMap mask = mask_override ? *mask_override : flexpert_.localize(img);
    TokenSequence seq = tokens_for(input, mask);
    return classify(head_->logits(seq));
}

std::string Bridge::explain(const RasterImage& img, ForgeryType type_hint) const {
    const ScoreMap mask = flexpert_.localize(img);
    const Decision d = detect(img, &mask);
    if (d.verdict == Label::authentic) return render_explanation(Label::authentic, ForgeryType::none, mask);
    return render_explanation(Label::forged, type_hint, mask);
}

BridgeTrainStats train_bridge(Bridge& model, const DatasetManifest& manifest, const std::string& base_dir,
                              const BridgeTrainOptions& opts) {
    if (manifest.entries.empty()) throw ConfigError("train_bridge: empty manifest");
    const ToyConfig& cfg = model.config();

    struct Sample {
        expert::PreparedInput input;
        Tensor target;  // flattened mask
        int label;      // 0 authentic, 1 forged
    };
    std::vector<Sample> samples;
    for (const auto& e : manifest.entries) {
        RasterImage img = load_image(resolve_path(base_dir, e.image_path));
        BinaryMask mask = load_mask(resolve_path(base_dir, e.mask_path));
        if (img.width != cfg.image_size || img.height != cfg.image_size)
            throw ConfigError("train_bridge: entry " + e.id + " size differs from config image_size");
        Sample s;
        s.input = model.flexpert().prepare(img);
        s.target = Tensor::zeros({cfg.image_size * cfg.image_size});
        for (std::size_t i = 0; i < mask.data.size(); ++i) s.target.data[i] = mask.data[i];
        s.label = e.label == Label::forged ? 1 : 0;
        samples.push_back(std::move(s));
    }

    Adam adam(model.params(), opts.learning_rate);
    BridgeTrainStats stats;

    std::ofstream curve;
    if (!opts.curve_out.empty()) {
        curve.open(opts.curve_out);
        if (!curve) throw IoError("cannot write loss curve: " + opts.curve_out);
        curve << "step,loss,accuracy,dice\n";
    }

    for (int step = 0; step < opts.steps; ++step) {
        if (opts.warmup_steps > 0)
            adam.set_learning_rate(opts.learning_rate *
                                   std::min(1.0, (step + 1.0) / opts.warmup_steps));
        adam.zero_grad();
        Var f_text = model.flexpert().text_features();

        Var loss_sum;
        Var dice_sum;
        int correct = 0;
        for (const auto& s : samples) {
            Var score = model.flexpert().forward_prepared(s.input, f_text);
            Var dice = expert::dice_loss(score, s.target);

            // predicted mask enters the mask encoder as data
            std::vector<float> sm(score->value.data.size());
            for (std::size_t i = 0; i < sm.size(); ++i)
                sm[i] = std::min(1.0f, std::max(0.0f, static_cast<float>(score->value.data[i])));
            ScoreMap predicted(cfg.image_size, cfg.image_size, std::move(sm));

            TokenSequence seq = model.tokens_for(s.input, predicted);
            Var logits = model.head().logits(seq);
            Var ce = cross_entropy_logits(logits, s.label);

            Var loss = add(affine(ce, cfg.lambda1, 0.0), affine(dice, cfg.lambda2, 0.0));
            loss_sum = loss_sum ? add(loss_sum, loss) : loss;
            dice_sum = dice_sum ? add(dice_sum, dice) : dice;
            if (classify(logits).verdict == (s.label ? Label::forged : Label::authentic)) ++correct;
        }
        Var objective = affine(loss_sum, 1.0 / static_cast<double>(samples.size()), 0.0);
        backward(objective);
        adam.step();

        const double acc = static_cast<double>(correct) / static_cast<double>(samples.size());
        stats.loss_curve.push_back(objective->value.data[0]);
        stats.accuracy_curve.push_back(acc);
        stats.dice_curve.push_back(dice_sum->value.data[0] / static_cast<double>(samples.size()));
        if (curve.is_open())
            curve << step << "," << stats.loss_curve.back() << "," << acc << "," << stats.dice_curve.back()
                  << "\n";
    }

    stats.final_accuracy = stats.accuracy_curve.empty() ? 0.0 : stats.accuracy_curve.back();
    if (!opts.checkpoint_out.empty()) save_checkpoint(opts.checkpoint_out, model.params());
    return stats;
}

}  // namespace fgl::bridge
