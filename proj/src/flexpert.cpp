#include "fgl/flexpert.hpp"

#include <cmath>
#include <fstream>

#include <opencv2/imgproc.hpp>

#include "fgl/checkpoint.hpp"
#include "fgl/metrics.hpp"
#include "fgl/optim.hpp"

namespace fgl::expert {

using namespace fgl::nn;

PromptBank::PromptBank(Params& params, const enc::TextTower& tower, const ToyConfig& cfg) {
    auto template_ids = [&](const std::string& text) {
        std::vector<int> ids = enc::TextTower::tokenize(text);
        if (static_cast<int>(ids.size()) != cfg.template_len)
            throw ConfigError("prompt template length != template_len");
        return ids;
    };
    const std::vector<int> auth_ids = template_ids("photo of a pristine");
    const std::vector<int> forg_ids = template_ids("photo of a forged");

    auto materialize = [&](const std::string& name, const std::vector<int>& ids) {
        Var rows = tower.embed_tokens(ids);
        return params.create(name, rows->value, false);
    };
    authentic_template_ = materialize("prompt_bank/authentic_template", auth_ids);
    forged_template_ = materialize("prompt_bank/forged_template", forg_ids);

    object_p_ = params.create("prompt_bank/object_p",
                              normal_init({cfg.object_embed_len, cfg.embed_dim}, 0.1, cfg.rng_seed,
                                          "prompt_bank/object_p"),
                              true);
    object_n_ = params.create("prompt_bank/object_n",
                              normal_init({cfg.object_embed_len, cfg.embed_dim}, 0.1, cfg.rng_seed,
                                          "prompt_bank/object_n"),
                              true);
    object_word_ = params.create("prompt_bank/object_word",
                                 tower.embed_tokens({enc::TextTower::token_id("object")})->value, false);
}

Var PromptBank::authentic_sequence(bool object_prompt) const {
    return concat_rows({authentic_template_, object_prompt ? object_p_ : object_word_});
}

Var PromptBank::forged_sequence(bool object_prompt) const {
    return concat_rows({forged_template_, object_prompt ? object_n_ : object_word_});
}

Var encode_text_prompts(const PromptBank& bank, const enc::TextTower& tower, bool object_prompt) {
    Var row_authentic = tower.encode_sequence(bank.authentic_sequence(object_prompt));
    Var row_forged = tower.encode_sequence(bank.forged_sequence(object_prompt));
    return concat_rows({row_authentic, row_forged});
}

Var cross_modal_reasoning(const std::vector<Var>& projected_patch, const Var& f_text) {
    if (projected_patch.empty()) throw ShapeError("cross_modal_reasoning: no stages");
    if (f_text->value.ndim() != 2 || f_text->value.rows() != 2)
        throw ShapeError("cross_modal_reasoning: F_text must have exactly 2 rows");
    Var acc;
    for (const auto& stage : projected_patch) {
        Var scores = softmax(matmul(stage, transpose(f_text)), 1);
        acc = acc ? add(acc, scores) : scores;
    }
    return affine(acc, 1.0 / static_cast<double>(projected_patch.size()), 0.0);
}

Var attention_fusion(const std::vector<Var>& projected_patch, const std::vector<Var>& projected_vocab,
                     int key_dim) {
    if (projected_patch.empty() || projected_patch.size() != projected_vocab.size())
        throw ShapeError("attention_fusion: stage count mismatch");
    Var acc;
    for (std::size_t i = 0; i < projected_patch.size(); ++i) {
        Var fused = scaled_dot_attention(projected_patch[i], projected_vocab[i], projected_vocab[i], key_dim);
        acc = acc ? add(acc, fused) : fused;
    }
    return affine(acc, 1.0 / static_cast<double>(projected_patch.size()), 0.0);
}

Var dice_loss(const Var& pred, const Tensor& target, double eps) {
    if (pred->value.numel() != target.numel())
        throw ShapeError("dice_loss: prediction and target sizes differ");
    const auto n = static_cast<int>(pred->value.numel());
    Var p = reshape(pred, {n});
    Var y = constant(Tensor({n}, target.data));
    Var numerator = affine(sum_all(mul(p, y)), 2.0, eps);
    Var denominator = affine(add(sum_all(p), sum_all(y)), 1.0, eps);
    return affine(div(numerator, denominator), -1.0, 1.0);
}

DecoderNet::DecoderNet(Params& params, const ToyConfig& cfg) : width_(16) {
    const int cin = 2 + 2 * cfg.embed_dim;
    const std::uint64_t seed = cfg.rng_seed;
    auto conv = [&](const std::string& name, int ic, int oc) {
        return params.create("decoder/" + name,
                             glorot_init({oc, ic, 3, 3}, ic * 9, oc * 9, seed, "decoder/" + name), true);
    };
    w1_ = conv("conv1_w", cin, width_);
    b1_ = params.create("decoder/conv1_b", Tensor::zeros({width_}), true);
    w2_ = conv("conv2_w", width_, width_);
    b2_ = params.create("decoder/conv2_b", Tensor::zeros({width_}), true);
    w3_ = conv("conv3_w", width_ + cin, width_);
    b3_ = params.create("decoder/conv3_b", Tensor::zeros({width_}), true);
    // small output-conv init keeps the sigmoid near 0.5 at the start, where
    // the dice gradient is strongest
    Tensor w4 = glorot_init({1, width_ + cin, 3, 3}, (width_ + cin) * 9, 9, seed, "decoder/conv4_w");
    for (double& v : w4.data) v *= 0.1;
    w4_ = params.create("decoder/conv4_w", std::move(w4), true);
    // start biased toward "authentic" so the dice up-pull on tampered pixels
    // does the work instead of fighting a saturated background
    b4_ = params.create("decoder/conv4_b", Tensor::full({1}, -2.0), true);
}

Var DecoderNet::decode(const Var& f_cross, const Var& f_enhanced, const Var& f_vocab, int out_h,
                       int out_w) const {
    const int p = f_cross->value.rows();
    if (f_enhanced->value.rows() != p || f_vocab->value.rows() != p)
        throw ShapeError("decode_mask: feature row counts differ");
    const int g = static_cast<int>(std::lround(std::sqrt(static_cast<double>(p))));
    if (g * g != p) throw ShapeError("decode_mask: patch count is not a perfect square");

    Var grid = rows_to_chw(concat_cols({f_cross, f_enhanced, f_vocab}), g, g);
    Var h = gelu(conv2d_3x3(grid, w1_, b1_));
    h = upsample_2x(h);
    h = gelu(conv2d_3x3(h, w2_, b2_));
    Var skip2 = resize_bilinear(grid, 2 * g, 2 * g);
    h = gelu(conv2d_3x3(concat_chw(h, skip2), w3_, b3_));
    h = upsample_2x(h);
    Var skip4 = resize_bilinear(grid, 4 * g, 4 * g);
    h = conv2d_3x3(concat_chw(h, skip4), w4_, b4_);
    return sigmoid(resize_bilinear(h, out_h, out_w));
}

FlExpert::FlExpert(const ToyConfig& cfg, FlExpertVariant variant, std::shared_ptr<Params> params)
    : cfg_(cfg),
      variant_(variant),
      params_(params ? std::move(params) : std::make_shared<Params>()),
      patch_tower_(*params_, "patch_enc", cfg, {.in_channels = 3, .trainable = false, .use_pos_embed = true}),
      vocab_tower_(*params_, "vocab_enc", cfg, {.in_channels = 3, .trainable = true, .use_pos_embed = true}),
      text_tower_(*params_, "text_tower", cfg),
      bank_(*params_, text_tower_, cfg),
      proj_(*params_, cfg),
      decoder_(*params_, cfg) {
    cfg_.validate();
}

PreparedInput FlExpert::prepare(const RasterImage& img) const {
    if (img.width != cfg_.image_size || img.height != cfg_.image_size)
        throw ShapeError("FL-Expert input must be " + std::to_string(cfg_.image_size) + "x" +
                         std::to_string(cfg_.image_size));
    PreparedInput in;
    in.patches = enc::patchify_image(img, cfg_.patch_size);
    enc::TowerOutput out = patch_tower_.encode(in.patches);
    for (const auto& tap : out.taps) in.patch_taps.push_back(tap->value);
    in.patch_final = out.final->value;
    return in;
}

Var FlExpert::text_features() const {
    return encode_text_prompts(bank_, text_tower_, variant_.object_prompt);
}

Var FlExpert::forward_prepared(const PreparedInput& in, const Var& f_text) const {
    if (in.patch_taps.size() != cfg_.tap_blocks.size())
        throw ShapeError("forward_prepared: tap count mismatch");

    std::vector<Var> raw_patch;
    raw_patch.reserve(in.patch_taps.size());
    for (const auto& t : in.patch_taps) raw_patch.push_back(constant(t));

    std::vector<Var> raw_vocab;
    Var f_vocab;
    if (variant_.vocab_encoder) {
        enc::TowerOutput vocab_out = vocab_tower_.encode(in.patches);
        raw_vocab = vocab_out.taps;
        f_vocab = vocab_out.final;
    } else {
        raw_vocab = raw_patch;
        f_vocab = constant(in.patch_final);
    }

    std::vector<Var> proj_patch, proj_vocab;
    for (std::size_t i = 0; i < raw_patch.size(); ++i) {
        proj_patch.push_back(proj_.patch(static_cast<int>(i), raw_patch[i]));
        proj_vocab.push_back(proj_.vocab(static_cast<int>(i), raw_vocab[i]));
    }

    Var f_cross = cross_modal_reasoning(proj_patch, f_text);
    Var f_enhanced = attention_fusion(proj_patch, proj_vocab, cfg_.key_dim);
    return decoder_.decode(f_cross, f_enhanced, f_vocab, cfg_.image_size, cfg_.image_size);
}

Var FlExpert::forward(const RasterImage& img) const {
    return forward_prepared(prepare(img), text_features());
}

ScoreMap FlExpert::localize(const RasterImage& img) const {
    const bool native = img.width == cfg_.image_size && img.height == cfg_.image_size;
    RasterImage input = img;
    if (!native) {
        cv::Mat rgb(img.height, img.width, CV_8UC3, const_cast<std::uint8_t*>(img.data.data()));
        cv::Mat resized;
        cv::resize(rgb, resized, cv::Size(cfg_.image_size, cfg_.image_size), 0, 0, cv::INTER_LINEAR);
        std::vector<std::uint8_t> data(resized.total() * 3);
        for (int y = 0; y < resized.rows; ++y)
            std::copy_n(resized.ptr<std::uint8_t>(y), static_cast<std::size_t>(resized.cols) * 3,
                        data.data() + static_cast<std::size_t>(y) * resized.cols * 3);
        input = RasterImage(cfg_.image_size, cfg_.image_size, std::move(data));
    }
    Var score = forward(input);
    if (!native) score = resize_bilinear(score, img.height, img.width);

    std::vector<float> data(score->value.data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
        data[i] = std::min(1.0f, std::max(0.0f, static_cast<float>(score->value.data[i])));
    return ScoreMap(img.width, img.height, std::move(data));
}

TrainStats train_flexpert(FlExpert& model, const DatasetManifest& manifest, const std::string& base_dir,
                          const TrainOptions& opts) {
    if (manifest.entries.empty()) throw ConfigError("train_flexpert: empty manifest");
    const ToyConfig& cfg = model.config();

    struct Sample {
        PreparedInput input;
        Tensor target;  // flattened mask
        BinaryMask mask;
        bool has_both_classes;
    };
    std::vector<Sample> samples;
    for (const auto& e : manifest.entries) {
        RasterImage img = load_image(resolve_path(base_dir, e.image_path));
        BinaryMask mask = load_mask(resolve_path(base_dir, e.mask_path));
        if (img.width != cfg.image_size || img.height != cfg.image_size)
            throw ConfigError("train_flexpert: entry " + e.id + " size differs from config image_size");
        if (mask.width != img.width || mask.height != img.height)
            throw ConfigError("train_flexpert: entry " + e.id + " mask size differs from image");
        Sample s;
        s.input = model.prepare(img);
        s.target = Tensor::zeros({cfg.image_size * cfg.image_size});
        for (std::size_t i = 0; i < mask.data.size(); ++i) s.target.data[i] = mask.data[i];
        const auto pos = mask.positive_count();
        s.has_both_classes = pos > 0 && pos < mask.data.size();
        s.mask = std::move(mask);
        samples.push_back(std::move(s));
    }

    Adam adam(model.params(), opts.learning_rate);
    TrainStats stats;

    std::ofstream curve;
    if (!opts.curve_out.empty()) {
        curve.open(opts.curve_out);
        if (!curve) throw IoError("cannot write loss curve: " + opts.curve_out);
        curve << "step,dice,pixel_auc\n";
    }

    for (int step = 0; step < opts.steps; ++step) {
        if (opts.warmup_steps > 0)
            adam.set_learning_rate(opts.learning_rate *
                                   std::min(1.0, (step + 1.0) / opts.warmup_steps));
        adam.zero_grad();
        Var f_text = model.text_features();

        Var dice_sum;
        double auc_sum = 0.0;
        int auc_count = 0;
        for (const auto& s : samples) {
            Var score = model.forward_prepared(s.input, f_text);
            Var loss = dice_loss(score, s.target);
            dice_sum = dice_sum ? add(dice_sum, loss) : loss;

            if (s.has_both_classes) {
                std::vector<float> sm(score->value.data.size());
                for (std::size_t i = 0; i < sm.size(); ++i)
                    sm[i] = std::min(1.0f, std::max(0.0f, static_cast<float>(score->value.data[i])));
                auc_sum += eval::pixel_auc(ScoreMap(cfg.image_size, cfg.image_size, std::move(sm)), s.mask);
                ++auc_count;
            }
        }
        Var mean_dice = affine(dice_sum, 1.0 / static_cast<double>(samples.size()), 0.0);
        const double dice_value = mean_dice->value.data[0];
        const double auc_value = auc_count ? auc_sum / auc_count : 0.0;

        Var objective = affine(mean_dice, cfg.lambda2, 0.0);
        backward(objective);
        adam.step();

        stats.dice_curve.push_back(dice_value);
        stats.auc_curve.push_back(auc_value);
        if (curve.is_open()) curve << step << "," << dice_value << "," << auc_value << "\n";
    }

    stats.final_dice = stats.dice_curve.empty() ? 1.0 : stats.dice_curve.back();
    stats.final_auc = stats.auc_curve.empty() ? 0.0 : stats.auc_curve.back();
    if (!opts.checkpoint_out.empty()) save_checkpoint(opts.checkpoint_out, model.params());
    return stats;
}

}  // namespace fgl::expert
