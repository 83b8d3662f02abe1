#include "fgl/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fgl/bridge.hpp"
#include "fgl/checkpoint.hpp"
#include "fgl/datagen.hpp"
#include "fgl/explain.hpp"
#include "fgl/gradcheck.hpp"
#include "fgl/harness.hpp"

namespace fgl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string run_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int jobs = 1;
    std::string precision = "f32";
};

void add_common(CLI::App* cmd, CommonOpts& c) {
    cmd->add_option("--config", c.config_path, "JSON file with model configuration");
    cmd->add_option("--run-dir", c.run_dir, "run directory (default: $FGL_RUN_DIR or runs/<command>)");
    cmd->add_option("--seed", c.seed, "seed feeding all randomness")->each([&](const std::string&) {
        c.seed_set = true;
    });
    cmd->add_option("--jobs", c.jobs, "worker count for data synthesis and evaluation");
    cmd->add_option("--precision", c.precision, "compute precision: f32 or f64")
        ->check(CLI::IsMember({"f32", "f64"}));
}

ToyConfig load_toy_config(const CommonOpts& c) {
    ToyConfig cfg;
    if (!c.config_path.empty()) {
        std::ifstream in(c.config_path);
        if (!in) throw IoError("cannot open config: " + c.config_path);
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw FormatError(std::string("bad config JSON: ") + e.what());
        }
        cfg = j.get<ToyConfig>();
    }
    if (c.seed_set) cfg.rng_seed = c.seed;
    cfg.validate();
    return cfg;
}

// Resolved run directory with config.json and log.txt; every command writes
// its complete provenance there.
struct Run {
    fs::path dir;
    std::ofstream log;

    Run(const std::string& command, const CommonOpts& c, const ToyConfig& cfg, const json& extra) {
        std::string base = c.run_dir;
        if (base.empty()) {
            if (const char* env = std::getenv("FGL_RUN_DIR")) base = env;
        }
        if (base.empty()) base = (fs::path("runs") / command).string();
        dir = base;
        fs::create_directories(dir / "checkpoints");
        fs::create_directories(dir / "outputs");

        json resolved;
        resolved["command"] = command;
        resolved["toy_config"] = cfg;
        resolved["seed"] = cfg.rng_seed;
        resolved["jobs"] = c.jobs;
        resolved["precision"] = c.precision;
        resolved["options"] = extra;
        std::ofstream cf(dir / "config.json");
        if (!cf) throw IoError("cannot write run config: " + (dir / "config.json").string());
        cf << resolved.dump(2) << "\n";

        log.open(dir / "log.txt", std::ios::app);
    }

    void line(const std::string& s) {
        std::cout << s << "\n";
        if (log.is_open()) log << s << "\n";
    }

    std::string checkpoint(const std::string& name) const { return (dir / "checkpoints" / name).string(); }
    std::string output(const std::string& name) const { return (dir / "outputs" / name).string(); }
};

nn::PrecisionGuard precision_guard(const CommonOpts& c) {
    return nn::PrecisionGuard(c.precision == "f64" ? nn::Precision::f64 : nn::Precision::f32);
}

std::vector<ForgeryType> parse_types(const std::string& csv) {
    std::vector<ForgeryType> types;
    std::string item;
    for (char ch : csv + ",") {
        if (ch == ',') {
            if (!item.empty()) types.push_back(forgery_type_from_string(item));
            item.clear();
        } else {
            item.push_back(ch);
        }
    }
    return types;
}

std::vector<DistortionSpec> load_policy(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open distortion policy: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad policy JSON: ") + e.what());
    }
    std::vector<DistortionSpec> specs;
    for (const auto& je : j) {
        const std::string kind = je.at("kind").get<std::string>();
        DistortionSpec d;
        if (kind == "resize") d = DistortionSpec::resize(je.at("scale").get<double>());
        else if (kind == "blur") d = DistortionSpec::blur(je.at("kernel").get<int>());
        else if (kind == "noise") d = DistortionSpec::noise(je.at("sigma").get<double>());
        else if (kind == "jpeg") d = DistortionSpec::jpeg(je.at("quality").get<int>());
        else throw FormatError("unknown distortion kind: " + kind);
        d.validate();
        specs.push_back(d);
    }
    return specs;
}

std::string manifest_dir(const std::string& manifest_path) {
    return fs::path(manifest_path).parent_path().string();
}

// -------------------------------------------------------------------------

int cmd_synth(const CommonOpts& common, const std::string& out_dir, int n_forged, int n_authentic,
              const std::string& types_csv, int image_size, const std::string& policy_path) {
    auto guard = precision_guard(common);
    ToyConfig cfg = load_toy_config(common);
    json extra{{"out", out_dir}, {"n_forged", n_forged}, {"n_authentic", n_authentic}, {"types", types_csv}};
    Run run("synth", common, cfg, extra);

    datagen::SynthesisRequest req;
    req.n_forged = n_forged;
    req.n_authentic = n_authentic;
    req.seed = cfg.rng_seed;
    req.image_size = image_size > 0 ? image_size : cfg.image_size;
    if (!types_csv.empty()) req.type_mix = parse_types(types_csv);
    if (!policy_path.empty()) req.distortion_policy = load_policy(policy_path);

    DatasetManifest manifest = datagen::build_dataset(req, out_dir, common.jobs);
    const auto violations = validate_manifest(manifest, out_dir);
    run.line("synthesized " + std::to_string(manifest.entries.size()) + " entries into " + out_dir);
    run.line(std::to_string(violations.size()) + " violations");
    return violations.empty() ? 0 : 1;
}

int cmd_train_flexpert(const CommonOpts& common, const std::string& manifest_path, int steps, double lr,
                       std::string checkpoint_out, bool no_object_prompt, bool no_vocab_encoder,
                       const std::vector<int>& tap_override) {
    auto guard = precision_guard(common);
    ToyConfig cfg = load_toy_config(common);
    if (!tap_override.empty()) cfg.tap_blocks = tap_override;
    cfg.validate();
    json extra{{"manifest", manifest_path},
               {"steps", steps},
               {"learning_rate", lr},
               {"object_prompt", !no_object_prompt},
               {"vocab_encoder", !no_vocab_encoder}};
    Run run("train-flexpert", common, cfg, extra);
    if (checkpoint_out.empty()) checkpoint_out = run.checkpoint("flexpert.fgl");

    DatasetManifest manifest = DatasetManifest::load(manifest_path);
    expert::FlExpertVariant variant{.object_prompt = !no_object_prompt, .vocab_encoder = !no_vocab_encoder};
    expert::FlExpert model(cfg, variant);

    expert::TrainOptions opts;
    opts.steps = steps;
    opts.learning_rate = lr;
    opts.checkpoint_out = checkpoint_out;
    opts.curve_out = run.output("flexpert_curve.csv");
    expert::TrainStats stats = expert::train_flexpert(model, manifest, manifest_dir(manifest_path), opts);

    run.line("final dice " + std::to_string(stats.final_dice) + ", pixel AUC " + std::to_string(stats.final_auc));
    run.line("checkpoint " + checkpoint_out);
    return 0;
}

int cmd_train_bridge(const CommonOpts& common, const std::string& manifest_path,
                     const std::string& flexpert_checkpoint, int steps, double lr,
                     std::string checkpoint_out) {
    auto guard = precision_guard(common);
    ToyConfig cfg = load_toy_config(common);
    json extra{{"manifest", manifest_path}, {"flexpert_checkpoint", flexpert_checkpoint}, {"steps", steps}};
    Run run("train-bridge", common, cfg, extra);
    if (checkpoint_out.empty()) checkpoint_out = run.checkpoint("bridge.fgl");
    if (flexpert_checkpoint.empty()) throw ConfigError("train-bridge requires --flexpert-checkpoint");

    DatasetManifest manifest = DatasetManifest::load(manifest_path);
    bridge::Bridge model(cfg);
    {
        // restore the FL-Expert half; bridge-only tensors keep their init
        auto tensors = nn::read_checkpoint(flexpert_checkpoint);
        for (const auto& p : model.params().items()) {
            auto it = tensors.find(p.name);
            if (it != tensors.end()) {
                if (it->second.shape != p.node->value.shape)
                    throw ShapeError("checkpoint shape mismatch for " + p.name);
                p.node->value = it->second;
            }
        }
    }

    bridge::BridgeTrainOptions opts;
    opts.steps = steps;
    opts.learning_rate = lr;
    opts.checkpoint_out = checkpoint_out;
    opts.curve_out = run.output("bridge_curve.csv");
    bridge::BridgeTrainStats stats = bridge::train_bridge(model, manifest, manifest_dir(manifest_path), opts);

    run.line("final training accuracy " + std::to_string(stats.final_accuracy));
    run.line("checkpoint " + checkpoint_out);
    return 0;
}

int cmd_localize(const CommonOpts& common, const std::string& checkpoint, const std::string& image_path,
                 std::string out_path, const std::string& png_path) {
    auto guard = precision_guard(common);
    ToyConfig cfg = load_toy_config(common);
    Run run("localize", common, cfg, json{{"checkpoint", checkpoint}, {"image", image_path}});
    if (out_path.empty()) out_path = run.output("score.f32");

    expert::FlExpert model(cfg);
    nn::load_checkpoint(checkpoint, model.params());
    ScoreMap score = model.localize(load_image(image_path));
    save_score(score, out_path);
    if (!png_path.empty()) save_mask(threshold_score(score), png_path);
    run.line("score map " + out_path);
    return 0;
}

int cmd_detect(const CommonOpts& common, const std::string& checkpoint, const std::string& image_path,
               const std::string& gt_mask_path) {
    auto guard = precision_guard(common);
    ToyConfig cfg = load_toy_config(common);
    Run run("detect", common, cfg, json{{"checkpoint", checkpoint}, {"image", image_path}});

    bridge::Bridge model(cfg);
    nn::load_checkpoint(checkpoint, model.params());
    RasterImage img = load_image(image_path);
    bridge::Decision d;
    if (!gt_mask_path.empty()) {
        ScoreMap gt = mask_to_score(load_mask(gt_mask_path));
        d = model.detect(img, &gt);
    } else {
        d = model.detect(img);
    }
    run.line("verdict: " + to_string(d.verdict));
    run.line("logits: authentic " + std::to_string(d.logit_authentic) + ", forged " +
             std::to_string(d.logit_forged));
    return 0;
}

int cmd_explain(const CommonOpts& common, const std::string& checkpoint, const std::string& image_path,
                const std::string& type_name) {
    auto guard = precision_guard(common);
    ToyConfig cfg = load_toy_config(common);
    Run run("explain", common, cfg, json{{"checkpoint", checkpoint}, {"image", image_path}});

    bridge::Bridge model(cfg);
    nn::load_checkpoint(checkpoint, model.params());
    const ForgeryType type = type_name.empty() ? ForgeryType::none : forgery_type_from_string(type_name);
    run.line(model.explain(load_image(image_path), type));
    return 0;
}

int cmd_eval_loc(const CommonOpts& common, const std::string& checkpoint, const std::string& manifest_path) {
    auto guard = precision_guard(common);
    ToyConfig cfg = load_toy_config(common);
    Run run("eval-loc", common, cfg, json{{"checkpoint", checkpoint}, {"manifest", manifest_path}});

    expert::FlExpert model(cfg);
    {
        auto tensors = nn::read_checkpoint(checkpoint);
        for (const auto& p : model.params().items()) {
            auto it = tensors.find(p.name);
            if (it == tensors.end()) throw FormatError("checkpoint missing parameter: " + p.name);
            p.node->value = it->second;
        }
    }
    DatasetManifest manifest = DatasetManifest::load(manifest_path);
    auto result = eval::evaluate_localization(model, manifest, manifest_dir(manifest_path));

    std::vector<std::vector<std::string>> rows;
    for (const auto& r : result.per_image)
        rows.push_back({r.id, r.auc_defined ? std::to_string(r.auc) : "undefined", std::to_string(r.f1)});
    eval::write_csv(run.output("localization.csv"), {"id", "pixel_auc", "pixel_f1"}, rows);

    json summary{{"mean_pixel_auc", result.mean_auc},
                 {"mean_pixel_f1", result.mean_f1},
                 {"skipped_single_class", result.skipped}};
    std::ofstream(run.output("localization.json")) << summary.dump(2) << "\n";
    run.line("mean pixel AUC " + std::to_string(result.mean_auc) + ", mean pixel F1 " +
             std::to_string(result.mean_f1) + " (" + std::to_string(result.skipped) + " skipped)");
    return 0;
}

int cmd_eval_det(const CommonOpts& common, const std::string& checkpoint, const std::string& manifest_path,
                 bool use_gt_mask) {
    auto guard = precision_guard(common);
    ToyConfig cfg = load_toy_config(common);
    Run run("eval-det", common, cfg, json{{"checkpoint", checkpoint}, {"manifest", manifest_path}});

    bridge::Bridge model(cfg);
    nn::load_checkpoint(checkpoint, model.params());
    DatasetManifest manifest = DatasetManifest::load(manifest_path);
    auto result = eval::evaluate_detection(model, manifest, manifest_dir(manifest_path), use_gt_mask);

    std::vector<std::vector<std::string>> rows;
    for (const auto& r : result.per_image)
        rows.push_back({r.id, to_string(r.verdict), std::to_string(r.logit_authentic),
                        std::to_string(r.logit_forged)});
    eval::write_csv(run.output("detection.csv"), {"id", "verdict", "logit_authentic", "logit_forged"}, rows);
    run.line("image-level accuracy " + std::to_string(result.accuracy));
    return 0;
}

int cmd_eval_explain(const CommonOpts& common, const std::string& checkpoint,
                     const std::string& manifest_path) {
    auto guard = precision_guard(common);
    ToyConfig cfg = load_toy_config(common);
    Run run("eval-explain", common, cfg, json{{"checkpoint", checkpoint}, {"manifest", manifest_path}});

    bridge::Bridge model(cfg);
    nn::load_checkpoint(checkpoint, model.params());
    DatasetManifest manifest = DatasetManifest::load(manifest_path);
    auto result = eval::evaluate_explanations(model, manifest, manifest_dir(manifest_path));

    std::vector<std::vector<std::string>> rows;
    for (const auto& r : result.per_image)
        rows.push_back({r.id, std::to_string(r.scores.rouge1.f1), std::to_string(r.scores.rouge2.f1),
                        std::to_string(r.scores.rougeL.f1)});
    eval::write_csv(run.output("rouge.csv"), {"id", "rouge1_f1", "rouge2_f1", "rougeL_f1"}, rows);
    run.line("ROUGE-1 " + std::to_string(result.mean.rouge1.f1) + ", ROUGE-2 " +
             std::to_string(result.mean.rouge2.f1) + ", ROUGE-L " + std::to_string(result.mean.rougeL.f1));
    return 0;
}

int cmd_sweep_robust(const CommonOpts& common, const std::string& checkpoint,
                     const std::string& manifest_path, const std::string& ladder_path) {
    auto guard = precision_guard(common);
    ToyConfig cfg = load_toy_config(common);
    Run run("sweep-robust", common, cfg, json{{"checkpoint", checkpoint}, {"manifest", manifest_path}});

    expert::FlExpert model(cfg);
    {
        auto tensors = nn::read_checkpoint(checkpoint);
        for (const auto& p : model.params().items()) {
            auto it = tensors.find(p.name);
            if (it == tensors.end()) throw FormatError("checkpoint missing parameter: " + p.name);
            p.node->value = it->second;
        }
    }
    DatasetManifest manifest = DatasetManifest::load(manifest_path);
    const auto ladder = ladder_path.empty() ? eval::default_robustness_ladder() : load_policy(ladder_path);
    auto rows = eval::robustness_sweep(model, manifest, manifest_dir(manifest_path), ladder);

    std::vector<std::vector<std::string>> csv;
    for (const auto& r : rows) {
        csv.push_back({r.rung, std::to_string(r.mean_auc), std::to_string(r.images)});
        run.line(r.rung + ": mean pixel AUC " + std::to_string(r.mean_auc));
    }
    eval::write_csv(run.output("robustness.csv"), {"distortion", "mean_pixel_auc", "images"}, csv);
    return 0;
}

int cmd_sweep_m(const CommonOpts& common, const std::string& manifest_path, const std::string& m_csv,
                int steps, double lr) {
    auto guard = precision_guard(common);
    ToyConfig cfg = load_toy_config(common);
    Run run("sweep-m", common, cfg, json{{"manifest", manifest_path}, {"m_values", m_csv}, {"steps", steps}});

    std::vector<int> m_values;
    std::string item;
    for (char ch : m_csv + ",") {
        if (ch == ',') {
            if (!item.empty()) m_values.push_back(std::stoi(item));
            item.clear();
        } else {
            item.push_back(ch);
        }
    }

    DatasetManifest manifest = DatasetManifest::load(manifest_path);
    auto rows = eval::embed_size_sweep(manifest, manifest_dir(manifest_path), cfg, m_values, steps, lr);

    std::vector<std::vector<std::string>> csv;
    for (const auto& r : rows) {
        csv.push_back({std::to_string(r.m), std::to_string(r.mean_f1), std::to_string(r.mean_auc)});
        run.line("m=" + std::to_string(r.m) + ": mean pixel F1 " + std::to_string(r.mean_f1));
    }
    eval::write_csv(run.output("embed_sweep.csv"), {"m", "mean_pixel_f1", "mean_pixel_auc"}, csv);
    return 0;
}

int cmd_gradcheck(const CommonOpts& common, int samples) {
    nn::PrecisionGuard guard(nn::Precision::f64);
    ToyConfig cfg = load_toy_config(common);
    Run run("gradcheck", common, cfg, json{{"samples_per_param", samples}});

    // synthetic fixture: one forged sample and its ground truth
    datagen::SynthesizedSample sample =
        datagen::synthesize_sample(mix_seed(cfg.rng_seed, 0x9c), ForgeryType::splicing, cfg.image_size);
    nn::Tensor target = nn::Tensor::zeros({cfg.image_size * cfg.image_size});
    for (std::size_t i = 0; i < sample.mask.data.size(); ++i) target.data[i] = sample.mask.data[i];

    nn::GradCheckOptions opts;
    opts.samples_per_param = samples;
    opts.seed = cfg.rng_seed;

    bridge::Bridge model(cfg);
    expert::PreparedInput input = model.flexpert().prepare(sample.forged);

    auto report_model = [&](const std::function<nn::Var()>& loss_fn, const std::string& label,
                            std::vector<std::string> prefixes) {
        nn::GradCheckOptions scoped = opts;
        scoped.name_prefixes = std::move(prefixes);
        auto report = nn::grad_check(model.params(), loss_fn, scoped);
        run.line(label + ": max relative error " + std::to_string(report.max_relative_error) + " over " +
                 std::to_string(report.per_parameter.size()) + " parameters -> " +
                 (report.pass ? "PASS" : "FAIL"));
        return report;
    };

    auto flexpert_loss = [&]() {
        nn::Var score = model.flexpert().forward_prepared(input, model.flexpert().text_features());
        return expert::dice_loss(score, target);
    };
    auto flexpert_report = report_model(flexpert_loss, "fl-expert + dice",
                                        {"vocab_enc/", "proj/", "prompt_bank/", "decoder/"});

    // the mask input is data during training, so the head check fixes it too
    const ScoreMap fixed_mask = model.flexpert().localize(sample.forged);
    auto bridge_loss = [&]() {
        bridge::TokenSequence seq = model.tokens_for(input, fixed_mask);
        return nn::cross_entropy_logits(model.head().logits(seq), 1);
    };
    auto bridge_report =
        report_model(bridge_loss, "mask-bridge head + cross entropy", {"mask_enc/", "prompt_tokens/", "head/"});

    const double max_err = std::max(flexpert_report.max_relative_error, bridge_report.max_relative_error);
    const bool pass = flexpert_report.pass && bridge_report.pass;
    run.line("max relative error " + std::to_string(max_err) + " vs tolerance 0.0001 -> " +
             (pass ? "PASS" : "FAIL"));
    return pass ? 0 : 1;
}

int cmd_validate(const CommonOpts& common, const std::string& manifest_path) {
    auto guard = precision_guard(common);
    ToyConfig cfg = load_toy_config(common);
    Run run("validate", common, cfg, json{{"manifest", manifest_path}});

    DatasetManifest manifest = DatasetManifest::load(manifest_path);
    const auto violations = validate_manifest(manifest, manifest_dir(manifest_path));
    run.line(std::to_string(violations.size()) + " violations");
    for (const auto& v : violations) run.line("  " + v.entry_id + ": " + v.rule + " (" + v.detail + ")");
    return violations.empty() ? 0 : 1;
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"forgery localization lab bench"};
    app.require_subcommand(0, 1);

    CommonOpts common;

    // synth
    std::string out_dir, types_csv, policy_path;
    int n_forged = 6, n_authentic = 6, image_size = 0;
    auto* synth = app.add_subcommand("synth", "synthesize a forgery dataset");
    add_common(synth, common);
    synth->add_option("--out", out_dir, "output directory")->required();
    synth->add_option("--n-forged", n_forged);
    synth->add_option("--n-authentic", n_authentic);
    synth->add_option("--types", types_csv, "comma list of splicing,copy-move,removal");
    synth->add_option("--image-size", image_size);
    synth->add_option("--distort", policy_path, "JSON list of distortion specs");

    // train-flexpert
    std::string manifest_path, checkpoint_out;
    int steps = 200;
    double lr = 3e-3;
    bool no_object_prompt = false, no_vocab_encoder = false;
    std::vector<int> tap_override;
    auto* trainf = app.add_subcommand("train-flexpert", "train the localization expert");
    add_common(trainf, common);
    trainf->add_option("--manifest", manifest_path)->required();
    trainf->add_option("--steps", steps);
    trainf->add_option("--lr", lr);
    trainf->add_option("--checkpoint-out", checkpoint_out);
    trainf->add_flag("--no-object-prompt", no_object_prompt, "ablation: literal object token");
    trainf->add_flag("--no-vocab-encoder", no_vocab_encoder, "ablation: reuse frozen features");
    trainf->add_option("--tap-blocks", tap_override, "override tap blocks, e.g. 8 for last-layer only");

    // train-bridge
    std::string flexpert_checkpoint;
    int bridge_steps = 300;
    double bridge_lr = 2e-3;
    std::string bridge_checkpoint_out, bridge_manifest;
    auto* trainb = app.add_subcommand("train-bridge", "train mask encoder, prompt tokens and decision head");
    add_common(trainb, common);
    trainb->add_option("--manifest", bridge_manifest)->required();
    trainb->add_option("--flexpert-checkpoint", flexpert_checkpoint)->required();
    trainb->add_option("--steps", bridge_steps);
    trainb->add_option("--lr", bridge_lr);
    trainb->add_option("--checkpoint-out", bridge_checkpoint_out);

    // localize / detect / explain
    std::string ckpt, image_path, out_path, png_path, gt_mask_path, type_name;
    auto* localize = app.add_subcommand("localize", "predict a forgery score map");
    add_common(localize, common);
    localize->add_option("--checkpoint", ckpt)->required();
    localize->add_option("--image", image_path)->required();
    localize->add_option("--out", out_path, "raw .f32 output path");
    localize->add_option("--png", png_path, "optional thresholded PNG");

    auto* detect = app.add_subcommand("detect", "image-level verdict");
    add_common(detect, common);
    detect->add_option("--checkpoint", ckpt)->required();
    detect->add_option("--image", image_path)->required();
    detect->add_option("--gt-mask", gt_mask_path, "feed this mask instead of the prediction");

    auto* explain = app.add_subcommand("explain", "verdict plus templated explanation");
    add_common(explain, common);
    explain->add_option("--checkpoint", ckpt)->required();
    explain->add_option("--image", image_path)->required();
    explain->add_option("--type", type_name, "forgery type slot for forged verdicts");

    // eval
    auto* evalloc = app.add_subcommand("eval-loc", "pixel AUC/F1 over a manifest");
    add_common(evalloc, common);
    evalloc->add_option("--checkpoint", ckpt)->required();
    evalloc->add_option("--manifest", manifest_path)->required();

    bool use_gt_mask = false;
    auto* evaldet = app.add_subcommand("eval-det", "image-level accuracy over a manifest");
    add_common(evaldet, common);
    evaldet->add_option("--checkpoint", ckpt)->required();
    evaldet->add_option("--manifest", manifest_path)->required();
    evaldet->add_flag("--use-gt-mask", use_gt_mask);

    auto* evalexp = app.add_subcommand("eval-explain", "ROUGE of explanations vs captions");
    add_common(evalexp, common);
    evalexp->add_option("--checkpoint", ckpt)->required();
    evalexp->add_option("--manifest", manifest_path)->required();

    std::string ladder_path;
    auto* sweepr = app.add_subcommand("sweep-robust", "distortion-ladder AUC sweep");
    add_common(sweepr, common);
    sweepr->add_option("--checkpoint", ckpt)->required();
    sweepr->add_option("--manifest", manifest_path)->required();
    sweepr->add_option("--ladder", ladder_path, "JSON list of distortion specs");

    std::string m_csv = "4,12,24";
    int sweep_steps = 60;
    double sweep_lr = 3e-3;
    auto* sweepm = app.add_subcommand("sweep-m", "object-embedding-size sweep");
    add_common(sweepm, common);
    sweepm->add_option("--manifest", manifest_path)->required();
    sweepm->add_option("--m", m_csv, "comma list of embedding lengths");
    sweepm->add_option("--steps", sweep_steps);
    sweepm->add_option("--lr", sweep_lr);

    int gc_samples = 6;
    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    add_common(gradcheck, common);
    gradcheck->add_option("--samples", gc_samples, "components checked per parameter tensor");

    auto* validate = app.add_subcommand("validate", "check manifest invariants");
    add_common(validate, common);
    validate->add_option("--manifest", manifest_path)->required();

    std::vector<const char*> argv;
    argv.push_back("fgl");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help() << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help() << "\n";
        return 1;
    }

    if (app.get_subcommands().empty()) {
        std::cerr << app.help() << "\n";
        return 1;
    }

    try {
        if (synth->parsed())
            return cmd_synth(common, out_dir, n_forged, n_authentic, types_csv, image_size, policy_path);
        if (trainf->parsed())
            return cmd_train_flexpert(common, manifest_path, steps, lr, checkpoint_out, no_object_prompt,
                                      no_vocab_encoder, tap_override);
        if (trainb->parsed())
            return cmd_train_bridge(common, bridge_manifest, flexpert_checkpoint, bridge_steps, bridge_lr,
                                    bridge_checkpoint_out);
        if (localize->parsed()) return cmd_localize(common, ckpt, image_path, out_path, png_path);
        if (detect->parsed()) return cmd_detect(common, ckpt, image_path, gt_mask_path);
        if (explain->parsed()) return cmd_explain(common, ckpt, image_path, type_name);
        if (evalloc->parsed()) return cmd_eval_loc(common, ckpt, manifest_path);
        if (evaldet->parsed()) return cmd_eval_det(common, ckpt, manifest_path, use_gt_mask);
        if (evalexp->parsed()) return cmd_eval_explain(common, ckpt, manifest_path);
        if (sweepr->parsed()) return cmd_sweep_robust(common, ckpt, manifest_path, ladder_path);
        if (sweepm->parsed()) return cmd_sweep_m(common, manifest_path, m_csv, sweep_steps, sweep_lr);
        if (gradcheck->parsed()) return cmd_gradcheck(common, gc_samples);
        if (validate->parsed()) return cmd_validate(common, manifest_path);
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

int dispatch(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return dispatch(args);
}

}  // namespace fgl::cli
