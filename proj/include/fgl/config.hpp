#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fgl/error.hpp"

namespace fgl {

// Desk-scale model geometry. Defaults mirror the full-scale layout at 1/5
// resolution: 64x64 input, 8x8 patches (64 tokens), four evenly spaced
// encoder taps.
struct ToyConfig {
    int image_size = 64;
    int patch_size = 8;
    int embed_dim = 64;   // d
    int key_dim = 64;     // d_e
    int encoder_depth = 8;
    std::vector<int> tap_blocks = {2, 4, 6, 8};
    int template_len = 4;      // E
    int object_embed_len = 12; // m
    int mask_tokens = 4;       // k
    int prompt_tokens = 4;     // n_p
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    std::uint64_t rng_seed = 0;

    int grid() const { return image_size / patch_size; }
    int patches() const { return grid() * grid(); }

    void validate() const {
        if (image_size <= 0 || patch_size <= 0 || image_size % patch_size != 0)
            throw ConfigError("image_size must be a positive multiple of patch_size");
        if (embed_dim <= 0 || key_dim <= 0) throw ConfigError("embed dims must be positive");
        if (encoder_depth <= 0) throw ConfigError("encoder_depth must be positive");
        if (tap_blocks.empty()) throw ConfigError("tap_blocks must be nonempty");
        for (std::size_t i = 0; i < tap_blocks.size(); ++i) {
            if (tap_blocks[i] < 1 || tap_blocks[i] > encoder_depth)
                throw ConfigError("tap_blocks entries must lie in [1, encoder_depth]");
            if (i > 0 && tap_blocks[i] <= tap_blocks[i - 1])
                throw ConfigError("tap_blocks must be strictly increasing");
        }
        if (template_len < 1) throw ConfigError("template_len must be >= 1");
        if (object_embed_len < 1) throw ConfigError("object_embed_len (m) must be >= 1");
        if (mask_tokens < 1 || prompt_tokens < 0) throw ConfigError("bad token counts");
        if (lambda1 < 0.0 || lambda2 < 0.0) throw ConfigError("loss weights must be >= 0");
    }
};

inline void to_json(nlohmann::json& j, const ToyConfig& c) {
    j = nlohmann::json{{"image_size", c.image_size},
                       {"patch_size", c.patch_size},
                       {"embed_dim", c.embed_dim},
                       {"key_dim", c.key_dim},
                       {"encoder_depth", c.encoder_depth},
                       {"tap_blocks", c.tap_blocks},
                       {"template_len", c.template_len},
                       {"object_embed_len", c.object_embed_len},
                       {"mask_tokens", c.mask_tokens},
                       {"prompt_tokens", c.prompt_tokens},
                       {"lambda1", c.lambda1},
                       {"lambda2", c.lambda2},
                       {"rng_seed", c.rng_seed}};
}

inline void from_json(const nlohmann::json& j, ToyConfig& c) {
    ToyConfig defaults;
    c.image_size = j.value("image_size", defaults.image_size);
    c.patch_size = j.value("patch_size", defaults.patch_size);
    c.embed_dim = j.value("embed_dim", defaults.embed_dim);
    c.key_dim = j.value("key_dim", defaults.key_dim);
    c.encoder_depth = j.value("encoder_depth", defaults.encoder_depth);
    c.tap_blocks = j.value("tap_blocks", defaults.tap_blocks);
    c.template_len = j.value("template_len", defaults.template_len);
    c.object_embed_len = j.value("object_embed_len", defaults.object_embed_len);
    c.mask_tokens = j.value("mask_tokens", defaults.mask_tokens);
    c.prompt_tokens = j.value("prompt_tokens", defaults.prompt_tokens);
    c.lambda1 = j.value("lambda1", defaults.lambda1);
    c.lambda2 = j.value("lambda2", defaults.lambda2);
    c.rng_seed = j.value("rng_seed", defaults.rng_seed);
}

}  // namespace fgl
