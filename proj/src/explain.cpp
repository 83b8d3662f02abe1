#include "fgl/explain.hpp"

#include <algorithm>
#include <cmath>

namespace fgl {

namespace {

std::string type_phrase(ForgeryType type) {
    switch (type) {
        case ForgeryType::splicing: return "splicing";
        case ForgeryType::copy_move: return "copy-move";
        case ForgeryType::removal: return "removal";
        case ForgeryType::none: return "unknown";
    }
    throw ContractError("bad forgery type");
}

std::string rationale(ForgeryType type) {
    switch (type) {
        case ForgeryType::splicing:
            return "The region contains content pasted from another image and its texture is "
                   "inconsistent with the surrounding area.";
        case ForgeryType::copy_move:
            return "The region duplicates content that appears elsewhere in the same image.";
        case ForgeryType::removal:
            return "The region was erased and refilled with smooth content interpolated from its boundary.";
        case ForgeryType::none:
            return "The region is statistically inconsistent with the rest of the image.";
    }
    throw ContractError("bad forgery type");
}

}  // namespace

std::string render_explanation(Label verdict, ForgeryType type, const ScoreMap& mask) {
    if (verdict == Label::authentic) return "No, there is no forgery information in this image.";

    int x0 = mask.width, y0 = mask.height, x1 = -1, y1 = -1;
    long positive = 0;
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (mask.at(x, y) >= 0.5f) {
                ++positive;
                x0 = std::min(x0, x);
                y0 = std::min(y0, y);
                x1 = std::max(x1, x);
                y1 = std::max(y1, y);
            }
        }
    }
    if (positive == 0) throw ContractError("render_explanation: forged verdict with empty mask region");

    const long pct = std::lround(100.0 * positive / (static_cast<double>(mask.width) * mask.height));
    std::string text = "Yes, this image has been tampered with. The forgery type is " + type_phrase(type) +
                       ". The tampered region lies within bounding box [" + std::to_string(x0) + ", " +
                       std::to_string(y0) + ", " + std::to_string(x1) + ", " + std::to_string(y1) +
                       "] and covers about " + std::to_string(pct) + "% of the image. " + rationale(type);
    return text;
}

std::string reference_caption(Label label, ForgeryType type, const BinaryMask& mask) {
    if (label == Label::authentic) return render_explanation(Label::authentic, ForgeryType::none, ScoreMap());
    return render_explanation(Label::forged, type, mask_to_score(mask));
}

}  // namespace fgl
