#pragma once

#include <string>

#include "fgl/image.hpp"
#include "fgl/manifest.hpp"

namespace fgl {

// Deterministic explanation text for a verdict. Forged verdicts name the
// forgery type, the tight bounding box of the {score >= 0.5} region and the
// area fraction rounded to whole percent; a forged verdict whose thresholded
// region is empty is a contract error.
std::string render_explanation(Label verdict, ForgeryType type, const ScoreMap& mask);

// Reference caption written into manifests at synthesis time; uses the same
// template family so explanation consistency is measurable with ROUGE.
std::string reference_caption(Label label, ForgeryType type, const BinaryMask& mask);

}  // namespace fgl
