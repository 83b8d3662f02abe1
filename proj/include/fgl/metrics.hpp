#pragma once

#include <string>
#include <vector>

#include "fgl/image.hpp"

namespace fgl::eval {

// Mann-Whitney rank AUC with ties counted one half: the fraction of
// (positive, negative) pixel pairs ordered correctly. Throws MetricError when
// the ground truth contains a single class.
double pixel_auc(const ScoreMap& score, const BinaryMask& gt);

// F1 of {score >= tau} against the ground truth; 0 when no pixel crosses the
// threshold while positives exist.
double pixel_f1(const ScoreMap& score, const BinaryMask& gt, double tau = 0.5);

// Fraction of exactly matching entries. 0 = authentic, 1 = forged.
double image_accuracy(const std::vector<int>& verdicts, const std::vector<int>& labels);

struct RougeTriple {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct RougeScores {
    RougeTriple rouge1, rouge2, rougeL;
};

// Lowercase, split on non-alphanumerics.
std::vector<std::string> rouge_tokenize(const std::string& text);

// ROUGE-1/2 via clipped n-gram overlap, ROUGE-L via longest common
// subsequence; f1 is the harmonic mean of precision and recall. Throws
// ContractError when either side tokenizes to nothing.
RougeScores rouge(const std::string& candidate, const std::string& reference);

}  // namespace fgl::eval
