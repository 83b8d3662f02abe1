#include "fgl/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>

namespace fgl::eval {

double pixel_auc(const ScoreMap& score, const BinaryMask& gt) {
    if (score.width != gt.width || score.height != gt.height)
        throw ShapeError("pixel_auc: score and ground truth sizes differ");
    const std::size_t n = gt.data.size();
    std::size_t n_pos = gt.positive_count();
    if (n_pos == 0 || n_pos == n)
        throw MetricError("pixel_auc: ground truth holds a single class, AUC undefined");
    const std::size_t n_neg = n - n_pos;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return score.data[a] < score.data[b]; });

    // doubled rank statistic stays integral, so the oracle comparison is exact
    double twice_rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && score.data[order[j]] == score.data[order[i]]) ++j;
        const double twice_midrank = static_cast<double>(i + 1 + j);  // 2 * (i+1 + j) / 2
        for (std::size_t k = i; k < j; ++k)
            if (gt.data[order[k]]) twice_rank_sum_pos += twice_midrank;
        i = j;
    }
    const double twice_u = twice_rank_sum_pos - static_cast<double>(n_pos) * (n_pos + 1);
    return twice_u / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double pixel_f1(const ScoreMap& score, const BinaryMask& gt, double tau) {
    if (score.width != gt.width || score.height != gt.height)
        throw ShapeError("pixel_f1: score and ground truth sizes differ");
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gt.data.size(); ++i) {
        const bool pred = score.data[i] >= tau;
        if (pred && gt.data[i]) ++tp;
        if (pred && !gt.data[i]) ++fp;
        if (!pred && gt.data[i]) ++fn;
    }
    const long denom = 2 * tp + fp + fn;
    if (denom == 0) return 0.0;
    return 2.0 * tp / static_cast<double>(denom);
}

double image_accuracy(const std::vector<int>& verdicts, const std::vector<int>& labels) {
    if (verdicts.size() != labels.size()) throw ContractError("image_accuracy: length mismatch");
    if (verdicts.empty()) throw ContractError("image_accuracy: empty input");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < verdicts.size(); ++i)
        if (verdicts[i] == labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(verdicts.size());
}

std::vector<std::string> rouge_tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string word;
    for (char ch : text + " ") {
        if (std::isalnum(static_cast<unsigned char>(ch))) {
            word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        } else if (!word.empty()) {
            tokens.push_back(word);
            word.clear();
        }
    }
    return tokens;
}

namespace {

RougeTriple make_triple(double overlap, double cand_total, double ref_total) {
    RougeTriple t;
    t.precision = cand_total > 0.0 ? overlap / cand_total : 0.0;
    t.recall = ref_total > 0.0 ? overlap / ref_total : 0.0;
    t.f1 = (t.precision + t.recall) > 0.0 ? 2.0 * t.precision * t.recall / (t.precision + t.recall) : 0.0;
    return t;
}

RougeTriple ngram_overlap(const std::vector<std::string>& cand, const std::vector<std::string>& ref, int n) {
    if (static_cast<int>(cand.size()) < n || static_cast<int>(ref.size()) < n)
        return make_triple(0.0, std::max<double>(0.0, static_cast<double>(cand.size()) - n + 1),
                           std::max<double>(0.0, static_cast<double>(ref.size()) - n + 1));
    auto grams = [n](const std::vector<std::string>& words) {
        std::map<std::vector<std::string>, long> counts;
        for (std::size_t i = 0; i + n <= words.size(); ++i)
            ++counts[std::vector<std::string>(words.begin() + i, words.begin() + i + n)];
        return counts;
    };
    const auto cg = grams(cand), rg = grams(ref);
    double overlap = 0.0;
    for (const auto& [gram, count] : cg) {
        auto it = rg.find(gram);
        if (it != rg.end()) overlap += std::min(count, it->second);
    }
    return make_triple(overlap, static_cast<double>(cand.size() - n + 1),
                       static_cast<double>(ref.size() - n + 1));
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace

RougeScores rouge(const std::string& candidate, const std::string& reference) {
    const auto cand = rouge_tokenize(candidate);
    const auto ref = rouge_tokenize(reference);
    if (cand.empty() || ref.empty()) throw ContractError("rouge: empty text after tokenization");

    RougeScores s;
    s.rouge1 = ngram_overlap(cand, ref, 1);
    s.rouge2 = ngram_overlap(cand, ref, 2);
    const double lcs = static_cast<double>(lcs_length(cand, ref));
    s.rougeL = make_triple(lcs, static_cast<double>(cand.size()), static_cast<double>(ref.size()));
    return s;
}

}  // namespace fgl::eval
