#include "fgl/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "fgl/error.hpp"
#include "fgl/rng.hpp"

namespace fgl::nn {

GradCheckReport grad_check(Params& params, const std::function<Var()>& loss_fn, const GradCheckOptions& opts) {
    GradCheckReport report;

    params.zero_grad();
    Var loss = loss_fn();
    if (!loss || loss->value.numel() != 1) throw ContractError("grad_check: loss head must be scalar");
    backward(loss);

    std::vector<Tensor> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params.items()) analytic.push_back(p.node->ensure_grad());

    auto eval_loss = [&]() {
        Var l = loss_fn();
        if (!l || l->value.numel() != 1) throw ContractError("grad_check: loss head must be scalar");
        return l->value.data[0];
    };

    auto in_scope = [&](const std::string& name) {
        if (opts.name_prefixes.empty()) return true;
        for (const auto& prefix : opts.name_prefixes)
            if (name.rfind(prefix, 0) == 0) return true;
        return false;
    };

    for (std::size_t pi = 0; pi < params.items().size(); ++pi) {
        const auto& info = params.items()[pi];
        if (!info.trainable || !in_scope(info.name)) continue;
        auto& theta = info.node->value;
        const std::size_t count = theta.data.size();

        std::vector<std::size_t> idx;
        if (opts.samples_per_param <= 0 || static_cast<std::size_t>(opts.samples_per_param) >= count) {
            idx.resize(count);
            for (std::size_t i = 0; i < count; ++i) idx[i] = i;
        } else {
            Rng rng(mix_seed(opts.seed, hash_name(info.name)));
            for (int i = 0; i < opts.samples_per_param; ++i)
                idx.push_back(static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(count) - 1)));
            std::sort(idx.begin(), idx.end());
            idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
        }

        ParamGradEntry entry;
        entry.name = info.name;
        double norm_a = 0.0, norm_n = 0.0, norm_diff = 0.0;
        for (std::size_t i : idx) {
            const double saved = theta.data[i];
            theta.data[i] = saved + opts.step;
            const double fp = eval_loss();
            theta.data[i] = saved - opts.step;
            const double fm = eval_loss();
            theta.data[i] = saved;

            const double numeric = (fp - fm) / (2.0 * opts.step);
            const double a = analytic[pi].data[i];
            norm_a += a * a;
            norm_n += numeric * numeric;
            norm_diff += (a - numeric) * (a - numeric);
        }
        entry.max_relative_error =
            std::sqrt(norm_diff) / std::max({std::sqrt(norm_a), std::sqrt(norm_n), 1e-8});
        entry.components_checked = static_cast<int>(idx.size());
        report.max_relative_error = std::max(report.max_relative_error, entry.max_relative_error);
        report.per_parameter.push_back(std::move(entry));
    }

    report.pass = report.max_relative_error <= opts.tolerance;
    return report;
}

}  // namespace fgl::nn
