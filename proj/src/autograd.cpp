#include "fgl/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "fgl/error.hpp"

namespace fgl::nn {

namespace {
Precision g_precision = Precision::f32;
}

Precision compute_precision() { return g_precision; }
void set_compute_precision(Precision p) { g_precision = p; }

void quantize(Tensor& t) {
    if (g_precision == Precision::f64) return;
    for (double& v : t.data) v = static_cast<double>(static_cast<float>(v));
}

Var constant(Tensor t) {
    quantize(t);
    auto n = std::make_shared<Node>(std::move(t));
    n->requires_grad = false;
    return n;
}

void backward(const Var& loss) {
    if (!loss) throw ContractError("backward on null node");
    if (loss->value.numel() != 1) throw ContractError("backward requires a scalar loss, got shape " + loss->value.shape_str());
    if (!loss->requires_grad) return;  // nothing trainable upstream

    // Topological order via iterative post-order DFS over grad-requiring nodes.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(loss.get(), 0);
    seen.insert(loss.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* p = node->parents[idx].get();
            ++idx;
            if (p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    loss->ensure_grad().data[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop) n->backprop(*n);
    }
}

Var Params::create(const std::string& name, Tensor init, bool trainable) {
    if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
    auto node = std::make_shared<Node>(std::move(init));
    node->requires_grad = trainable;
    node->is_param = true;
    node->ensure_grad();  // frozen parameters report an all-zero gradient
    index_[name] = items_.size();
    items_.push_back(ParamInfo{name, node, trainable});
    return node;
}

Var Params::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
    return items_[it->second].node;
}

bool Params::has(const std::string& name) const { return index_.count(name) != 0; }

bool Params::trainable(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
    return items_[it->second].trainable;
}

void Params::zero_grad() {
    for (auto& p : items_) {
        auto& g = p.node->ensure_grad();
        std::fill(g.data.begin(), g.data.end(), 0.0);
    }
}

std::map<std::string, Tensor> Params::snapshot() const {
    std::map<std::string, Tensor> out;
    for (const auto& p : items_) out.emplace(p.name, p.node->value);
    return out;
}

Tensor glorot_init(std::vector<int> shape, int fan_in, int fan_out, std::uint64_t seed, const std::string& name) {
    Rng rng(mix_seed(seed, hash_name(name)));
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data) v = rng.uniform(-limit, limit);
    return t;
}

Tensor normal_init(std::vector<int> shape, double stddev, std::uint64_t seed, const std::string& name) {
    Rng rng(mix_seed(seed, hash_name(name)));
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data) v = rng.normal(0.0, stddev);
    return t;
}

Tensor identity_init(int n) {
    Tensor t = Tensor::zeros({n, n});
    for (int i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

}  // namespace fgl::nn
