#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "fgl/rng.hpp"
#include "fgl/tensor.hpp"

namespace fgl::nn {

struct Node;
using Var = std::shared_ptr<Node>;

// One vertex of the dynamically built compute graph. Interior nodes carry a
// closure that scatters the incoming gradient to their parents; leaves are
// either constants (requires_grad = false) or parameters.
struct Node {
    Tensor value;
    Tensor grad;  // allocated on demand, same shape as value
    std::vector<Var> parents;
    std::function<void(Node&)> backprop;
    bool requires_grad = false;
    bool is_param = false;

    explicit Node(Tensor v) : value(std::move(v)) {}

    Tensor& ensure_grad() {
        if (grad.shape != value.shape) grad = Tensor::zeros(value.shape);
        return grad;
    }
};

Var constant(Tensor t);

// Runs one reverse pass from a scalar loss. Gradients accumulate into every
// reachable node with requires_grad set; frozen leaves are never touched.
void backward(const Var& loss);

struct ParamInfo {
    std::string name;
    Var node;
    bool trainable = true;
};

// Named parameter registry; iteration follows insertion order so optimizer
// updates and checkpoints are deterministic.
class Params {
public:
    // Creates and registers a parameter initialized with `init`.
    Var create(const std::string& name, Tensor init, bool trainable);

    Var get(const std::string& name) const;
    bool has(const std::string& name) const;
    bool trainable(const std::string& name) const;

    const std::vector<ParamInfo>& items() const { return items_; }
    std::size_t size() const { return items_.size(); }

    void zero_grad();

    // Bitwise copies of all parameter tensors, keyed by name.
    std::map<std::string, Tensor> snapshot() const;

private:
    std::vector<ParamInfo> items_;
    std::map<std::string, std::size_t> index_;
};

// Common initializers. Each parameter draws from its own stream derived from
// (seed, name) so results do not depend on registration order.
Tensor glorot_init(std::vector<int> shape, int fan_in, int fan_out, std::uint64_t seed, const std::string& name);
Tensor normal_init(std::vector<int> shape, double stddev, std::uint64_t seed, const std::string& name);
Tensor identity_init(int n);

}  // namespace fgl::nn
