#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "fgl/error.hpp"

namespace fgl::nn {

// Dense row-major tensor of reals. Computation runs in double; when the
// compute precision is set to f32 every op's forward output is rounded to
// the nearest 32-bit value.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        if (static_cast<std::int64_t>(data.size()) != count(shape))
            throw ShapeError("tensor data length does not match shape");
    }

    static std::int64_t count(const std::vector<int>& s) {
        std::int64_t n = 1;
        for (int e : s) {
            if (e < 0) throw ShapeError("negative tensor extent");
            n *= e;
        }
        return n;
    }

    static Tensor zeros(std::vector<int> s) {
        auto n = count(s);
        return Tensor(std::move(s), std::vector<double>(static_cast<std::size_t>(n), 0.0));
    }

    static Tensor full(std::vector<int> s, double v) {
        auto n = count(s);
        return Tensor(std::move(s), std::vector<double>(static_cast<std::size_t>(n), v));
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }

    int ndim() const { return static_cast<int>(shape.size()); }

    // 2-D helpers
    int rows() const {
        require_ndim(2);
        return shape[0];
    }
    int cols() const {
        require_ndim(2);
        return shape[1];
    }
    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * shape[1] + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * shape[1] + c]; }

    void require_ndim(int n) const {
        if (ndim() != n) throw ShapeError("expected " + std::to_string(n) + "-d tensor, got " + std::to_string(ndim()) + "-d");
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    std::string shape_str() const {
        std::string s = "[";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape[i]);
        }
        return s + "]";
    }
};

enum class Precision { f32, f64 };

Precision compute_precision();
void set_compute_precision(Precision p);

// RAII switch used by tests and verification passes.
class PrecisionGuard {
public:
    explicit PrecisionGuard(Precision p) : prev_(compute_precision()) { set_compute_precision(p); }
    ~PrecisionGuard() { set_compute_precision(prev_); }

private:
    Precision prev_;
};

// Rounds every element to the nearest float when running in f32 mode.
void quantize(Tensor& t);

}  // namespace fgl::nn
