#include "fgl/ops.hpp"

#include <Eigen/Core>
#include <cmath>
#include <utility>

#include "fgl/error.hpp"

namespace fgl::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const RowMat>;
using MMap = Eigen::Map<RowMat>;

void check_finite(const Tensor& t, const char* op) {
    for (double v : t.data)
        if (!std::isfinite(v)) throw ContractError(std::string("non-finite value produced by ") + op);
}

Var make(Tensor value, std::vector<Var> parents, std::function<void(Node&)> bp, const char* op) {
    quantize(value);
    check_finite(value, op);
    auto n = std::make_shared<Node>(std::move(value));
    bool rg = false;
    for (const auto& p : parents) rg = rg || p->requires_grad;
    n->requires_grad = rg;
    n->parents = std::move(parents);
    if (rg) n->backprop = std::move(bp);
    return n;
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
    if (!a->value.same_shape(b->value))
        throw ShapeError(std::string(op) + ": shape mismatch " + a->value.shape_str() + " vs " + b->value.shape_str());
}

}  // namespace

// ---- elementwise -----------------------------------------------------------

Var add(const Var& a, const Var& b) {
    require_same_shape(a, b, "add");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b->value.data[i];
    return make(std::move(out), {a, b}, [](Node& n) {
        auto& ga = n.parents[0]->ensure_grad();
        auto& gb = n.parents[1]->ensure_grad();
        for (std::size_t i = 0; i < n.grad.data.size(); ++i) {
            if (n.parents[0]->requires_grad) ga.data[i] += n.grad.data[i];
            if (n.parents[1]->requires_grad) gb.data[i] += n.grad.data[i];
        }
    }, "add");
}

Var sub(const Var& a, const Var& b) {
    require_same_shape(a, b, "sub");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b->value.data[i];
    return make(std::move(out), {a, b}, [](Node& n) {
        auto& ga = n.parents[0]->ensure_grad();
        auto& gb = n.parents[1]->ensure_grad();
        for (std::size_t i = 0; i < n.grad.data.size(); ++i) {
            if (n.parents[0]->requires_grad) ga.data[i] += n.grad.data[i];
            if (n.parents[1]->requires_grad) gb.data[i] -= n.grad.data[i];
        }
    }, "sub");
}

Var mul(const Var& a, const Var& b) {
    require_same_shape(a, b, "mul");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b->value.data[i];
    return make(std::move(out), {a, b}, [](Node& n) {
        const auto& av = n.parents[0]->value.data;
        const auto& bv = n.parents[1]->value.data;
        auto& ga = n.parents[0]->ensure_grad();
        auto& gb = n.parents[1]->ensure_grad();
        for (std::size_t i = 0; i < n.grad.data.size(); ++i) {
            if (n.parents[0]->requires_grad) ga.data[i] += n.grad.data[i] * bv[i];
            if (n.parents[1]->requires_grad) gb.data[i] += n.grad.data[i] * av[i];
        }
    }, "mul");
}

Var div(const Var& a, const Var& b) {
    require_same_shape(a, b, "div");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] /= b->value.data[i];
    return make(std::move(out), {a, b}, [](Node& n) {
        const auto& av = n.parents[0]->value.data;
        const auto& bv = n.parents[1]->value.data;
        auto& ga = n.parents[0]->ensure_grad();
        auto& gb = n.parents[1]->ensure_grad();
        for (std::size_t i = 0; i < n.grad.data.size(); ++i) {
            if (n.parents[0]->requires_grad) ga.data[i] += n.grad.data[i] / bv[i];
            if (n.parents[1]->requires_grad) gb.data[i] -= n.grad.data[i] * av[i] / (bv[i] * bv[i]);
        }
    }, "div");
}

Var affine(const Var& x, double k, double c) {
    Tensor out = x->value;
    for (double& v : out.data) v = k * v + c;
    return make(std::move(out), {x}, [k](Node& n) {
        auto& gx = n.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < n.grad.data.size(); ++i) gx.data[i] += k * n.grad.data[i];
    }, "affine");
}

Var sigmoid(const Var& x) {
    Tensor out = x->value;
    for (double& v : out.data) {
        if (v >= 0.0) {
            v = 1.0 / (1.0 + std::exp(-v));
        } else {
            const double e = std::exp(v);
            v = e / (1.0 + e);
        }
    }
    return make(std::move(out), {x}, [](Node& n) {
        auto& gx = n.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < n.grad.data.size(); ++i) {
            const double s = n.value.data[i];
            gx.data[i] += n.grad.data[i] * s * (1.0 - s);
        }
    }, "sigmoid");
}

Var gelu(const Var& x) {
    static const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    static const double inv_sqrt2pi = 1.0 / std::sqrt(2.0 * M_PI);
    Tensor out = x->value;
    for (double& v : out.data) v = 0.5 * v * (1.0 + std::erf(v * inv_sqrt2));
    return make(std::move(out), {x}, [](Node& n) {
        auto& gx = n.parents[0]->ensure_grad();
        const auto& xv = n.parents[0]->value.data;
        for (std::size_t i = 0; i < n.grad.data.size(); ++i) {
            const double v = xv[i];
            const double cdf = 0.5 * (1.0 + std::erf(v * inv_sqrt2));
            const double pdf = inv_sqrt2pi * std::exp(-0.5 * v * v);
            gx.data[i] += n.grad.data[i] * (cdf + v * pdf);
        }
    }, "gelu");
}

// ---- linear algebra --------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
    a->value.require_ndim(2);
    b->value.require_ndim(2);
    const int m = a->value.rows(), k = a->value.cols(), n = b->value.cols();
    if (b->value.rows() != k)
        throw ShapeError("matmul: inner dimensions differ, " + a->value.shape_str() + " x " + b->value.shape_str());
    Tensor out = Tensor::zeros({m, n});
    MMap(out.data.data(), m, n) = CMap(a->value.data.data(), m, k) * CMap(b->value.data.data(), k, n);
    return make(std::move(out), {a, b}, [m, k, n](Node& nd) {
        CMap g(nd.grad.data.data(), m, n);
        if (nd.parents[0]->requires_grad) {
            auto& ga = nd.parents[0]->ensure_grad();
            MMap(ga.data.data(), m, k).noalias() += g * CMap(nd.parents[1]->value.data.data(), k, n).transpose();
        }
        if (nd.parents[1]->requires_grad) {
            auto& gb = nd.parents[1]->ensure_grad();
            MMap(gb.data.data(), k, n).noalias() += CMap(nd.parents[0]->value.data.data(), m, k).transpose() * g;
        }
    }, "matmul");
}

Var transpose(const Var& a) {
    a->value.require_ndim(2);
    const int m = a->value.rows(), n = a->value.cols();
    Tensor out = Tensor::zeros({n, m});
    MMap(out.data.data(), n, m) = CMap(a->value.data.data(), m, n).transpose();
    return make(std::move(out), {a}, [m, n](Node& nd) {
        auto& ga = nd.parents[0]->ensure_grad();
        MMap(ga.data.data(), m, n).noalias() += CMap(nd.grad.data.data(), n, m).transpose();
    }, "transpose");
}

Var add_rowvec(const Var& x, const Var& bias) {
    x->value.require_ndim(2);
    const int m = x->value.rows(), n = x->value.cols();
    if (bias->value.numel() != n) throw ShapeError("add_rowvec: bias length != columns");
    Tensor out = x->value;
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < n; ++c) out.data[static_cast<std::size_t>(r) * n + c] += bias->value.data[c];
    return make(std::move(out), {x, bias}, [m, n](Node& nd) {
        if (nd.parents[0]->requires_grad) {
            auto& gx = nd.parents[0]->ensure_grad();
            for (std::size_t i = 0; i < nd.grad.data.size(); ++i) gx.data[i] += nd.grad.data[i];
        }
        if (nd.parents[1]->requires_grad) {
            auto& gb = nd.parents[1]->ensure_grad();
            for (int r = 0; r < m; ++r)
                for (int c = 0; c < n; ++c) gb.data[c] += nd.grad.data[static_cast<std::size_t>(r) * n + c];
        }
    }, "add_rowvec");
}

Var linear(const Var& x, const Var& w, const Var& b) { return add_rowvec(matmul(x, w), b); }

// ---- shape -----------------------------------------------------------------

Var reshape(const Var& x, std::vector<int> shape) {
    if (Tensor::count(shape) != x->value.numel()) throw ShapeError("reshape: element count mismatch");
    Tensor out(std::move(shape), x->value.data);
    return make(std::move(out), {x}, [](Node& nd) {
        auto& gx = nd.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < nd.grad.data.size(); ++i) gx.data[i] += nd.grad.data[i];
    }, "reshape");
}

Var concat_cols(const std::vector<Var>& xs) {
    if (xs.empty()) throw ShapeError("concat_cols: empty list");
    const int m = xs[0]->value.rows();
    int total = 0;
    for (const auto& x : xs) {
        x->value.require_ndim(2);
        if (x->value.rows() != m) throw ShapeError("concat_cols: row count mismatch");
        total += x->value.cols();
    }
    Tensor out = Tensor::zeros({m, total});
    int off = 0;
    for (const auto& x : xs) {
        const int n = x->value.cols();
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < n; ++c) out.at(r, off + c) = x->value.at(r, c);
        off += n;
    }
    return make(std::move(out), xs, [m](Node& nd) {
        int off = 0;
        for (auto& p : nd.parents) {
            const int n = p->value.cols();
            if (p->requires_grad) {
                auto& gp = p->ensure_grad();
                for (int r = 0; r < m; ++r)
                    for (int c = 0; c < n; ++c) gp.at(r, c) += nd.grad.at(r, off + c);
            }
            off += n;
        }
    }, "concat_cols");
}

Var concat_rows(const std::vector<Var>& xs) {
    if (xs.empty()) throw ShapeError("concat_rows: empty list");
    const int n = xs[0]->value.cols();
    int total = 0;
    for (const auto& x : xs) {
        x->value.require_ndim(2);
        if (x->value.cols() != n) throw ShapeError("concat_rows: column count mismatch");
        total += x->value.rows();
    }
    Tensor out = Tensor::zeros({total, n});
    std::size_t off = 0;
    for (const auto& x : xs) {
        std::copy(x->value.data.begin(), x->value.data.end(), out.data.begin() + off);
        off += x->value.data.size();
    }
    return make(std::move(out), xs, [](Node& nd) {
        std::size_t off = 0;
        for (auto& p : nd.parents) {
            if (p->requires_grad) {
                auto& gp = p->ensure_grad();
                for (std::size_t i = 0; i < gp.data.size(); ++i) gp.data[i] += nd.grad.data[off + i];
            }
            off += p->value.data.size();
        }
    }, "concat_rows");
}

Var slice_rows(const Var& x, int r0, int r1) {
    x->value.require_ndim(2);
    const int m = x->value.rows(), n = x->value.cols();
    if (r0 < 0 || r1 > m || r0 >= r1) throw ShapeError("slice_rows: bad range");
    Tensor out = Tensor::zeros({r1 - r0, n});
    std::copy(x->value.data.begin() + static_cast<std::size_t>(r0) * n,
              x->value.data.begin() + static_cast<std::size_t>(r1) * n, out.data.begin());
    return make(std::move(out), {x}, [r0, n](Node& nd) {
        auto& gx = nd.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < nd.grad.data.size(); ++i)
            gx.data[static_cast<std::size_t>(r0) * n + i] += nd.grad.data[i];
    }, "slice_rows");
}

Var select_rows(const Var& table, const std::vector<int>& rows) {
    table->value.require_ndim(2);
    const int m = table->value.rows(), n = table->value.cols();
    Tensor out = Tensor::zeros({static_cast<int>(rows.size()), n});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] < 0 || rows[i] >= m) throw ShapeError("select_rows: index out of range");
        for (int c = 0; c < n; ++c) out.at(static_cast<int>(i), c) = table->value.at(rows[i], c);
    }
    return make(std::move(out), {table}, [rows, n](Node& nd) {
        auto& gt = nd.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (int c = 0; c < n; ++c) gt.at(rows[i], c) += nd.grad.at(static_cast<int>(i), c);
    }, "select_rows");
}

Var rows_to_chw(const Var& x, int h, int w) {
    x->value.require_ndim(2);
    const int p = x->value.rows(), ch = x->value.cols();
    if (p != h * w) throw ShapeError("rows_to_chw: P != H*W");
    Tensor out = Tensor::zeros({ch, h, w});
    for (int i = 0; i < p; ++i)
        for (int c = 0; c < ch; ++c)
            out.data[static_cast<std::size_t>(c) * p + i] = x->value.at(i, c);
    return make(std::move(out), {x}, [p, ch](Node& nd) {
        auto& gx = nd.parents[0]->ensure_grad();
        for (int i = 0; i < p; ++i)
            for (int c = 0; c < ch; ++c)
                gx.at(i, c) += nd.grad.data[static_cast<std::size_t>(c) * p + i];
    }, "rows_to_chw");
}

Var concat_chw(const Var& a, const Var& b) {
    a->value.require_ndim(3);
    b->value.require_ndim(3);
    if (a->value.shape[1] != b->value.shape[1] || a->value.shape[2] != b->value.shape[2])
        throw ShapeError("concat_chw: spatial dims differ");
    Tensor out = Tensor::zeros({a->value.shape[0] + b->value.shape[0], a->value.shape[1], a->value.shape[2]});
    std::copy(a->value.data.begin(), a->value.data.end(), out.data.begin());
    std::copy(b->value.data.begin(), b->value.data.end(), out.data.begin() + a->value.data.size());
    return make(std::move(out), {a, b}, [](Node& nd) {
        const std::size_t na = nd.parents[0]->value.data.size();
        if (nd.parents[0]->requires_grad) {
            auto& ga = nd.parents[0]->ensure_grad();
            for (std::size_t i = 0; i < na; ++i) ga.data[i] += nd.grad.data[i];
        }
        if (nd.parents[1]->requires_grad) {
            auto& gb = nd.parents[1]->ensure_grad();
            for (std::size_t i = 0; i < gb.data.size(); ++i) gb.data[i] += nd.grad.data[na + i];
        }
    }, "concat_chw");
}

Var detach(const Var& x) { return constant(x->value); }

// ---- normalization & attention ---------------------------------------------

Var softmax(const Var& x, int axis) {
    const int nd = x->value.ndim();
    if (axis < 0 || axis >= nd) throw ShapeError("softmax: axis out of range");
    const auto& shape = x->value.shape;
    std::int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= shape[i];
    for (int i = axis + 1; i < nd; ++i) inner *= shape[i];
    const int n = shape[axis];

    Tensor out = x->value;
    for (std::int64_t o = 0; o < outer; ++o) {
        for (std::int64_t in = 0; in < inner; ++in) {
            const std::int64_t base = o * n * inner + in;
            double mx = out.data[base];
            for (int i = 1; i < n; ++i) mx = std::max(mx, out.data[base + i * inner]);
            double sum = 0.0;
            for (int i = 0; i < n; ++i) {
                double& v = out.data[base + i * inner];
                v = std::exp(v - mx);
                sum += v;
            }
            for (int i = 0; i < n; ++i) out.data[base + i * inner] /= sum;
        }
    }
    return make(std::move(out), {x}, [outer, inner, n](Node& ndn) {
        auto& gx = ndn.parents[0]->ensure_grad();
        for (std::int64_t o = 0; o < outer; ++o) {
            for (std::int64_t in = 0; in < inner; ++in) {
                const std::int64_t base = o * n * inner + in;
                double dot = 0.0;
                for (int i = 0; i < n; ++i) dot += ndn.grad.data[base + i * inner] * ndn.value.data[base + i * inner];
                for (int i = 0; i < n; ++i) {
                    const std::int64_t k = base + i * inner;
                    gx.data[k] += ndn.value.data[k] * (ndn.grad.data[k] - dot);
                }
            }
        }
    }, "softmax");
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
    x->value.require_ndim(2);
    const int m = x->value.rows(), n = x->value.cols();
    if (gamma->value.numel() != n || beta->value.numel() != n) throw ShapeError("layer_norm: gamma/beta length != columns");

    Tensor out = Tensor::zeros({m, n});
    std::vector<double> inv_std(m), means(m);
    for (int r = 0; r < m; ++r) {
        double mu = 0.0;
        for (int c = 0; c < n; ++c) mu += x->value.at(r, c);
        mu /= n;
        double var = 0.0;
        for (int c = 0; c < n; ++c) {
            const double d = x->value.at(r, c) - mu;
            var += d * d;
        }
        var /= n;
        const double is = 1.0 / std::sqrt(var + eps);
        means[r] = mu;
        inv_std[r] = is;
        for (int c = 0; c < n; ++c)
            out.at(r, c) = (x->value.at(r, c) - mu) * is * gamma->value.data[c] + beta->value.data[c];
    }
    return make(std::move(out), {x, gamma, beta},
                [m, n, means = std::move(means), inv_std = std::move(inv_std)](Node& nd) {
        const auto& xv = nd.parents[0]->value;
        const auto& gv = nd.parents[1]->value;
        for (int r = 0; r < m; ++r) {
            const double mu = means[r], is = inv_std[r];
            double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
            std::vector<double> xhat(n), dxhat(n);
            for (int c = 0; c < n; ++c) {
                xhat[c] = (xv.at(r, c) - mu) * is;
                dxhat[c] = nd.grad.at(r, c) * gv.data[c];
                sum_dxhat += dxhat[c];
                sum_dxhat_xhat += dxhat[c] * xhat[c];
            }
            if (nd.parents[0]->requires_grad) {
                auto& gx = nd.parents[0]->ensure_grad();
                for (int c = 0; c < n; ++c)
                    gx.at(r, c) += is * (dxhat[c] - sum_dxhat / n - xhat[c] * sum_dxhat_xhat / n);
            }
            if (nd.parents[1]->requires_grad) {
                auto& gg = nd.parents[1]->ensure_grad();
                for (int c = 0; c < n; ++c) gg.data[c] += nd.grad.at(r, c) * xhat[c];
            }
            if (nd.parents[2]->requires_grad) {
                auto& gb = nd.parents[2]->ensure_grad();
                for (int c = 0; c < n; ++c) gb.data[c] += nd.grad.at(r, c);
            }
        }
    }, "layer_norm");
}

Var l2_normalize_rows(const Var& x) {
    x->value.require_ndim(2);
    const int m = x->value.rows(), n = x->value.cols();
    Tensor out = Tensor::zeros({m, n});
    std::vector<double> norms(m);
    for (int r = 0; r < m; ++r) {
        double s = 0.0;
        for (int c = 0; c < n; ++c) s += x->value.at(r, c) * x->value.at(r, c);
        const double nr = std::sqrt(s);
        if (nr < 1e-12) throw ContractError("l2_normalize_rows: zero-norm row");
        norms[r] = nr;
        for (int c = 0; c < n; ++c) out.at(r, c) = x->value.at(r, c) / nr;
    }
    return make(std::move(out), {x}, [m, n, norms = std::move(norms)](Node& nd) {
        auto& gx = nd.parents[0]->ensure_grad();
        for (int r = 0; r < m; ++r) {
            double dot = 0.0;
            for (int c = 0; c < n; ++c) dot += nd.grad.at(r, c) * nd.value.at(r, c);
            for (int c = 0; c < n; ++c)
                gx.at(r, c) += (nd.grad.at(r, c) - nd.value.at(r, c) * dot) / norms[r];
        }
    }, "l2_normalize_rows");
}

Var scaled_dot_attention(const Var& q, const Var& k, const Var& v, int key_dim) {
    q->value.require_ndim(2);
    k->value.require_ndim(2);
    v->value.require_ndim(2);
    if (q->value.cols() != key_dim || k->value.cols() != key_dim)
        throw ShapeError("scaled_dot_attention: Q/K width != key_dim");
    if (k->value.rows() != v->value.rows())
        throw ShapeError("scaled_dot_attention: K and V row counts differ");
    Var scores = affine(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(key_dim)), 0.0);
    return matmul(softmax(scores, 1), v);
}

// ---- spatial ----------------------------------------------------------------

Var conv2d_3x3(const Var& x, const Var& w, const Var& b) {
    x->value.require_ndim(3);
    w->value.require_ndim(4);
    const int c = x->value.shape[0], h = x->value.shape[1], wd = x->value.shape[2];
    const int oc = w->value.shape[0];
    if (w->value.shape[1] != c || w->value.shape[2] != 3 || w->value.shape[3] != 3)
        throw ShapeError("conv2d_3x3: weight must be OCx" + std::to_string(c) + "x3x3");
    if (b->value.numel() != oc) throw ShapeError("conv2d_3x3: bias length != output channels");

    const int pix = h * wd, kc = c * 9;
    auto im2col = [c, h, wd, pix](const Tensor& img) {
        RowMat col(c * 9, pix);
        for (int ch = 0; ch < c; ++ch) {
            const double* plane = img.data.data() + static_cast<std::size_t>(ch) * pix;
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    double* row = col.data() + (static_cast<std::size_t>(ch) * 9 + ky * 3 + kx) * pix;
                    for (int y = 0; y < h; ++y) {
                        const int sy = y + ky - 1;
                        for (int x2 = 0; x2 < wd; ++x2) {
                            const int sx = x2 + kx - 1;
                            row[y * wd + x2] = (sy >= 0 && sy < h && sx >= 0 && sx < wd)
                                                   ? plane[sy * wd + sx]
                                                   : 0.0;
                        }
                    }
                }
            }
        }
        return col;
    };

    RowMat col = im2col(x->value);
    Tensor out = Tensor::zeros({oc, h, wd});
    MMap om(out.data.data(), oc, pix);
    om.noalias() = CMap(w->value.data.data(), oc, kc) * col;
    for (int o = 0; o < oc; ++o) om.row(o).array() += b->value.data[o];

    return make(std::move(out), {x, w, b}, [c, h, wd, oc, pix, kc, im2col](Node& nd) {
        CMap g(nd.grad.data.data(), oc, pix);
        if (nd.parents[1]->requires_grad) {
            RowMat col = im2col(nd.parents[0]->value);
            auto& gw = nd.parents[1]->ensure_grad();
            MMap(gw.data.data(), oc, kc).noalias() += g * col.transpose();
        }
        if (nd.parents[2]->requires_grad) {
            auto& gb = nd.parents[2]->ensure_grad();
            for (int o = 0; o < oc; ++o) gb.data[o] += g.row(o).sum();
        }
        if (nd.parents[0]->requires_grad) {
            RowMat gcol = CMap(nd.parents[1]->value.data.data(), oc, kc).transpose() * g;
            auto& gx = nd.parents[0]->ensure_grad();
            for (int ch = 0; ch < c; ++ch) {
                double* plane = gx.data.data() + static_cast<std::size_t>(ch) * pix;
                for (int ky = 0; ky < 3; ++ky) {
                    for (int kx = 0; kx < 3; ++kx) {
                        const double* row = gcol.data() + (static_cast<std::size_t>(ch) * 9 + ky * 3 + kx) * pix;
                        for (int y = 0; y < h; ++y) {
                            const int sy = y + ky - 1;
                            if (sy < 0 || sy >= h) continue;
                            for (int x2 = 0; x2 < wd; ++x2) {
                                const int sx = x2 + kx - 1;
                                if (sx >= 0 && sx < wd) plane[sy * wd + sx] += row[y * wd + x2];
                            }
                        }
                    }
                }
            }
        }
    }, "conv2d_3x3");
}

namespace {
struct LerpIdx {
    int i0, i1;
    double w0, w1;
};

std::vector<LerpIdx> bilinear_axis(int in, int out) {
    std::vector<LerpIdx> v(out);
    for (int o = 0; o < out; ++o) {
        const double s = (o + 0.5) * static_cast<double>(in) / out - 0.5;
        int i0 = static_cast<int>(std::floor(s));
        const double f = s - i0;
        int i1 = i0 + 1;
        i0 = std::clamp(i0, 0, in - 1);
        i1 = std::clamp(i1, 0, in - 1);
        v[o] = {i0, i1, 1.0 - f, f};
    }
    return v;
}
}  // namespace

Var resize_bilinear(const Var& x, int out_h, int out_w) {
    x->value.require_ndim(3);
    const int c = x->value.shape[0], h = x->value.shape[1], w = x->value.shape[2];
    if (out_h < 1 || out_w < 1) throw ShapeError("resize_bilinear: bad target size");
    const auto ys = bilinear_axis(h, out_h);
    const auto xs = bilinear_axis(w, out_w);
    Tensor out = Tensor::zeros({c, out_h, out_w});
    for (int ch = 0; ch < c; ++ch) {
        const double* in = x->value.data.data() + static_cast<std::size_t>(ch) * h * w;
        double* op = out.data.data() + static_cast<std::size_t>(ch) * out_h * out_w;
        for (int oy = 0; oy < out_h; ++oy) {
            const auto& ly = ys[oy];
            for (int ox = 0; ox < out_w; ++ox) {
                const auto& lx = xs[ox];
                op[oy * out_w + ox] = ly.w0 * (lx.w0 * in[ly.i0 * w + lx.i0] + lx.w1 * in[ly.i0 * w + lx.i1]) +
                                      ly.w1 * (lx.w0 * in[ly.i1 * w + lx.i0] + lx.w1 * in[ly.i1 * w + lx.i1]);
            }
        }
    }
    return make(std::move(out), {x}, [c, h, w, out_h, out_w, ys, xs](Node& nd) {
        auto& gx = nd.parents[0]->ensure_grad();
        for (int ch = 0; ch < c; ++ch) {
            double* gp = gx.data.data() + static_cast<std::size_t>(ch) * h * w;
            const double* g = nd.grad.data.data() + static_cast<std::size_t>(ch) * out_h * out_w;
            for (int oy = 0; oy < out_h; ++oy) {
                const auto& ly = ys[oy];
                for (int ox = 0; ox < out_w; ++ox) {
                    const auto& lx = xs[ox];
                    const double gv = g[oy * out_w + ox];
                    gp[ly.i0 * w + lx.i0] += ly.w0 * lx.w0 * gv;
                    gp[ly.i0 * w + lx.i1] += ly.w0 * lx.w1 * gv;
                    gp[ly.i1 * w + lx.i0] += ly.w1 * lx.w0 * gv;
                    gp[ly.i1 * w + lx.i1] += ly.w1 * lx.w1 * gv;
                }
            }
        }
    }, "resize_bilinear");
}

Var upsample_2x(const Var& x) {
    x->value.require_ndim(3);
    return resize_bilinear(x, x->value.shape[1] * 2, x->value.shape[2] * 2);
}

// ---- reductions & losses ----------------------------------------------------

Var sum_all(const Var& x) {
    double s = 0.0;
    for (double v : x->value.data) s += v;
    return make(Tensor::scalar(s), {x}, [](Node& nd) {
        auto& gx = nd.parents[0]->ensure_grad();
        for (double& g : gx.data) g += nd.grad.data[0];
    }, "sum_all");
}

Var mean_all(const Var& x) {
    const auto n = x->value.numel();
    if (n == 0) throw ShapeError("mean_all: empty tensor");
    return affine(sum_all(x), 1.0 / static_cast<double>(n), 0.0);
}

Var cross_entropy_logits(const Var& logits, int target) {
    const auto n = logits->value.numel();
    if (logits->value.ndim() > 2 || (logits->value.ndim() == 2 && logits->value.rows() != 1))
        throw ShapeError("cross_entropy_logits: logits must be a vector");
    if (target < 0 || target >= n) throw ContractError("cross_entropy_logits: target out of range");
    double mx = logits->value.data[0];
    for (double v : logits->value.data) mx = std::max(mx, v);
    double sum = 0.0;
    for (double v : logits->value.data) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    return make(Tensor::scalar(lse - logits->value.data[target]), {logits}, [target, mx, sum](Node& nd) {
        auto& gl = nd.parents[0]->ensure_grad();
        const double g = nd.grad.data[0];
        for (std::size_t i = 0; i < gl.data.size(); ++i) {
            const double p = std::exp(nd.parents[0]->value.data[i] - mx) / sum;
            gl.data[i] += g * (p - (static_cast<int>(i) == target ? 1.0 : 0.0));
        }
    }, "cross_entropy_logits");
}

}  // namespace fgl::nn
