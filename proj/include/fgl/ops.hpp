#pragma once

#include <vector>

#include "fgl/autograd.hpp"

namespace fgl::nn {

// ---- elementwise -----------------------------------------------------------

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
// k * x + c, elementwise
Var affine(const Var& x, double k, double c);
Var sigmoid(const Var& x);
Var gelu(const Var& x);

// ---- linear algebra --------------------------------------------------------

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
// adds a length-n row vector to every row of an m x n matrix
Var add_rowvec(const Var& x, const Var& bias);
Var linear(const Var& x, const Var& w, const Var& b);

// ---- shape -----------------------------------------------------------------

Var reshape(const Var& x, std::vector<int> shape);
Var concat_cols(const std::vector<Var>& xs);
Var concat_rows(const std::vector<Var>& xs);
Var slice_rows(const Var& x, int r0, int r1);
Var select_rows(const Var& table, const std::vector<int>& rows);
// P x C token matrix -> C x H x W grid (P = H*W, raster order)
Var rows_to_chw(const Var& x, int h, int w);
Var concat_chw(const Var& a, const Var& b);
Var detach(const Var& x);

// ---- normalization & attention ---------------------------------------------

// Softmax along `axis`; slices sum to 1 and the result is invariant under an
// additive constant along that axis.
Var softmax(const Var& x, int axis);
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
Var l2_normalize_rows(const Var& x);

// Classic scaled dot-product attention: softmax(Q K^T / sqrt(key_dim)) V.
// Q: Pq x d_e, K: Pk x d_e, V: Pk x d_v.
Var scaled_dot_attention(const Var& q, const Var& k, const Var& v, int key_dim);

// ---- spatial ----------------------------------------------------------------

// 3x3 convolution, stride 1, zero padding; x: C x H x W, w: OC x C x 3 x 3.
Var conv2d_3x3(const Var& x, const Var& w, const Var& b);
Var resize_bilinear(const Var& x, int out_h, int out_w);
Var upsample_2x(const Var& x);

// ---- reductions & losses ----------------------------------------------------

Var sum_all(const Var& x);
Var mean_all(const Var& x);
// -log softmax(logits)[target]; logits is a length-n vector (or 1 x n).
Var cross_entropy_logits(const Var& logits, int target);

}  // namespace fgl::nn
