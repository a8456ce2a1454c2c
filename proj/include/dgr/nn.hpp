#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dgr/rng.hpp"
#include "dgr/types.hpp"

// Dense building blocks. Every activation tensor is feature-major: one
// column per sample, feature index c*H*W + y*W + x. Convolutions run as
// im2col + GEMM internally; the GEMM's channel-major block layout never
// escapes a layer, so flatten between conv and dense stages is a no-op.
// All functions are stateless; callers own the buffers backward needs.

namespace dgr {

template <typename S>
struct Param {
  Matrix<S> v;
  Matrix<S> g;

  void resize(Index rows, Index cols) {
    v.setZero(rows, cols);
    g.setZero(rows, cols);
  }
  Index count() const { return v.size(); }
};

template <typename S>
using ParamRefs = std::vector<Param<S>*>;

struct ConvGeom {
  int in_c = 0, in_h = 0, in_w = 0;
  int out_c = 0;
  int k = 3, stride = 1, pad = 0;

  int out_h() const { return (in_h + 2 * pad - k) / stride + 1; }
  int out_w() const { return (in_w + 2 * pad - k) / stride + 1; }
  int patch() const { return in_c * k * k; }      // rows of the col matrix
  int positions() const { return out_h() * out_w(); }
  int in_size() const { return in_c * in_h * in_w; }
  int out_size() const { return out_c * positions(); }
};

// cols(:, b*P + op) = flattened receptive field of output position op in
// sample b; zero where the kernel overlaps padding.
template <typename S>
void im2col(const ConvGeom& g, const Matrix<S>& x, Matrix<S>& cols) {
  const int P = g.positions(), oh = g.out_h(), ow = g.out_w();
  const Index batch = x.cols();
  cols.resize(g.patch(), Index(P) * batch);
  for (Index b = 0; b < batch; ++b) {
    const S* xb = x.col(b).data();
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        S* col = cols.col(b * P + oy * ow + ox).data();
        const int iy0 = oy * g.stride - g.pad;
        const int ix0 = ox * g.stride - g.pad;
        int r = 0;
        for (int c = 0; c < g.in_c; ++c) {
          const S* plane = xb + c * g.in_h * g.in_w;
          for (int ky = 0; ky < g.k; ++ky) {
            const int iy = iy0 + ky;
            for (int kx = 0; kx < g.k; ++kx, ++r) {
              const int ix = ix0 + kx;
              col[r] = (iy >= 0 && iy < g.in_h && ix >= 0 && ix < g.in_w)
                           ? plane[iy * g.in_w + ix]
                           : S(0);
            }
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-add patch columns back into image space.
// x must be pre-sized [in_size, batch]; contributions accumulate.
template <typename S>
void col2im_add(const ConvGeom& g, const Matrix<S>& cols, Matrix<S>& x) {
  const int P = g.positions(), oh = g.out_h(), ow = g.out_w();
  const Index batch = x.cols();
  for (Index b = 0; b < batch; ++b) {
    S* xb = x.col(b).data();
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const S* col = cols.col(b * P + oy * ow + ox).data();
        const int iy0 = oy * g.stride - g.pad;
        const int ix0 = ox * g.stride - g.pad;
        int r = 0;
        for (int c = 0; c < g.in_c; ++c) {
          S* plane = xb + c * g.in_h * g.in_w;
          for (int ky = 0; ky < g.k; ++ky) {
            const int iy = iy0 + ky;
            for (int kx = 0; kx < g.k; ++kx, ++r) {
              const int ix = ix0 + kx;
              if (iy >= 0 && iy < g.in_h && ix >= 0 && ix < g.in_w)
                plane[iy * g.in_w + ix] += col[r];
            }
          }
        }
      }
    }
  }
}

// conv [C, P*B] block layout -> feature-major [C*P, B]
template <typename S>
void block_to_columns(int channels, int positions, const Matrix<S>& in, Matrix<S>& out) {
  const Index batch = in.cols() / positions;
  out.resize(Index(channels) * positions, batch);
  for (Index b = 0; b < batch; ++b) {
    Eigen::Map<Matrix<S>> col(out.col(b).data(), positions, channels);
    col = in.middleCols(b * positions, positions).transpose();
  }
}

template <typename S>
void columns_to_block(int channels, int positions, const Matrix<S>& in, Matrix<S>& out) {
  const Index batch = in.cols();
  out.resize(channels, Index(positions) * batch);
  for (Index b = 0; b < batch; ++b) {
    Eigen::Map<const Matrix<S>> col(in.col(b).data(), positions, channels);
    out.middleCols(b * positions, positions) = col.transpose();
  }
}

// y = W (*) x + b with W [out_c, in_c*k*k]; cols is kept for backward.
template <typename S>
void conv_forward(const ConvGeom& g, const Param<S>& W, const Param<S>& b,
                  const Matrix<S>& x, Matrix<S>& cols, Matrix<S>& y) {
  im2col(g, x, cols);
  Matrix<S> blocks;
  blocks.noalias() = W.v * cols;
  blocks.colwise() += b.v.col(0);
  block_to_columns(g.out_c, g.positions(), blocks, y);
}

template <typename S>
void conv_backward(const ConvGeom& g, Param<S>& W, Param<S>& b, const Matrix<S>& cols,
                   const Matrix<S>& dy, Matrix<S>& dx) {
  Matrix<S> dblocks;
  columns_to_block(g.out_c, g.positions(), dy, dblocks);
  W.g.noalias() += dblocks * cols.transpose();
  b.g.col(0).noalias() += dblocks.rowwise().sum();
  Matrix<S> dcols;
  dcols.noalias() = W.v.transpose() * dblocks;
  dx.setZero(g.in_size(), dy.cols());
  col2im_add(g, dcols, dx);
}

// Transposed convolution: [in_c, inH, inW] -> [out_c, outH, outW] with
// outH = stride*(inH-1) + k - 2*pad. Forward scatters weighted patches
// (the adjoint of the matching conv's gather); W is [in_c, out_c*k*k].
struct ConvTGeom {
  int in_c = 0, in_h = 0, in_w = 0;
  int out_c = 0;
  int k = 3, stride = 1, pad = 0;

  int out_h() const { return stride * (in_h - 1) + k - 2 * pad; }
  int out_w() const { return stride * (in_w - 1) + k - 2 * pad; }
  int positions() const { return in_h * in_w; }
  int in_size() const { return in_c * in_h * in_w; }
  int out_size() const { return out_c * out_h() * out_w(); }

  // the convolution this operation is the transpose of
  ConvGeom adjoint() const {
    return ConvGeom{out_c, out_h(), out_w(), in_c, k, stride, pad};
  }
};

template <typename S>
void convt_forward(const ConvTGeom& g, const Param<S>& W, const Param<S>& b,
                   const Matrix<S>& x, Matrix<S>& xblocks, Matrix<S>& y) {
  columns_to_block(g.in_c, g.positions(), x, xblocks);
  Matrix<S> cols;
  cols.noalias() = W.v.transpose() * xblocks;
  y.setZero(g.out_size(), x.cols());
  col2im_add(g.adjoint(), cols, y);
  for (int c = 0; c < g.out_c; ++c)
    y.middleRows(Index(c) * g.out_h() * g.out_w(), Index(g.out_h()) * g.out_w())
        .array() += b.v(c, 0);
}

template <typename S>
void convt_backward(const ConvTGeom& g, Param<S>& W, Param<S>& b, const Matrix<S>& xblocks,
                    const Matrix<S>& dy, Matrix<S>& dx) {
  const Index hw = Index(g.out_h()) * g.out_w();
  for (int c = 0; c < g.out_c; ++c)
    b.g(c, 0) += dy.middleRows(Index(c) * hw, hw).sum();
  Matrix<S> dcols;
  im2col(g.adjoint(), dy, dcols);
  W.g.noalias() += xblocks * dcols.transpose();
  Matrix<S> dblocks;
  dblocks.noalias() = W.v * dcols;
  block_to_columns(g.in_c, g.positions(), dblocks, dx);
}

template <typename S>
void dense_forward(const Param<S>& W, const Param<S>& b, const Matrix<S>& x, Matrix<S>& y) {
  y.noalias() = W.v * x;
  y.colwise() += b.v.col(0);
}

template <typename S>
void dense_backward(Param<S>& W, Param<S>& b, const Matrix<S>& x, const Matrix<S>& dy,
                    Matrix<S>& dx) {
  W.g.noalias() += dy * x.transpose();
  b.g.col(0).noalias() += dy.rowwise().sum();
  dx.noalias() = W.v.transpose() * dy;
}

template <typename S>
void relu(const Matrix<S>& x, Matrix<S>& y) {
  y = x.cwiseMax(S(0));
}

template <typename S>
void relu_backward(const Matrix<S>& pre, const Matrix<S>& dy, Matrix<S>& dx) {
  dx = ((pre.array() > S(0)).template cast<S>() * dy.array()).matrix();
}

template <typename S>
void sigmoid(const Matrix<S>& x, Matrix<S>& y) {
  y = (S(1) / (S(1) + (-x.array()).exp())).matrix();
}

template <typename S>
void he_init(Param<S>& p, Index fan_in, Rng& rng) {
  rng.fill_normal(p.v, std::sqrt(2.0 / double(fan_in)));
}

template <typename S>
void xavier_init(Param<S>& p, Index fan_in, Rng& rng) {
  rng.fill_normal(p.v, std::sqrt(1.0 / double(fan_in)));
}

template <typename S>
Index param_count(const ParamRefs<S>& params) {
  Index n = 0;
  for (const auto* p : params) n += p->count();
  return n;
}

template <typename S>
void zero_grads(ParamRefs<S>& params) {
  for (auto* p : params) p->g.setZero();
}

}  // namespace dgr
