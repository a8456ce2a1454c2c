#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dgr/datastream.hpp"
#include "dgr/model.hpp"
#include "dgr/pnm.hpp"
#include "dgr/rng.hpp"
#include "dgr/types.hpp"

// Accuracy bookkeeping, modified FID over dataset-trained features, latent
// projections, and replay-sample grids.

namespace dgr {

struct AccuracyMatrix {
  // entries(i, j) = accuracy on task j's test set after training task i,
  // NaN where j > i. avg_after(i) = sample-weighted accuracy over all test
  // data of tasks 0..i after training task i.
  MatrixD entries;
  VectorD avg_after;

  explicit AccuracyMatrix(int n_tasks = 0)
      : entries(MatrixD::Constant(n_tasks, n_tasks,
                                  std::numeric_limits<double>::quiet_NaN())),
        avg_after(VectorD::Zero(n_tasks)) {}

  int n_tasks() const { return int(entries.rows()); }
  double average_final() const {
    return avg_after.size() ? avg_after[avg_after.size() - 1] : 0.0;
  }
};

// argmax over seen-class logits, in evaluation batches
template <typename S>
VectorI predict(const UnifiedModel<S>& model, const MatrixF& images, Index eval_batch = 512) {
  VectorI out(images.cols());
  const auto& seen = model.seen_classes();
  DGR_CHECK(!seen.empty(), "predict: model has no seen classes");
  EncodeState<S> es;
  Matrix<S> logits;
  for (Index at = 0; at < images.cols(); at += eval_batch) {
    const Index n = std::min(eval_batch, images.cols() - at);
    Matrix<S> x = images.middleCols(at, n).template cast<S>();
    model.encode(x, es);
    model.classify(es.mu, logits);
    for (Index j = 0; j < n; ++j) {
      int best = seen[0];
      S best_v = logits(seen[0], j);
      for (int c : seen)
        if (logits(c, j) > best_v) {
          best_v = logits(c, j);
          best = c;
        }
      out[at + j] = best;
    }
  }
  return out;
}

template <typename S>
double accuracy(const UnifiedModel<S>& model, const LabeledDataset& ds) {
  VectorI pred = predict(model, ds.images);
  Index correct = 0;
  for (Index j = 0; j < pred.size(); ++j) correct += (pred[j] == ds.labels[j]);
  return ds.size() ? double(correct) / double(ds.size()) : 0.0;
}

// Fill row `after_task` of the accuracy matrix: per-task accuracies plus the
// sample-weighted aggregate over everything seen so far.
template <typename S>
void evaluate(const UnifiedModel<S>& model, TaskStream& stream, int after_task,
              AccuracyMatrix& acc) {
  Index total = 0, correct = 0;
  for (int j = 0; j <= after_task; ++j) {
    const LabeledDataset& ds = stream.test_data(j);
    const double a = accuracy(model, ds);
    acc.entries(after_task, j) = a;
    correct += Index(std::lround(a * double(ds.size())));
    total += ds.size();
  }
  acc.avg_after[after_task] = total ? double(correct) / double(total) : 0.0;
}

// --- modified FID ----------------------------------------------------------

// Symmetric PSD square root via eigendecomposition; negative eigenvalues
// (numerical noise) clip to zero.
inline MatrixD sqrt_psd(const MatrixD& m) {
  Eigen::SelfAdjointEigenSolver<MatrixD> es(0.5 * (m + m.transpose()));
  VectorD lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

// Fréchet distance between Gaussian fits of two feature clouds [d, N].
inline double frechet_distance(const MatrixD& fa, const MatrixD& fb) {
  DGR_CHECK(fa.rows() == fb.rows(), "frechet_distance: feature widths differ");
  const Index d = fa.rows();
  DGR_CHECK(fa.cols() >= 2 * d && fb.cols() >= 2 * d,
            "frechet_distance: need at least 2*d_feat samples per side");
  VectorD mu_a = fa.rowwise().mean(), mu_b = fb.rowwise().mean();
  MatrixD ca = fa.colwise() - mu_a, cb = fb.colwise() - mu_b;
  MatrixD sa = (ca * ca.transpose()) / double(fa.cols() - 1);
  MatrixD sb = (cb * cb.transpose()) / double(fb.cols() - 1);
  MatrixD ra = sqrt_psd(sa);
  MatrixD cross = sqrt_psd(ra * sb * ra);
  const double tr = sa.trace() + sb.trace() - 2.0 * cross.trace();
  return (mu_a - mu_b).squaredNorm() + tr;
}

// Feature extractor for the modified FID: the encoder of a model trained
// once on the joint training set; features are the penultimate code mu.
struct FeatureExtractor {
  UnifiedModel<float> model;

  explicit FeatureExtractor(UnifiedModel<float> m) : model(std::move(m)) {}
  static FeatureExtractor from_checkpoint(const std::string& path) {
    return FeatureExtractor(UnifiedModel<float>::load(path));
  }

  MatrixD features(const MatrixF& images, Index eval_batch = 512) const {
    MatrixD out(model.config().d_z, images.cols());
    EncodeState<float> es;
    for (Index at = 0; at < images.cols(); at += eval_batch) {
      const Index n = std::min(eval_batch, images.cols() - at);
      MatrixF x = images.middleCols(at, n);
      model.encode(x, es);
      out.middleCols(at, n) = es.mu.cast<double>();
    }
    return out;
  }
};

inline double modified_fid(const MatrixF& real_images, const MatrixF& generated_images,
                           const FeatureExtractor& fx) {
  return frechet_distance(fx.features(real_images), fx.features(generated_images));
}

// --- latent projection -------------------------------------------------------

struct LatentProjection {
  MatrixD coords;  // [2, N] principal-component coordinates of mu
  VectorI labels;
};

template <typename S>
LatentProjection latent_projection(const UnifiedModel<S>& model, const LabeledDataset& ds,
                                   Index eval_batch = 512) {
  MatrixD mu(model.config().d_z, ds.size());
  EncodeState<S> es;
  for (Index at = 0; at < ds.size(); at += eval_batch) {
    const Index n = std::min(eval_batch, ds.size() - at);
    Matrix<S> x = ds.images.middleCols(at, n).template cast<S>();
    model.encode(x, es);
    mu.middleCols(at, n) = es.mu.template cast<double>();
  }
  VectorD center = mu.rowwise().mean();
  MatrixD c = mu.colwise() - center;
  MatrixD cov = (c * c.transpose()) / double(std::max<Index>(1, ds.size() - 1));
  Eigen::SelfAdjointEigenSolver<MatrixD> esolve(cov);
  const Index d = cov.rows();
  MatrixD pcs(d, 2);  // two largest-variance directions
  pcs.col(0) = esolve.eigenvectors().col(d - 1);
  pcs.col(1) = d >= 2 ? esolve.eigenvectors().col(d - 2) : esolve.eigenvectors().col(d - 1);
  LatentProjection out;
  out.coords = pcs.transpose() * c;
  out.labels = ds.labels;
  return out;
}

// Mean over `classes` of the total projected variance within each class.
inline double mean_class_variance(const LatentProjection& p, const std::vector<int>& classes) {
  double sum = 0.0;
  int used = 0;
  for (int cls : classes) {
    VectorD mean = VectorD::Zero(p.coords.rows());
    Index n = 0;
    for (Index j = 0; j < p.labels.size(); ++j)
      if (p.labels[j] == cls) {
        mean += p.coords.col(j);
        ++n;
      }
    if (n < 2) continue;
    mean /= double(n);
    double var = 0.0;
    for (Index j = 0; j < p.labels.size(); ++j)
      if (p.labels[j] == cls) var += (p.coords.col(j) - mean).squaredNorm();
    sum += var / double(n - 1);
    ++used;
  }
  return used ? sum / double(used) : 0.0;
}

// --- replay sample grid ------------------------------------------------------

// One row per seen class, per_class conditional samples per row.
template <typename S>
void dump_replay_grid(const UnifiedModel<S>& model, int per_class, const std::string& path,
                      std::uint64_t seed) {
  const auto& seen = model.seen_classes();
  DGR_CHECK(!seen.empty(), "dump_replay_grid: no seen classes");
  DGR_CHECK(per_class > 0, "dump_replay_grid: per_class must be positive");
  std::vector<int> ordered = seen;
  std::sort(ordered.begin(), ordered.end());
  VectorI ids(Index(ordered.size()) * per_class);
  Index at = 0;
  for (int c : ordered)
    for (int j = 0; j < per_class; ++j) ids[at++] = c;
  Rng rng(derive_seed(seed, "replay-grid"));
  Matrix<S> x_hat;
  generate_images(model, ids, rng, x_hat);
  write_image_grid(path, x_hat.template cast<float>(), model.config().input,
                   int(ordered.size()), per_class);
}

}  // namespace dgr
