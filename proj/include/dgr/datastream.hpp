#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dgr/rng.hpp"
#include "dgr/types.hpp"

namespace dgr {

enum class Split { train, test };

// Images live in a [C*H*W, N] float matrix, one column per sample, values
// in [0,1] (pixel bytes / 255, no centering).
struct LabeledDataset {
  MatrixF images;
  VectorI labels;
  ImageShape shape;
  Split split = Split::train;
  int num_classes = 0;
  std::string normalization = "scale=1/255";

  Index size() const { return images.cols(); }
  void validate() const;
};

LabeledDataset load_mnist_split(const std::filesystem::path& dir, Split split);
LabeledDataset load_cifar100_split(const std::filesystem::path& dir, Split split);

struct DatasetPair {
  LabeledDataset train;
  LabeledDataset test;
};

DatasetPair load_mnist(const std::filesystem::path& dir);
DatasetPair load_cifar100(const std::filesystem::path& dir);

// Ordered task sequence over a source dataset pair. Tasks are materialized
// on demand; permMNIST would otherwise hold n_tasks copies of the source.
class TaskStream {
 public:
  enum class Kind { split_classes, permuted };

  static TaskStream make_class_incremental(DatasetPair source, int classes_per_task,
                                           int n_tasks, std::vector<int> class_order);
  static TaskStream make_permuted(DatasetPair source, int n_tasks, std::uint64_t seed);

  int n_tasks() const { return n_tasks_; }
  int classes_per_task() const { return classes_per_task_; }
  int total_classes() const { return total_classes_; }
  Kind kind() const { return kind_; }
  const ImageShape& shape() const { return source_->train.shape; }
  const std::vector<int>& class_order() const { return class_order_; }

  // Global class indices introduced by task t (0-based task index).
  std::vector<int> task_classes(int task) const;

  LabeledDataset train_data(int task) const { return materialize(task, Split::train); }
  LabeledDataset test_data(int task) const { return materialize(task, Split::test); }

  // Observability hook for the strict-setting data-access audit.
  void set_access_hook(std::function<void(int, Split)> hook) { access_hook_ = std::move(hook); }

 private:
  TaskStream() = default;
  LabeledDataset materialize(int task, Split split) const;

  Kind kind_ = Kind::split_classes;
  int classes_per_task_ = 0;
  int n_tasks_ = 0;
  int total_classes_ = 0;
  std::vector<int> class_order_;
  std::shared_ptr<const DatasetPair> source_;
  // split-classes mode: per-task sample indices into the source splits
  std::vector<std::vector<int>> train_index_, test_index_;
  // permuted mode: per-task pixel permutation, labels offset by 10*task
  std::vector<std::vector<int>> pixel_perm_;
  std::function<void(int, Split)> access_hook_;
};

// Seeded shuffled batches over a dataset. Order is a pure function of
// (seed, epoch); the final short batch is emitted.
std::vector<int> epoch_order(Index n, std::uint64_t seed, int epoch);

class BatchIterator {
 public:
  BatchIterator(const LabeledDataset& ds, int batch_size, std::uint64_t seed, int epoch);
  bool next(MatrixF& images, VectorI& labels);

 private:
  const LabeledDataset* ds_;
  std::vector<int> order_;
  int batch_size_;
  std::size_t pos_ = 0;
};

// Endless training cursor: advances through epochs with the same per-epoch
// shuffle contract as BatchIterator.
class BatchCursor {
 public:
  BatchCursor(const LabeledDataset& ds, int batch_size, std::uint64_t seed)
      : ds_(ds), batch_size_(batch_size), seed_(seed), iter_(ds, batch_size, seed, 0) {}
  void next(MatrixF& images, VectorI& labels) {
    if (!iter_.next(images, labels)) {
      iter_ = BatchIterator(ds_, batch_size_, seed_, ++epoch_);
      iter_.next(images, labels);
    }
  }

 private:
  const LabeledDataset& ds_;
  int batch_size_;
  std::uint64_t seed_;
  int epoch_ = 0;
  BatchIterator iter_;
};

MatrixF gather_images(const MatrixF& images, const std::vector<int>& idx);
VectorI gather_labels(const VectorI& labels, const std::vector<int>& idx);

}  // namespace dgr
