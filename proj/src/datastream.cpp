#include "dgr/datastream.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

#include "dgr/idx.hpp"

namespace dgr {

void LabeledDataset::validate() const {
  DGR_CHECK(images.cols() > 0, "dataset is empty");
  DGR_CHECK(images.cols() == labels.size(), "image/label count mismatch");
  DGR_CHECK(images.rows() == shape.size(), "image size does not match shape");
  DGR_CHECK(labels.minCoeff() >= 0 && labels.maxCoeff() < num_classes,
            "label outside [0, K)");
  DGR_CHECK(images.minCoeff() >= 0.0f && images.maxCoeff() <= 1.0f,
            "pixel values outside [0,1]");
}

namespace {

LabeledDataset from_bytes(const std::vector<std::uint8_t>& pixels,
                          const std::vector<std::uint8_t>& labels, ImageShape shape,
                          Split split, int num_classes) {
  const Index n = static_cast<Index>(labels.size());
  const Index d = shape.size();
  LabeledDataset ds;
  ds.shape = shape;
  ds.split = split;
  ds.num_classes = num_classes;
  ds.images.resize(d, n);
  ds.labels.resize(n);
  for (Index i = 0; i < n; ++i) {
    ds.labels[i] = labels[static_cast<std::size_t>(i)];
    const std::uint8_t* src = pixels.data() + static_cast<std::size_t>(i) * d;
    float* dst = ds.images.col(i).data();
    for (Index j = 0; j < d; ++j) dst[j] = float(src[j]) * (1.0f / 255.0f);
  }
  ds.validate();
  return ds;
}

constexpr std::uint32_t kImageMagic = 2051;
constexpr std::uint32_t kLabelMagic = 2049;

}  // namespace

LabeledDataset load_mnist_split(const std::filesystem::path& dir, Split split) {
  const char* img_name = split == Split::train ? "train-images-idx3-ubyte" : "t10k-images-idx3-ubyte";
  const char* lab_name = split == Split::train ? "train-labels-idx1-ubyte" : "t10k-labels-idx1-ubyte";

  IdxData img = read_idx(dir / img_name, kImageMagic);
  IdxData lab = read_idx(dir / lab_name, kLabelMagic);
  DGR_CHECK(img.dims.size() == 3, "image IDX file must have 3 dims");
  DGR_CHECK(lab.dims.size() == 1, "label IDX file must have 1 dim");
  if (img.dims[0] != lab.dims[0])
    throw Error("count mismatch between image and label files: " +
                std::to_string(img.dims[0]) + " images vs " + std::to_string(lab.dims[0]) +
                " labels in " + dir.string());

  ImageShape shape{1, int(img.dims[1]), int(img.dims[2])};
  return from_bytes(img.data, lab.data, shape, split, 10);
}

DatasetPair load_mnist(const std::filesystem::path& dir) {
  return {load_mnist_split(dir, Split::train), load_mnist_split(dir, Split::test)};
}

LabeledDataset load_cifar100_split(const std::filesystem::path& dir, Split split) {
  const auto file = dir / (split == Split::train ? "train.bin" : "test.bin");
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot open CIFAR-100 file: " + file.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());

  // one record = coarse label, fine label, 3072 pixel bytes
  constexpr std::size_t kRecord = 3074;
  if (bytes.empty() || bytes.size() % kRecord != 0)
    throw ParseError("record-size mismatch in " + file.string() + ": " +
                         std::to_string(bytes.size()) + " bytes is not a multiple of 3074",
                     bytes.size());

  const std::size_t n = bytes.size() / kRecord;
  std::vector<std::uint8_t> pixels(n * 3072), labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* rec = bytes.data() + i * kRecord;
    labels[i] = rec[1];  // fine label
    std::copy(rec + 2, rec + kRecord, pixels.begin() + i * 3072);
  }
  return from_bytes(pixels, labels, ImageShape{3, 32, 32}, split, 100);
}

DatasetPair load_cifar100(const std::filesystem::path& dir) {
  return {load_cifar100_split(dir, Split::train), load_cifar100_split(dir, Split::test)};
}

MatrixF gather_images(const MatrixF& images, const std::vector<int>& idx) {
  MatrixF out(images.rows(), static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(static_cast<Index>(i)) = images.col(idx[i]);
  return out;
}

VectorI gather_labels(const VectorI& labels, const std::vector<int>& idx) {
  VectorI out(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Index>(i)] = labels[idx[i]];
  return out;
}

TaskStream TaskStream::make_class_incremental(DatasetPair source, int classes_per_task,
                                              int n_tasks, std::vector<int> class_order) {
  const int k = source.train.num_classes;
  if (classes_per_task * n_tasks > k)
    throw ConfigError("classes_per_task * n_tasks = " +
                          std::to_string(classes_per_task * n_tasks) + " exceeds " +
                          std::to_string(k) + " source classes",
                      "n_tasks");
  DGR_CHECK(classes_per_task >= 1 && n_tasks >= 1, "need positive task layout");
  {
    std::set<int> seen(class_order.begin(), class_order.end());
    DGR_CHECK(int(class_order.size()) == k && int(seen.size()) == k &&
                  *seen.begin() == 0 && *seen.rbegin() == k - 1,
              "class_order must be a permutation of [0, K)");
  }

  TaskStream s;
  s.kind_ = Kind::split_classes;
  s.classes_per_task_ = classes_per_task;
  s.n_tasks_ = n_tasks;
  s.total_classes_ = k;
  s.class_order_ = std::move(class_order);
  s.source_ = std::make_shared<DatasetPair>(std::move(source));

  // invert: class -> task, then bucket sample indices in source order
  std::vector<int> class_task(k, -1);
  for (int t = 0; t < n_tasks; ++t)
    for (int c = 0; c < classes_per_task; ++c)
      class_task[s.class_order_[t * classes_per_task + c]] = t;

  auto bucket = [&](const LabeledDataset& ds) {
    std::vector<std::vector<int>> idx(n_tasks);
    for (Index i = 0; i < ds.size(); ++i) {
      int t = class_task[ds.labels[i]];
      if (t >= 0) idx[t].push_back(int(i));
    }
    return idx;
  };
  s.train_index_ = bucket(s.source_->train);
  s.test_index_ = bucket(s.source_->test);
  return s;
}

TaskStream TaskStream::make_permuted(DatasetPair source, int n_tasks, std::uint64_t seed) {
  DGR_CHECK(source.train.num_classes == 10 && source.train.shape.channels == 1,
            "permuted streams expect an MNIST-shaped source");
  DGR_CHECK(n_tasks >= 1, "need at least one task");

  TaskStream s;
  s.kind_ = Kind::permuted;
  s.classes_per_task_ = 10;
  s.n_tasks_ = n_tasks;
  s.total_classes_ = 10 * n_tasks;
  const int d = source.train.shape.size();
  s.source_ = std::make_shared<DatasetPair>(std::move(source));

  s.pixel_perm_.resize(n_tasks);
  for (int t = 0; t < n_tasks; ++t) {
    std::vector<int>& perm = s.pixel_perm_[t];
    perm.resize(d);
    std::iota(perm.begin(), perm.end(), 0);
    if (t > 0) {  // task 0 keeps the identity permutation
      Rng rng(derive_seed(seed, "pixel-perm", std::uint64_t(t)));
      rng.shuffle(perm);
    }
  }
  return s;
}

std::vector<int> TaskStream::task_classes(int task) const {
  DGR_CHECK(task >= 0 && task < n_tasks_, "task index out of range");
  std::vector<int> classes(classes_per_task_);
  if (kind_ == Kind::split_classes) {
    for (int c = 0; c < classes_per_task_; ++c)
      classes[c] = class_order_[task * classes_per_task_ + c];
  } else {
    std::iota(classes.begin(), classes.end(), 10 * task);
  }
  return classes;
}

LabeledDataset TaskStream::materialize(int task, Split split) const {
  DGR_CHECK(task >= 0 && task < n_tasks_, "task index out of range");
  if (access_hook_) access_hook_(task, split);
  const LabeledDataset& src = split == Split::train ? source_->train : source_->test;

  LabeledDataset ds;
  ds.shape = src.shape;
  ds.split = split;
  ds.num_classes = total_classes_;
  ds.normalization = src.normalization;

  if (kind_ == Kind::split_classes) {
    const auto& idx = split == Split::train ? train_index_[task] : test_index_[task];
    ds.images = gather_images(src.images, idx);
    ds.labels = gather_labels(src.labels, idx);
  } else {
    const auto& perm = pixel_perm_[task];
    ds.images.resize(src.images.rows(), src.images.cols());
    for (Index i = 0; i < src.images.cols(); ++i) {
      const float* in = src.images.col(i).data();
      float* out = ds.images.col(i).data();
      for (std::size_t j = 0; j < perm.size(); ++j) out[j] = in[perm[j]];
    }
    ds.labels = src.labels.array() + 10 * task;
  }
  ds.validate();
  return ds;
}

std::vector<int> epoch_order(Index n, std::uint64_t seed, int epoch) {
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, "epoch-order", std::uint64_t(epoch)));
  rng.shuffle(order);
  return order;
}

BatchIterator::BatchIterator(const LabeledDataset& ds, int batch_size, std::uint64_t seed,
                             int epoch)
    : ds_(&ds), order_(epoch_order(ds.size(), seed, epoch)), batch_size_(batch_size) {
  DGR_CHECK(batch_size >= 1, "batch_size must be >= 1");
}

bool BatchIterator::next(MatrixF& images, VectorI& labels) {
  if (pos_ >= order_.size()) return false;
  const std::size_t take = std::min<std::size_t>(batch_size_, order_.size() - pos_);
  std::vector<int> idx(order_.begin() + pos_, order_.begin() + pos_ + take);
  pos_ += take;
  images = gather_images(ds_->images, idx);
  labels = gather_labels(ds_->labels, idx);
  return true;
}

}  // namespace dgr
