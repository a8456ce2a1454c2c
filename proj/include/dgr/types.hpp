#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dgr {

// Dense types, templated on scalar. Activations and image batches are
// stored column-per-sample so that one sample is contiguous in memory.
template <typename S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <typename S>
using Array = Eigen::Array<S, Eigen::Dynamic, 1>;

using MatrixF = Matrix<float>;
using VectorF = Vector<float>;
using MatrixD = Matrix<double>;
using VectorD = Vector<double>;
using VectorI = Eigen::VectorXi;

using Index = Eigen::Index;

struct ImageShape {
  int channels = 1;
  int height = 0;
  int width = 0;

  int size() const { return channels * height * width; }
  bool operator==(const ImageShape&) const = default;
};

// Error with a structured context string (file offset, config field, ...).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::uint64_t offset)
      : Error(msg + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& msg, const std::string& field)
      : Error("config field '" + field + "': " + msg), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

#define DGR_CHECK(cond, msg)                                \
  do {                                                      \
    if (!(cond)) throw ::dgr::Error(std::string(msg));      \
  } while (0)

}  // namespace dgr
