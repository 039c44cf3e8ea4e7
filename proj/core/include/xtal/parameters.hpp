#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace xtal {

/// Named rows x cols block inside a flat parameter vector (column-major).
struct Segment {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;
  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

/// Flat vector of trainable weights with a named-segment index.
class Parameters {
 public:
  /// Appends a zero-filled segment; names must be unique.
  const Segment& add(const std::string& name, int rows, int cols);
  /// Adds a segment filled from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  const Segment& add_uniform(const std::string& name, int rows, int cols, int fan_in,
                             std::mt19937_64& rng);

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const Segment& segment(const std::string& name) const;
  const std::vector<Segment>& segments() const { return segments_; }

  Eigen::Map<Eigen::MatrixXd> view(const std::string& name);
  Eigen::Map<const Eigen::MatrixXd> view(const std::string& name) const;

  Eigen::VectorXd& values() { return values_; }
  const Eigen::VectorXd& values() const { return values_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }

  /// Appends every segment of `other` under `prefix`.
  void append(const Parameters& other, const std::string& prefix);
  /// Extracts the segments whose names start with `prefix` (prefix stripped).
  Parameters extract(const std::string& prefix) const;

  bool operator==(const Parameters& other) const;

 private:
  std::vector<Segment> segments_;
  std::unordered_map<std::string, std::size_t> index_;
  Eigen::VectorXd values_;
};

}  // namespace xtal
