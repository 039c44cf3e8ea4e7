#include "xtal/parameters.hpp"

#include <cmath>

#include "xtal/error.hpp"

namespace xtal {

const Segment& Parameters::add(const std::string& name, int rows, int cols) {
  if (rows <= 0 || cols <= 0) throw InvalidArgument("segment '" + name + "' has empty shape");
  if (contains(name)) throw InvalidArgument("duplicate parameter segment '" + name + "'");
  Segment s{name, rows, cols, size()};
  const auto old = values_.size();
  values_.conservativeResize(old + static_cast<Eigen::Index>(s.size()));
  values_.tail(static_cast<Eigen::Index>(s.size())).setZero();
  index_[name] = segments_.size();
  segments_.push_back(s);
  return segments_.back();
}

const Segment& Parameters::add_uniform(const std::string& name, int rows, int cols, int fan_in,
                                       std::mt19937_64& rng) {
  const Segment& s = add(name, rows, cols);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (std::size_t i = 0; i < s.size(); ++i) values_[static_cast<Eigen::Index>(s.offset + i)] = dist(rng);
  return s;
}

const Segment& Parameters::segment(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw InvalidArgument("no parameter segment '" + name + "'");
  return segments_[it->second];
}

Eigen::Map<Eigen::MatrixXd> Parameters::view(const std::string& name) {
  const Segment& s = segment(name);
  return {values_.data() + s.offset, s.rows, s.cols};
}

Eigen::Map<const Eigen::MatrixXd> Parameters::view(const std::string& name) const {
  const Segment& s = segment(name);
  return {values_.data() + s.offset, s.rows, s.cols};
}

void Parameters::append(const Parameters& other, const std::string& prefix) {
  for (const auto& s : other.segments()) {
    const Segment& mine = add(prefix + s.name, s.rows, s.cols);
    values_.segment(static_cast<Eigen::Index>(mine.offset), static_cast<Eigen::Index>(s.size())) =
        other.values_.segment(static_cast<Eigen::Index>(s.offset), static_cast<Eigen::Index>(s.size()));
  }
}

Parameters Parameters::extract(const std::string& prefix) const {
  Parameters out;
  for (const auto& s : segments_) {
    if (s.name.rfind(prefix, 0) != 0) continue;
    const Segment& mine = out.add(s.name.substr(prefix.size()), s.rows, s.cols);
    out.values_.segment(static_cast<Eigen::Index>(mine.offset), static_cast<Eigen::Index>(s.size())) =
        values_.segment(static_cast<Eigen::Index>(s.offset), static_cast<Eigen::Index>(s.size()));
  }
  return out;
}

bool Parameters::operator==(const Parameters& other) const {
  if (segments_.size() != other.segments_.size() || size() != other.size()) return false;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& a = segments_[i];
    const auto& b = other.segments_[i];
    if (a.name != b.name || a.rows != b.rows || a.cols != b.cols || a.offset != b.offset) return false;
  }
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    if (values_[i] != other.values_[i]) return false;
  }
  return true;
}

}  // namespace xtal
