#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <vector>

namespace synckit {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};
using Box = std::vector<Interval>;

// Deterministic sample cloud over a compact box: a regular grid, optionally
// augmented with seeded uniform points. Enumeration order is fixed (last
// axis fastest; random points appended), so any reduction over the set is
// reproducible.
class SampleSet {
public:
  static SampleSet grid(const Box& box, const std::vector<int>& counts);
  static SampleSet grid(const Box& box, int per_axis);

  void add_random(int count, std::uint64_t seed);

  const Box& box() const { return box_; }
  const std::vector<int>& grid_counts() const { return counts_; }
  const std::vector<Eigen::VectorXd>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

private:
  Box box_;
  std::vector<int> counts_;
  std::vector<Eigen::VectorXd> points_;
};

}  // namespace synckit
