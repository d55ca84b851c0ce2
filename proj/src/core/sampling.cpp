#include "core/sampling.hpp"

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace synckit {

SampleSet SampleSet::grid(const Box& box, const std::vector<int>& counts) {
  if (box.empty()) throw_usage("sample grid: empty box");
  if (counts.size() != box.size()) throw_usage("sample grid: counts/box dimension mismatch");
  for (std::size_t d = 0; d < box.size(); ++d) {
    if (counts[d] < 1) throw_usage("sample grid: per-axis count must be >= 1");
    if (!(box[d].lo <= box[d].hi)) throw_usage("sample grid: interval with lo > hi");
  }

  SampleSet s;
  s.box_ = box;
  s.counts_ = counts;
  const std::size_t dim = box.size();
  std::size_t total = 1;
  for (int c : counts) total *= static_cast<std::size_t>(c);
  s.points_.reserve(total);

  std::vector<int> idx(dim, 0);
  Eigen::VectorXd pt(static_cast<Eigen::Index>(dim));
  for (std::size_t k = 0; k < total; ++k) {
    for (std::size_t d = 0; d < dim; ++d) {
      const int c = counts[d];
      pt[static_cast<Eigen::Index>(d)] =
          (c == 1) ? 0.5 * (box[d].lo + box[d].hi)
                   : box[d].lo + (box[d].hi - box[d].lo) * idx[d] / (c - 1);
    }
    s.points_.push_back(pt);
    for (std::size_t d = dim; d-- > 0;) {  // last axis fastest
      if (++idx[d] < counts[d]) break;
      idx[d] = 0;
    }
  }
  return s;
}

SampleSet SampleSet::grid(const Box& box, int per_axis) {
  return grid(box, std::vector<int>(box.size(), per_axis));
}

void SampleSet::add_random(int count, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t dim = box_.size();
  Eigen::VectorXd pt(static_cast<Eigen::Index>(dim));
  for (int k = 0; k < count; ++k) {
    for (std::size_t d = 0; d < dim; ++d)
      pt[static_cast<Eigen::Index>(d)] = rng.uniform(box_[d].lo, box_[d].hi);
    points_.push_back(pt);
  }
}

}  // namespace synckit
