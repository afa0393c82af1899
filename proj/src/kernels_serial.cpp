#include <algorithm>
#include <vector>

#include "mgl/data.hpp"
#include "mgl/groups.hpp"
#include "mgl/kernels.hpp"
#include "mgl/learners.hpp"
#include "mgl/risk.hpp"

namespace mgl::kernels {

double pairwise_combine(std::span<const double> partials) {
  if (partials.empty()) return 0.0;
  std::vector<double> level(partials.begin(), partials.end());
  while (level.size() > 1) {
    std::vector<double> next((level.size() + 1) / 2);
    for (std::size_t i = 0; i < next.size(); ++i) {
      next[i] = 2 * i + 1 < level.size() ? level[2 * i] + level[2 * i + 1] : level[2 * i];
    }
    level.swap(next);
  }
  return level.front();
}

namespace serial {

double sum(std::span<const double> values) {
  const std::size_t blocks = (values.size() + kBlockSize - 1) / kBlockSize;
  std::vector<double> partials(blocks, 0.0);
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t end = std::min(values.size(), (b + 1) * kBlockSize);
    double s = 0.0;
    for (std::size_t i = b * kBlockSize; i < end; ++i) s += values[i];
    partials[b] = s;
  }
  return pairwise_combine(partials);
}

std::vector<uint8_t> membership_mask(const BoundPredicate& pred, const Dataset& ds) {
  std::vector<uint8_t> mask(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) mask[i] = pred.matches(ds.categories(i)) ? 1 : 0;
  return mask;
}

std::vector<uint32_t> route_rows(const GroupTree& tree, const Dataset& ds) {
  std::vector<uint32_t> out(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) out[i] = static_cast<uint32_t>(tree.deepest_containing(ds.example(i)));
  return out;
}

double loss_sum(const Predictor& f, const Dataset& ds, std::span<const uint32_t> rows, const Loss& loss) {
  std::vector<double> values(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    values[i] = loss.evaluate(f, ds.example(rows[i]), ds.label(rows[i]));
  }
  return sum(values);
}

std::vector<uint8_t> predict_rows(const Predictor& f, const Dataset& ds, std::span<const uint32_t> rows) {
  std::vector<uint8_t> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = static_cast<uint8_t>(f.predict(ds.example(rows[i])));
  return out;
}

}  // namespace serial
}  // namespace mgl::kernels
