#include <algorithm>
#include <cstddef>
#include <vector>

#include "mgl/data.hpp"
#include "mgl/groups.hpp"
#include "mgl/kernels.hpp"
#include "mgl/learners.hpp"
#include "mgl/risk.hpp"

namespace mgl::kernels::parallel {

namespace {

// Rows below this count run on the calling thread.
constexpr std::ptrdiff_t kMinParallelRows = 2 * static_cast<std::ptrdiff_t>(kBlockSize);

}  // namespace

double sum(std::span<const double> values) {
  const auto blocks = static_cast<std::ptrdiff_t>((values.size() + kBlockSize - 1) / kBlockSize);
  std::vector<double> partials(static_cast<std::size_t>(blocks), 0.0);
#pragma omp parallel for schedule(static) if (blocks > 1)
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * kBlockSize;
    const std::size_t end = std::min(values.size(), begin + kBlockSize);
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += values[i];
    partials[static_cast<std::size_t>(b)] = s;
  }
  return pairwise_combine(partials);
}

std::vector<uint8_t> membership_mask(const BoundPredicate& pred, const Dataset& ds) {
  const auto n = static_cast<std::ptrdiff_t>(ds.size());
  std::vector<uint8_t> mask(ds.size());
#pragma omp parallel for schedule(static) if (n >= kMinParallelRows)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    mask[static_cast<std::size_t>(i)] = pred.matches(ds.categories(static_cast<std::size_t>(i))) ? 1 : 0;
  }
  return mask;
}

std::vector<uint32_t> route_rows(const GroupTree& tree, const Dataset& ds) {
  const auto n = static_cast<std::ptrdiff_t>(ds.size());
  std::vector<uint32_t> out(ds.size());
#pragma omp parallel for schedule(static) if (n >= kMinParallelRows)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    out[r] = static_cast<uint32_t>(tree.deepest_containing(ds.example(r)));
  }
  return out;
}

double loss_sum(const Predictor& f, const Dataset& ds, std::span<const uint32_t> rows, const Loss& loss) {
  const auto n = static_cast<std::ptrdiff_t>(rows.size());
  std::vector<double> values(rows.size());
#pragma omp parallel for schedule(static) if (n >= kMinParallelRows)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const uint32_t r = rows[static_cast<std::size_t>(i)];
    values[static_cast<std::size_t>(i)] = loss.evaluate(f, ds.example(r), ds.label(r));
  }
  return sum(values);
}

std::vector<uint8_t> predict_rows(const Predictor& f, const Dataset& ds, std::span<const uint32_t> rows) {
  const auto n = static_cast<std::ptrdiff_t>(rows.size());
  std::vector<uint8_t> out(rows.size());
#pragma omp parallel for schedule(static) if (n >= kMinParallelRows)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = static_cast<uint8_t>(f.predict(ds.example(rows[static_cast<std::size_t>(i)])));
  }
  return out;
}

}  // namespace mgl::kernels::parallel
