#pragma once

// Row-level kernels. `serial` is the reference implementation; `parallel`
// uses OpenMP and must return bit-identical results (sums are formed over
// fixed 4096-row blocks combined pairwise, independent of thread count).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mgl {

class Dataset;
class GroupTree;
class Predictor;
struct BoundPredicate;
struct Loss;

namespace kernels {

inline constexpr std::size_t kBlockSize = 4096;

// Combines block partial sums pairwise: [a b c d] -> (a+b)+(c+d).
double pairwise_combine(std::span<const double> partials);

namespace serial {

double sum(std::span<const double> values);
std::vector<uint8_t> membership_mask(const BoundPredicate& pred, const Dataset& ds);
// Deepest tree node containing each row.
std::vector<uint32_t> route_rows(const GroupTree& tree, const Dataset& ds);
// Sum of per-row losses of `f` over `rows`.
double loss_sum(const Predictor& f, const Dataset& ds, std::span<const uint32_t> rows,
                const Loss& loss);
std::vector<uint8_t> predict_rows(const Predictor& f, const Dataset& ds,
                                  std::span<const uint32_t> rows);

}  // namespace serial

namespace parallel {

double sum(std::span<const double> values);
std::vector<uint8_t> membership_mask(const BoundPredicate& pred, const Dataset& ds);
std::vector<uint32_t> route_rows(const GroupTree& tree, const Dataset& ds);
double loss_sum(const Predictor& f, const Dataset& ds, std::span<const uint32_t> rows,
                const Loss& loss);
std::vector<uint8_t> predict_rows(const Predictor& f, const Dataset& ds,
                                  std::span<const uint32_t> rows);

}  // namespace parallel

}  // namespace kernels
}  // namespace mgl
