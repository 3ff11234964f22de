#include "dfv/flowcore/provider.hpp"

#include <string>

#include "dfv/numcore/error.hpp"

namespace dfv::flow {

Grid VelocityProvider::evaluate(const Grid& state, double time, ConditionId condition) {
  const BatchItem item{state, time, condition};
  return std::move(evaluate_batch(std::span<const BatchItem>(&item, 1)).front());
}

std::vector<Grid> VelocityProvider::evaluate_batch(std::span<const BatchItem> items) {
  check_items(items);
  record_call(items.size());
  auto out = compute(items);
  if (out.size() != items.size()) fail(ErrorKind::Data, "provider returned a wrong batch size");
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!out[i].same_shape(items[i].state.get())) fail(ErrorKind::Shape, "provider changed latent dims");
  }
  return out;
}

void VelocityProvider::record_call(std::size_t batch) noexcept {
  stats_.calls += 1;
  stats_.items += batch;
  stats_.calls_by_batch[batch] += 1;
}

void VelocityProvider::check_items(std::span<const BatchItem> items) const {
  if (items.empty()) fail(ErrorKind::Parameter, "empty evaluation batch");
  const Extents geom = geometry();
  for (const auto& item : items) {
    if (!geom.empty() && item.state.get().dims() != geom) {
      fail(ErrorKind::Shape, "latent dims do not match the model geometry");
    }
    if (!has_condition(item.condition)) {
      fail(ErrorKind::Condition, "unknown condition label " + std::to_string(item.condition.label));
    }
  }
}

}  // namespace dfv::flow
