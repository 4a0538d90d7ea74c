#include "seq2bf/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "seq2bf/error.hpp"
#include "seq2bf/random.hpp"

namespace seq2bf {

GradCheckReport grad_check(const std::function<double(bool)>& loss, std::span<const NamedTensor> params,
                           const GradCheckOptions& options) {
  for (const auto& p : params) p.tensor->zero_grad();
  const double base = loss(true);
  if (!std::isfinite(base)) throw NumericalError("grad_check: loss is not finite at the base point");

  std::vector<std::vector<double>> analytic;
  size_t total = 0;
  for (const auto& p : params) {
    analytic.push_back(p.tensor->grad);
    total += p.tensor->size();
  }

  // (tensor, entry) pairs to visit.
  std::vector<std::pair<size_t, size_t>> entries;
  if (total <= options.max_entries) {
    for (size_t t = 0; t < params.size(); ++t) {
      for (size_t j = 0; j < params[t].tensor->size(); ++j) entries.emplace_back(t, j);
    }
  } else {
    Rng rng(options.seed);
    std::vector<size_t> offsets;
    for (const auto& p : params) offsets.push_back(p.tensor->size());
    for (size_t k = 0; k < options.max_entries; ++k) {
      size_t flat = uniform_index(rng, total);
      size_t t = 0;
      while (flat >= offsets[t]) flat -= offsets[t++];
      entries.emplace_back(t, flat);
    }
  }

  GradCheckReport report;
  for (const auto& p : params) report.per_tensor.push_back({p.name, 0, 0.0});

  for (auto [t, j] : entries) {
    float& v = params[t].tensor->values[j];
    const float saved = v;
    const float plus = static_cast<float>(saved + options.step);
    const float minus = static_cast<float>(saved - options.step);
    v = plus;
    const double lp = loss(false);
    v = minus;
    const double lm = loss(false);
    v = saved;
    if (!std::isfinite(lp) || !std::isfinite(lm)) {
      throw NumericalError("grad_check: non-finite loss while perturbing " + params[t].name);
    }
    const double numeric = (lp - lm) / (static_cast<double>(plus) - static_cast<double>(minus));
    const double a = analytic[t][j];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    const double rel = std::abs(a - numeric) / denom;
    auto& entry = report.per_tensor[t];
    ++entry.checked;
    entry.max_rel_error = std::max(entry.max_rel_error, rel);
    report.max_rel_error = std::max(report.max_rel_error, rel);
  }
  return report;
}

}  // namespace seq2bf
