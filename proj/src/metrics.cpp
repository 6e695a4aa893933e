#include "hycast/metrics.hpp"

#include <cmath>

#include "hycast/error.hpp"

namespace hycast {

namespace {

void require_paired(const std::vector<double>& actual,
                    const std::vector<double>& predicted, const char* op) {
  if (actual.size() != predicted.size()) {
    throw ContractError(std::string(op) + ": series lengths differ (" +
                        std::to_string(actual.size()) + " vs " +
                        std::to_string(predicted.size()) + ")");
  }
  if (actual.empty()) {
    throw ContractError(std::string(op) + ": empty series");
  }
}

}  // namespace

double mae(const std::vector<double>& actual,
           const std::vector<double>& predicted) {
  require_paired(actual, predicted, "mae");
  double total = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    total += std::abs(actual[i] - predicted[i]);
  }
  return total / static_cast<double>(actual.size());
}

double rmse(const std::vector<double>& actual,
            const std::vector<double>& predicted) {
  require_paired(actual, predicted, "rmse");
  double total = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    double d = actual[i] - predicted[i];
    total += d * d;
  }
  return std::sqrt(total / static_cast<double>(actual.size()));
}

MapeResult mape(const std::vector<double>& actual,
                const std::vector<double>& predicted, MapeZeroPolicy policy) {
  require_paired(actual, predicted, "mape");
  std::string zero_indices;
  MapeResult result;
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] == 0.0) {
      if (policy == MapeZeroPolicy::kError) {
        if (!zero_indices.empty()) zero_indices += ", ";
        zero_indices += std::to_string(i);
        continue;
      }
      ++result.excluded;
      continue;
    }
    total += std::abs((actual[i] - predicted[i]) / actual[i]);
    ++used;
  }
  if (!zero_indices.empty()) {
    throw DomainError("mape: actual value is zero at indices [" + zero_indices +
                      "]");
  }
  if (used == 0) {
    throw DomainError("mape: every actual value is zero; nothing to average");
  }
  result.value = total / static_cast<double>(used);
  return result;
}

double r_squared(const std::vector<double>& actual,
                 const std::vector<double>& predicted) {
  require_paired(actual, predicted, "r_squared");
  if (actual.size() < 2) {
    throw ContractError("r_squared: needs at least 2 samples");
  }
  double mean = 0.0;
  for (double v : actual) mean += v;
  mean /= static_cast<double>(actual.size());

  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    double r = actual[i] - predicted[i];
    double t = actual[i] - mean;
    ss_res += r * r;
    ss_tot += t * t;
  }
  if (ss_tot == 0.0) {
    throw DomainError("r_squared: actual series is constant (SS_total = 0)");
  }
  return 1.0 - ss_res / ss_tot;
}

TaskMetrics evaluate_task(const std::string& task,
                          const std::vector<double>& actual,
                          const std::vector<double>& predicted,
                          MapeZeroPolicy policy) {
  TaskMetrics m;
  m.task = task;
  m.n = actual.size();
  m.mae = mae(actual, predicted);
  m.rmse = rmse(actual, predicted);
  MapeResult mp = mape(actual, predicted, policy);
  m.mape = mp.value;
  m.mape_excluded = mp.excluded;
  m.r2 = r_squared(actual, predicted);
  return m;
}

}  // namespace hycast
