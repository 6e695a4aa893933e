#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace hycast {

// Behavior when an actual value is exactly zero in the MAPE denominator.
enum class MapeZeroPolicy {
  kError,             // refuse: throw listing the offending indices
  kExcludeWithCount,  // skip those points, report how many were dropped
};

struct MapeResult {
  double value = 0.0;      // fractional form (0.10 == 10%)
  std::size_t excluded = 0;  // points dropped under kExcludeWithCount
};

// Mean absolute error: (1/m) * sum |y_i - yhat_i|.
double mae(const std::vector<double>& actual,
           const std::vector<double>& predicted);

// Root mean squared error: sqrt((1/m) * sum (y_i - yhat_i)^2).
double rmse(const std::vector<double>& actual,
            const std::vector<double>& predicted);

// Mean absolute percentage error as a fraction, over admissible points.
MapeResult mape(const std::vector<double>& actual,
                const std::vector<double>& predicted, MapeZeroPolicy policy);

// Coefficient of determination: 1 - SS_res / SS_tot, SS_tot about mean(actual).
// Requires length >= 2 and non-constant actual (SS_tot > 0).
double r_squared(const std::vector<double>& actual,
                 const std::vector<double>& predicted);

// Per-task evaluation summary in original (de-normalized) units.
struct TaskMetrics {
  std::string task;
  double mae = 0.0;
  double rmse = 0.0;
  double mape = 0.0;
  std::size_t mape_excluded = 0;
  double r2 = 0.0;
  std::size_t n = 0;
};

TaskMetrics evaluate_task(const std::string& task,
                          const std::vector<double>& actual,
                          const std::vector<double>& predicted,
                          MapeZeroPolicy policy);

}  // namespace hycast
