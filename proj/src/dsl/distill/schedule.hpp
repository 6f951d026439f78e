#pragma once

#include <cstdint>
#include <string>

// Regularization coefficient schedules.  The adaptive variant raises
// lambda on a logarithmic ramp: constant steps in log-space from
// lambda_0 to lambda_end over total_steps, clamped at the ends.

namespace dsl::distill {

struct LambdaSchedule {
  enum class Kind { Constant, Logarithmic };
  Kind kind = Kind::Constant;
  double lambda0 = 0.0;
  double lambda_end = 0.0;
  long total_steps = 0;

  static LambdaSchedule constant(double l0);
  static LambdaSchedule logarithmic(double l0, double lend, long total);
  std::string label() const;
};

double lambda_at(const LambdaSchedule& schedule, long step);

}  // namespace dsl::distill
