#include "dsl/distill/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace dsl::distill {

LambdaSchedule LambdaSchedule::constant(double l0) {
  if (l0 < 0.0) throw std::domain_error("lambda schedule: lambda0 must be >= 0");
  LambdaSchedule s;
  s.kind = Kind::Constant;
  s.lambda0 = l0;
  return s;
}

LambdaSchedule LambdaSchedule::logarithmic(double l0, double lend, long total) {
  if (!(l0 > 0.0))
    throw std::domain_error("logarithmic lambda schedule needs lambda0 > 0");
  if (!(lend > 0.0))
    throw std::domain_error("logarithmic lambda schedule needs lambda_end > 0");
  if (total < 1) throw std::domain_error("logarithmic lambda schedule needs total_steps >= 1");
  LambdaSchedule s;
  s.kind = Kind::Logarithmic;
  s.lambda0 = l0;
  s.lambda_end = lend;
  s.total_steps = total;
  return s;
}

std::string LambdaSchedule::label() const {
  if (kind == Kind::Constant) return "constant(" + std::to_string(lambda0) + ")";
  return "log(" + std::to_string(lambda0) + "->" + std::to_string(lambda_end) +
         "/" + std::to_string(total_steps) + ")";
}

double lambda_at(const LambdaSchedule& schedule, long step) {
  if (step < 0) throw std::domain_error("lambda_at: step must be >= 0");
  if (schedule.kind == LambdaSchedule::Kind::Constant) return schedule.lambda0;
  if (step <= 0) return schedule.lambda0;
  if (step >= schedule.total_steps) return schedule.lambda_end;
  const double u = double(step) / double(schedule.total_steps);
  return std::exp(std::log(schedule.lambda0) +
                  u * (std::log(schedule.lambda_end) - std::log(schedule.lambda0)));
}

}  // namespace dsl::distill
