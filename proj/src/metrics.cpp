#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "castkit/errors.hpp"
#include "castkit/fruits.hpp"

namespace castkit::fruits {
namespace {

void require_finite(const std::vector<double>& scores, const char* what) {
  if (scores.empty()) throw ProtocolError(std::string(what) + " scores are empty");
  for (double s : scores)
    if (!std::isfinite(s))
      throw ProtocolError(std::string(what) + " scores contain a non-finite value");
}

}  // namespace

FnmrResult fnmr_at_fmr(const ScoreSet& scores, double target_fmr) {
  if (!(target_fmr > 0.0 && target_fmr < 1.0))
    throw ProtocolError("target FMR must lie in (0, 1)");
  require_finite(scores.genuine_scores, "genuine");
  require_finite(scores.impostor_scores, "impostor");

  const std::size_t n = scores.impostor_scores.size();
  const double nd = static_cast<double>(n);
  // Largest k with k / N <= target.
  auto allowed = static_cast<std::size_t>(std::floor(target_fmr * nd));
  while (allowed + 1 <= n && static_cast<double>(allowed + 1) / nd <= target_fmr) ++allowed;
  while (allowed > 0 && static_cast<double>(allowed) / nd > target_fmr) --allowed;
  if (allowed == 0)
    throw InsufficientPairsError("FMR " + std::to_string(target_fmr) + " needs at least " +
                                 std::to_string(static_cast<std::size_t>(
                                     std::ceil(1.0 / target_fmr))) +
                                 " impostor scores, got " + std::to_string(n));

  std::vector<double> impostor = scores.impostor_scores;
  std::nth_element(impostor.begin(), impostor.begin() + allowed, impostor.end(),
                   std::greater<>());
  const double cutoff = impostor[allowed];  // (allowed+1)-th highest
  FnmrResult result;
  result.threshold = std::nextafter(cutoff, std::numeric_limits<double>::infinity());
  std::size_t below = 0;
  for (double g : scores.genuine_scores)
    if (g < result.threshold) ++below;
  result.fnmr = static_cast<double>(below) /
                static_cast<double>(scores.genuine_scores.size());
  return result;
}

GroupMetrics fairness_metrics(const std::map<std::string, double>& group_fnmrs) {
  if (group_fnmrs.size() < 2)
    throw UndefinedMetricError("fairness metrics need at least two groups");
  GroupMetrics m;
  m.group_fnmr = group_fnmrs;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
  for (const auto& [group, fnmr] : group_fnmrs) {
    if (!std::isfinite(fnmr) || fnmr < 0.0)
      throw UndefinedMetricError("group " + group + " has an invalid error rate");
    lo = std::min(lo, fnmr);
    hi = std::max(hi, fnmr);
    sum += fnmr;
  }
  if (lo == 0.0)
    throw UndefinedMetricError("SER is undefined when the lowest group error is zero");
  const double count = static_cast<double>(group_fnmrs.size());
  m.avg = hi == lo ? lo : sum / count;  // equal groups: no rounding residue
  double var = 0.0;
  for (const auto& [group, fnmr] : group_fnmrs) var += (fnmr - m.avg) * (fnmr - m.avg);
  m.std = std::sqrt(var / count);
  m.ser = hi / lo;
  return m;
}

double round_half_up(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const double x = std::abs(value) * scale;
  const double rounded = std::floor(x + 0.5 + 1e-9) / scale;
  return std::copysign(rounded, value);
}

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, round_half_up(value, decimals));
  return buf;
}

}  // namespace castkit::fruits
