#include "pmsim/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <thread>

#include "pmsim/errors.hpp"

namespace pmsim {

ScalingFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y, std::size_t begin,
                         std::size_t end) {
  if (x.size() != y.size()) throw ValidationError("fit_power_law: x and y lengths differ");
  if (end > x.size() || begin >= end) throw ValidationError("fit_power_law: window out of range");
  if (end - begin < 4) throw ValidationError("fit_power_law needs at least 4 points in the window");
  std::vector<double> lx, ly;
  for (std::size_t i = begin; i < end; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
      throw DomainError("fit_power_law: non-positive value at index " + std::to_string(i));
    }
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) throw DomainError("fit_power_law: x values are all equal");
  ScalingFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ss_res += r * r;
    fit.max_residual = std::max(fit.max_residual, std::abs(r));
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  fit.window_begin = begin;
  fit.window_end = end;
  return fit;
}

ScalingFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
  return fit_power_law(x, y, 0, x.size());
}

bool SweepResult::complete() const {
  return std::all_of(errors.begin(), errors.end(), [](const std::string& e) { return e.empty(); });
}

unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PMSIM_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    throw ValidationError(std::string("PMSIM_WORKERS must be a positive integer, got '") + env + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::optional<std::pair<std::size_t, std::size_t>> adiabatic_window(const SweepResult& sweep, double tolerance) {
  std::optional<std::pair<std::size_t, std::size_t>> best;
  std::size_t start = 0;
  bool open = false;
  for (std::size_t i = 0; i <= sweep.size(); ++i) {
    const bool ok = i < sweep.size() && sweep.errors[i].empty() && sweep.validities[i] < kValidityThreshold &&
                    sweep.disturbances[i] > 100.0 * tolerance;
    if (ok && !open) {
      start = i;
      open = true;
    } else if (!ok && open) {
      open = false;
      if (!best || i - start > best->second - best->first) best = std::make_pair(start, i);
    }
  }
  return best;
}

SweepResult sweep_over_T(const MeasurementConfig& base, const std::vector<double>& t_values, unsigned workers) {
  if (t_values.size() < 5) throw ValidationError("sweep needs at least 5 T values");
  for (std::size_t i = 0; i < t_values.size(); ++i) {
    if (!(t_values[i] > 0.0)) throw ValidationError("sweep T values must be positive");
    if (i > 0 && !(t_values[i] > t_values[i - 1])) throw ValidationError("sweep T values must be strictly increasing");
  }
  if (t_values.back() / t_values.front() < std::pow(10.0, 1.5) * (1.0 - 1e-12)) {
    throw ValidationError("sweep T values must span at least 1.5 decades");
  }

  const std::size_t n = t_values.size();
  SweepResult s;
  s.t_values = t_values;
  s.runs.assign(n, std::nullopt);
  s.errors.assign(n, std::string());

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      MeasurementConfig c = base;
      c.T = t_values[i];
      try {
        s.runs[i] = run(c);
      } catch (const Error& e) {
        s.errors[i] = e.what();
      }
    }
  };
  const unsigned count = std::min<unsigned>(resolve_workers(workers), static_cast<unsigned>(n));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < count; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < n; ++i) {
    if (s.runs[i]) {
      const RunResult& r = *s.runs[i];
      s.disturbances.push_back(r.disturbance);
      s.entropies.push_back(r.entanglement_entropy);
      s.centroid_errors.push_back(compare_to_prediction(r).centroid_error);
      s.validities.push_back(r.validity);
      s.n_steps.push_back(r.report.n_steps);
    } else {
      s.disturbances.push_back(nan);
      s.entropies.push_back(nan);
      s.centroid_errors.push_back(nan);
      s.validities.push_back(nan);
      s.n_steps.push_back(0);
    }
  }

  if (const auto window = adiabatic_window(s, base.tolerance); window && window->second - window->first >= 4) {
    s.fit = fit_power_law(s.t_values, s.disturbances, window->first, window->second);
  }
  std::vector<double> tail;
  for (std::size_t i = 0; i < n; ++i) {
    if (s.errors[i].empty() && s.validities[i] < kValidityThreshold) tail.push_back(s.disturbances[i]);
  }
  s.monotone_decreasing = tail.size() >= 2;
  for (std::size_t i = 1; i < tail.size(); ++i) s.monotone_decreasing = s.monotone_decreasing && tail[i] < tail[i - 1];
  return s;
}

Discrepancy compare_to_prediction(const RunResult& result) {
  Discrepancy d;
  d.centroid_error = result.pointer_centroid - result.r0 - result.predicted_shift;
  d.relative_error = std::abs(result.predicted_shift) > 1e-12 ? std::abs(d.centroid_error) / std::abs(result.predicted_shift)
                                                              : std::abs(d.centroid_error);
  d.validity = result.validity;
  d.flagged = result.validity_flag;
  return d;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j);
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double rank_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw ValidationError("rank_correlation needs two equal-length samples");
  const std::vector<double> ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

double step_doubling_order(const CVector& psi_n, const CVector& psi_2n, const CVector& psi_4n) {
  const double coarse = (psi_n - psi_2n).cwiseAbs().maxCoeff();
  const double fine = (psi_2n - psi_4n).cwiseAbs().maxCoeff();
  if (!(fine > 0.0)) throw DomainError("step_doubling_order: successive results are identical");
  return std::log2(coarse / fine);
}

std::vector<double> log_spaced(double t_min, double t_max, std::size_t points) {
  if (!(t_min > 0.0) || !(t_max > t_min) || points < 2) {
    throw ValidationError("log spacing needs 0 < t_min < t_max and at least 2 points");
  }
  std::vector<double> t(points);
  const double a = std::log(t_min), b = std::log(t_max);
  for (std::size_t i = 0; i < points; ++i) {
    t[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
  }
  t.front() = t_min;
  t.back() = t_max;
  return t;
}

std::vector<double> rabi_aligned_times(double t_min, double t_max, std::size_t points, double gap) {
  if (!(gap > 0.0)) throw ValidationError("Rabi alignment needs a positive gap");
  std::vector<double> t = log_spaced(t_min, t_max, points);
  for (double& v : t) {
    const double m = std::max(0.0, std::round((v * gap / M_PI - 1.0) / 2.0));
    v = (2.0 * m + 1.0) * M_PI / gap;
  }
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i] > t[i - 1])) throw ValidationError("Rabi-aligned T values collide; use fewer points or a wider range");
  }
  return t;
}

}  // namespace pmsim
