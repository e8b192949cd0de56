#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace dkplab {

inline constexpr std::string_view kVersion = "0.1.0";

// Worker count for sweeps: DKPLAB_WORKERS if set, else hardware concurrency.
int worker_count();

// Runs f(i) for i in [0, n). Callers write results into preallocated slots so
// output never depends on scheduling order. If a body throws, remaining work
// is drained and the first exception is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f);

// Compensated accumulator: window statistics feed identity checks with 1e-10
// tolerances, so plain summation error is not acceptable.
struct Kahan {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    double y = v - carry;
    double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

// C^2 cutoff profile: 1 on [0, 1/2], quintic smoothstep down to 0 at 1,
// 0 beyond. Argument is |x|; the derivative is with respect to that radius.
double bump_profile(double a);
double bump_profile_deriv(double a);

std::uint64_t fnv1a64(std::string_view bytes);

// %.17g -- round-trippable doubles for regression baselines.
std::string fmt_g17(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  void add_row(std::initializer_list<double> vals) { rows.emplace_back(vals); }
  std::string serialize() const;
  void write(const std::string& path) const;
};

}  // namespace dkplab
