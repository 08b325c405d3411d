#pragma once

// Data-parallel kernels. Every kernel has a plain serial reference next to its
// OpenMP variant; both write each output slot from exactly one iteration, so
// results are bit-identical regardless of thread count.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mdpabs::par {

enum class Exec { serial, parallel };

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline Exec default_exec() { return max_threads() > 1 ? Exec::parallel : Exec::serial; }

/// Upper triangle (i < j) of a symmetric matrix with zero diagonal.
class CondensedMatrix {
 public:
  CondensedMatrix() = default;
  explicit CondensedMatrix(std::size_t n) : n_(n), data_(n > 1 ? n * (n - 1) / 2 : 0, 0.0) {}

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const {
    if (i == j) return 0.0;
    return i < j ? data_[offset(i, j)] : data_[offset(j, i)];
  }
  double& at_upper(std::size_t i, std::size_t j) { return data_[offset(i, j)]; }
  const std::vector<double>& raw() const { return data_; }

 private:
  std::size_t offset(std::size_t i, std::size_t j) const { return i * n_ - i * (i + 1) / 2 + (j - i - 1); }
  std::size_t n_ = 0;
  std::vector<double> data_;
};

template <class Dist>
CondensedMatrix pairwise_serial(std::size_t n, Dist&& dist) {
  CondensedMatrix m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) m.at_upper(i, j) = dist(i, j);
  return m;
}

template <class Dist>
CondensedMatrix pairwise_omp(std::size_t n, Dist&& dist) {
  CondensedMatrix m(n);
  const auto rows = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < rows; ++i)
    for (std::size_t j = static_cast<std::size_t>(i) + 1; j < n; ++j)
      m.at_upper(static_cast<std::size_t>(i), j) = dist(static_cast<std::size_t>(i), j);
  return m;
}

template <class Dist>
CondensedMatrix pairwise(Exec exec, std::size_t n, Dist&& dist) {
  return exec == Exec::parallel ? pairwise_omp(n, dist) : pairwise_serial(n, dist);
}

/// For each item, the closest center (ties to the lowest center index).
template <class Dist>
void nearest_serial(std::size_t n_items, std::size_t n_centers, Dist&& dist, std::span<std::uint32_t> index,
                    std::span<double> distance) {
  for (std::size_t i = 0; i < n_items; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t arg = 0;
    for (std::size_t c = 0; c < n_centers; ++c) {
      const double d = dist(i, c);
      if (d < best) {
        best = d;
        arg = static_cast<std::uint32_t>(c);
      }
    }
    index[i] = arg;
    distance[i] = best;
  }
}

template <class Dist>
void nearest_omp(std::size_t n_items, std::size_t n_centers, Dist&& dist, std::span<std::uint32_t> index,
                 std::span<double> distance) {
  const auto n = static_cast<std::int64_t>(n_items);
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t arg = 0;
    for (std::size_t c = 0; c < n_centers; ++c) {
      const double d = dist(i, c);
      if (d < best) {
        best = d;
        arg = static_cast<std::uint32_t>(c);
      }
    }
    index[i] = arg;
    distance[i] = best;
  }
}

template <class Dist>
void nearest(Exec exec, std::size_t n_items, std::size_t n_centers, Dist&& dist, std::span<std::uint32_t> index,
             std::span<double> distance) {
  if (exec == Exec::parallel)
    nearest_omp(n_items, n_centers, dist, index, distance);
  else
    nearest_serial(n_items, n_centers, dist, index, distance);
}

/// out[i] = f(i) for independent i.
template <class F>
void map_serial(std::size_t n, std::span<double> out, F&& f) {
  for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
}

template <class F>
void map_omp(std::size_t n, std::span<double> out, F&& f) {
  const auto m = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i) out[static_cast<std::size_t>(i)] = f(static_cast<std::size_t>(i));
}

template <class F>
void map(Exec exec, std::size_t n, std::span<double> out, F&& f) {
  if (exec == Exec::parallel)
    map_omp(n, out, f);
  else
    map_serial(n, out, f);
}

}  // namespace mdpabs::par
