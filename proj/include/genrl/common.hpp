#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace genrl {

using Vec = std::vector<double>;
using Rng = std::mt19937_64;

// Error hierarchy. Everything derives from std::runtime_error so callers that
// only care about "something went wrong" can catch one type.

class InvalidInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(const std::string& what, std::size_t line, std::size_t column);
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Raised when iterating a kappa polynomial produces a non-finite parameter.
class NumericOverflow : public std::runtime_error {
 public:
  explicit NumericOverflow(std::size_t instance);
  std::size_t instance() const noexcept { return instance_; }

 private:
  std::size_t instance_;
};

/// No rollout entered the target region, so no particles could be collected.
class EmptyDistribution : public std::runtime_error {
 public:
  EmptyDistribution(std::size_t vertex, std::size_t instance);
  std::size_t vertex() const noexcept { return vertex_; }
  std::size_t instance() const noexcept { return instance_; }

 private:
  std::size_t vertex_;
  std::size_t instance_;
};

class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnguardableVertex : public std::runtime_error {
 public:
  explicit UnguardableVertex(std::size_t vertex);
  std::size_t vertex() const noexcept { return vertex_; }

 private:
  std::size_t vertex_;
};

// ---------------------------------------------------------------------------
// Seeding

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Derives an independent stream seed from a base seed and a list of tags
/// (iteration, direction, instance, ...). Order of tags matters.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) noexcept;

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

/// Fills `out` with i.i.d. standard normal draws.
void fill_normal(Rng& rng, std::span<double> out);

// ---------------------------------------------------------------------------
// Fork-join parallelism

/// Worker count: GENRL_THREADS if set (>=1), otherwise hardware concurrency.
std::size_t thread_count();

/// Runs fn(0..n-1) across worker threads and joins. Nested calls from inside a
/// worker run serially. The first exception thrown by any task is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Small vector helpers

double l2_norm(std::span<const double> v);
double l2_distance(std::span<const double> a, std::span<const double> b);
bool all_finite(std::span<const double> v);

/// Shortest round-trip text form of a double.
std::string format_double(double x);

}  // namespace genrl
