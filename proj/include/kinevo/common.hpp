#ifndef KINEVO_COMMON_HPP
#define KINEVO_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace kinevo {

/// Control vector of the major player, a point of a compact box in R^r.
using Control = std::vector<double>;

namespace tol {
inline constexpr double pos = 1e-12;       // positivity slack after ODE steps
inline constexpr double sum = 1e-9;        // simplex sum slack
inline constexpr double support = 1e-8;    // zero-coordinate classification
}  // namespace tol

inline double l1_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

inline double sup_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

inline double l1_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

inline double sup_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
  return s;
}

/// SplitMix64 step; used to derive independent replicate seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d4a2ca9fed1a95ULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t s = master ^ (0x2545f4914f6cdd1dULL * (index + 1));
  std::uint64_t a = splitmix64(s);
  std::uint64_t b = splitmix64(s);
  return a ^ (b << 1);
}

struct SimplexState {
  std::vector<double> weights;

  SimplexState() = default;
  explicit SimplexState(std::vector<double> w) : weights(std::move(w)) {}

  std::size_t dim() const { return weights.size(); }
  double& operator[](std::size_t i) { return weights[i]; }
  double operator[](std::size_t i) const { return weights[i]; }

  bool valid() const {
    double s = 0.0;
    for (double w : weights) {
      if (w < -tol::pos) return false;
      s += w;
    }
    return std::abs(s - 1.0) <= tol::sum;
  }

  /// Clamps tiny negative roundoff to zero and renormalizes the sum to 1.
  void renormalize() {
    double s = 0.0;
    for (double& w : weights) {
      if (w < 0.0) w = 0.0;
      s += w;
    }
    if (s > 0.0)
      for (double& w : weights) w /= s;
  }

  static SimplexState vertex(std::size_t d, std::size_t j) {
    std::vector<double> w(d, 0.0);
    w[j] = 1.0;
    return SimplexState(std::move(w));
  }

  static SimplexState uniform(std::size_t d) {
    return SimplexState(std::vector<double>(d, 1.0 / static_cast<double>(d)));
  }
};

/// Integer occupation counts over a finite (or truncated countable) index set,
/// together with the scale h turning counts into the macroscopic state x = h n.
struct OccupationState {
  std::vector<long long> counts;
  double scale = 1.0;

  OccupationState() = default;
  OccupationState(std::vector<long long> n, double h)
      : counts(std::move(n)), scale(h) {
    if (scale <= 0.0) throw std::invalid_argument("OccupationState: scale must be positive");
    for (long long c : counts)
      if (c < 0) throw std::invalid_argument("OccupationState: negative count");
  }

  std::size_t max_index() const { return counts.size(); }

  long long total() const {
    return std::accumulate(counts.begin(), counts.end(), 0LL);
  }

  /// Sum of size * count; the conserved quantity of merging/splitting models
  /// when the index encodes coalition size (index i holds size i+1).
  long long weighted_total() const {
    long long s = 0;
    for (std::size_t i = 0; i < counts.size(); ++i)
      s += static_cast<long long>(i + 1) * counts[i];
    return s;
  }

  std::vector<double> scaled() const {
    std::vector<double> x(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
      x[i] = scale * static_cast<double>(counts[i]);
    return x;
  }

  static OccupationState from_population(std::vector<long long> n) {
    long long total = std::accumulate(n.begin(), n.end(), 0LL);
    if (total <= 0) throw std::invalid_argument("OccupationState: empty population");
    return OccupationState(std::move(n), 1.0 / static_cast<double>(total));
  }
};

enum class CommMode { C1_no_communication, C2_full_communication };

/// Partition of the small players into classes with communication mode,
/// limiting class fractions and per-class meeting intensities.
struct ClassStructure {
  std::size_t num_classes = 1;
  CommMode comm_mode = CommMode::C1_no_communication;
  std::vector<double> class_fractions;   // omega_alpha, sums to 1
  std::vector<double> per_class_kappa;   // kappa_alpha > 0

  void validate() const {
    if (num_classes == 0) throw std::invalid_argument("ClassStructure: no classes");
    if (class_fractions.size() != num_classes || per_class_kappa.size() != num_classes)
      throw std::invalid_argument("ClassStructure: field sizes do not match num_classes");
    double s = 0.0;
    for (double w : class_fractions) {
      if (w < 0.0) throw std::invalid_argument("ClassStructure: negative class fraction");
      s += w;
    }
    if (std::abs(s - 1.0) > tol::sum)
      throw std::invalid_argument("ClassStructure: class fractions must sum to 1");
    for (double k : per_class_kappa)
      if (k <= 0.0) throw std::invalid_argument("ClassStructure: kappa must be positive");
  }
};

}  // namespace kinevo

#endif  // KINEVO_COMMON_HPP
