#ifndef KINEVO_KERNELS_HPP
#define KINEVO_KERNELS_HPP

#include <functional>
#include <utility>

#include "kinevo/common.hpp"

namespace kinevo {

/// Payoff of a member of a coalition of the given size (sizes are 1-based).
using SizePayoff =
    std::function<double(std::size_t size, const std::vector<double>& x, const Control& b)>;

/// Weight coefficient a_{l,k} (or a~_{k,j}); must be non-negative.
using KernelWeights = std::function<double(std::size_t l, std::size_t k)>;

inline KernelWeights constant_weights(double a) {
  return [a](std::size_t, std::size_t) { return a; };
}

/// Injection parameters of the preferential-attachment model: a new agent
/// starts a fresh coalition with probability alpha, otherwise joins an
/// existing one with probability proportional to its size.
struct AttachSpec {
  double alpha = 0.0;  // in [0,1]
  std::function<double(const std::vector<double>& x, const Control& b)> lambda;

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0))
      throw std::invalid_argument("AttachSpec: alpha must lie in [0,1]");
    if (!lambda) throw std::invalid_argument("AttachSpec: lambda not set");
  }
};

/// Merge rate C_kj and split rate F_kj (j < k) for coalitions of sizes k, j,
/// plus the attachment parameters for growth models.
struct KernelSpec {
  std::function<double(std::size_t k, std::size_t j, const std::vector<double>& x,
                       const Control& b)>
      merge;  // C_kj, symmetric in (k, j)
  std::function<double(std::size_t k, std::size_t j, const std::vector<double>& x,
                       const Control& b)>
      split;  // F_kj, defined for j < k
  AttachSpec attach;
};

/// Strategic merge/split rates driven by the per-size payoff R: merging fires
/// when beneficial for the members of both coalitions, splitting when a part
/// gains by leaving.
///   C_kj = a_{j+k,k} 1{R_{k+j} >= R_k}(R_{k+j} - R_k)
///        + a_{j+k,j} 1{R_{k+j} >= R_j}(R_{k+j} - R_j)
///   F_kj = a~_{kj} 1{R_j >= R_k}(R_j - R_k) + a~_{k,k-j} 1{R_{k-j} >= R_k}(R_{k-j} - R_k)
inline std::pair<double, double> coalition_rates(std::size_t k, std::size_t j,
                                                 const std::vector<double>& x, const Control& b,
                                                 const KernelWeights& merge_weights,
                                                 const KernelWeights& split_weights,
                                                 const SizePayoff& R) {
  if (k < 1 || j < 1) throw std::invalid_argument("coalition_rates: sizes are 1-based");
  auto weight = [](const KernelWeights& w, std::size_t l, std::size_t m) {
    double a = w(l, m);
    if (a < 0.0) throw std::invalid_argument("coalition kernel: negative weight coefficient");
    return a;
  };
  double rk = R(k, x, b);
  double rj = R(j, x, b);
  double rkj = R(k + j, x, b);
  double c = 0.0;
  if (rkj >= rk) c += weight(merge_weights, k + j, k) * (rkj - rk);
  if (rkj >= rj) c += weight(merge_weights, k + j, j) * (rkj - rj);

  double f = 0.0;
  if (j < k) {
    double rrem = R(k - j, x, b);
    if (rj >= rk) f += weight(split_weights, k, j) * (rj - rk);
    if (rrem >= rk) f += weight(split_weights, k, k - j) * (rrem - rk);
  }
  return {c, f};
}

/// Builds a KernelSpec whose merge/split mappings evaluate coalition_rates.
inline KernelSpec strategic_kernel(KernelWeights merge_weights, KernelWeights split_weights,
                                   SizePayoff R) {
  KernelSpec spec;
  spec.merge = [mw = merge_weights, sw = split_weights, R](
                   std::size_t k, std::size_t j, const std::vector<double>& x, const Control& b) {
    return coalition_rates(k, j, x, b, mw, sw, R).first;
  };
  spec.split = [mw = std::move(merge_weights), sw = std::move(split_weights),
                R = std::move(R)](std::size_t k, std::size_t j, const std::vector<double>& x,
                                  const Control& b) {
    return coalition_rates(k, j, x, b, mw, sw, R).second;
  };
  return spec;
}

inline KernelSpec constant_kernel(double c, double f = 0.0) {
  KernelSpec spec;
  spec.merge = [c](std::size_t, std::size_t, const std::vector<double>&, const Control&) {
    return c;
  };
  spec.split = [f](std::size_t k, std::size_t j, const std::vector<double>&, const Control&) {
    return j < k ? f : 0.0;
  };
  return spec;
}

/// Numerical probe of the boundedness conditions sup C_kj < inf and
/// sup_j sum_{k<j} F_jk < inf on the truncated index range.
struct KernelBoundsReport {
  double sup_merge = 0.0;
  double sup_split_row = 0.0;
};

inline KernelBoundsReport probe_kernel_bounds(const KernelSpec& kernel, std::size_t j_max,
                                              const std::vector<double>& x, const Control& b) {
  KernelBoundsReport rep;
  for (std::size_t k = 1; k <= j_max; ++k) {
    double row = 0.0;
    for (std::size_t j = 1; j <= j_max; ++j) {
      if (kernel.merge) rep.sup_merge = std::max(rep.sup_merge, kernel.merge(k, j, x, b));
      if (kernel.split && j < k) row += kernel.split(k, j, x, b);
    }
    rep.sup_split_row = std::max(rep.sup_split_row, row);
  }
  return rep;
}

}  // namespace kinevo

#endif  // KINEVO_KERNELS_HPP
