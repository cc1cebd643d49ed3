#include "rk/cost.hpp"

#include <cmath>
#include <stdexcept>

namespace rk {

namespace {

void check(const CostParams& p) {
  // K = 0 is allowed: the models degenerate to the setup cost.
  if (p.m < 1 || p.n < 1 || p.K < 0 || p.ell_n < 1 || p.ell_m < 1 ||
      p.C_mv < 0 || p.C_sk_n < 0 || p.C_sk_m < 0)
    throw std::invalid_argument("cost: parameters must be positive");
}

} // namespace

double flops_rgk(const CostParams& p) {
  check(p);
  return (2 * p.K + 1) * p.C_mv +
         (p.K + 1) * (p.m + p.n + p.C_sk_n + p.C_sk_m +
                      3 * (p.ell_n + p.ell_m) - 2) +
         p.K * (p.K + 1) * (p.m + p.n + 2 * p.ell_m + 2 * p.ell_n - 1);
}

double flops_gkb(const CostParams& p) {
  check(p);
  return (2 * p.K + 1) * p.C_mv + (p.K + 1) * (5 * (p.m + p.n) - 2) -
         2 * (p.m + p.n);
}

double flops_rogkb(const CostParams& p) {
  return flops_gkb(p) + p.K * (p.K - 1) / 2 * (3 * (p.n + p.m) - 2);
}

double rgk_inner_product_flops(const CostParams& p) {
  check(p);
  return (p.K + 1) * (p.K + 2) * (p.ell_m + p.ell_n - 1);
}

double gkb_inner_product_flops(const CostParams& p) {
  check(p);
  return 2 * p.K * (p.n + p.m - 1);
}

double rogkb_inner_product_flops(const CostParams& p) {
  check(p);
  return p.K * (p.K + 1) * (p.n + p.m - 1);
}

double srht_sketch_cost(double n, double ell) {
  if (n < 1 || ell < 1)
    throw std::invalid_argument("srht_sketch_cost: dims must be positive");
  return 2 * n * std::log2(ell + 1);
}

} // namespace rk
