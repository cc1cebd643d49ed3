#pragma once

namespace rk {

/// Parameters of the analytic flop model. All values are exact integers
/// stored as doubles (counts overflow 32-bit range at realistic sizes but
/// stay well inside the 2^53 exact-integer range).
struct CostParams {
  double m = 1;     // operator rows
  double n = 1;     // operator cols
  double K = 1;     // outer iterations
  double ell_n = 1;
  double ell_m = 1;
  double C_mv = 0;    // flops per operator matvec / rmatvec
  double C_sk_n = 0;  // flops per length-n sketch application
  double C_sk_m = 0;  // flops per length-m sketch application
};

/// (2K+1)C_mv + (K+1)(m+n+C_sk_n+C_sk_m+3(l_n+l_m)-2)
///            + K(K+1)(m+n+2 l_m+2 l_n-1)
double flops_rgk(const CostParams& p);

/// (2K+1)C_mv + (K+1)(5(m+n)-2) - 2(m+n)
double flops_gkb(const CostParams& p);

/// flops_gkb + K(K-1)/2 * (3(n+m)-2)
double flops_rogkb(const CostParams& p);

/// Inner-product sub-counts of the three factorizations.
double rgk_inner_product_flops(const CostParams& p);    // (K+1)(K+2)(l_m+l_n-1)
double gkb_inner_product_flops(const CostParams& p);    // 2K(n+m-1)
double rogkb_inner_product_flops(const CostParams& p);  // K(K+1)(n+m-1)

/// Cost model of one SRHT application: 2n*log2(ell+1) flops.
double srht_sketch_cost(double n, double ell);

} // namespace rk
