#pragma once

namespace bellcert {

double normal_cdf(double x);
// 2(1 - Phi(|z|)) evaluated as erfc(|z|/sqrt 2) so small tails keep their precision.
double two_tailed_p(double z);
// Inverse of normal_cdf on (0,1).
double normal_quantile(double p);

}  // namespace bellcert
