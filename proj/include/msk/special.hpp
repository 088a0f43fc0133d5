#pragma once

namespace msk {

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1],
/// by the modified Lentz continued fraction.
double incomplete_beta(double a, double b, double x);

/// CDF of the F distribution with (d1, d2) degrees of freedom.
double f_cdf(double f, double d1, double d2);

/// Upper tail 1 - CDF, evaluated directly to keep small p-values accurate.
double f_survival(double f, double d1, double d2);

}  // namespace msk
