#pragma once

namespace dahl::stats {

/// Regularized incomplete beta I_x(a, b), evaluated with the modified Lentz
/// continued fraction and the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) when
/// x > (a+1)/(a+b+2). Throws PreconditionError unless a > 0, b > 0, 0 <= x <= 1.
double reg_inc_beta(double a, double b, double x);

/// Same with the complement y = 1 - x supplied separately, which keeps full
/// precision when x is within rounding distance of 1.
double reg_inc_beta(double a, double b, double x, double y);

/// Two-tailed Student-t tail probability P(|T| >= |t|) for `df` degrees of freedom.
double t_sf_two_tailed(double t, double df);

/// F-distribution CDF P(F <= f) and survival P(F > f).
double f_cdf(double f, double df1, double df2);
double f_sf(double f, double df1, double df2);

}  // namespace dahl::stats
