#pragma once

namespace s3w {

// Modified Bessel function of the first kind, order v >= 0, x >= 0.
// Power series (all terms positive, truncated at term < 1e-16 * partial sum)
// for moderate arguments; large-argument asymptotic beyond x = 30 unless the
// order is too large for it, in which case the series is kept.
double bessel_i(double v, double x);

// log I_v(x), stable for small x (the (x/2)^v prefactor is kept in log form).
double log_bessel_i(double v, double x);

}  // namespace s3w
