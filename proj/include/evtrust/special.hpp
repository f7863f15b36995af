#pragma once

namespace evtrust {

/// Digamma function psi(x) for x > 0. Throws DomainError otherwise.
double digamma(double x);

/// Trigamma function psi'(x) for x > 0. Needed by the KL gradient.
double trigamma(double x);

/// ln Gamma(x) for x > 0 (Lanczos approximation). Exact zero at 1 and 2.
double log_gamma(double x);

}  // namespace evtrust
