#pragma once

#include <functional>

namespace prf::spectral {

// Eigensystem of L = x(1-x) d²/dx² (the γ=0 generator) killed at {0,1}:
//   λ_n = n(n+1),  α_n(x) ∝ x(1-x) C^{(3/2)}_{n-1}(1-2x),  n = 1, 2, ...
// normalized so that ∫ α_n² dm = 1 with m(dx) = dx/(x(1-x)).

double eigenvalue(int n);

/// Normalized eigenfunction, α_1(x) = √6 x(1-x).
double eigenfunction(int n, double x);

/// Gegenbauer polynomial C^{(3/2)}_k by recurrence.
double gegenbauer32(int k, double u);

/// Transition density p(t,x,y) of the killed semigroup w.r.t. m,
/// truncated at nmax terms.
double transition_density(double t, double x, double y, int nmax = 64);

/// Q_t f(x) = Σ e^{-λ_n t} α_n(x) ∫ f α_n dm, coefficients by Gauss-Legendre.
double heat(const std::function<double(double)>& f, double t, double x, int nmax = 64);

}  // namespace prf::spectral
