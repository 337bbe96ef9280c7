#pragma once

#include <span>

#include "rwre/hashing.hpp"

namespace rwre {

// Deterministic gamma and Dirichlet draws on top of the hashed streams.
//
// The samplers are rejection-free: for a fixed shape parameter the number of
// uniforms consumed is fixed, so site kernels are a pure function of
// (seed, site) regardless of the values drawn.
//   - integer shape k:   sum of k exponentials, consuming k uniforms;
//   - fractional shape:  inverse CDF of the gamma distribution applied to a
//                        single uniform, evaluated with our own Lanczos
//                        log-gamma plus series/continued-fraction incomplete
//                        gamma (no libm lgamma, whose bits vary across
//                        platforms).

double lanczos_lgamma(double x);

// Regularized lower incomplete gamma P(a, x).
double reg_lower_gamma(double a, double x);

// Inverse of x -> P(a, x); u must lie in (0, 1).
double gamma_icdf(double a, double u);

double gamma_draw(double alpha, HashStream& stream);

void dirichlet_draw(std::span<const double> alpha, HashStream& stream,
                    std::span<double> out);

}  // namespace rwre
