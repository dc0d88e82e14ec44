// Exact-arithmetic backend for the symcone routines.
#pragma once

#include <gmpxx.h>

#include <span>
#include <vector>

namespace khess::exact {

/// The exact rational value of a double (every finite double is dyadic).
mpq_class to_rational(double x);

std::vector<mpq_class> to_rational(std::span<const double> xs);

/// Scale a vector of doubles by a common power of two so all entries become
/// integers. Homogeneous polynomial identities and sign tests are unchanged
/// by the scaling, and integer arithmetic avoids gcd normalisation.
std::vector<mpz_class> to_scaled_integers(std::span<const double> xs);

int sign(const mpq_class& x);
int sign(const mpz_class& x);

}  // namespace khess::exact
