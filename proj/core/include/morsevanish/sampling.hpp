#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace morsevanish {

/// Radical inverse of `index` in `base` (one coordinate of a Halton point).
double radical_inverse(std::uint64_t index, int base);

/// First `dimension` primes, used as Halton bases.
std::vector<int> halton_bases(int dimension);

/// Halton point `index` (starting at 1) in [0,1)^d.
std::vector<double> halton_point(std::uint64_t index, int dimension);

/// Standard normal draw built only from mt19937_64 output, so sequences are
/// identical across standard libraries.
double portable_normal(std::mt19937_64& rng);

/// Uniform draw in [0,1) from mt19937_64 output (53-bit mantissa).
double portable_uniform(std::mt19937_64& rng);

Eigen::VectorXd random_unit_vector(int dimension, std::mt19937_64& rng);

}  // namespace morsevanish
