#include "morsevanish/sampling.hpp"

#include <cmath>
#include <numbers>

namespace morsevanish {

double radical_inverse(std::uint64_t index, int base)
{
    double inv = 1.0 / base;
    double f = inv;
    double r = 0.0;
    while (index > 0) {
        r += f * static_cast<double>(index % base);
        index /= base;
        f *= inv;
    }
    return r;
}

std::vector<int> halton_bases(int dimension)
{
    std::vector<int> primes;
    for (int c = 2; static_cast<int>(primes.size()) < dimension; ++c) {
        bool prime = true;
        for (int p : primes)
            if (c % p == 0) {
                prime = false;
                break;
            }
        if (prime) primes.push_back(c);
    }
    return primes;
}

std::vector<double> halton_point(std::uint64_t index, int dimension)
{
    auto bases = halton_bases(dimension);
    std::vector<double> p(dimension);
    for (int i = 0; i < dimension; ++i) p[i] = radical_inverse(index, bases[i]);
    return p;
}

double portable_uniform(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double portable_normal(std::mt19937_64& rng)
{
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = portable_uniform(rng);
    double u2 = portable_uniform(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Eigen::VectorXd random_unit_vector(int dimension, std::mt19937_64& rng)
{
    Eigen::VectorXd v(dimension);
    do {
        for (int i = 0; i < dimension; ++i) v[i] = portable_normal(rng);
    } while (v.norm() < 1e-12);
    return v.normalized();
}

}  // namespace morsevanish
