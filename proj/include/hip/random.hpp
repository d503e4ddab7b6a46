#pragma once
#include <cstdint>
#include <random>
#include <vector>
#include <hip/data.hpp>

namespace hip {

/// Seedable generator with platform-independent output. The engine is
/// mt19937_64 (fully specified by the standard); the distributions below are
/// implemented here because the std:: ones are implementation defined.
class Rng
{
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal (Marsaglia polar method).
    double normal();
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols);
    Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double lo, double hi);

    template <class T>
    void shuffle(std::vector<T>& v)
    {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Independent stream seed for replicate / resample `stream` (splitmix64).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

} // namespace hip
