#pragma once

#include <complex>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace ergolab {

using cplx = std::complex<double>;

inline constexpr double two_pi = 6.283185307179586476925286766559;

// Error taxonomy. The CLI maps these onto distinct exit codes:
// invalid input -> 2, numerical failure -> 3, size cap -> 4.
struct InvalidInput : std::runtime_error {
    explicit InvalidInput(const std::string& msg) : std::runtime_error(msg) {}
};
struct NumericalFailure : std::runtime_error {
    explicit NumericalFailure(const std::string& msg) : std::runtime_error(msg) {}
};
struct SizeCapExceeded : std::runtime_error {
    explicit SizeCapExceeded(const std::string& msg) : std::runtime_error(msg) {}
};

// Maximum number of basis states a single operator may have.
// Overridable through the ERGOLAB_SIZE_CAP environment variable.
inline std::size_t size_cap() {
    if (const char* env = std::getenv("ERGOLAB_SIZE_CAP")) {
        long v = std::atol(env);
        if (v > 0) return static_cast<std::size_t>(v);
    }
    return 20000;
}

inline void check_size_cap(std::size_t dim, const std::string& what) {
    if (dim > size_cap())
        throw SizeCapExceeded(what + ": dimension " + std::to_string(dim) +
                              " exceeds cap " + std::to_string(size_cap()));
}

namespace detail {

// splitmix64, used to derive independent stream seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t s = master ^ (0x6a09e667f3bcc909ull + stream * 0x9e3779b97f4a7c15ull);
    return splitmix64(s);
}

} // namespace detail

inline const char* version() { return "0.1.0"; }

} // namespace ergolab
