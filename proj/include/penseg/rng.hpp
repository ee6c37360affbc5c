#pragma once

// Counter-based Philox4x32-10 generator. A (seed, stream) pair selects an
// independent sequence, so replicate r of an experiment draws from stream r
// regardless of which thread runs it.

#include <array>
#include <cstdint>
#include <string_view>

namespace penseg {

inline constexpr std::string_view kRngAlgorithm = "philox4x32-10";

class Philox4x32 {
public:
    using result_type = std::uint32_t;
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    Philox4x32(std::uint64_t seed, std::uint64_t stream = 0);

    /// The raw bijection: ten rounds over `counter` under `key`.
    static Block encrypt(Block counter, Key key);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return 0xFFFFFFFFu; }
    result_type operator()();

    /// Uniform on the open interval (0, 1) with 53 random bits.
    double uniform();
    /// Standard normal by the Box-Muller transform.
    double normal();

private:
    void refill();

    Key key_;
    Block counter_{};
    Block buffer_{};
    int used_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace penseg
