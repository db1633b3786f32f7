#pragma once

#include <cstdint>
#include <limits>

namespace vrgq {

/**
 * Counter-based generator: output k is splitmix64(key + k * golden).
 *
 * The whole state is (key, counter), so streams are cheap to derive
 * (`substream`) and trivially reproducible. Satisfies
 * UniformRandomBitGenerator, so it plugs into <random> distributions.
 */
class CounterRng {
public:
    using result_type = std::uint64_t;

    static constexpr const char* name = "splitmix64-counter";

    explicit CounterRng(std::uint64_t seed = 0) noexcept : key_(mix(seed ^ 0x5851f42d4c957f2dULL)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return mix(key_ + (counter_++) * kGolden); }

    /// Independent stream keyed on (this key, id); does not advance *this.
    CounterRng substream(std::uint64_t id) const noexcept {
        CounterRng r;
        r.key_ = mix(key_ ^ mix(id + kGolden));
        return r;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    std::uint64_t counter() const noexcept { return counter_; }

private:
    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z += kGolden;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

} // namespace vrgq
