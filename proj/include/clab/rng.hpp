#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

namespace clab {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t& state)
{
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t x)
{
    std::uint64_t s = x;
    return splitmix64(s);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace detail

/// Deterministic xoshiro256** stream keyed by (seed, stream_id).
///
/// Every draw is defined in integer arithmetic (bounded integers use rejection,
/// not std::uniform_int_distribution) so sequences are identical on every
/// platform. Copying a stream forks it: both copies replay the same sequence.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id = 0) : seed_(seed), stream_id_(stream_id)
    {
        std::uint64_t sm = detail::mix64(seed) ^ detail::mix64(stream_id ^ 0x6a09e667f3bcc909ULL);
        sm ^= detail::rotl(detail::mix64(stream_id), 17);
        for (auto& w : state_) w = detail::splitmix64(sm);
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    /// Fresh stream for a child id, derived from this stream's key (not its position).
    RngStream substream(std::uint64_t child) const
    {
        return RngStream(seed_, detail::mix64(stream_id_ ^ detail::mix64(child + 0x3c6ef372fe94f82bULL)));
    }

    std::uint64_t next_u64()
    {
        const std::uint64_t result = detail::rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl(state_[3], 45);
        return result;
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound). bound must be positive.
    std::uint64_t uniform_index(std::uint64_t bound)
    {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    /// Standard normal via Box-Muller (one value per call).
    double normal()
    {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Fisher-Yates permutation of [0, n).
    std::vector<std::size_t> permutation(std::size_t n)
    {
        std::vector<std::size_t> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = i;
        shuffle(p);
        return p;
    }

    template <typename T>
    void shuffle(std::vector<T>& v)
    {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::array<std::uint64_t, 4> state_{};
};

}  // namespace clab
