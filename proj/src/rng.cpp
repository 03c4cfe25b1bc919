#include "rml/rng.hpp"

#include <cmath>
#include <numbers>

namespace rml {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t tag_of(std::string_view name)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key)
{
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t(M0) * ctr[0];
        const std::uint64_t p1 = std::uint64_t(M1) * ctr[2];
        ctr = {std::uint32_t(p1 >> 32) ^ ctr[1] ^ key[0], std::uint32_t(p1),
               std::uint32_t(p0 >> 32) ^ ctr[3] ^ key[1], std::uint32_t(p0)};
        key[0] += W0;
        key[1] += W1;
    }
    return ctr;
}

Stream::Stream(std::uint64_t master_seed, std::uint64_t tag, std::uint64_t trial)
    : key_(splitmix64(splitmix64(splitmix64(master_seed) ^ tag) ^ trial))
{
}

Stream Stream::split(std::uint64_t index) const
{
    Stream s;
    s.key_ = splitmix64(key_ ^ splitmix64(index + 0x5851F42D4C957F2Dull));
    return s;
}

void Stream::refill()
{
    block_ = philox4x32({std::uint32_t(counter_), std::uint32_t(counter_ >> 32), 0u, 0u},
                        {std::uint32_t(key_), std::uint32_t(key_ >> 32)});
    ++counter_;
    used_ = 0;
}

std::uint32_t Stream::next_u32()
{
    if (used_ == 4) refill();
    return block_[used_++];
}

std::uint64_t Stream::next_u64()
{
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
}

double Stream::uniform()
{
    return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Stream::normal()
{
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
}

std::uint64_t Stream::below(std::uint64_t bound)
{
    unsigned __int128 m = (unsigned __int128)next_u64() * bound;
    std::uint64_t low = std::uint64_t(m);
    if (low < bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        while (low < threshold) {
            m = (unsigned __int128)next_u64() * bound;
            low = std::uint64_t(m);
        }
    }
    return std::uint64_t(m >> 64);
}

}  // namespace rml
