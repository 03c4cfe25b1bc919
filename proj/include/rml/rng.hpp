#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace rml {

// Philox4x32-10 counter-based generator.  A Stream is a (key, counter) pair,
// so it is cheap to copy and two streams with different keys never overlap.
class Stream {
public:
    Stream() = default;
    Stream(std::uint64_t master_seed, std::uint64_t tag, std::uint64_t trial);

    // Key a child stream off this one; the parent is not advanced.
    Stream split(std::uint64_t index) const;

    std::uint32_t next_u32();
    std::uint64_t next_u64();
    // Uniform on the open interval (0, 1), 53 random bits.
    double uniform();
    double normal();
    // Uniform on {0, ..., bound-1}; bound > 0.  Lemire rejection, unbiased.
    std::uint64_t below(std::uint64_t bound);
    bool coin() { return (next_u32() & 1u) != 0; }

    std::uint64_t key() const { return key_; }

private:
    void refill();

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int used_ = 4;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

// Stable 64-bit tag for a module or experiment name (FNV-1a).
std::uint64_t tag_of(std::string_view name);

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

}  // namespace rml
