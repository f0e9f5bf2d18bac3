#pragma once

#include <array>
#include <cstdint>

namespace infl {

/**
 * @brief Philox4x32-10 counter-based generator.
 *
 * Every output block is a pure function of (key, counter), so any sample can
 * be regenerated from the seed and its index alone.
 */
class Philox4x32 {
public:
    using block = std::array<std::uint32_t, 4>;
    using key_type = std::array<std::uint32_t, 2>;

    static block generate(block ctr, key_type key) {
        for (int r = 0; r < 10; ++r) {
            if (r > 0) {
                key[0] += 0x9E3779B9u;
                key[1] += 0xBB67AE85u;
            }
            ctr = round(ctr, key);
        }
        return ctr;
    }

    static key_type key_from_seed(std::uint64_t seed) {
        return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    }

private:
    static block round(const block& c, const key_type& k) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(0xD2511F53u) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(0xCD9E8D57u) * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

/** Uniform doubles in [0, 1) for sample `index` under `seed`; stream selects a block. */
inline std::array<double, 2> uniform_pair(std::uint64_t seed, std::uint64_t index, std::uint32_t stream = 0) {
    const auto b = Philox4x32::generate(
        {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), stream, 0u},
        Philox4x32::key_from_seed(seed));
    auto to_double = [](std::uint32_t hi, std::uint32_t lo) {
        const std::uint64_t m = (static_cast<std::uint64_t>(hi >> 5) << 26) | (lo >> 6);
        return static_cast<double>(m) * 0x1.0p-53;
    };
    return {to_double(b[0], b[1]), to_double(b[2], b[3])};
}

}  // namespace infl
