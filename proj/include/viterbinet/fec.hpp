#ifndef VITERBINET_FEC_HPP
#define VITERBINET_FEC_HPP

// Reed-Solomon [255, 223] over GF(256) and the bit <-> binary-symbol mapping
// used by the coded block-fading link.
//
// Field: primitive polynomial x^8 + x^4 + x^3 + x^2 + 1 (0x11d), alpha = 2.
// Generator: prod_{j=1}^{32} (x - alpha^j). Codewords are systematic with the
// 223 information bytes first; array index i holds the coefficient of
// x^{254 - i}. Bits are packed MSB first.

#include "viterbinet/channels.hpp"
#include "viterbinet/error.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace viterbinet::fec {

inline constexpr std::size_t kCodeLength = 255;
inline constexpr std::size_t kInfoLength = 223;
inline constexpr std::size_t kParityLength = kCodeLength - kInfoLength;
inline constexpr std::size_t kCorrectable = kParityLength / 2;
inline constexpr std::size_t kInfoBits = kInfoLength * 8;
inline constexpr std::size_t kCodeBits = kCodeLength * 8;

class GF256 {
public:
    static constexpr unsigned kPrimitive = 0x11d;

    static std::uint8_t exp(unsigned i) noexcept { return tables().exp[i % 255]; }
    static unsigned log(std::uint8_t a) noexcept { return tables().log[a]; }

    static std::uint8_t mul(std::uint8_t a, std::uint8_t b) noexcept
    {
        if (a == 0 || b == 0)
            return 0;
        return tables().exp[tables().log[a] + tables().log[b]];
    }
    static std::uint8_t div(std::uint8_t a, std::uint8_t b) noexcept
    {
        if (a == 0)
            return 0;
        return tables().exp[tables().log[a] + 255 - tables().log[b]];
    }
    static std::uint8_t inv(std::uint8_t a) noexcept { return tables().exp[255 - tables().log[a]]; }
    /// alpha^p for any integer p.
    static std::uint8_t pow_alpha(long long p) noexcept { return tables().exp[static_cast<unsigned>(((p % 255) + 255) % 255)]; }

private:
    struct Tables {
        std::array<std::uint8_t, 512> exp{};
        std::array<unsigned, 256> log{};
    };
    static const Tables& tables() noexcept
    {
        static const Tables t = [] {
            Tables t;
            unsigned x = 1;
            for (unsigned i = 0; i < 255; ++i) {
                t.exp[i] = static_cast<std::uint8_t>(x);
                t.log[x] = i;
                x <<= 1;
                if (x & 0x100)
                    x ^= kPrimitive;
            }
            for (unsigned i = 255; i < 512; ++i)
                t.exp[i] = t.exp[i - 255];
            return t;
        }();
        return t;
    }
};

/// Generator polynomial coefficients, highest degree first (g[0] = 1).
inline const std::array<std::uint8_t, kParityLength + 1>& generator()
{
    static const auto g = [] {
        std::array<std::uint8_t, kParityLength + 1> g{};
        std::vector<std::uint8_t> poly{1};
        for (unsigned j = 1; j <= kParityLength; ++j) {
            std::vector<std::uint8_t> next(poly.size() + 1, 0);
            const std::uint8_t root = GF256::exp(j);
            for (std::size_t i = 0; i < poly.size(); ++i) {
                next[i] ^= poly[i];
                next[i + 1] ^= GF256::mul(poly[i], root);
            }
            poly = std::move(next);
        }
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] = poly[i];
        return g;
    }();
    return g;
}

inline std::vector<std::uint8_t> pack_bits(std::span<const std::uint8_t> bits)
{
    if (bits.size() % 8 != 0)
        throw InvalidInput("pack_bits: bit count must be a multiple of 8");
    std::vector<std::uint8_t> bytes(bits.size() / 8, 0);
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] > 1)
            throw InvalidInput("pack_bits: bits must be 0 or 1");
        bytes[i / 8] = static_cast<std::uint8_t>(bytes[i / 8] | (bits[i] << (7 - i % 8)));
    }
    return bytes;
}

inline std::vector<std::uint8_t> unpack_bits(std::span<const std::uint8_t> bytes)
{
    std::vector<std::uint8_t> bits(bytes.size() * 8);
    for (std::size_t i = 0; i < bits.size(); ++i)
        bits[i] = (bytes[i / 8] >> (7 - i % 8)) & 1u;
    return bits;
}

inline std::size_t hamming_distance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b)
{
    if (a.size() != b.size())
        throw InvalidInput("hamming_distance: lengths differ");
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        d += a[i] != b[i];
    return d;
}

/// Systematic encoding of 223 information bytes.
inline std::vector<std::uint8_t> rs_encode_bytes(std::span<const std::uint8_t> info)
{
    if (info.size() != kInfoLength)
        throw InvalidInput("rs_encode: need exactly 223 information bytes");
    const auto& g = generator();
    std::vector<std::uint8_t> code(info.begin(), info.end());
    code.resize(kCodeLength, 0);
    // long division of info(x) x^32 by g(x); the remainder accumulates in place
    std::array<std::uint8_t, kParityLength> rem{};
    for (std::size_t i = 0; i < kInfoLength; ++i) {
        const std::uint8_t feedback = info[i] ^ rem[0];
        for (std::size_t j = 0; j + 1 < kParityLength; ++j)
            rem[j] = rem[j + 1] ^ GF256::mul(feedback, g[j + 1]);
        rem[kParityLength - 1] = GF256::mul(feedback, g[kParityLength]);
    }
    for (std::size_t j = 0; j < kParityLength; ++j)
        code[kInfoLength + j] = rem[j];
    return code;
}

/// 1784 information bits -> 255 code symbols.
inline std::vector<std::uint8_t> rs_encode(std::span<const std::uint8_t> info_bits)
{
    if (info_bits.size() != kInfoBits)
        throw InvalidInput("rs_encode: need exactly 1784 information bits");
    return rs_encode_bytes(pack_bits(info_bits));
}

/// Syndromes S_j = r(alpha^j), j = 1..32.
inline std::array<std::uint8_t, kParityLength> syndromes(std::span<const std::uint8_t> received)
{
    std::array<std::uint8_t, kParityLength> s{};
    for (std::size_t j = 0; j < kParityLength; ++j) {
        const std::uint8_t x = GF256::exp(static_cast<unsigned>(j + 1));
        std::uint8_t acc = 0;
        for (std::uint8_t r : received)
            acc = GF256::mul(acc, x) ^ r; // Horner, highest degree first
        s[j] = acc;
    }
    return s;
}

struct DecodeResult {
    std::vector<std::uint8_t> info_bits;
    /// Bit-level Hamming distance between the received and the decoded
    /// information bits. Meaningful only when decode_ok.
    std::size_t corrected_bits = 0;
    std::size_t corrected_symbols = 0;
    bool decode_ok = false;
};

/// Bounded-distance decoding: syndromes, Berlekamp-Massey, Chien search and
/// Forney. Failure (more than 16 symbol errors detected, or a correction that
/// does not clear the syndromes) leaves the received systematic bits in
/// info_bits and sets decode_ok = false.
inline DecodeResult rs_decode(std::span<const std::uint8_t> received)
{
    if (received.size() != kCodeLength)
        throw InvalidInput("rs_decode: need exactly 255 symbols");
    DecodeResult result;
    const auto received_info = unpack_bits(received.first(kInfoLength));
    result.info_bits = received_info;

    const auto S = syndromes(received);
    bool clean = true;
    for (auto s : S)
        clean = clean && s == 0;
    if (clean) {
        result.decode_ok = true;
        return result;
    }

    // Berlekamp-Massey; polynomials stored lowest degree first
    std::vector<std::uint8_t> lambda{1}, prev{1};
    std::size_t L = 0;
    std::size_t shift = 1;
    std::uint8_t prev_disc = 1;
    for (std::size_t n = 0; n < kParityLength; ++n) {
        std::uint8_t d = S[n];
        for (std::size_t i = 1; i <= L && i < lambda.size(); ++i)
            d ^= GF256::mul(lambda[i], S[n - i]);
        if (d == 0) {
            ++shift;
            continue;
        }
        const std::uint8_t coef = GF256::div(d, prev_disc);
        std::vector<std::uint8_t> next = lambda;
        if (next.size() < prev.size() + shift)
            next.resize(prev.size() + shift, 0);
        for (std::size_t i = 0; i < prev.size(); ++i)
            next[i + shift] ^= GF256::mul(coef, prev[i]);
        if (2 * L <= n) {
            prev = lambda;
            L = n + 1 - L;
            prev_disc = d;
            shift = 1;
        } else {
            ++shift;
        }
        lambda = std::move(next);
    }
    while (lambda.size() > 1 && lambda.back() == 0)
        lambda.pop_back();
    const std::size_t degree = lambda.size() - 1;
    if (degree != L || L > kCorrectable)
        return result;

    // Chien search over all positions; X = alpha^(254 - i) for array index i
    std::vector<std::size_t> positions;
    for (std::size_t i = 0; i < kCodeLength; ++i) {
        const std::uint8_t x_inv = GF256::pow_alpha(-static_cast<long long>(kCodeLength - 1 - i));
        std::uint8_t acc = 0;
        for (std::size_t k = lambda.size(); k-- > 0;)
            acc = GF256::mul(acc, x_inv) ^ lambda[k];
        if (acc == 0)
            positions.push_back(i);
    }
    if (positions.size() != degree)
        return result;

    // Omega(x) = S(x) Lambda(x) mod x^32
    std::vector<std::uint8_t> omega(kParityLength, 0);
    for (std::size_t i = 0; i < kParityLength; ++i)
        for (std::size_t k = 0; k < lambda.size() && k <= i; ++k)
            omega[i] ^= GF256::mul(S[i - k], lambda[k]);

    std::vector<std::uint8_t> corrected(received.begin(), received.end());
    for (std::size_t pos : positions) {
        const std::uint8_t x_inv = GF256::pow_alpha(-static_cast<long long>(kCodeLength - 1 - pos));
        std::uint8_t num = 0;
        for (std::size_t k = omega.size(); k-- > 0;)
            num = GF256::mul(num, x_inv) ^ omega[k];
        // formal derivative keeps odd-degree terms only
        std::uint8_t den = 0;
        for (std::size_t k = 1; k < lambda.size(); k += 2)
            den ^= GF256::mul(lambda[k], GF256::pow_alpha(-static_cast<long long>((kCodeLength - 1 - pos) * (k - 1))));
        if (den == 0)
            return result;
        corrected[pos] ^= GF256::div(num, den);
    }

    for (auto s : syndromes(corrected))
        if (s != 0)
            return result;

    result.info_bits = unpack_bits(std::span<const std::uint8_t>(corrected).first(kInfoLength));
    result.corrected_bits = hamming_distance(received_info, result.info_bits);
    result.corrected_symbols = positions.size();
    result.decode_ok = true;
    return result;
}

/// Binary constellation index of each bit: 0 -> point 0 (-1 or 0), 1 -> point 1 (+1).
inline std::vector<int> modulate(std::span<const std::uint8_t> bits, const channels::Constellation& c)
{
    if (!c.is_bpsk() && !c.is_ook())
        throw InvalidScenario("modulate: constellation must be BPSK {-1,+1} or OOK {0,1}");
    std::vector<int> symbols(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] > 1)
            throw InvalidInput("modulate: bits must be 0 or 1");
        symbols[i] = bits[i];
    }
    return symbols;
}

inline std::vector<std::uint8_t> demodulate(std::span<const int> symbols, const channels::Constellation& c)
{
    if (!c.is_bpsk() && !c.is_ook())
        throw InvalidScenario("demodulate: constellation must be BPSK {-1,+1} or OOK {0,1}");
    std::vector<std::uint8_t> bits(symbols.size());
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        if (symbols[i] != 0 && symbols[i] != 1)
            throw InvalidInput("demodulate: symbol index outside the binary alphabet");
        bits[i] = static_cast<std::uint8_t>(symbols[i]);
    }
    return bits;
}

/// One coded transmission block: 1784 bits -> 255 bytes -> 2040 channel symbols.
struct CodedBlock {
    std::vector<std::uint8_t> info_bits;
    std::vector<std::uint8_t> code_symbols;
    std::vector<int> channel_symbols;
};

inline CodedBlock encode_block(std::span<const std::uint8_t> info_bits, const channels::Constellation& c)
{
    CodedBlock block;
    block.info_bits.assign(info_bits.begin(), info_bits.end());
    block.code_symbols = rs_encode(info_bits);
    block.channel_symbols = modulate(unpack_bits(block.code_symbols), c);
    return block;
}

/// Hard symbol decisions of a block -> RS decoding.
inline DecodeResult decode_symbols(std::span<const int> symbols, const channels::Constellation& c)
{
    if (symbols.size() != kCodeBits)
        throw InvalidInput("decode_symbols: need exactly 2040 symbols");
    return rs_decode(pack_bits(demodulate(symbols, c)));
}

} // namespace viterbinet::fec

#endif
