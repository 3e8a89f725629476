#include "inferometer/flops.hpp"

#include <algorithm>
#include <ostream>

#include "inferometer/arch.hpp"
#include "inferometer/errors.hpp"

namespace inferometer {

namespace {

constexpr std::int64_t kMaxDim = std::int64_t{1} << 20;

void check_positive(std::int64_t value, const char* name) {
    if (value < 1) {
        throw ValidationError(std::string(name) + " must be >= 1");
    }
}

void check_dim(std::int64_t value, const char* name) {
    check_positive(value, name);
    if (value > kMaxDim) {
        throw ValidationError(std::string(name) + " exceeds supported maximum 2^20");
    }
}

FlopCount u(std::int64_t v) { return static_cast<FlopCount>(v); }

}  // namespace

std::string flop_to_string(FlopCount value) {
    if (value == 0) return "0";
    std::string digits;
    while (value > 0) {
        digits.push_back(static_cast<char>('0' + static_cast<int>(value % 10)));
        value /= 10;
    }
    std::reverse(digits.begin(), digits.end());
    return digits;
}

double flop_to_double(FlopCount value) {
    // Split into 64-bit halves; fine for display and averaging.
    const double hi = static_cast<double>(static_cast<std::uint64_t>(value >> 64));
    const double lo = static_cast<double>(static_cast<std::uint64_t>(value));
    return hi * 18446744073709551616.0 + lo;
}

FlopCount training_forward_flops(std::int64_t b, std::int64_t s, std::int64_t h, std::int64_t l) {
    check_positive(b, "b");
    check_dim(s, "s");
    check_dim(h, "h");
    check_positive(l, "l");
    // 24*b*s*h^2*l + 4*b*s^2*h*l
    return 24 * u(b) * u(s) * u(h) * u(h) * u(l) + 4 * u(b) * u(s) * u(s) * u(h) * u(l);
}

FlopBreakdown operator_breakdown_training(std::int64_t b, std::int64_t s, std::int64_t h,
                                          std::int64_t n, std::int64_t l) {
    check_positive(b, "b");
    check_dim(s, "s");
    check_dim(h, "h");
    check_positive(n, "n");
    check_positive(l, "l");
    if (h % n != 0) {
        throw ValidationError("h not divisible by n");
    }
    const FlopCount bs = u(b) * u(s);
    const std::int64_t head_dim = h / n;
    FlopBreakdown out;
    // (bs, h) x (h, 3h)
    out.qkv = 2 * bs * u(h) * (3 * u(h)) * u(l);
    // b*n BMMs of (s, h/n) x (h/n, s)
    out.attention_scores = u(b) * u(n) * 2 * u(s) * u(head_dim) * u(s) * u(l);
    // b*n BMMs of (s, s) x (s, h/n)
    out.attention_over_values = u(b) * u(n) * 2 * u(s) * u(s) * u(head_dim) * u(l);
    // (bs, h) x (h, h)
    out.projection = 2 * bs * u(h) * u(h) * u(l);
    // (bs, h) x (h, 4h) and (bs, 4h) x (4h, h)
    out.mlp = (2 * bs * u(h) * (4 * u(h)) + 2 * bs * (4 * u(h)) * u(h)) * u(l);
    out.total = out.qkv + out.attention_scores + out.attention_over_values + out.projection + out.mlp;
    return out;
}

FlopCount prompt_encoding_flops(std::int64_t b, std::int64_t p, std::int64_t h, std::int64_t l,
                                bool exact) {
    if (exact) {
        return training_forward_flops(b, p, h, l);
    }
    check_positive(b, "b");
    check_dim(p, "p");
    check_dim(h, "h");
    check_positive(l, "l");
    return 24 * u(b) * u(p) * u(h) * u(h) * u(l);
}

FlopCount token_generation_flops(std::int64_t b, std::int64_t i, std::int64_t h, std::int64_t l) {
    check_positive(b, "b");
    if (i < 0) {
        throw ValidationError("i must be >= 0");
    }
    check_dim(h, "h");
    check_positive(l, "l");
    return 24 * u(b) * u(h) * u(h) * u(l) + 4 * u(b) * u(i) * u(h) * u(l);
}

FlopBreakdown operator_breakdown_generation(std::int64_t b, std::int64_t i, std::int64_t h,
                                            std::int64_t n, std::int64_t l) {
    check_positive(b, "b");
    if (i < 0) {
        throw ValidationError("i must be >= 0");
    }
    check_dim(h, "h");
    check_positive(n, "n");
    check_positive(l, "l");
    if (h % n != 0) {
        throw ValidationError("h not divisible by n");
    }
    const std::int64_t head_dim = h / n;
    FlopBreakdown out;
    // (b, h) x (h, 3h)
    out.qkv = 2 * u(b) * u(h) * (3 * u(h)) * u(l);
    // b*n BMMs of (1, h/n) x (h/n, i)
    out.attention_scores = u(b) * u(n) * 2 * u(head_dim) * u(i) * u(l);
    // b*n BMMs of (1, i) x (i, h/n)
    out.attention_over_values = u(b) * u(n) * 2 * u(i) * u(head_dim) * u(l);
    // (b, h) x (h, h)
    out.projection = 2 * u(b) * u(h) * u(h) * u(l);
    // (b, h) x (h, 4h) and (b, 4h) x (4h, h)
    out.mlp = (2 * u(b) * u(h) * (4 * u(h)) + 2 * u(b) * (4 * u(h)) * u(h)) * u(l);
    out.total = out.qkv + out.attention_scores + out.attention_over_values + out.projection + out.mlp;
    return out;
}

FlopCount query_total_flops(const ModelArchitecture& arch, std::int64_t p, std::int64_t o) {
    check_positive(p, "p");
    check_positive(o, "o");
    if (p + o > arch.max_context_length + 1) {
        throw ValidationError("query for " + arch.id + " exceeds context length: p=" +
                              std::to_string(p) + " o=" + std::to_string(o) + " max=" +
                              std::to_string(arch.max_context_length));
    }
    const std::int64_t h = arch.hidden_size;
    const std::int64_t l = arch.num_layers;
    FlopCount total = prompt_encoding_flops(1, p, h, l, /*exact=*/true);
    // Generation passes at context sizes i = p .. p+o-2. Closed form of the
    // arithmetic series; equals the term-by-term sum exactly.
    if (o > 1) {
        const FlopCount passes = u(o - 1);
        const FlopCount i_first = u(p);
        const FlopCount i_last = u(p + o - 2);
        total += passes * 24 * u(h) * u(h) * u(l);
        // passes * (i_first + i_last) is always even, so the division is exact
        total += 4 * u(h) * u(l) * (passes * (i_first + i_last) / 2);
    }
    return total;
}

}  // namespace inferometer

std::ostream& operator<<(std::ostream& os, unsigned __int128 value) {
    return os << inferometer::flop_to_string(value);
}
