#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

namespace inferometer {

struct ModelArchitecture;

// All accounting in this module is exact integer arithmetic. 128-bit width
// keeps every result exact up to h, s <= 2^20.
using FlopCount = unsigned __int128;

std::string flop_to_string(FlopCount value);
double flop_to_double(FlopCount value);

/// Per-operator breakdown of one forward pass (all layers included).
struct FlopBreakdown {
    FlopCount qkv = 0;
    FlopCount attention_scores = 0;
    FlopCount attention_over_values = 0;
    FlopCount projection = 0;
    FlopCount mlp = 0;
    FlopCount total = 0;
};

/// Forward-pass cost of a full sequence of s tokens: 24bsh^2l + 4bs^2hl.
FlopCount training_forward_flops(std::int64_t b, std::int64_t s, std::int64_t h, std::int64_t l);

/// Same total as training_forward_flops, split by operator. The head count n
/// must divide h; the total is independent of n.
FlopBreakdown operator_breakdown_training(std::int64_t b, std::int64_t s, std::int64_t h,
                                          std::int64_t n, std::int64_t l);

/// Cost of encoding a prompt of p tokens. exact=false drops the attention
/// quadratic term, giving the linear-in-p form 24bph^2l.
FlopCount prompt_encoding_flops(std::int64_t b, std::int64_t p, std::int64_t h, std::int64_t l,
                                bool exact);

/// Cost of the forward pass that produces the next token when i tokens
/// (prompt included) are already in context: 24bh^2l + 4bihl.
FlopCount token_generation_flops(std::int64_t b, std::int64_t i, std::int64_t h, std::int64_t l);

FlopBreakdown operator_breakdown_generation(std::int64_t b, std::int64_t i, std::int64_t h,
                                            std::int64_t n, std::int64_t l);

/// Total cost of one query: exact prompt encoding over p tokens plus the
/// o-1 incremental generation passes (the first output token comes out of
/// the encoding pass). Requires p + o <= max_context_length + 1.
FlopCount query_total_flops(const ModelArchitecture& arch, std::int64_t p, std::int64_t o);

}  // namespace inferometer

// Stream output so test frameworks can print 128-bit counts.
std::ostream& operator<<(std::ostream& os, unsigned __int128 value);
