#pragma once

#include <gmpxx.h>
#include <stdexcept>
#include <string>

namespace mdpsat {

// Exact arbitrary-precision rational, always canonical (lowest terms,
// positive denominator). GMP's mpq_class already maintains both invariants
// through its arithmetic operators; parsing below canonicalizes explicitly.
using Rat = mpq_class;
// Arbitrary-precision integer, used for weights and weight-derived indices.
using Int = mpz_class;

// Error with a stable machine-readable code (used by diagnostics and the CLI).
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

// Parses "num/den" or "num" with optional sign; accepts any equivalent form
// and canonicalizes. Throws Error("MalformedDocument") on garbage.
Rat rat_parse(const std::string& text);

// Renders canonically: "num" when the denominator is 1, else "num/den".
std::string rat_str(const Rat& q);

Int int_parse(const std::string& text);
std::string int_str(const Int& n);

// q^e for e >= 0, exact.
Rat rat_pow(const Rat& q, unsigned long e);

// Smallest integer >= q.
Int rat_ceil(const Rat& q);

Rat rat_abs(const Rat& q);

}  // namespace mdpsat
