#include "mdpsat/rat.hpp"

namespace mdpsat {

namespace {

bool looks_like_integer(const std::string& s) {
    if (s.empty()) return false;
    std::size_t i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
    if (i == s.size()) return false;
    for (; i < s.size(); ++i)
        if (s[i] < '0' || s[i] > '9') return false;
    return true;
}

}  // namespace

Rat rat_parse(const std::string& text) {
    std::string num = text, den = "1";
    auto slash = text.find('/');
    if (slash != std::string::npos) {
        num = text.substr(0, slash);
        den = text.substr(slash + 1);
    }
    if (!looks_like_integer(num) || !looks_like_integer(den))
        throw Error("MalformedDocument", "not a rational: '" + text + "'");
    Int n(num), d(den);
    if (d == 0) throw Error("MalformedDocument", "zero denominator in '" + text + "'");
    Rat q(n, d);
    q.canonicalize();
    return q;
}

std::string rat_str(const Rat& q) {
    if (q.get_den() == 1) return q.get_num().get_str();
    return q.get_num().get_str() + "/" + q.get_den().get_str();
}

Int int_parse(const std::string& text) {
    if (!looks_like_integer(text))
        throw Error("MalformedDocument", "not an integer: '" + text + "'");
    return Int(text);
}

std::string int_str(const Int& n) { return n.get_str(); }

Rat rat_pow(const Rat& q, unsigned long e) {
    Rat out;
    mpz_pow_ui(out.get_num_mpz_t(), q.get_num_mpz_t(), e);
    mpz_pow_ui(out.get_den_mpz_t(), q.get_den_mpz_t(), e);
    out.canonicalize();
    return out;
}

Int rat_ceil(const Rat& q) {
    Int out;
    mpz_cdiv_q(out.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    return out;
}

Rat rat_abs(const Rat& q) { return q < 0 ? Rat(-q) : q; }

}  // namespace mdpsat
