#include "qdtl/rational.hpp"

#include <stdexcept>

namespace qdtl {

Rational parse_rational(const std::string& text) {
    if (text.empty()) throw std::invalid_argument("empty number");
    const auto slash = text.find('/');
    if (slash != std::string::npos) {
        Rational num = parse_rational(text.substr(0, slash));
        Rational den = parse_rational(text.substr(slash + 1));
        if (den == 0) throw std::invalid_argument("division by zero in literal " + text);
        return num / den;
    }
    const auto dot = text.find('.');
    std::string digits = text;
    Integer scale = 1;
    if (dot != std::string::npos) {
        const std::string frac = text.substr(dot + 1);
        digits = text.substr(0, dot) + frac;
        for (std::size_t k = 0; k < frac.size(); ++k) scale *= 10;
    }
    if (digits.empty()) throw std::invalid_argument("malformed number " + text);
    for (char c : digits)
        if (c < '0' || c > '9') throw std::invalid_argument("malformed number " + text);
    // a leading zero would make the integer constructor read octal
    const auto first = digits.find_first_not_of('0');
    digits = first == std::string::npos ? "0" : digits.substr(first);
    return Rational(Integer(digits), scale);
}

std::string rational_to_string(const Rational& q) {
    const Integer num = boost::multiprecision::numerator(q);
    const Integer den = boost::multiprecision::denominator(q);
    if (den == 1) return num.str();
    return num.str() + "/" + den.str();
}

double to_double(const Rational& q) { return q.convert_to<double>(); }

}  // namespace qdtl
