#include "ctxkit/rational.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

namespace ctxkit {

Rational make_rational(long num, long den) {
    if (den == 0) throw std::invalid_argument("rational with zero denominator");
    Rational r(num, den);
    r.canonicalize();
    return r;
}

namespace {

bool is_integer_token(const std::string& s) {
    if (s.empty()) return false;
    std::size_t i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
    if (i == s.size()) return false;
    for (; i < s.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
}

// mpz rejects '+' signs and leading zeros in base 10; normalize first.
mpz_class parse_integer_token(std::string digits) {
    std::string sign;
    if (digits[0] == '+' || digits[0] == '-') {
        if (digits[0] == '-') sign = "-";
        digits.erase(digits.begin());
    }
    std::size_t first = digits.find_first_not_of('0');
    digits = first == std::string::npos ? "0" : digits.substr(first);
    return mpz_class(sign + digits);
}

Rational parse_decimal(const std::string& text) {
    // [sign] digits [. digits] [e/E [sign] digits]
    std::string mantissa = text;
    long exponent = 0;
    std::size_t epos = text.find_first_of("eE");
    if (epos != std::string::npos) {
        std::string expTok = text.substr(epos + 1);
        if (!is_integer_token(expTok)) throw ParseError("bad exponent in number: " + text);
        exponent = std::strtol(expTok.c_str(), nullptr, 10);
        mantissa = text.substr(0, epos);
    }
    std::size_t dot = mantissa.find('.');
    std::string digits = mantissa;
    if (dot != std::string::npos) {
        digits = mantissa.substr(0, dot) + mantissa.substr(dot + 1);
        exponent -= static_cast<long>(mantissa.size() - dot - 1);
    }
    if (digits == "+" || digits == "-" || digits.empty()) digits += "0";
    if (!is_integer_token(digits)) throw ParseError("not a number: " + text);

    Rational r{parse_integer_token(digits)};
    mpz_class pow10;
    mpz_ui_pow_ui(pow10.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exponent)));
    if (exponent >= 0)
        r *= Rational(pow10);
    else
        r /= Rational(pow10);
    r.canonicalize();
    return r;
}

}  // namespace

Rational parse_rational(const std::string& text) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    if (s.empty()) throw ParseError("empty number");

    std::size_t slash = s.find('/');
    if (slash != std::string::npos) {
        std::string num = s.substr(0, slash);
        std::string den = s.substr(slash + 1);
        if (!is_integer_token(num) || !is_integer_token(den))
            throw ParseError("bad rational: " + text);
        mpz_class n = parse_integer_token(num), d = parse_integer_token(den);
        if (d == 0) throw ParseError("zero denominator: " + text);
        Rational r(n, d);
        r.canonicalize();
        return r;
    }
    if (is_integer_token(s)) return Rational{parse_integer_token(s)};
    return parse_decimal(s);
}

std::string format_rational(const Rational& value) {
    return value.get_str();
}

double to_double(const Rational& value) {
    return value.get_d();
}

Rational snap_to_denominator(double value, long den) {
    if (den <= 0) throw std::invalid_argument("denominator must be positive");
    double scaled = std::round(value * static_cast<double>(den));
    Rational r(static_cast<long>(scaled), den);
    r.canonicalize();
    return r;
}

NumericMode NumericMode::floating(double tol) {
    if (!(tol > 0)) throw ValidationError("float mode tolerance must be > 0");
    return {Kind::Float, tol};
}

bool NumericMode::negligible(const Rational& value) const {
    if (is_exact()) return sgn(value) == 0;
    return std::abs(to_double(value)) <= tolerance;
}

}  // namespace ctxkit
