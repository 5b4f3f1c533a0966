#pragma once

// Exact rational arithmetic used throughout the library, plus the numeric
// mode switch (exact vs float-with-tolerance) shared by checks and solvers.

#include <gmpxx.h>

#include <stdexcept>
#include <string>

namespace ctxkit {

using Rational = mpq_class;

// Canonicalized num/den constructor. mpq_class(n, d) alone does not reduce.
Rational make_rational(long num, long den);

// Accepts "p/q", plain integers, and terminating decimals with optional
// exponent ("0.25", "-3", "1/3", "2.5e-3"). Decimals convert exactly.
Rational parse_rational(const std::string& text);

// "p/q" for non-integers, plain integer string otherwise.
std::string format_rational(const Rational& value);

double to_double(const Rational& value);

// Nearest rational with the given denominator; used when float-mode values
// have to be pinned back into exact tables.
Rational snap_to_denominator(double value, long den);

struct NumericMode {
    enum class Kind { ExactRational, Float };

    Kind kind = Kind::ExactRational;
    double tolerance = 1e-9;

    static NumericMode exact() { return {Kind::ExactRational, 0.0}; }
    static NumericMode floating(double tol = 1e-9);

    bool is_exact() const { return kind == Kind::ExactRational; }

    // |value| treated as zero under this mode.
    bool negligible(const Rational& value) const;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CapExceededError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConvergenceError : std::runtime_error {
    ConvergenceError(const std::string& what, double best_value, double best_gap)
        : std::runtime_error(what), best_value(best_value), best_gap(best_gap) {}
    double best_value;
    double best_gap;
};

}  // namespace ctxkit
