#pragma once

// Exact-arithmetic linear programming backend: dense two-phase tableau
// simplex over rationals with Bland's anti-cycling rule, plus a float
// instantiation of the same code path. Optimal solves carry primal and dual
// certificates; infeasible solves a Farkas vector; unbounded solves an
// improving ray. In exact mode every answer is re-verified by substitution
// before it is returned.
//
// Degenerate optima return the first optimal basis found; only the optimal
// value is contractual, the argmin is "a" solution rather than "the"
// solution. Dual vectors cover the original rows; with non-default variable
// bounds the bound multipliers stay internal and b·dual may differ from the
// objective by the bound terms (verification then runs on the standardized
// system).

#include <optional>
#include <ostream>
#include <vector>

#include "ctxkit/rational.hpp"

namespace ctxkit {

enum class Relation { LessEq, Equal, GreaterEq };
enum class Sense { Minimize, Maximize };
enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LinearProgram {
    int num_vars = 0;
    Sense sense = Sense::Maximize;
    std::vector<Rational> objective;
    struct Row {
        std::vector<Rational> coeffs;
        Relation rel = Relation::LessEq;
        Rational rhs = 0;
    };
    std::vector<Row> rows;
    // Default bounds are [0, +inf): empty lower means 0, empty upper means none.
    std::vector<std::optional<Rational>> lower;
    std::vector<std::optional<Rational>> upper;

    int add_variable(Rational objective_coeff = 0);
    void add_row(std::vector<Rational> coeffs, Relation rel, Rational rhs);
    void set_lower(int var, std::optional<Rational> bound);
    void set_upper(int var, std::optional<Rational> bound);

    // Throws ValidationError on dimension mismatches.
    void check_well_formed() const;
};

template <class S>
struct LpSolution {
    LpStatus status = LpStatus::Optimal;
    S objective_value{};
    std::vector<S> primal;  // per variable (Optimal)
    std::vector<S> dual;    // per original row (Optimal); b·dual = objective_value
    std::vector<S> farkas;  // per original row (Infeasible)
    std::vector<S> ray;     // per variable (Unbounded): feasible improving direction
    long pivots = 0;
    bool verified = false;  // exact mode: certificates replayed successfully
};

struct PivotLimitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SimplexOptions {
    long pivot_limit = 1'000'000;
    bool verify = true;             // exact mode only
    std::ostream* debug = nullptr;  // plain-text tableau dump
};

// Cumulative counters over all exact solves in this process (thread-safe);
// used by self-check suites.
struct LpStats {
    long long solves = 0;
    long long verified = 0;
    long long verify_failures = 0;
};
LpStats lp_stats();
void reset_lp_stats();

LpSolution<Rational> solve_lp(const LinearProgram& lp, const SimplexOptions& opts = {});
LpSolution<double> solve_lp_float(const LinearProgram& lp, const SimplexOptions& opts = {});

template <class S>
struct FeasibilityResult {
    bool feasible = false;
    std::vector<S> point;   // per variable when feasible
    std::vector<S> farkas;  // per original row when infeasible
    long pivots = 0;
};

FeasibilityResult<Rational> check_feasible(const LinearProgram& lp,
                                           const SimplexOptions& opts = {});
FeasibilityResult<double> check_feasible_float(const LinearProgram& lp,
                                               const SimplexOptions& opts = {});

// Exact replay of a claimed-feasible point against every row and bound.
bool primal_feasible(const LinearProgram& lp, const std::vector<Rational>& x);

// Exact replay of a Farkas vector (per original row): the aggregated
// inequality must contradict x >= lower bounds.
bool farkas_valid(const LinearProgram& lp, const std::vector<Rational>& y);

}  // namespace ctxkit
