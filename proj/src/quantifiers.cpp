#include "ctxkit/quantifiers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ctxkit {

AssignmentPolytope::AssignmentPolytope(const Behavior& b, unsigned long long cap)
    : scenario(b.scenario), cells(*b.scenario) {
    assignments = enumerate_global_assignments(*scenario, cap);
    assignment_cell.resize(assignments.size());
    const int num_contexts = static_cast<int>(scenario->num_contexts());
    for (std::size_t g = 0; g < assignments.size(); ++g) {
        assignment_cell[g].resize(num_contexts);
        for (int c = 0; c < num_contexts; ++c)
            assignment_cell[g][c] =
                cells.cell(c, assignments[g].restrict_to(scenario->contexts[c]));
    }
    target.assign(cells.total(), Rational(0));
    for (int c = 0; c < num_contexts; ++c)
        for (const auto& [tuple, p] : b.tables[c]) target[cells.cell(c, tuple)] = p;
}

Behavior NCModel::induced_behavior(ScenarioPtr scenario, const NumericMode& mode) const {
    std::vector<Rational> ws;
    std::vector<Behavior> bs;
    for (const auto& [g, w] : weights) {
        ws.push_back(w);
        bs.push_back(assignment_to_behavior(g, scenario));
    }
    return mix_behaviors(ws, bs, mode);
}

Rational NCModel::total_weight() const {
    Rational t = 0;
    for (const auto& [g, w] : weights) t += w;
    return t;
}

bool verify_witness(const ContextualityWitness& w, const Behavior& b,
                    unsigned long long vertex_cap) {
    const Scenario& s = *b.scenario;
    if (w.coefficients.size() != s.num_contexts()) return false;
    Rational on_behavior = 0;
    for (std::size_t c = 0; c < s.num_contexts(); ++c)
        for (const auto& [tuple, coeff] : w.coefficients[c])
            on_behavior += coeff * b.probability(static_cast<int>(c), tuple);
    if (on_behavior != w.value_on_behavior) return false;
    if (!(on_behavior > w.bound)) return false;

    GlobalAssignmentEnumerator en(s, vertex_cap);
    GlobalAssignment g;
    while (en.next(g)) {
        Rational v = 0;
        for (std::size_t c = 0; c < s.num_contexts(); ++c) {
            auto key = g.restrict_to(s.contexts[c]);
            auto it = w.coefficients[c].find(key);
            if (it != w.coefficients[c].end()) v += it->second;
        }
        if (v > w.bound) return false;
    }
    return true;
}

namespace {

void require_nondisturbing(const Behavior& b, const NumericMode& mode, const char* op) {
    auto report = check_nondisturbance(b, mode);
    if (!report)
        throw ValidationError(std::string(op) + ": behavior is disturbing between contexts " +
                              b.scenario->context_label(report.context_a) + " and " +
                              b.scenario->context_label(report.context_b) +
                              " (max marginal discrepancy " +
                              format_rational(report.max_discrepancy) + ")");
}

SimplexOptions simplex_options(const QuantifierOptions& opts) {
    SimplexOptions so;
    so.pivot_limit = opts.pivot_limit;
    so.debug = opts.lp_debug;
    so.verify = opts.mode.is_exact();
    return so;
}

// Equality system: for every cell, the weighted assignment mix reproduces the
// behavior; one extra normalization row.
LinearProgram build_membership_lp(const AssignmentPolytope& poly) {
    LinearProgram lp;
    const int V = static_cast<int>(poly.assignments.size());
    for (int g = 0; g < V; ++g) lp.add_variable(0);
    for (std::size_t cell = 0; cell < poly.cells.total(); ++cell) {
        std::vector<Rational> coeffs(V, 0);
        for (int g = 0; g < V; ++g) {
            const auto& hits = poly.assignment_cell[g];
            for (std::size_t c = 0; c < hits.size(); ++c)
                if (hits[c] == cell) coeffs[g] = 1;
        }
        lp.add_row(std::move(coeffs), Relation::Equal, poly.target[cell]);
    }
    lp.add_row(std::vector<Rational>(V, 1), Relation::Equal, 1);
    return lp;
}

NCModel model_from_weights(const AssignmentPolytope& poly, const std::vector<Rational>& w,
                           const Rational& scale) {
    NCModel model;
    for (std::size_t g = 0; g < w.size(); ++g)
        if (sgn(w[g]) > 0) model.weights.emplace_back(poly.assignments[g], w[g] / scale);
    return model;
}

ContextualityWitness witness_from_farkas(const AssignmentPolytope& poly,
                                         const std::vector<Rational>& farkas) {
    // rows: one per cell, then the normalization row
    ContextualityWitness w;
    w.coefficients.resize(poly.scenario->num_contexts());
    for (std::size_t c = 0; c < poly.scenario->num_contexts(); ++c) {
        for (std::size_t k = 0; k < poly.cells.context_cells(static_cast<int>(c)); ++k) {
            std::size_t cell = poly.cells.context_offset(static_cast<int>(c)) + k;
            if (sgn(farkas.at(cell)) == 0) continue;
            w.coefficients[c][poly.cells.tuple_of(static_cast<int>(c), k)] = farkas[cell];
        }
    }
    w.bound = -farkas.back();
    for (std::size_t cell = 0; cell < poly.cells.total(); ++cell)
        w.value_on_behavior += farkas[cell] * poly.target[cell];
    return w;
}

}  // namespace

NoncontextualityResult check_noncontextual(const Behavior& b, const QuantifierOptions& opts) {
    require_nondisturbing(b, opts.mode, "check_noncontextual");
    AssignmentPolytope poly(b, opts.vertex_cap);
    LinearProgram lp = build_membership_lp(poly);

    NoncontextualityResult result;
    if (opts.mode.is_exact()) {
        auto feas = check_feasible(lp, simplex_options(opts));
        result.lp_pivots = feas.pivots;
        result.noncontextual = feas.feasible;
        if (feas.feasible) {
            result.model = model_from_weights(poly, feas.point, Rational(1));
            if (!(result.model->induced_behavior(b.scenario) == b))
                throw std::logic_error("global section replay failed");
        } else {
            result.witness = witness_from_farkas(poly, feas.farkas);
            if (!verify_witness(*result.witness, b, opts.vertex_cap))
                throw std::logic_error("contextuality witness replay failed");
        }
    } else {
        auto feas = check_feasible_float(lp, simplex_options(opts));
        result.lp_pivots = feas.pivots;
        result.noncontextual = feas.feasible;
        if (feas.feasible) {
            std::vector<Rational> w;
            for (double v : feas.point) w.emplace_back(std::max(v, 0.0));
            result.model = model_from_weights(poly, w, Rational(1));
        } else {
            std::vector<Rational> y;
            for (double v : feas.farkas) y.emplace_back(v);
            result.witness = witness_from_farkas(poly, y);
        }
    }
    return result;
}

QuantifierResult contextual_fraction(const Behavior& b, const QuantifierOptions& opts) {
    require_nondisturbing(b, opts.mode, "contextual_fraction");
    AssignmentPolytope poly(b, opts.vertex_cap);
    const int V = static_cast<int>(poly.assignments.size());

    LinearProgram lp;
    lp.sense = Sense::Maximize;
    for (int g = 0; g < V; ++g) lp.add_variable(1);
    for (std::size_t cell = 0; cell < poly.cells.total(); ++cell) {
        std::vector<Rational> coeffs(V, 0);
        for (int g = 0; g < V; ++g) {
            const auto& hits = poly.assignment_cell[g];
            for (std::size_t c = 0; c < hits.size(); ++c)
                if (hits[c] == cell) coeffs[g] = 1;
        }
        lp.add_row(std::move(coeffs), Relation::LessEq, poly.target[cell]);
    }

    QuantifierResult r;
    r.quantifier = "cf";
    r.mode = opts.mode.is_exact() ? "exact-rational" : "float";

    if (!opts.mode.is_exact()) {
        auto sol = solve_lp_float(lp, simplex_options(opts));
        if (sol.status != LpStatus::Optimal)
            throw std::logic_error("contextual fraction LP must be feasible and bounded");
        r.iterations = sol.pivots;
        r.value = std::max(0.0, 1.0 - sol.objective_value);
        std::vector<Rational> w;
        for (double v : sol.primal) w.emplace_back(std::max(v, 0.0));
        if (sol.objective_value > opts.mode.tolerance)
            r.witness = model_from_weights(poly, w, Rational(sol.objective_value));
        return r;
    }

    auto sol = solve_lp(lp, simplex_options(opts));
    if (sol.status != LpStatus::Optimal)
        throw std::logic_error("contextual fraction LP must be feasible and bounded");
    r.iterations = sol.pivots;
    Rational nc_fraction = sol.objective_value;
    Rational cf = 1 - nc_fraction;
    r.exact_value = cf;
    r.lambda = cf;
    r.lp_optimum = nc_fraction;
    r.value = to_double(cf);

    if (sgn(nc_fraction) > 0)
        r.witness = model_from_weights(poly, sol.primal, nc_fraction);
    if (sgn(cf) > 0) {
        Behavior residual(b.scenario);
        for (std::size_t c = 0; c < b.scenario->num_contexts(); ++c) {
            const int ctx = static_cast<int>(c);
            for (std::size_t k = 0; k < poly.cells.context_cells(ctx); ++k) {
                std::size_t cell = poly.cells.context_offset(ctx) + k;
                Rational mass = poly.target[cell];
                for (int g = 0; g < V; ++g)
                    if (poly.assignment_cell[g][c] == cell) mass -= sol.primal[g];
                if (sgn(mass) != 0)
                    residual.set_probability(ctx, poly.cells.tuple_of(ctx, k), mass / cf);
            }
        }
        r.residual = std::move(residual);
    }
    return r;
}

namespace {

// Shared slack construction for the l1 quantifiers: variables are assignment
// weights followed by one slack per cell, with e >= |p - q| enforced by the
// two inequality rows per cell.
void add_l1_rows(LinearProgram& lp, const AssignmentPolytope& poly, int V) {
    const int total = static_cast<int>(poly.cells.total());
    for (int cell = 0; cell < total; ++cell) {
        std::vector<Rational> plus(lp.num_vars, 0);
        std::vector<Rational> minus(lp.num_vars, 0);
        for (int g = 0; g < V; ++g) {
            const auto& hits = poly.assignment_cell[g];
            for (std::size_t c = 0; c < hits.size(); ++c)
                if (hits[c] == static_cast<std::size_t>(cell)) {
                    plus[g] = 1;
                    minus[g] = -1;
                }
        }
        plus[V + cell] = 1;
        minus[V + cell] = 1;
        lp.add_row(std::move(plus), Relation::GreaterEq, poly.target[cell]);
        lp.add_row(std::move(minus), Relation::GreaterEq, -poly.target[cell]);
    }
    std::vector<Rational> norm(lp.num_vars, 0);
    for (int g = 0; g < V; ++g) norm[g] = 1;
    lp.add_row(std::move(norm), Relation::Equal, 1);
}

}  // namespace

QuantifierResult l1_uniform_distance(const Behavior& b, const QuantifierOptions& opts) {
    require_nondisturbing(b, opts.mode, "l1_uniform_distance");
    AssignmentPolytope poly(b, opts.vertex_cap);
    const int V = static_cast<int>(poly.assignments.size());
    const int N = static_cast<int>(b.scenario->num_contexts());

    LinearProgram lp;
    lp.sense = Sense::Minimize;
    for (int g = 0; g < V; ++g) lp.add_variable(0);
    for (std::size_t cell = 0; cell < poly.cells.total(); ++cell)
        lp.add_variable(make_rational(1, N));
    add_l1_rows(lp, poly, V);

    QuantifierResult r;
    r.quantifier = "du";
    r.mode = opts.mode.is_exact() ? "exact-rational" : "float";

    if (!opts.mode.is_exact()) {
        auto sol = solve_lp_float(lp, simplex_options(opts));
        if (sol.status != LpStatus::Optimal)
            throw std::logic_error("l1-uniform distance LP must be feasible and bounded");
        r.iterations = sol.pivots;
        r.value = std::max(0.0, sol.objective_value);
        std::vector<Rational> w;
        for (int g = 0; g < V; ++g) w.emplace_back(std::max(sol.primal[g], 0.0));
        r.witness = model_from_weights(poly, w, Rational(1));
        return r;
    }

    auto sol = solve_lp(lp, simplex_options(opts));
    if (sol.status != LpStatus::Optimal)
        throw std::logic_error("l1-uniform distance LP must be feasible and bounded");
    r.iterations = sol.pivots;
    r.exact_value = sol.objective_value;
    r.value = to_double(sol.objective_value);
    std::vector<Rational> w(sol.primal.begin(), sol.primal.begin() + V);
    r.witness = model_from_weights(poly, w, Rational(1));
    return r;
}

QuantifierResult l1_max_distance(const Behavior& b, const QuantifierOptions& opts) {
    require_nondisturbing(b, opts.mode, "l1_max_distance");
    AssignmentPolytope poly(b, opts.vertex_cap);
    const int V = static_cast<int>(poly.assignments.size());
    const int total = static_cast<int>(poly.cells.total());

    // The inner maximum over context distributions pi sits at a vertex of the
    // pi-simplex (the functional is linear in pi), so it collapses to a max
    // over contexts and the epigraph variable t bounds each per-context l1.
    LinearProgram lp;
    lp.sense = Sense::Minimize;
    for (int g = 0; g < V; ++g) lp.add_variable(0);
    for (int cell = 0; cell < total; ++cell) lp.add_variable(0);
    const int t_var = lp.add_variable(1);
    add_l1_rows(lp, poly, V);
    for (std::size_t c = 0; c < b.scenario->num_contexts(); ++c) {
        std::vector<Rational> row(lp.num_vars, 0);
        for (std::size_t k = 0; k < poly.cells.context_cells(static_cast<int>(c)); ++k)
            row[V + poly.cells.context_offset(static_cast<int>(c)) + k] = 1;
        row[t_var] = -1;
        lp.add_row(std::move(row), Relation::LessEq, 0);
    }

    QuantifierResult r;
    r.quantifier = "dmax";
    r.mode = opts.mode.is_exact() ? "exact-rational" : "float";

    if (!opts.mode.is_exact()) {
        auto sol = solve_lp_float(lp, simplex_options(opts));
        if (sol.status != LpStatus::Optimal)
            throw std::logic_error("l1-max distance LP must be feasible and bounded");
        r.iterations = sol.pivots;
        r.value = std::max(0.0, sol.objective_value);
        std::vector<Rational> w;
        for (int g = 0; g < V; ++g) w.emplace_back(std::max(sol.primal[g], 0.0));
        r.witness = model_from_weights(poly, w, Rational(1));
        return r;
    }

    auto sol = solve_lp(lp, simplex_options(opts));
    if (sol.status != LpStatus::Optimal)
        throw std::logic_error("l1-max distance LP must be feasible and bounded");
    r.iterations = sol.pivots;
    r.exact_value = sol.objective_value;
    r.value = to_double(sol.objective_value);
    std::vector<Rational> w(sol.primal.begin(), sol.primal.begin() + V);
    r.witness = model_from_weights(poly, w, Rational(1));
    return r;
}

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size())
        throw ValidationError("kl_divergence: distributions have different lengths");
    double sum = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0 || q[i] < 0) throw ValidationError("kl_divergence: negative probability");
        if (p[i] == 0) continue;
        if (q[i] == 0) return std::numeric_limits<double>::infinity();
        sum += p[i] * std::log2(p[i] / q[i]);
    }
    return sum;
}

// --- entropic quantifiers (Frank-Wolfe over the assignment simplex) --------

namespace {

constexpr double kInvLn2 = 1.4426950408889634;  // 1/ln(2)

// Support-only float view: per context the support tuples' probabilities and
// each assignment's support slot (or -1 when it lands outside supp(p)).
struct EntropicProblem {
    int num_contexts = 0;
    std::vector<std::vector<double>> p;    // [ctx][k]
    std::vector<std::vector<int>> hit;     // [g][ctx] -> k or -1
    std::size_t V = 0;

    EntropicProblem(const Behavior& b, unsigned long long cap) {
        const Scenario& s = *b.scenario;
        num_contexts = static_cast<int>(s.num_contexts());
        p.resize(num_contexts);
        std::vector<std::map<OutcomeIndexTuple, int>> slot(num_contexts);
        for (int c = 0; c < num_contexts; ++c)
            for (const auto& [tuple, prob] : b.tables[c]) {
                slot[c][tuple] = static_cast<int>(p[c].size());
                p[c].push_back(to_double(prob));
            }
        auto assignments = enumerate_global_assignments(s, cap);
        V = assignments.size();
        hit.resize(V, std::vector<int>(num_contexts, -1));
        for (std::size_t g = 0; g < V; ++g)
            for (int c = 0; c < num_contexts; ++c) {
                auto key = assignments[g].restrict_to(s.contexts[c]);
                auto it = slot[c].find(key);
                if (it != slot[c].end()) hit[g][c] = it->second;
            }
    }

    std::vector<std::vector<double>> q_of(const std::vector<double>& w) const {
        std::vector<std::vector<double>> q(num_contexts);
        for (int c = 0; c < num_contexts; ++c) q[c].assign(p[c].size(), 0.0);
        for (std::size_t g = 0; g < V; ++g) {
            if (w[g] == 0) continue;
            for (int c = 0; c < num_contexts; ++c)
                if (hit[g][c] >= 0) q[c][hit[g][c]] += w[g];
        }
        return q;
    }

    double kl_context(int c, const std::vector<double>& qc) const {
        double v = 0;
        for (std::size_t k = 0; k < p[c].size(); ++k) {
            if (p[c][k] == 0) continue;
            if (qc[k] <= 0) return std::numeric_limits<double>::infinity();
            v += p[c][k] * std::log2(p[c][k] / qc[k]);
        }
        return v;
    }
};

// Objective adapters: value and per-context gradient weights at the current
// per-context KL vector.
struct SumObjective {
    double scale;  // 1/N for E_u, 1 for the E_max warm start
    double value(const std::vector<double>& kl) const {
        double s = 0;
        for (double v : kl) s += v;
        return scale * s;
    }
    void weights(const std::vector<double>& kl, std::vector<double>& out) const {
        out.assign(kl.size(), scale);
    }
};

struct SoftmaxObjective {
    double tau;
    double value(const std::vector<double>& kl) const {
        double m = *std::max_element(kl.begin(), kl.end());
        if (!std::isfinite(m)) return m;
        double s = 0;
        for (double v : kl) s += std::exp((v - m) / tau);
        return m + tau * std::log(s);
    }
    void weights(const std::vector<double>& kl, std::vector<double>& out) const {
        double m = *std::max_element(kl.begin(), kl.end());
        double s = 0;
        out.resize(kl.size());
        for (std::size_t c = 0; c < kl.size(); ++c) {
            out[c] = std::exp((kl[c] - m) / tau);
            s += out[c];
        }
        for (auto& v : out) v /= s;
    }
};

template <class Objective>
struct FwOutcome {
    double value = 0;
    double gap = 0;
    long iterations = 0;
    bool converged = false;
};

// Pairwise Frank-Wolfe with derivative-bisection line search: each step moves
// weight from the worst supported vertex onto the linear-minimization-oracle
// vertex, which avoids the zigzag stalls of plain FW when the optimum sits on
// a face. The stopping rule is the standard FW duality gap. `w` is updated in
// place.
template <class Objective>
FwOutcome<Objective> frank_wolfe(const EntropicProblem& prob, const Objective& obj,
                                 std::vector<double>& w, double tol, long max_iterations) {
    FwOutcome<Objective> out;
    std::vector<double> kl(prob.num_contexts), coef, grad(prob.V);

    for (long iter = 0; iter < max_iterations; ++iter) {
        auto q = prob.q_of(w);
        for (int c = 0; c < prob.num_contexts; ++c) kl[c] = prob.kl_context(c, q[c]);
        out.value = obj.value(kl);
        obj.weights(kl, coef);

        // grad_g = sum_c coef_c * d KL_c / d w_g
        for (std::size_t g = 0; g < prob.V; ++g) {
            double v = 0;
            for (int c = 0; c < prob.num_contexts; ++c) {
                int k = prob.hit[g][c];
                if (k < 0 || prob.p[c][k] == 0) continue;
                v -= coef[c] * kInvLn2 * prob.p[c][k] / q[c][k];
            }
            grad[g] = v;
        }
        std::size_t fw = 0;
        for (std::size_t g = 1; g < prob.V; ++g)
            if (grad[g] < grad[fw]) fw = g;
        std::size_t away = fw;
        double gw = 0;
        for (std::size_t g = 0; g < prob.V; ++g) {
            gw += grad[g] * w[g];
            if (w[g] > 1e-15 && (away == fw || grad[g] > grad[away])) away = g;
        }
        out.gap = gw - grad[fw];
        out.iterations = iter;
        if (out.gap <= tol) {
            out.converged = true;
            return out;
        }

        // direction: e_fw - e_away (plain FW direction if support is a point)
        const bool pairwise = away != fw && w[away] > 1e-15;
        const double alpha_max = pairwise ? w[away] : 1.0 - 1e-12;

        // phi(a) = obj along the direction; phi' is monotone, bisect its sign.
        // A step that zeroes any supported cell crosses the log barrier, so
        // the derivative there is +infinity.
        auto derivative = [&](double a) -> double {
            std::vector<double> kla(prob.num_contexts);
            std::vector<std::vector<double>> qa(prob.num_contexts);
            std::vector<std::vector<double>> dq(prob.num_contexts);
            for (int c = 0; c < prob.num_contexts; ++c) {
                qa[c].resize(prob.p[c].size());
                dq[c].assign(prob.p[c].size(), 0.0);
                int fk = prob.hit[fw][c];
                if (fk >= 0) dq[c][fk] += 1.0;
                if (pairwise) {
                    int ak = prob.hit[away][c];
                    if (ak >= 0) dq[c][ak] -= 1.0;
                } else {
                    for (std::size_t k = 0; k < prob.p[c].size(); ++k) dq[c][k] -= q[c][k];
                }
                for (std::size_t k = 0; k < prob.p[c].size(); ++k) {
                    qa[c][k] = q[c][k] + a * dq[c][k];
                    if (prob.p[c][k] > 0 && qa[c][k] <= 0)
                        return std::numeric_limits<double>::infinity();
                }
                kla[c] = prob.kl_context(c, qa[c]);
            }
            std::vector<double> ca;
            obj.weights(kla, ca);
            double d = 0;
            for (int c = 0; c < prob.num_contexts; ++c)
                for (std::size_t k = 0; k < prob.p[c].size(); ++k) {
                    if (prob.p[c][k] == 0 || dq[c][k] == 0) continue;
                    d -= ca[c] * kInvLn2 * prob.p[c][k] / qa[c][k] * dq[c][k];
                }
            return d;
        };

        double alpha;
        if (derivative(alpha_max) <= 0) {
            alpha = alpha_max;
        } else {
            double lo = 0, hi = alpha_max;
            for (int it2 = 0; it2 < 60; ++it2) {
                double mid = 0.5 * (lo + hi);
                (derivative(mid) <= 0 ? lo : hi) = mid;
            }
            alpha = lo;
        }
        if (alpha <= 0) alpha = alpha_max * 1e-12;

        if (pairwise) {
            w[away] -= alpha;
            if (w[away] < 1e-15) w[away] = 0.0;
            w[fw] += alpha;
        } else {
            for (std::size_t g = 0; g < prob.V; ++g) w[g] *= (1 - alpha);
            w[fw] += alpha;
        }
    }
    return out;
}

std::vector<double> uniform_start(std::size_t V) {
    return std::vector<double>(V, 1.0 / static_cast<double>(V));
}

NCModel model_from_float_weights(const Behavior& b, const std::vector<double>& w,
                                 unsigned long long cap) {
    auto assignments = enumerate_global_assignments(*b.scenario, cap);
    NCModel model;
    for (std::size_t g = 0; g < w.size(); ++g)
        if (w[g] > 0) model.weights.emplace_back(assignments[g], Rational(w[g]));
    return model;
}

}  // namespace

QuantifierResult relative_entropy_uniform(const Behavior& b, double tol,
                                          const EntropicOptions& opts) {
    require_nondisturbing(b, NumericMode::exact(), "relative_entropy_uniform");
    if (!(tol > 0)) throw ValidationError("relative_entropy_uniform: tol must be positive");
    EntropicProblem prob(b, opts.vertex_cap);
    auto w = uniform_start(prob.V);
    SumObjective obj{1.0 / prob.num_contexts};
    auto run = frank_wolfe(prob, obj, w, tol, opts.max_iterations);
    if (!run.converged)
        throw ConvergenceError("relative_entropy_uniform: duality gap " +
                                   std::to_string(run.gap) + " above tolerance after " +
                                   std::to_string(run.iterations) + " iterations",
                               run.value, run.gap);

    QuantifierResult r;
    r.quantifier = "eu";
    r.mode = "float";
    r.value = run.value;
    r.gap = run.gap;
    r.iterations = run.iterations;
    r.witness = model_from_float_weights(b, w, opts.vertex_cap);
    return r;
}

QuantifierResult relative_entropy_max(const Behavior& b, double tol,
                                      const EntropicOptions& opts) {
    require_nondisturbing(b, NumericMode::exact(), "relative_entropy_max");
    if (!(tol > 0)) throw ValidationError("relative_entropy_max: tol must be positive");
    EntropicProblem prob(b, opts.vertex_cap);
    auto w = uniform_start(prob.V);
    long iterations = 0;

    // Warm start at the total-KL minimizer: on non-contextual inputs the
    // smoothing stages then stop immediately and the reported max stays at
    // the same scale as the tolerance.
    SumObjective warm{1.0};
    auto warm_run = frank_wolfe(prob, warm, w, tol / 2, opts.max_iterations);
    iterations += warm_run.iterations;
    if (!warm_run.converged)
        throw ConvergenceError("relative_entropy_max: warm-start gap " +
                                   std::to_string(warm_run.gap) + " above tolerance",
                               warm_run.value, warm_run.gap);

    double gap = warm_run.gap;
    for (double tau : {1.0, 0.1, 0.01}) {
        SoftmaxObjective smooth{tau};
        double stage_tol = std::max(tol, tau * 1e-4);
        auto run = frank_wolfe(prob, smooth, w, stage_tol, opts.max_iterations);
        iterations += run.iterations;
        gap = run.gap;
        if (!run.converged)
            throw ConvergenceError("relative_entropy_max: stage tau=" + std::to_string(tau) +
                                       " gap " + std::to_string(run.gap) + " above tolerance",
                                   run.value, run.gap);
    }

    auto q = prob.q_of(w);
    double value = 0;
    for (int c = 0; c < prob.num_contexts; ++c)
        value = std::max(value, prob.kl_context(c, q[c]));

    QuantifierResult r;
    r.quantifier = "emax";
    r.mode = "float";
    r.value = value;  // unsmoothed max at the final iterate (an upper bound)
    r.gap = gap;
    r.iterations = iterations;
    r.witness = model_from_float_weights(b, w, opts.vertex_cap);
    return r;
}

Rational nu_linear_distance(const std::vector<std::uint8_t>& truth_table) {
    const std::size_t n = truth_table.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw ValidationError("nu_linear_distance: truth table length must be a power of two");
    int m = 0;
    while ((1ull << m) < n) ++m;
    if (m > 20) throw ValidationError("nu_linear_distance: more than 20 inputs");
    for (auto v : truth_table)
        if (v > 1) throw ValidationError("nu_linear_distance: truth table entries must be 0/1");

    // Walsh-Hadamard transform of (-1)^f; W(a) counts agreements with a.x.
    std::vector<long long> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = truth_table[i] ? -1 : 1;
    for (std::size_t len = 1; len < n; len <<= 1)
        for (std::size_t i = 0; i < n; i += len << 1)
            for (std::size_t j = i; j < i + len; ++j) {
                long long a = v[j], b = v[j + len];
                v[j] = a + b;
                v[j + len] = a - b;
            }
    long long best = v[0];
    for (std::size_t a = 1; a < n; ++a) best = std::max(best, v[a]);
    return make_rational(static_cast<long>(n - best), static_cast<long>(2 * n));
}

Rational mbqc_failure_bound(const Rational& cf, const Rational& nu) {
    if (sgn(cf) < 0 || cf > 1)
        throw ValidationError("mbqc_failure_bound: cf must lie in [0,1]");
    if (sgn(nu) < 0 || nu > make_rational(1, 2))
        throw ValidationError("mbqc_failure_bound: nu must lie in [0,1/2]");
    return (1 - cf) * nu;
}

double mbqc_failure_bound(double cf, double nu) {
    return to_double(mbqc_failure_bound(Rational(cf), Rational(nu)));
}

}  // namespace ctxkit
