#pragma once

// Independent oracles used by the tests. These deliberately re-derive their
// own data structures and use a different optimization path (projected
// gradient with backtracking) than the library, so that agreement between the
// two is meaningful.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "ctxkit/scenario.hpp"

namespace ctxoracle {

using ctxkit::Behavior;
using ctxkit::GlobalAssignment;

// Euclidean projection onto the probability simplex (sort-and-threshold).
inline std::vector<double> project_simplex(std::vector<double> v) {
    std::vector<double> u(v);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cssv = 0, theta = 0;
    int rho = -1;
    for (std::size_t i = 0; i < u.size(); ++i) {
        cssv += u[i];
        double t = (cssv - 1.0) / static_cast<double>(i + 1);
        if (u[i] - t > 0) {
            rho = static_cast<int>(i);
            theta = t;
        }
    }
    (void)rho;
    for (auto& x : v) x = std::max(x - theta, 0.0);
    return v;
}

struct PgProblem {
    int num_contexts;
    std::vector<std::vector<double>> p;  // support probabilities per context
    std::vector<std::vector<int>> hit;   // [vertex][ctx] -> support slot or -1
    std::size_t V;

    explicit PgProblem(const Behavior& b) {
        const auto& s = *b.scenario;
        num_contexts = static_cast<int>(s.num_contexts());
        p.resize(num_contexts);
        std::vector<std::map<ctxkit::OutcomeIndexTuple, int>> slots(num_contexts);
        for (int c = 0; c < num_contexts; ++c)
            for (const auto& [tuple, prob] : b.tables[c]) {
                slots[c][tuple] = static_cast<int>(p[c].size());
                p[c].push_back(ctxkit::to_double(prob));
            }
        auto assignments = ctxkit::enumerate_global_assignments(s);
        V = assignments.size();
        hit.assign(V, std::vector<int>(num_contexts, -1));
        for (std::size_t g = 0; g < V; ++g)
            for (int c = 0; c < num_contexts; ++c) {
                auto it = slots[c].find(assignments[g].restrict_to(s.contexts[c]));
                if (it != slots[c].end()) hit[g][c] = it->second;
            }
    }

    std::vector<std::vector<double>> mixture(const std::vector<double>& w) const {
        std::vector<std::vector<double>> q(num_contexts);
        for (int c = 0; c < num_contexts; ++c) q[c].assign(p[c].size(), 0.0);
        for (std::size_t g = 0; g < V; ++g) {
            if (w[g] <= 0) continue;
            for (int c = 0; c < num_contexts; ++c)
                if (hit[g][c] >= 0) q[c][hit[g][c]] += w[g];
        }
        return q;
    }

    double kl(int c, const std::vector<double>& qc) const {
        double v = 0;
        for (std::size_t k = 0; k < p[c].size(); ++k) {
            if (p[c][k] == 0) continue;
            if (qc[k] <= 0) return std::numeric_limits<double>::infinity();
            v += p[c][k] * std::log2(p[c][k] / qc[k]);
        }
        return v;
    }
};

// Projected gradient with backtracking on a convex objective over the vertex
// weight simplex. `mode`: 0 minimizes the context-averaged KL, 1 minimizes a
// tightly smoothed max-KL (softmax at temperature 1e-4).
inline double projected_gradient_entropy(const Behavior& b, int mode,
                                         long max_iterations = 1'000'000) {
    PgProblem prob(b);
    const double inv_ln2 = 1.0 / std::log(2.0);
    const double tau = 1e-4;

    auto objective = [&](const std::vector<double>& w, std::vector<double>* kl_out) {
        auto q = prob.mixture(w);
        std::vector<double> kl(prob.num_contexts);
        for (int c = 0; c < prob.num_contexts; ++c) kl[c] = prob.kl(c, q[c]);
        if (kl_out) *kl_out = kl;
        if (mode == 0) {
            double s = 0;
            for (double v : kl) s += v;
            return s / prob.num_contexts;
        }
        double m = *std::max_element(kl.begin(), kl.end());
        if (!std::isfinite(m)) return m;
        double s = 0;
        for (double v : kl) s += std::exp((v - m) / tau);
        return m + tau * std::log(s);
    };

    std::vector<double> w(prob.V, 1.0 / static_cast<double>(prob.V));
    double f = objective(w, nullptr);

    std::vector<double> grad(prob.V), kl(prob.num_contexts), coef(prob.num_contexts);
    for (long iter = 0; iter < max_iterations; ++iter) {
        auto q = prob.mixture(w);
        for (int c = 0; c < prob.num_contexts; ++c) kl[c] = prob.kl(c, q[c]);
        if (mode == 0) {
            for (int c = 0; c < prob.num_contexts; ++c) coef[c] = 1.0 / prob.num_contexts;
        } else {
            double m = *std::max_element(kl.begin(), kl.end());
            double s = 0;
            for (int c = 0; c < prob.num_contexts; ++c) {
                coef[c] = std::exp((kl[c] - m) / tau);
                s += coef[c];
            }
            for (auto& v : coef) v /= s;
        }
        for (std::size_t g = 0; g < prob.V; ++g) {
            double v = 0;
            for (int c = 0; c < prob.num_contexts; ++c) {
                int k = prob.hit[g][c];
                if (k < 0 || prob.p[c][k] == 0) continue;
                v -= coef[c] * inv_ln2 * prob.p[c][k] / q[c][k];
            }
            grad[g] = v;
        }

        // optimality gap over the simplex; checked sparsely
        if (iter % 64 == 0) {
            double gmin = grad[0], gw = 0;
            for (std::size_t g = 0; g < prob.V; ++g) {
                gmin = std::min(gmin, grad[g]);
                gw += grad[g] * w[g];
            }
            if (gw - gmin <= 1e-10) break;
        }

        double eta = 1.0;
        bool stepped = false;
        for (int bt = 0; bt < 60; ++bt) {
            std::vector<double> cand(prob.V);
            for (std::size_t g = 0; g < prob.V; ++g) cand[g] = w[g] - eta * grad[g];
            cand = project_simplex(std::move(cand));
            double fc = objective(cand, nullptr);
            if (fc < f - 1e-16) {
                w = std::move(cand);
                f = fc;
                stepped = true;
                break;
            }
            eta *= 0.5;
        }
        if (!stepped) break;
    }

    if (mode == 0) return f;
    // report the unsmoothed max at the final iterate
    auto q = prob.mixture(w);
    double best = 0;
    for (int c = 0; c < prob.num_contexts; ++c) best = std::max(best, prob.kl(c, q[c]));
    return best;
}

inline double pg_relative_entropy_uniform(const Behavior& b, long iters = 1'000'000) {
    return projected_gradient_entropy(b, 0, iters);
}

inline double pg_relative_entropy_max(const Behavior& b, long iters = 1'000'000) {
    return projected_gradient_entropy(b, 1, iters);
}

// Exhaustive nu oracle: walks all 2^m linear functions a.x and counts
// disagreements directly. Usable for m <= 12.
inline ctxkit::Rational naive_nu(const std::vector<std::uint8_t>& truth) {
    const std::size_t n = truth.size();
    std::size_t best = n + 1;
    for (std::size_t a = 0; a < n; ++a) {
        std::size_t disagree = 0;
        for (std::size_t x = 0; x < n; ++x) {
            int g = __builtin_parityll(a & x);
            if (g != truth[x]) ++disagree;
        }
        best = std::min(best, disagree);
    }
    return ctxkit::make_rational(static_cast<long>(best), static_cast<long>(n));
}

}  // namespace ctxoracle
