#include "ctxkit/lp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>

namespace ctxkit {

int LinearProgram::add_variable(Rational objective_coeff) {
    objective.push_back(std::move(objective_coeff));
    lower.push_back(Rational(0));
    upper.push_back(std::nullopt);
    return num_vars++;
}

void LinearProgram::add_row(std::vector<Rational> coeffs, Relation rel, Rational rhs) {
    rows.push_back({std::move(coeffs), rel, std::move(rhs)});
}

void LinearProgram::set_lower(int var, std::optional<Rational> bound) {
    if (lower.size() != static_cast<std::size_t>(num_vars)) lower.resize(num_vars, Rational(0));
    lower.at(var) = std::move(bound);
}

void LinearProgram::set_upper(int var, std::optional<Rational> bound) {
    if (upper.size() != static_cast<std::size_t>(num_vars)) upper.resize(num_vars);
    upper.at(var) = std::move(bound);
}

void LinearProgram::check_well_formed() const {
    if (objective.size() != static_cast<std::size_t>(num_vars))
        throw ValidationError("LP dimension mismatch: objective has " +
                              std::to_string(objective.size()) + " coefficients for " +
                              std::to_string(num_vars) + " variables");
    for (std::size_t r = 0; r < rows.size(); ++r)
        if (rows[r].coeffs.size() != static_cast<std::size_t>(num_vars))
            throw ValidationError("LP dimension mismatch: row " + std::to_string(r) + " has " +
                                  std::to_string(rows[r].coeffs.size()) + " coefficients");
    if (!lower.empty() && lower.size() != static_cast<std::size_t>(num_vars))
        throw ValidationError("LP dimension mismatch: lower bounds");
    if (!upper.empty() && upper.size() != static_cast<std::size_t>(num_vars))
        throw ValidationError("LP dimension mismatch: upper bounds");
}

namespace {

std::optional<Rational> lower_of(const LinearProgram& lp, int var) {
    if (lp.lower.empty()) return Rational(0);
    return lp.lower[var];
}

std::optional<Rational> upper_of(const LinearProgram& lp, int var) {
    if (lp.upper.empty()) return std::nullopt;
    return lp.upper[var];
}

std::atomic<long long> g_solves{0};
std::atomic<long long> g_verified{0};
std::atomic<long long> g_verify_failures{0};

template <class S>
struct Traits;

template <>
struct Traits<Rational> {
    static bool is_zero(const Rational& v) { return sgn(v) == 0; }
    static bool is_pos(const Rational& v) { return sgn(v) > 0; }
    static bool is_neg(const Rational& v) { return sgn(v) < 0; }
    static Rational from(const Rational& v) { return v; }
};

template <>
struct Traits<double> {
    static constexpr double eps = 1e-9;
    static bool is_zero(double v) { return std::abs(v) <= eps; }
    static bool is_pos(double v) { return v > eps; }
    static bool is_neg(double v) { return v < -eps; }
    static double from(const Rational& v) { return to_double(v); }
};

enum class ColKind { Structural, Slack, Artificial };

// Two-phase dense tableau simplex over scalar S on the standardized system
//   min c·x  s.t.  A x = b,  x >= 0,  b >= 0.
template <class S>
class Simplex {
    using T = Traits<S>;

public:
    Simplex(const LinearProgram& lp, const SimplexOptions& opts) : lp_(lp), opts_(opts) {
        lp.check_well_formed();
        build();
    }

    LpSolution<S> run(bool feasibility_only) {
        feas_only_ = feasibility_only;
        if (opts_.debug) dump("initial tableau");
        LpSolution<S> sol;
        if (!phase_one()) {
            sol.status = LpStatus::Infeasible;
            extract_farkas(sol);
            sol.pivots = pivots_;
            return sol;
        }
        if (feasibility_only) {
            sol.status = LpStatus::Optimal;
            extract_primal(sol);
            sol.pivots = pivots_;
            return sol;
        }
        int unbounded_col = -1;
        if (!phase_two(unbounded_col)) {
            sol.status = LpStatus::Unbounded;
            extract_primal(sol);
            extract_ray(sol, unbounded_col);
            sol.pivots = pivots_;
            return sol;
        }
        sol.status = LpStatus::Optimal;
        extract_primal(sol);
        extract_duals(sol);
        sol.pivots = pivots_;
        if (opts_.debug) dump("final tableau");
        return sol;
    }

    // --- exact certificate replay (called for S = Rational only) -----------

    bool verify(const LpSolution<S>& sol) const {
        switch (sol.status) {
            case LpStatus::Optimal:
                if (feas_only_) return verify_primal_std() && verify_original_point(sol);
                return verify_primal_std() && verify_duality(sol) &&
                       verify_original_optimal(sol);
            case LpStatus::Infeasible:
                return verify_farkas_std();
            case LpStatus::Unbounded:
                return verify_primal_std() && verify_ray_std();
        }
        return false;
    }

private:
    const LinearProgram& lp_;
    SimplexOptions opts_;

    // standardized model
    struct VarMap {
        int pos_col = -1;
        int neg_col = -1;  // used when the variable is free below
        Rational shift = 0;
    };
    std::vector<VarMap> vmap_;
    int n_struct_ = 0;
    std::vector<std::vector<S>> A_;  // m x ncols
    std::vector<S> b_;
    std::vector<S> cost_;            // min-form objective on std columns
    std::vector<ColKind> kind_;
    std::vector<bool> eligible_;
    std::vector<int> id_col_;        // per row: column whose A-column is e_row
    std::vector<int> row_origin_;    // kept-row index or -1 for bound rows
    std::vector<int> row_sign_;      // +-1 vs. the kept row
    std::vector<int> basis_;
    std::vector<int> orig_to_kept_;  // original row -> kept index (-1: duplicate)
    Rational obj_shift_ = 0;         // original-sense constant from bound shifts
    bool maximize_ = false;
    bool feas_only_ = false;

    // working state
    std::vector<S> z_;  // reduced costs
    long pivots_ = 0;

    // exact copies of the *initial* standardized system, kept for replay
    std::vector<std::vector<S>> A0_;
    std::vector<S> b0_;

    // the phase-1 dual is captured at infeasibility detection
    std::vector<S> farkas_std_;
    std::vector<S> ray_std_;

    void build() {
        maximize_ = lp_.sense == Sense::Maximize;

        // duplicate-row presolve (exact duplicates only)
        std::map<std::pair<std::vector<Rational>, std::pair<int, Rational>>, int> seen;
        std::vector<int> kept_rows;
        orig_to_kept_.assign(lp_.rows.size(), -1);
        for (std::size_t r = 0; r < lp_.rows.size(); ++r) {
            auto key = std::make_pair(lp_.rows[r].coeffs,
                                      std::make_pair(static_cast<int>(lp_.rows[r].rel),
                                                     lp_.rows[r].rhs));
            auto [it, fresh] = seen.emplace(key, static_cast<int>(kept_rows.size()));
            if (fresh)
                kept_rows.push_back(static_cast<int>(r));
            else
                orig_to_kept_[r] = -1;
            orig_to_kept_[r] = fresh ? it->second : -1;
        }

        // variable transform: x = shift + x'  or  x = x+ - x-
        vmap_.resize(lp_.num_vars);
        for (int j = 0; j < lp_.num_vars; ++j) {
            auto lo = lower_of(lp_, j);
            vmap_[j].pos_col = n_struct_++;
            if (lo) {
                vmap_[j].shift = *lo;
            } else {
                vmap_[j].neg_col = n_struct_++;
            }
            if (lo) obj_shift_ += lp_.objective[j] * *lo;
        }

        // std rows: kept original rows first, then finite-upper bound rows
        struct RawRow {
            std::vector<Rational> coeffs;  // over original vars
            Relation rel;
            Rational rhs;
            int origin;
        };
        std::vector<RawRow> raw;
        for (int kept : kept_rows) {
            const auto& row = lp_.rows[kept];
            Rational rhs = row.rhs;
            for (int j = 0; j < lp_.num_vars; ++j) rhs -= row.coeffs[j] * vmap_[j].shift;
            raw.push_back({row.coeffs, row.rel, rhs, static_cast<int>(raw.size())});
        }
        for (int j = 0; j < lp_.num_vars; ++j) {
            auto up = upper_of(lp_, j);
            if (!up) continue;
            std::vector<Rational> coeffs(lp_.num_vars, Rational(0));
            coeffs[j] = 1;
            raw.push_back({std::move(coeffs), Relation::LessEq, *up - vmap_[j].shift, -1});
        }

        const int m = static_cast<int>(raw.size());
        int n_slack = 0;
        for (const auto& r : raw)
            if (r.rel != Relation::Equal) ++n_slack;

        // first pass: decide signs and artificial needs
        std::vector<int> slack_col(m, -1), slack_coeff(m, 0);
        std::vector<int> art_col(m, -1);
        row_sign_.assign(m, 1);
        int next_slack = n_struct_;
        int n_art = 0;
        for (int i = 0; i < m; ++i) {
            int s = 0;
            if (raw[i].rel == Relation::LessEq) s = 1;
            if (raw[i].rel == Relation::GreaterEq) s = -1;
            if (s != 0) {
                slack_col[i] = next_slack++;
                slack_coeff[i] = s;
            }
            if (sgn(raw[i].rhs) < 0) {
                row_sign_[i] = -1;
                slack_coeff[i] = -slack_coeff[i];
            }
            if (slack_coeff[i] != 1) ++n_art;
        }
        int next_art = n_struct_ + n_slack;
        const int ncols = n_struct_ + n_slack + n_art;

        A_.assign(m, std::vector<S>(ncols, S(0)));
        b_.assign(m, S(0));
        cost_.assign(ncols, S(0));
        kind_.assign(ncols, ColKind::Structural);
        for (int c = n_struct_; c < n_struct_ + n_slack; ++c) kind_[c] = ColKind::Slack;
        for (int c = n_struct_ + n_slack; c < ncols; ++c) kind_[c] = ColKind::Artificial;
        eligible_.assign(ncols, true);
        id_col_.assign(m, -1);
        row_origin_.assign(m, -1);
        basis_.assign(m, -1);

        for (int i = 0; i < m; ++i) {
            row_origin_[i] = raw[i].origin;
            Rational sgn_row = row_sign_[i];
            for (int j = 0; j < lp_.num_vars; ++j) {
                Rational a = sgn_row * raw[i].coeffs[j];
                if (sgn(a) == 0) continue;
                A_[i][vmap_[j].pos_col] = T::from(a);
                if (vmap_[j].neg_col >= 0) A_[i][vmap_[j].neg_col] = T::from(-a);
            }
            b_[i] = T::from(sgn_row * raw[i].rhs);
            if (slack_col[i] >= 0) A_[i][slack_col[i]] = S(slack_coeff[i]);
            if (slack_coeff[i] == 1) {
                basis_[i] = slack_col[i];
                id_col_[i] = slack_col[i];
            } else {
                art_col[i] = next_art++;
                A_[i][art_col[i]] = S(1);
                basis_[i] = art_col[i];
                id_col_[i] = art_col[i];
            }
        }
        // min-form structural costs
        for (int j = 0; j < lp_.num_vars; ++j) {
            Rational c = maximize_ ? -lp_.objective[j] : lp_.objective[j];
            if (sgn(c) == 0) continue;
            cost_[vmap_[j].pos_col] = T::from(c);
            if (vmap_[j].neg_col >= 0) cost_[vmap_[j].neg_col] = T::from(-c);
        }

        A0_ = A_;
        b0_ = b_;
    }

    void compute_reduced_costs(const std::vector<S>& c) {
        const int m = static_cast<int>(A_.size());
        const int ncols = static_cast<int>(c.size());
        z_ = c;
        for (int i = 0; i < m; ++i) {
            const S& cb = c[basis_[i]];
            if (T::is_zero(cb)) continue;
            for (int j = 0; j < ncols; ++j) {
                if (T::is_zero(A_[i][j])) continue;
                z_[j] -= cb * A_[i][j];
            }
        }
    }

    void pivot(int row, int col) {
        const int m = static_cast<int>(A_.size());
        const int ncols = static_cast<int>(A_[0].size());
        S p = A_[row][col];
        for (int j = 0; j < ncols; ++j) A_[row][j] /= p;
        b_[row] /= p;
        A_[row][col] = S(1);  // keep the pivot cell exact in float mode
        for (int i = 0; i < m; ++i) {
            if (i == row) continue;
            S f = A_[i][col];
            if (T::is_zero(f)) continue;
            for (int j = 0; j < ncols; ++j)
                if (!T::is_zero(A_[row][j])) A_[i][j] -= f * A_[row][j];
            b_[i] -= f * b_[row];
            A_[i][col] = S(0);
        }
        {
            S f = z_[col];
            if (!T::is_zero(f)) {
                const int zn = static_cast<int>(z_.size());
                for (int j = 0; j < zn; ++j)
                    if (!T::is_zero(A_[row][j])) z_[j] -= f * A_[row][j];
                z_[col] = S(0);
            }
        }
        if (kind_[basis_[row]] == ColKind::Artificial) eligible_[basis_[row]] = false;
        basis_[row] = col;
        if (++pivots_ > opts_.pivot_limit)
            throw PivotLimitError("simplex exceeded pivot limit of " +
                                  std::to_string(opts_.pivot_limit));
    }

    // Bland's rule: entering = lowest-index eligible column with negative
    // reduced cost; leaving = min ratio, ties broken by lowest basis index.
    bool bland_step(bool phase_two_mode, int& unbounded_col) {
        const int ncols = static_cast<int>(z_.size());
        int enter = -1;
        for (int j = 0; j < ncols; ++j) {
            if (!eligible_[j]) continue;
            if (phase_two_mode && kind_[j] == ColKind::Artificial) continue;
            if (T::is_neg(z_[j])) {
                enter = j;
                break;
            }
        }
        if (enter < 0) return false;  // optimal

        const int m = static_cast<int>(A_.size());
        int leave = -1;
        S best_ratio = S(0);
        for (int i = 0; i < m; ++i) {
            if (!T::is_pos(A_[i][enter])) continue;
            S ratio = b_[i] / A_[i][enter];
            if (leave < 0 || ratio < best_ratio ||
                (ratio == best_ratio && basis_[i] < basis_[leave])) {
                leave = i;
                best_ratio = ratio;
            }
        }
        if (leave < 0) {
            unbounded_col = enter;
            return true;  // caller inspects unbounded_col
        }
        pivot(leave, enter);
        unbounded_col = -1;
        return true;
    }

    bool has_artificials() const {
        for (ColKind k : kind_)
            if (k == ColKind::Artificial) return true;
        return false;
    }

    // Returns false on infeasibility (captures the Farkas dual first).
    bool phase_one() {
        if (!has_artificials()) return true;
        std::vector<S> c1(kind_.size(), S(0));
        for (std::size_t j = 0; j < kind_.size(); ++j)
            if (kind_[j] == ColKind::Artificial) c1[j] = S(1);
        compute_reduced_costs(c1);
        int unbounded_col = -1;
        while (bland_step(false, unbounded_col)) {
            if (unbounded_col >= 0)
                throw std::logic_error("phase-1 simplex cannot be unbounded");
        }
        S value = S(0);
        for (std::size_t i = 0; i < A_.size(); ++i)
            if (kind_[basis_[i]] == ColKind::Artificial) value += b_[i];
        if (T::is_pos(value)) {
            farkas_std_.assign(A_.size(), S(0));
            for (std::size_t i = 0; i < A_.size(); ++i)
                farkas_std_[i] = c1[id_col_[i]] - z_[id_col_[i]];
            return false;
        }
        drive_out_artificials();
        return true;
    }

    void drive_out_artificials() {
        for (int i = static_cast<int>(A_.size()) - 1; i >= 0; --i) {
            if (kind_[basis_[i]] != ColKind::Artificial) continue;
            int col = -1;
            for (std::size_t j = 0; j < kind_.size(); ++j) {
                if (kind_[j] == ColKind::Artificial) continue;
                if (!T::is_zero(A_[i][j])) {
                    col = static_cast<int>(j);
                    break;
                }
            }
            if (col >= 0) {
                pivot(i, col);
            } else {
                // dependent row: remove it
                A_.erase(A_.begin() + i);
                b_.erase(b_.begin() + i);
                basis_.erase(basis_.begin() + i);
                id_col_.erase(id_col_.begin() + i);
                row_origin_.erase(row_origin_.begin() + i);
                row_sign_.erase(row_sign_.begin() + i);
                A0_.erase(A0_.begin() + i);
                b0_.erase(b0_.begin() + i);
            }
        }
        for (std::size_t j = 0; j < kind_.size(); ++j)
            if (kind_[j] == ColKind::Artificial) eligible_[j] = false;
    }

    // Returns false when unbounded; unbounded_col names the entering column.
    bool phase_two(int& unbounded_col) {
        compute_reduced_costs(cost_);
        unbounded_col = -1;
        while (bland_step(true, unbounded_col)) {
            if (unbounded_col >= 0) return false;
        }
        return true;
    }

    S std_objective() const {
        S v = S(0);
        for (std::size_t i = 0; i < A_.size(); ++i) v += cost_[basis_[i]] * b_[i];
        return v;
    }

    void extract_primal(LpSolution<S>& sol) const {
        std::vector<S> x_std(kind_.size(), S(0));
        for (std::size_t i = 0; i < A_.size(); ++i) x_std[basis_[i]] = b_[i];
        sol.primal.assign(lp_.num_vars, S(0));
        for (int j = 0; j < lp_.num_vars; ++j) {
            S v = x_std[vmap_[j].pos_col];
            if (vmap_[j].neg_col >= 0) v -= x_std[vmap_[j].neg_col];
            sol.primal[j] = v + T::from(vmap_[j].shift);
        }
        S value = std_objective();
        if (maximize_) value = -value;
        sol.objective_value = value + T::from(obj_shift_);
    }

    void extract_duals(LpSolution<S>& sol) const {
        sol.dual.assign(lp_.rows.size(), S(0));
        for (std::size_t i = 0; i < A_.size(); ++i) {
            if (row_origin_[i] < 0) continue;  // bound row
            S y = -z_[id_col_[i]];             // phase-2 cost of id columns is 0
            if (row_sign_[i] < 0) y = -y;
            if (maximize_) y = -y;
            for (std::size_t r = 0; r < lp_.rows.size(); ++r)
                if (orig_to_kept_[r] == row_origin_[i]) sol.dual[r] = y;
        }
    }

    void extract_farkas(LpSolution<S>& sol) const {
        sol.farkas.assign(lp_.rows.size(), S(0));
        for (std::size_t i = 0; i < A_.size(); ++i) {
            if (row_origin_[i] < 0) continue;
            S y = farkas_std_[i];
            if (row_sign_[i] < 0) y = -y;
            for (std::size_t r = 0; r < lp_.rows.size(); ++r)
                if (orig_to_kept_[r] == row_origin_[i]) sol.farkas[r] = y;
        }
    }

    void extract_ray(LpSolution<S>& sol, int enter) {
        ray_std_.assign(kind_.size(), S(0));
        ray_std_[enter] = S(1);
        for (std::size_t i = 0; i < A_.size(); ++i)
            if (!T::is_zero(A_[i][enter])) ray_std_[basis_[i]] = -A_[i][enter];
        sol.ray.assign(lp_.num_vars, S(0));
        for (int j = 0; j < lp_.num_vars; ++j) {
            S v = ray_std_[vmap_[j].pos_col];
            if (vmap_[j].neg_col >= 0) v -= ray_std_[vmap_[j].neg_col];
            sol.ray[j] = v;
        }
    }

    // --- replay helpers over the frozen initial system (A0_, b0_) ----------

    bool verify_primal_std() const {
        std::vector<S> x_std(kind_.size(), S(0));
        for (std::size_t i = 0; i < A_.size(); ++i) {
            if (T::is_neg(b_[i])) return false;
            x_std[basis_[i]] = b_[i];
        }
        for (std::size_t j = 0; j < x_std.size(); ++j)
            if (kind_[j] == ColKind::Artificial && !T::is_zero(x_std[j])) return false;
        for (std::size_t i = 0; i < A0_.size(); ++i) {
            S lhs = S(0);
            for (std::size_t j = 0; j < x_std.size(); ++j)
                if (!T::is_zero(x_std[j])) lhs += A0_[i][j] * x_std[j];
            if (!T::is_zero(lhs - b0_[i])) return false;
        }
        return true;
    }

    bool verify_duality(const LpSolution<S>& sol) const {
        // y from the id columns; check dual feasibility and value match on the
        // standardized min-form system.
        std::vector<S> y(A_.size(), S(0));
        for (std::size_t i = 0; i < A_.size(); ++i) y[i] = -z_[id_col_[i]];
        S yb = S(0);
        for (std::size_t i = 0; i < A_.size(); ++i) yb += y[i] * b0_[i];
        if (!T::is_zero(yb - std_objective())) return false;
        for (std::size_t j = 0; j < kind_.size(); ++j) {
            if (kind_[j] == ColKind::Artificial) continue;
            S rc = cost_[j];
            for (std::size_t i = 0; i < A_.size(); ++i) rc -= y[i] * A0_[i][j];
            if (T::is_neg(rc)) return false;
        }
        (void)sol;
        return true;
    }

    bool verify_original_point(const LpSolution<S>& sol) const {
        if constexpr (std::is_same_v<S, Rational>) return primal_feasible(lp_, sol.primal);
        return true;
    }

    bool verify_original_optimal(const LpSolution<S>& sol) const {
        if constexpr (std::is_same_v<S, Rational>) {
            if (!primal_feasible(lp_, sol.primal)) return false;
            Rational v = 0;
            for (int j = 0; j < lp_.num_vars; ++j) v += lp_.objective[j] * sol.primal[j];
            return v == sol.objective_value;
        }
        return true;
    }

    bool verify_farkas_std() const {
        S yb = S(0);
        for (std::size_t i = 0; i < A0_.size(); ++i) yb += farkas_std_[i] * b0_[i];
        if (!T::is_pos(yb)) return false;
        for (std::size_t j = 0; j < kind_.size(); ++j) {
            if (kind_[j] == ColKind::Artificial) continue;
            S v = S(0);
            for (std::size_t i = 0; i < A0_.size(); ++i)
                if (!T::is_zero(A0_[i][j])) v += farkas_std_[i] * A0_[i][j];
            if (T::is_pos(v)) return false;
        }
        return true;
    }

    bool verify_ray_std() const {
        if (ray_std_.empty()) return false;
        S cd = S(0);
        for (std::size_t j = 0; j < kind_.size(); ++j) {
            if (T::is_neg(ray_std_[j])) return false;
            if (kind_[j] == ColKind::Artificial && !T::is_zero(ray_std_[j])) return false;
            cd += cost_[j] * ray_std_[j];
        }
        if (!T::is_neg(cd)) return false;  // must improve the min-form objective
        for (std::size_t i = 0; i < A0_.size(); ++i) {
            S v = S(0);
            for (std::size_t j = 0; j < kind_.size(); ++j)
                if (!T::is_zero(ray_std_[j])) v += A0_[i][j] * ray_std_[j];
            if (!T::is_zero(v)) return false;
        }
        return true;
    }

    void dump(const char* title) const {
        if (!opts_.debug) return;
        auto& os = *opts_.debug;
        os << "# " << title << " (" << A_.size() << " rows, " << kind_.size() << " cols)\n";
        for (std::size_t i = 0; i < A_.size(); ++i) {
            os << "row " << i << " [basis " << basis_[i] << "]:";
            for (std::size_t j = 0; j < A_[i].size(); ++j) {
                if constexpr (std::is_same_v<S, Rational>)
                    os << ' ' << format_rational(A_[i][j]);
                else
                    os << ' ' << A_[i][j];
            }
            if constexpr (std::is_same_v<S, Rational>)
                os << " | " << format_rational(b_[i]) << '\n';
            else
                os << " | " << b_[i] << '\n';
        }
    }
};

}  // namespace

LpStats lp_stats() {
    return {g_solves.load(), g_verified.load(), g_verify_failures.load()};
}

void reset_lp_stats() {
    g_solves = 0;
    g_verified = 0;
    g_verify_failures = 0;
}

LpSolution<Rational> solve_lp(const LinearProgram& lp, const SimplexOptions& opts) {
    Simplex<Rational> solver(lp, opts);
    LpSolution<Rational> sol = solver.run(false);
    ++g_solves;
    if (opts.verify) {
        if (solver.verify(sol)) {
            sol.verified = true;
            ++g_verified;
        } else {
            ++g_verify_failures;
            throw std::logic_error("LP certificate replay failed");
        }
    }
    return sol;
}

LpSolution<double> solve_lp_float(const LinearProgram& lp, const SimplexOptions& opts) {
    Simplex<double> solver(lp, opts);
    return solver.run(false);
}

FeasibilityResult<Rational> check_feasible(const LinearProgram& lp, const SimplexOptions& opts) {
    Simplex<Rational> solver(lp, opts);
    LpSolution<Rational> sol = solver.run(true);
    ++g_solves;
    if (opts.verify) {
        if (solver.verify(sol)) {
            ++g_verified;
        } else {
            ++g_verify_failures;
            throw std::logic_error("LP feasibility certificate replay failed");
        }
    }
    FeasibilityResult<Rational> out;
    out.pivots = sol.pivots;
    out.feasible = sol.status == LpStatus::Optimal;
    if (out.feasible)
        out.point = sol.primal;
    else
        out.farkas = sol.farkas;
    return out;
}

FeasibilityResult<double> check_feasible_float(const LinearProgram& lp,
                                               const SimplexOptions& opts) {
    Simplex<double> solver(lp, opts);
    LpSolution<double> sol = solver.run(true);
    FeasibilityResult<double> out;
    out.pivots = sol.pivots;
    out.feasible = sol.status == LpStatus::Optimal;
    if (out.feasible)
        out.point = sol.primal;
    else
        out.farkas = sol.farkas;
    return out;
}

bool primal_feasible(const LinearProgram& lp, const std::vector<Rational>& x) {
    if (x.size() != static_cast<std::size_t>(lp.num_vars)) return false;
    for (const auto& row : lp.rows) {
        Rational lhs = 0;
        for (int j = 0; j < lp.num_vars; ++j) lhs += row.coeffs[j] * x[j];
        switch (row.rel) {
            case Relation::LessEq:
                if (lhs > row.rhs) return false;
                break;
            case Relation::Equal:
                if (lhs != row.rhs) return false;
                break;
            case Relation::GreaterEq:
                if (lhs < row.rhs) return false;
                break;
        }
    }
    for (int j = 0; j < lp.num_vars; ++j) {
        auto lo = lower_of(lp, j);
        auto up = upper_of(lp, j);
        if (lo && x[j] < *lo) return false;
        if (up && x[j] > *up) return false;
    }
    return true;
}

bool farkas_valid(const LinearProgram& lp, const std::vector<Rational>& y) {
    if (y.size() != lp.rows.size()) return false;
    // sign conditions per relation
    for (std::size_t i = 0; i < lp.rows.size(); ++i) {
        if (lp.rows[i].rel == Relation::LessEq && sgn(y[i]) > 0) return false;
        if (lp.rows[i].rel == Relation::GreaterEq && sgn(y[i]) < 0) return false;
    }
    // aggregate g·x >= val must be impossible over the bound box
    std::vector<Rational> g(lp.num_vars, 0);
    Rational val = 0;
    for (std::size_t i = 0; i < lp.rows.size(); ++i) {
        if (sgn(y[i]) == 0) continue;
        for (int j = 0; j < lp.num_vars; ++j) g[j] += y[i] * lp.rows[i].coeffs[j];
        val += y[i] * lp.rows[i].rhs;
    }
    Rational box_max = 0;
    for (int j = 0; j < lp.num_vars; ++j) {
        if (sgn(g[j]) == 0) continue;
        auto lo = lower_of(lp, j);
        auto up = upper_of(lp, j);
        if (sgn(g[j]) > 0) {
            if (!up) return false;  // supremum is +inf; not a certificate
            box_max += g[j] * *up;
        } else {
            if (!lo) return false;
            box_max += g[j] * *lo;
        }
    }
    return val > box_max;
}

}  // namespace ctxkit
