#include "ctxkit/cli.hpp"

#include <cstdlib>
#include <set>

#include "CLI11.hpp"

#include "ctxkit/io.hpp"

namespace ctxkit {

namespace {

unsigned long long vertex_cap_from_env() {
    const char* env = std::getenv("CTXKIT_VERTEX_CAP");
    if (!env) return kDefaultVertexCap;
    char* end = nullptr;
    unsigned long long cap = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0' || cap == 0)
        throw ValidationError("CTXKIT_VERTEX_CAP must be a positive integer");
    return cap;
}

const std::set<std::string> kVerbs = {
    "scenario-validate", "behavior-check-nd", "behavior-check-nc", "quantify",
    "wire-apply",        "wire-validate",     "box-product",       "box-and",
    "suite-preservation", "suite-monotonicity", "mbqc-bound",      "nu"};

// Accepts both "behavior-check-nd" and the grouped form "behavior check-nd".
std::vector<std::string> normalize_verbs(std::vector<std::string> args) {
    if (args.size() >= 2 && !args[0].empty() && args[0][0] != '-' && args[1][0] != '-') {
        std::string joined = args[0] + "-" + args[1];
        if (kVerbs.count(joined)) {
            args.erase(args.begin());
            args[0] = joined;
        }
    }
    return args;
}

void emit(std::ostream& out, bool as_json, const Json& j, const std::string& text) {
    if (as_json)
        out << j.dump(2) << "\n";
    else
        out << text << "\n";
}

std::string format_quantifier_line(const QuantifierResult& r) {
    static const std::map<std::string, std::string> names = {
        {"cf", "CF"}, {"du", "D_u"}, {"dmax", "D_max"}, {"eu", "E_u"}, {"emax", "E_max"}};
    std::string line = names.at(r.quantifier) + " = ";
    if (r.exact_value) {
        line += format_rational(*r.exact_value);
    } else {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.9g (gap %.3g)", r.value, r.gap);
        line += buf;
    }
    return line;
}

struct CommonFlags {
    bool json = false;
    bool lp_debug = false;
};

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    auto args = normalize_verbs(raw_args);

    CLI::App app{"resource-theory toolkit for contextuality scenarios"};
    app.require_subcommand(1);

    QuantifierOptions qopts;
    qopts.vertex_cap = vertex_cap_from_env();

    // scenario-validate
    std::string scenario_path, behavior_path, wiring_path, left_path, right_path, out_path;
    CommonFlags flags;
    auto add_json = [&flags](CLI::App* cmd) { cmd->add_flag("--json", flags.json); };

    auto* sv = app.add_subcommand("scenario-validate", "check scenario invariants");
    sv->add_option("--scenario", scenario_path, "scenario file")->required();
    add_json(sv);

    auto* nd = app.add_subcommand("behavior-check-nd", "check non-disturbance");
    nd->add_option("--behavior", behavior_path)->required();
    std::string mode_name = "exact";
    double tol = 1e-9;
    nd->add_option("--mode", mode_name)->check(CLI::IsMember({"exact", "float"}));
    nd->add_option("--tol", tol);
    add_json(nd);

    auto* nc = app.add_subcommand("behavior-check-nc", "certify non-contextuality by LP");
    nc->add_option("--behavior", behavior_path)->required();
    nc->add_option("--mode", mode_name)->check(CLI::IsMember({"exact", "float"}));
    nc->add_option("--tol", tol);
    add_json(nc);

    auto* q = app.add_subcommand("quantify", "compute a contextuality quantifier");
    std::string measure;
    double fw_tol = 1e-6;
    q->add_option("--measure", measure, "cf, du, dmax, eu or emax")
        ->required()
        ->check(CLI::IsMember({"cf", "du", "dmax", "eu", "emax"}));
    q->add_option("--behavior", behavior_path)->required();
    q->add_option("--tol", fw_tol, "duality-gap tolerance for eu/emax");
    q->add_option("--mode", mode_name, "arithmetic for cf/du/dmax (default exact)")
        ->check(CLI::IsMember({"exact", "float"}));
    q->add_flag("--lp-debug", flags.lp_debug, "dump simplex tableaus to stderr");
    add_json(q);

    auto* wa = app.add_subcommand("wire-apply", "apply a wiring to a behavior");
    wa->add_option("--wiring", wiring_path)->required();
    wa->add_option("--behavior", behavior_path)->required();
    wa->add_option("--out", out_path, "output behavior file (default: stdout)");

    auto* wv = app.add_subcommand("wire-validate", "validate a wiring against a scenario");
    wv->add_option("--wiring", wiring_path)->required();
    wv->add_option("--scenario", scenario_path)->required();
    add_json(wv);

    auto* bp = app.add_subcommand("box-product", "product of two boxes");
    bp->add_option("--left", left_path)->required();
    bp->add_option("--right", right_path)->required();
    bp->add_option("--out", out_path);

    auto* ba = app.add_subcommand("box-and", "controlled choice of two boxes");
    ba->add_option("--left", left_path)->required();
    ba->add_option("--right", right_path)->required();
    ba->add_option("--out", out_path);

    auto* sp = app.add_subcommand("suite-preservation",
                                  "randomized non-disturbance / non-contextuality preservation");
    int trials = 100;
    std::uint64_t seed = 0;
    sp->add_option("--scenario", scenario_path)->required();
    sp->add_option("--trials", trials)->check(CLI::PositiveNumber);
    sp->add_option("--seed", seed)->required();
    sp->add_option("--out", out_path, "write the report file");
    add_json(sp);

    auto* sm = app.add_subcommand("suite-monotonicity", "randomized monotonicity checks");
    std::string opclass_name = "full";
    sm->add_option("--measure", measure)
        ->required()
        ->check(CLI::IsMember({"cf", "du", "dmax", "eu", "emax"}));
    sm->add_option("--scenario", scenario_path)->required();
    sm->add_option("--trials", trials)->check(CLI::PositiveNumber);
    sm->add_option("--seed", seed)->required();
    sm->add_option("--opclass", opclass_name)->check(CLI::IsMember({"full", "post-only"}));
    sm->add_option("--out", out_path);
    add_json(sm);

    auto* mb = app.add_subcommand("mbqc-bound", "failure-probability lower bound (1-cf)*nu");
    std::string cf_text, nu_text;
    mb->add_option("--cf", cf_text)->required();
    mb->add_option("--nu", nu_text)->required();
    add_json(mb);

    auto* nuc = app.add_subcommand("nu", "distance to the closest Z2-linear Boolean function");
    std::string table_text;
    nuc->add_option("--table", table_text, "truth table as a 0/1 string of length 2^m")
        ->required();
    add_json(nuc);

    std::vector<const char*> argv;
    argv.push_back("ctxkit");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        err << "run with --help for usage\n";
        return 2;
    }

    NumericMode mode =
        mode_name == "float" ? NumericMode::floating(tol) : NumericMode::exact();
    qopts.mode = mode;
    if (flags.lp_debug) qopts.lp_debug = &err;

    if (sv->parsed()) {
        auto s = scenario_from_json(load_json_file(scenario_path));
        auto diags = validate_scenario(*s);
        emit(out, flags.json, diagnostics_to_json(diags),
             diags.empty() ? "scenario ok"
                           : join_messages(diags));
        return has_errors(diags) ? 1 : 0;
    }

    if (nd->parsed()) {
        Behavior b = load_behavior(behavior_path);
        auto report = check_nondisturbance(b, mode);
        std::string text =
            report ? "non-disturbing"
                   : "disturbing between " + b.scenario->context_label(report.context_a) +
                         " and " + b.scenario->context_label(report.context_b) +
                         " (max marginal discrepancy " +
                         format_rational(report.max_discrepancy) + ")";
        emit(out, flags.json, nd_report_to_json(report, b), text);
        return report ? 0 : 1;
    }

    if (nc->parsed()) {
        Behavior b = load_behavior(behavior_path);
        auto result = check_noncontextual(b, qopts);
        std::string text;
        if (result.noncontextual)
            text = "non-contextual (global section over " +
                   std::to_string(result.model ? result.model->weights.size() : 0) +
                   " assignments)";
        else
            text = "contextual (witness inequality: value " +
                   format_rational(result.witness->value_on_behavior) + " > bound " +
                   format_rational(result.witness->bound) + ")";
        emit(out, flags.json, nc_result_to_json(result, b), text);
        return result.noncontextual ? 0 : 1;
    }

    if (q->parsed()) {
        Behavior b = load_behavior(behavior_path);
        QuantifierResult r;
        EntropicOptions eopts;
        eopts.vertex_cap = qopts.vertex_cap;
        if (measure == "cf")
            r = contextual_fraction(b, qopts);
        else if (measure == "du")
            r = l1_uniform_distance(b, qopts);
        else if (measure == "dmax")
            r = l1_max_distance(b, qopts);
        else if (measure == "eu")
            r = relative_entropy_uniform(b, fw_tol, eopts);
        else
            r = relative_entropy_max(b, fw_tol, eopts);
        emit(out, flags.json, quantifier_result_to_json(r, &b), format_quantifier_line(r));
        return 0;
    }

    if (wa->parsed()) {
        Behavior b = load_behavior(behavior_path);
        WiringParts parts = load_wiring(wiring_path, b.scenario);
        Behavior result;
        if (parts.is_full()) {
            result = apply_ncwiring(make_ncwiring(*parts.pre, *parts.post, qopts), b);
        } else if (parts.pre) {
            if (!check_noncontextual(parts.pre->pre_box, qopts).noncontextual)
                throw ValidationError("wire-apply: pre-box not non-contextual");
            result = apply_preprocessing(*parts.pre, b);
        } else {
            result = apply_postprocessing(*parts.post, b);
        }
        if (out_path.empty())
            out << behavior_to_json(result).dump(2) << "\n";
        else
            store_behavior(out_path, result);
        return 0;
    }

    if (wv->parsed()) {
        auto target = load_scenario(scenario_path);
        WiringParts parts = load_wiring(wiring_path, target);
        std::vector<Diagnostic> diags;
        if (parts.is_full()) {
            NCWiring w = parts.full();
            diags = validate_wiring(w, *target, qopts);
        } else if (parts.pre) {
            diags = validate_preprocessing(*parts.pre, *target);
            if (!has_errors(diags) &&
                !check_noncontextual(parts.pre->pre_box, qopts).noncontextual)
                diags.push_back({Diagnostic::Severity::Error, "pre-box-contextual",
                                 "pre-box not non-contextual"});
        } else {
            diags = validate_postprocessing(*parts.post, *target, true);
        }
        emit(out, flags.json, diagnostics_to_json(diags),
             diags.empty() ? "wiring ok" : join_messages(diags));
        return has_errors(diags) ? 1 : 0;
    }

    if (bp->parsed() || ba->parsed()) {
        Behavior left = load_behavior(left_path);
        Behavior right = load_behavior(right_path);
        Behavior result = bp->parsed() ? product_box(left, right) : controlled_choice(left, right);
        if (out_path.empty())
            out << behavior_to_json(result).dump(2) << "\n";
        else
            store_behavior(out_path, result);
        return 0;
    }

    if (sp->parsed()) {
        auto scenario = load_scenario(scenario_path);
        auto report = run_preservation_suite(scenario, trials, seed, qopts);
        std::string text = "preservation suite: " + std::to_string(report.passed) + "/" +
                           std::to_string(report.trials) + " trials passed (nd " +
                           std::to_string(report.passed_nd) + ", nc " +
                           std::to_string(report.passed_nc) + ") in " +
                           std::to_string(report.seconds) + " s";
        emit(out, flags.json, report_to_json(report), text);
        if (!out_path.empty()) store_report(out_path, report);
        return report.ok() ? 0 : 1;
    }

    if (sm->parsed()) {
        auto scenario = load_scenario(scenario_path);
        auto report = run_monotonicity_suite(measure, scenario, trials, seed,
                                             parse_opclass(opclass_name), qopts);
        std::string text = "monotonicity suite (" + measure + ", " + report.opclass +
                           "): " + std::to_string(report.passed) + "/" +
                           std::to_string(report.trials) + " trials passed in " +
                           std::to_string(report.seconds) + " s";
        emit(out, flags.json, report_to_json(report), text);
        if (!out_path.empty()) store_report(out_path, report);
        return report.ok() ? 0 : 1;
    }

    if (mb->parsed()) {
        Rational bound = mbqc_failure_bound(parse_rational(cf_text), parse_rational(nu_text));
        Json j;
        j["bound"] = rational_to_json(bound);
        emit(out, flags.json, j, "p_F >= " + format_rational(bound));
        return 0;
    }

    if (nuc->parsed()) {
        std::vector<std::uint8_t> truth;
        for (char c : table_text) {
            if (c != '0' && c != '1')
                throw ValidationError("nu: truth table must be a string of 0s and 1s");
            truth.push_back(c == '1' ? 1 : 0);
        }
        Rational v = nu_linear_distance(truth);
        Json j;
        j["nu"] = rational_to_json(v);
        emit(out, flags.json, j, "nu = " + format_rational(v));
        return 0;
    }

    err << "no command selected\n";
    return 2;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        return run(args, out, err);
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const CapExceededError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const ConvergenceError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace ctxkit
