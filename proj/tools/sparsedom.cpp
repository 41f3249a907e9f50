#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "sparsedom/error.hpp"
#include "sparsedom/report.hpp"
#include "sparsedom/scenario.hpp"
#include "sparsedom/sparse.hpp"

using namespace sparsedom;

namespace {

int cmd_run(const std::string& config, const std::string& root_opt) {
    ScenarioConfig cfg;
    try {
        cfg = parse_config(config);
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    const std::string root = root_opt.empty() ? output_root() : root_opt;
    const ScenarioResult r = run_scenario(cfg, root);
    for (const auto& c : r.checks) std::cout << (c.pass ? "pass  " : "FAIL  ") << c.name << "\n";
    if (r.exit_code == 2)
        std::cerr << "config error: " << r.failure << "\n";
    else if (r.exit_code != 0)
        std::cerr << "failed: " << r.failure << "\n";
    if (!r.output_dir.empty()) std::cout << "report: " << r.output_dir << "/report.txt\n";
    return r.exit_code;
}

int cmd_list() {
    std::size_t w = 0;
    for (const auto& s : list_scenarios()) w = std::max(w, s.name.size());
    for (const auto& s : list_scenarios())
        std::cout << fmt::format("{:<{}}  {}  ({})\n", s.name, w, s.statement, s.summary);
    return 0;
}

int cmd_calibrate(const std::string& coefficient, const std::string& domain, int n, int level,
                  const std::vector<std::string>& params, const CalibrationOptions& opt, const std::string& root_opt) {
    CoefficientSpec spec;
    spec.name = coefficient;
    for (const auto& kv : params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::cerr << "config error: --param expects key=value, got '" << kv << "'\n";
            return 2;
        }
        try {
            spec.params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
        } catch (const std::exception&) {
            std::cerr << "config error: --param value is not a number: '" << kv << "'\n";
            return 2;
        }
    }
    DiniCalibration cal;
    try {
        cal = calibrate_dini_constants(spec, domain, n, level, opt);
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return e.code() == ErrorCode::ConfigError ? 2 : 1;
    }
    const std::string root = root_opt.empty() ? output_root() : root_opt;
    const auto dir = std::filesystem::path(root) / fmt::format("calibration-{}-{}", coefficient, domain);
    std::filesystem::create_directories(dir);
    std::ofstream csv(dir / "constants.csv");
    csv << "constant,level,level_plus_one,stable\n";
    const std::vector<std::tuple<std::string, double, double, bool>> rows = {
        {"C_w", cal.C_w, cal.C_w_fine, cal.C_w_stable},
        {"C_S", cal.C_S, cal.C_S_fine, cal.C_S_stable},
        {"C_inf", cal.C_inf, cal.C_inf_fine, cal.C_inf_stable},
    };
    std::cout << fmt::format("{:<6} {:>14} {:>14}  {}\n", "", fmt::format("L = {}", level),
                             fmt::format("L = {}", level + 1), "stable");
    for (const auto& [name, a, b, ok] : rows) {
        csv << name << "," << num(a) << "," << num(b) << "," << (ok ? 1 : 0) << "\n";
        std::cout << fmt::format("{:<6} {:>14.6g} {:>14.6g}  {}\n", name, a, b, ok ? "yes" : "no");
    }
    std::cout << "table: " << (dir / "constants.csv").string() << "\n";
    return cal.C_w_stable && cal.C_S_stable && cal.C_inf_stable ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparse domination experiments for divergence-form elliptic equations"};
    app.require_subcommand(1);
    std::string root;
    app.add_option("--output-root", root, "directory for reports (default: $SPARSEDOM_OUTPUT_ROOT or .)");

    auto* run = app.add_subcommand("run", "run the scenario described by an INI config");
    std::string config;
    run->add_option("config", config, "scenario config file")->required();

    app.add_subcommand("list", "list the shipped scenarios");

    auto* cal = app.add_subcommand("calibrate", "measure C_w, C_S, C_inf at two resolutions");
    std::string coefficient, domain;
    int n = 2, level = 4;
    std::vector<std::string> params;
    CalibrationOptions opt;
    cal->add_option("coefficient", coefficient, "built-in coefficient name")->required();
    cal->add_option("domain", domain, "domain kind")->required();
    cal->add_option("--n", n, "dimension")->check(CLI::Range(1, 3));
    cal->add_option("--level", level, "grid level L (cells per side 3*2^L)")->check(CLI::Range(1, 8));
    cal->add_option("--param", params, "coefficient parameter key=value");
    cal->add_option("--trials", opt.trials, "random cubes for C_w");
    cal->add_option("--s-trials", opt.s_trials, "random cubes for C_S and C_inf");
    cal->add_option("--depth-cap", opt.depth_cap, "lattice depth of the S function");
    cal->add_option("--seed", opt.seed, "data seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (*run) return cmd_run(config, root);
    if (app.got_subcommand("list")) return cmd_list();
    if (*cal) return cmd_calibrate(coefficient, domain, n, level, params, opt, root);
    return 2;
}
