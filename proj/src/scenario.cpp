#include "sparsedom/scenario.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "sparsedom/error.hpp"
#include "sparsedom/maximal.hpp"
#include "sparsedom/regularity.hpp"
#include "sparsedom/report.hpp"
#include "sparsedom/sparse.hpp"

namespace sparsedom {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

const std::vector<ScenarioInfo>& list_scenarios() {
    static const std::vector<ScenarioInfo> table = {
        {"energy", "energy estimate", "||grad u||^2 <= (2/lambda^2)(||F||^2 + c^2 ||f||^2) on O_Q0"},
        {"caccioppoli", "Caccioppoli inequality", "homogeneous local solutions on depth-2 cubes"},
        {"linearization", "linearization of a pair of solutions", "weak residual of div A(grad u - grad v)"},
        {"reverse-holder", "weak reverse Hoelder inequality for differences", "measured N_h and refinement scan"},
        {"local-sparse", "sparse bound, interior stopping time", "u on 3Q0, O_Q = 3Q"},
        {"global-sparse", "sparse bound up to the boundary", "u on a domain, U_Q = domain cut by 3Q"},
        {"meyers-sparse", "sparse Meyers estimate", "global bound with the measured upper exponent"},
        {"vmo-sparse", "sparse bound for vanishing mean oscillation", "global bound, vmo coefficient"},
        {"dini-sparse", "sparse (1,1) bound for Dini mean oscillation", "density stopping with calibrated C_w, C_S"},
        {"dini-calibration", "weak-type hypotheses for Dini coefficients", "C_w, C_S, C_inf and their refinement"},
        {"weighted-a2", "sparse forms and A_2 weights", "dyadic A_2 chain on random sparse families"},
        {"weighted-vmo", "weighted gradient bound, vmo coefficients", "ratio and refinement, no exponent claim"},
        {"weighted-dini", "weighted gradient bound, Dini coefficients", "ratio / [w]_{A_p}^{max(1,1/(p-1))}"},
    };
    return table;
}

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

double to_number(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        config_error(fmt::format("'{}' expects a number, got '{}'", key, v));
    }
}

int to_int(const std::string& key, const std::string& v) {
    const double x = to_number(key, v);
    if (x != std::floor(x)) config_error(fmt::format("'{}' expects an integer, got '{}'", key, v));
    return static_cast<int>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    config_error(fmt::format("'{}' expects true or false, got '{}'", key, v));
}

std::array<double, 3> to_point(const std::string& key, const std::string& v) {
    std::array<double, 3> out{0.5, 0.5, 0.5};
    std::stringstream ss(v);
    std::string item;
    int k = 0;
    while (std::getline(ss, item, ',')) {
        if (k >= 3) config_error(fmt::format("'{}' has more than three coordinates", key));
        out[k++] = to_number(key, item);
    }
    if (k == 0) config_error(fmt::format("'{}' is empty", key));
    return out;
}

using Setter = std::function<void(ScenarioConfig&, const std::string&)>;

const std::map<std::string, std::map<std::string, Setter>>& schema() {
    static const std::map<std::string, std::map<std::string, Setter>> s = {
        {"scenario", {{"name", [](ScenarioConfig& c, const std::string& v) { c.scenario = v; }}}},
        {"grid",
         {{"n", [](ScenarioConfig& c, const std::string& v) { c.n = to_int("grid.n", v); }},
          {"level", [](ScenarioConfig& c, const std::string& v) { c.level = to_int("grid.level", v); }}}},
        {"domain", {{"kind", [](ScenarioConfig& c, const std::string& v) { c.domain = v; }}}},
        {"data",
         {{"F", [](ScenarioConfig& c, const std::string& v) { c.data.F = v; }},
          {"modes", [](ScenarioConfig& c, const std::string& v) { c.data.modes = to_int("data.modes", v); }},
          {"amplitude", [](ScenarioConfig& c, const std::string& v) { c.data.amplitude = to_number("data.amplitude", v); }},
          {"bumps", [](ScenarioConfig& c, const std::string& v) { c.data.bumps = to_int("data.bumps", v); }},
          {"bump_height",
           [](ScenarioConfig& c, const std::string& v) { c.data.bump_height = to_number("data.bump_height", v); }},
          {"bump_radius",
           [](ScenarioConfig& c, const std::string& v) { c.data.bump_radius = to_number("data.bump_radius", v); }},
          {"f", [](ScenarioConfig& c, const std::string& v) { c.data.f = v; }},
          {"f_amplitude",
           [](ScenarioConfig& c, const std::string& v) { c.data.f_amplitude = to_number("data.f_amplitude", v); }},
          {"g", [](ScenarioConfig& c, const std::string& v) { c.data.g = v; }},
          {"seed",
           [](ScenarioConfig& c, const std::string& v) {
               const int s = to_int("data.seed", v);
               if (s < 0) config_error("data.seed must be non-negative");
               c.data.seed = static_cast<std::uint64_t>(s);
           }}}},
        {"sparse",
         {{"theta", [](ScenarioConfig& c, const std::string& v) { c.theta = to_number("sparse.theta", v); }},
          {"q_l", [](ScenarioConfig& c, const std::string& v) { c.q_l = to_number("sparse.q_l", v); }},
          {"q_h", [](ScenarioConfig& c, const std::string& v) { c.q_h = to_number("sparse.q_h", v); }},
          {"A", [](ScenarioConfig& c, const std::string& v) { c.A = to_number("sparse.A", v); }},
          {"B", [](ScenarioConfig& c, const std::string& v) { c.B = to_number("sparse.B", v); }},
          {"C_w", [](ScenarioConfig& c, const std::string& v) { c.C_w = to_number("sparse.C_w", v); }},
          {"C_S", [](ScenarioConfig& c, const std::string& v) { c.C_S = to_number("sparse.C_S", v); }},
          {"threshold_scale",
           [](ScenarioConfig& c, const std::string& v) { c.threshold_scale = to_number("sparse.threshold_scale", v); }},
          {"s_depth_cap",
           [](ScenarioConfig& c, const std::string& v) { c.s_depth_cap = to_int("sparse.s_depth_cap", v); }},
          {"trials", [](ScenarioConfig& c, const std::string& v) { c.trials = to_int("sparse.trials", v); }}}},
        {"weight",
         {{"kind", [](ScenarioConfig& c, const std::string& v) { c.weight.kind = v; }},
          {"alpha", [](ScenarioConfig& c, const std::string& v) { c.weight.alpha = to_number("weight.alpha", v); }},
          {"center", [](ScenarioConfig& c, const std::string& v) { c.weight.center = to_point("weight.center", v); }},
          {"lo", [](ScenarioConfig& c, const std::string& v) { c.weight.lo = to_number("weight.lo", v); }},
          {"hi", [](ScenarioConfig& c, const std::string& v) { c.weight.hi = to_number("weight.hi", v); }},
          {"p", [](ScenarioConfig& c, const std::string& v) { c.p = to_number("weight.p", v); }}}},
        {"output", {{"dir", [](ScenarioConfig& c, const std::string& v) { c.output = v; }}}},
    };
    return s;
}

ScenarioConfig from_tree(const pt::ptree& tree) {
    ScenarioConfig cfg;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) config_error(fmt::format("key '{}' outside a section", section));
        if (section == "coefficient") {
            for (const auto& [key, node] : body) {
                const std::string v = node.data();
                if (key == "name")
                    cfg.coefficient.name = v;
                else if (key == "nonlinear")
                    cfg.coefficient.nonlinear = to_bool("coefficient.nonlinear", v);
                else if (key == "epsilon")
                    cfg.coefficient.epsilon = to_number("coefficient.epsilon", v);
                else
                    cfg.coefficient.params[key] = to_number("coefficient." + key, v);
            }
            continue;
        }
        const auto sec = schema().find(section);
        if (sec == schema().end()) config_error(fmt::format("unknown section [{}]", section));
        for (const auto& [key, node] : body) {
            const auto it = sec->second.find(key);
            if (it == sec->second.end()) config_error(fmt::format("unknown key '{}' in [{}]", key, section));
            it->second(cfg, node.data());
        }
    }
    return cfg;
}

bool is_known(const std::string& name) {
    for (const auto& s : list_scenarios())
        if (s.name == name) return true;
    return false;
}

const ScenarioInfo& info(const std::string& name) {
    for (const auto& s : list_scenarios())
        if (s.name == name) return s;
    config_error("unknown scenario '" + name + "'");
}

// Collects the report and the pass flags of one run.
class Run {
public:
    Run(const ScenarioConfig& cfg, fs::path dir) : cfg_(cfg), dir_(std::move(dir)) {}

    void section(const std::string& title) { text_ << "\n" << title << ":\n"; }
    void value(const std::string& key, double v) {
        text_ << "  " << key << " = " << num(v) << "\n";
        summary_.emplace_back(key, num(v));
    }
    void note(const std::string& key, const std::string& v) {
        text_ << "  " << key << " = " << v << "\n";
        summary_.emplace_back(key, v);
    }
    void check(const std::string& name, bool pass, const std::string& detail = "") {
        checks_.push_back({name, pass, detail});
    }
    void constant(const std::string& key, double v, const std::string& source) {
        constants_.push_back(fmt::format("  {} = {} ({})", key, num(v), source));
    }

    std::string path(const std::string& file) const { return (dir_ / file).string(); }
    const std::vector<CheckResult>& checks() const { return checks_; }

    void write(const std::string& error) const {
        const ScenarioInfo& si = info(cfg_.scenario);
        std::ofstream out(path("report.txt"));
        out << "scenario: " << si.name << "\n";
        out << "statement: " << si.statement << "\n";
        out << "grid: n = " << cfg_.n << ", level = " << cfg_.level << ", cells per side = " << (3 << cfg_.level)
            << "\n";
        out << "coefficient: " << cfg_.coefficient.describe() << "\n";
        out << "domain: " << cfg_.domain << "\n";
        out << fmt::format("data: F = {}, modes = {}, amplitude = {}, f = {}, g = {}, seed = {}\n", cfg_.data.F,
                           cfg_.data.modes, num(cfg_.data.amplitude), cfg_.data.f, cfg_.data.g, cfg_.data.seed);
        out << "\nconstants:\n";
        if (constants_.empty()) out << "  none\n";
        for (const auto& c : constants_) out << c << "\n";
        out << text_.str();
        out << "\nchecks:\n";
        for (const auto& c : checks_)
            out << "  [" << (c.pass ? "pass" : "FAIL") << "] " << c.name << (c.detail.empty() ? "" : ": " + c.detail)
                << "\n";
        if (!error.empty()) out << "  [FAIL] error: " << error << "\n";
        bool ok = error.empty();
        for (const auto& c : checks_) ok = ok && c.pass;
        out << "\noutcome: " << (ok ? "pass" : "fail") << "\n";

        std::ofstream csv(path("summary.csv"));
        csv << "key,value\n";
        for (const auto& [k, v] : summary_) csv << k << "," << v << "\n";
    }

private:
    const ScenarioConfig& cfg_;
    fs::path dir_;
    std::ostringstream text_;
    std::vector<std::pair<std::string, std::string>> summary_;
    std::vector<std::string> constants_;
    std::vector<CheckResult> checks_;
};

struct Setup {
    Grid grid;
    EllipticCoefficient a;
    Domain dom;
    ProblemData data;
};

Setup setup(const ScenarioConfig& cfg) {
    Setup s;
    s.grid = Grid(cfg.n, cfg.level);
    s.a = make_coefficient(s.grid, cfg.coefficient);
    s.dom = make_domain(s.grid, cfg.domain);
    s.data = make_data(s.grid, cfg.data);
    return s;
}

std::vector<Cube> cubes_at_depth(const Grid& g, int depth, int limit) {
    std::vector<Cube> out;
    for (const Cube& c : lattice(root_q0(g), g.n, depth))
        if (c.depth == depth && static_cast<int>(out.size()) < limit) out.push_back(c);
    return out;
}

void run_energy(const ScenarioConfig& cfg, Run& run) {
    const Setup s = setup(cfg);
    const EnergyReport r = check_energy_estimate(s.a, root_q0(s.grid), &s.dom, s.data.F, s.data.f);
    run.constant("lambda", s.a.lambda(), "declared");
    run.constant("c_n", r.sobolev_constant, "measured");
    run.section("results");
    run.value("lhs", r.lhs);
    run.value("rhs", r.rhs);
    run.value("ratio", r.ratio);
    run.value("bound", r.bound);
    run.check("energy estimate", r.pass, fmt::format("lhs {} <= (2/lambda^2) rhs", num(r.lhs)));
}

void run_caccioppoli(const ScenarioConfig& cfg, Run& run) {
    const Setup s = setup(cfg);
    const bool full = s.dom.kind == DomainKind::FullCube;
    const CellSet u_region = full ? CellSet(s.grid, true) : s.dom.mask;
    run.constant("lambda", s.a.lambda(), "declared");
    run.constant("Lambda", s.a.Lambda(), "declared");
    run.section("results");
    std::ofstream csv(run.path("cubes.csv"));
    csv << "address,side,lhs,rhs,residual,pass\n";
    double worst = 0.0;
    int count = 0;
    for (const Cube& Q : cubes_at_depth(s.grid, 2, std::max(cfg.trials, 1))) {
        const CellSet homog = solve_region(s.grid, Q, full ? nullptr : &s.dom);
        const GridField F = mask_out(s.data.F, homog);
        const Solution u = solve_dirichlet(s.a, u_region, F, GridField());
        const CaccioppoliReport r = check_caccioppoli(s.a, Q, homog, u.u, u_region);
        csv << Q.address_string() << "," << Q.side << "," << num(r.lhs) << "," << num(r.rhs) << ","
            << num(r.residual) << "," << (r.pass ? 1 : 0) << "\n";
        if (r.rhs > 0.0) worst = std::max(worst, r.lhs / r.rhs);
        run.check("caccioppoli on " + Q.address_string(), r.pass);
        ++count;
    }
    run.value("cubes", count);
    run.value("max lhs/rhs", worst);
}

void run_linearization(const ScenarioConfig& cfg, Run& run) {
    const Setup s = setup(cfg);
    run.constant("epsilon", s.a.epsilon(), "declared");
    run.section("results");
    std::ofstream csv(run.path("cubes.csv"));
    csv << "address,side,residual,scale,pass\n";
    double worst = 0.0;
    for (const Cube& Q : cubes_at_depth(s.grid, 1, std::max(cfg.trials, 1))) {
        const LinearizationReport r = check_linearization(s.a, Q, &s.dom, s.data.F);
        csv << Q.address_string() << "," << Q.side << "," << num(r.residual) << "," << num(r.scale) << ","
            << (r.pass ? 1 : 0) << "\n";
        if (r.scale > 0.0) worst = std::max(worst, r.residual / r.scale);
        run.check("linearization on " + Q.address_string(), r.pass);
    }
    run.value("max residual/scale", worst);
}

void run_reverse_holder(const ScenarioConfig& cfg, Run& run) {
    const Setup s = setup(cfg);
    const bool full = s.dom.kind == DomainKind::FullCube;
    const RHMode mode = full ? RHMode::Local : RHMode::Boundary;
    ReverseHolderOptions opt;
    opt.trials = cfg.trials;
    opt.seed = cfg.data.seed;
    const ReverseHolderResult r = estimate_reverse_holder(cfg.coefficient, cfg.domain, cfg.n, cfg.level, cfg.q_h, mode, opt);
    const UpperExponentScan scan = select_upper_exponent(s.a, full ? nullptr : &s.dom, mode, 10.0,
                                                         {2.5, 3, 4, 5, 6, 8}, opt);
    run.constant("q_h", cfg.q_h, "config");
    run.section("results");
    run.note("mode", full ? "local" : "boundary");
    run.value("N_h", r.constant);
    run.value("N_h at level + 1", r.constant_fine);
    run.value("pairs", static_cast<double>(r.pairs));
    run.value("ratios", static_cast<double>(r.cubes));
    run.value("skipped", static_cast<double>(r.skipped));
    std::ofstream csv(run.path("exponents.csv"));
    csv << "q,constant,identity_constant\n";
    for (std::size_t k = 0; k < scan.q.size(); ++k)
        csv << num(scan.q[k]) << "," << num(scan.constant[k]) << "," << num(scan.identity_constant[k]) << "\n";
    run.value("selected q_h", scan.q_h);
    run.value("constant at selected q_h", scan.B);
    run.check("constant finite", std::isfinite(r.constant) && r.constant > 0.0);
    run.check("refinement stable", r.stable,
              fmt::format("{} -> {}", num(r.constant), num(r.constant_fine)));
}

void write_sparse_outputs(const Setup& s, const SparseBoundCertificate& cert, const Domain* dom, Run& run) {
    const Grid& g = s.grid;
    std::ofstream csv(run.path("cubes.csv"));
    csv << "generation,address,corner_x,corner_y,corner_z,side,length,threshold_D,L_Q,term_I,term_II,term_III,"
           "bound_I,bound_II,children,cell_limit_children,exceptional_measure,children_measure,audit_ok\n";
    std::size_t k = 0;
    for (std::size_t j = 0; j < cert.family.generations.size(); ++j)
        for (std::size_t idx = 0; idx < cert.family.generations[j].size(); ++idx, ++k) {
            const IterationReport& r = cert.steps[k];
            const Cube& c = r.cube;
            csv << j << "," << c.address_string() << "," << c.corner[0] << "," << c.corner[1] << "," << c.corner[2]
                << "," << c.side << "," << num(c.length(g)) << "," << num(r.threshold_D) << "," << num(r.L_Q) << ","
                << num(r.term_I) << "," << num(r.term_II) << "," << num(r.term_III) << "," << num(r.bound_I) << ","
                << num(r.bound_II) << "," << r.children.size() << "," << r.cell_limit_children << ","
                << num(r.exceptional_measure) << "," << num(r.children_measure) << "," << (r.audit_ok ? 1 : 0)
                << "\n";
        }
    std::ofstream gen(run.path("generations.csv"));
    gen << "generation,cubes,measure,bound,residual\n";
    for (std::size_t j = 0; j < cert.generations.size(); ++j) {
        const GenerationRecord& r = cert.generations[j];
        gen << j << "," << r.cubes << "," << num(r.measure) << "," << num(r.bound) << "," << num(r.residual) << "\n";
    }

    const GridField F = dom ? restrict_to(s.data.F, dom->mask) : s.data.F;
    const CellSet region = solve_region(g, root_q0(g), dom);
    const Solution u = solve_dirichlet(s.a, region, F, cert.mode == SparseMode::Dini ? GridField() : s.data.f);
    const GridField grad = magnitude(u.gradient());
    MaximalOptions mo;
    mo.include_cell_limit = true;
    const GridField maxf = dyadic_maximal(grad, root_q0(g), mo).field;
    write_field_csv(grad, run.path("grad_u.csv"));
    write_field_csv(maxf, run.path("maximal_grad_u.csv"));
    write_heatmap_svg(grad, run.path("grad_u.svg"), "|grad u|");
    write_heatmap_svg(maxf, run.path("maximal_grad_u.svg"), "M |grad u| over D(Q0)");
    write_family_svg(g, cert.family, run.path("family.svg"),
                     fmt::format("sparse family, {} cubes", cert.family.cubes.size()));
}

void report_certificate(const SparseBoundCertificate& cert, Run& run) {
    run.section("results");
    run.note("mode", sparse_mode_name(cert.mode));
    run.value("family size", static_cast<double>(cert.family.cubes.size()));
    run.value("generations", static_cast<double>(cert.generations.size()));
    run.value("lhs", cert.lhs);
    run.value("sparse form", cert.rhs_sum);
    run.value("first-order form", cert.rhs_first_order);
    run.value("stated constant", cert.paper_constant);
    run.value("corrected constant", cert.corrected_constant);
    run.value("empirical ratio", cert.empirical_ratio);
    run.value("sparsity min ratio", cert.sparsity.min_ratio);
    run.note("certified", cert.certified ? "yes" : "no (threshold scale or supplied constants)");
    for (std::size_t j = 0; j < cert.residual_decay.size(); ++j)
        run.value(fmt::format("residual generation {}", j), cert.residual_decay[j]);
    run.value("final residual", cert.final_residual);
    run.check("sparse at 1 - theta", cert.sparsity.is_sparse && cert.sparsity.overlap_violations == 0,
              fmt::format("min ratio {}", num(cert.sparsity.min_ratio)));
    run.check("measure bound per step", cert.measure_bounds_ok);
    run.check("generation decay", cert.generation_decay_ok);
    run.check("residual decreases", cert.residual_monotone);
    run.check("step audits", cert.audits_ok);
    run.check("ratio within stated constant", cert.ratio_ok,
              fmt::format("{} <= {}", num(cert.empirical_ratio), num(cert.paper_constant)));
}

void run_general_sparse(const ScenarioConfig& cfg, Run& run, SparseMode mode, bool select_exponent) {
    const Setup s = setup(cfg);
    const Domain* dom = mode == SparseMode::Local ? nullptr : &s.dom;
    SparseParams p;
    p.theta = cfg.theta;
    p.q_l = cfg.q_l;
    p.q_h = cfg.q_h;
    p.threshold_scale = cfg.threshold_scale;
    const RHMode rh = mode == SparseMode::Local ? RHMode::Local : RHMode::Boundary;
    const std::string rh_domain = mode == SparseMode::Local ? "full-cube" : cfg.domain;
    ReverseHolderOptions opt;
    opt.trials = cfg.trials;
    opt.seed = cfg.data.seed;
    if (select_exponent) {
        const UpperExponentScan scan = select_upper_exponent(s.a, dom, rh, 10.0, {2.5, 3, 4, 5, 6, 8}, opt);
        if (scan.q_h > 0.0) p.q_h = scan.q_h;
        run.constant("q_h", p.q_h, scan.q_h > 0.0 ? "selected by reverse Hoelder scan" : "config (scan found none)");
    } else {
        run.constant("q_h", p.q_h, "config");
    }
    run.constant("q_l", p.q_l, "config");
    run.constant("theta", p.theta, "config");
    if (cfg.A > 0.0) {
        p.A = cfg.A;
        p.A_source = "supplied";
    } else {
        certify_A(p, s.a, solve_region(s.grid, root_q0(s.grid), dom));
    }
    if (cfg.B > 0.0) {
        p.B = cfg.B;
        p.B_source = "supplied";
    } else {
        const ReverseHolderResult r = reverse_holder_sup(s.a, dom, p.q_h, rh, opt);
        p.B = r.constant;
        p.B_source = "measured";
        run.section("measurements");
        run.note("B sampled pairs", std::to_string(r.pairs));
    }
    run.constant("A", p.A, p.A_source);
    run.constant("c_n", p.c_n, p.A_source == "certified" ? "measured" : "unused");
    run.constant("B", p.B, p.B_source);
    run.constant("K_M", p.km(cfg.n), "certified 9^n");
    run.constant("lambda", s.a.lambda(), "declared");
    run.constant("Lambda", s.a.Lambda(), "declared");
    if (p.threshold_scale != 1.0) run.constant("threshold_scale", p.threshold_scale, "uncertified");
    (void)rh_domain;
    if (cfg.coefficient.name == "vmo" || cfg.scenario == "vmo-sparse") {
        const auto prof = oscillation_profile(s.a.matrix(), {1.0 / 32, 1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2}, s.dom);
        run.section("oscillation");
        for (std::size_t k = 0; k < prof.radii.size(); ++k)
            run.value(fmt::format("V(r = {})", num(prof.radii[k])), prof.vmo_modulus[k]);
    }
    const SparseBoundCertificate cert = build_sparse_family(s.a, s.data.F, s.data.f, s.data.g, dom, mode, p);
    report_certificate(cert, run);
    write_sparse_outputs(s, cert, dom, run);
}

CalibrationOptions calibration_options(const ScenarioConfig& cfg) {
    CalibrationOptions opt;
    opt.trials = cfg.trials;
    opt.s_trials = std::min(cfg.trials, 4);
    opt.depth_cap = cfg.s_depth_cap;
    opt.seed = cfg.data.seed;
    return opt;
}

void run_dini_sparse(const ScenarioConfig& cfg, Run& run) {
    const Setup s = setup(cfg);
    SparseParams p;
    p.theta = cfg.theta;
    p.s_depth_cap = cfg.s_depth_cap;
    p.threshold_scale = cfg.threshold_scale;
    std::string src_w = "supplied", src_s = "supplied";
    if (cfg.C_w > 0.0 && cfg.C_S > 0.0) {
        p.C_w = cfg.C_w;
        p.C_S = cfg.C_S;
    } else {
        const DiniCalibration cal = measure_dini_constants(s.a, &s.dom, calibration_options(cfg));
        p.C_w = cfg.C_w > 0.0 ? cfg.C_w : cal.C_w;
        p.C_S = cfg.C_S > 0.0 ? cfg.C_S : cal.C_S;
        if (!(cfg.C_w > 0.0)) src_w = "measured";
        if (!(cfg.C_S > 0.0)) src_s = "measured";
        run.constant("C_inf", cal.C_inf, "measured");
    }
    run.constant("C_w", p.C_w, src_w);
    run.constant("C_S", p.C_S, src_s);
    run.constant("K_M", p.km(cfg.n), "certified 9^n");
    run.constant("theta", p.theta, "config");
    if (p.threshold_scale != 1.0) run.constant("threshold_scale", p.threshold_scale, "uncertified");
    const double c = declared_dini_constant(cfg.coefficient);
    if (c > 0.0) {
        run.constant("declared Dini constant", c, "coefficient");
        bool ok = true;
        for (double r = 1.0 / 32; r <= 0.5; r *= 2.0)
            ok = ok && oscillation_modulus(s.a.matrix(), r, s.dom) <= c * std::pow(std::abs(std::log(r)), -2.0);
        run.check("oscillation below declared Dini modulus", ok);
    }
    const SparseBoundCertificate cert = build_sparse_family(s.a, s.data.F, GridField(), s.data.g, &s.dom,
                                                            SparseMode::Dini, p);
    report_certificate(cert, run);
    std::size_t witnesses = 0;
    double parent = 0.0, child = 0.0;
    for (const auto& st : cert.steps) {
        witnesses += st.witnesses.size();
        parent = std::max(parent, st.max_parent_density);
        child = std::max(child, st.max_child_density);
    }
    run.value("witness cells", static_cast<double>(witnesses));
    run.value("max parent density", parent);
    run.value("max child density", child);
    write_sparse_outputs(s, cert, &s.dom, run);

    OscillationOptions oo;
    oo.depth_cap = cfg.s_depth_cap;
    const Cube Q0 = root_q0(s.grid);
    // 3Q0 is the whole grid, so the data seen by S is F on the domain
    const GridField F3 = restrict_to(s.data.F, s.dom.mask);
    const GridField S = oscillation_function_S(Q0, s.a, F3, &s.dom, oo);
    write_field_csv(S, run.path("S.csv"));
    write_heatmap_svg(S, run.path("S.svg"), "S on Q0");
}

void run_dini_calibration(const ScenarioConfig& cfg, Run& run) {
    const DiniCalibration cal = calibrate_dini_constants(cfg.coefficient, cfg.domain, cfg.n, cfg.level,
                                                         calibration_options(cfg));
    run.constant("K_M", std::pow(9.0, cfg.n), "certified 9^n");
    run.section("results");
    run.value("C_w", cal.C_w);
    run.value("C_w at level + 1", cal.C_w_fine);
    run.value("C_S", cal.C_S);
    run.value("C_S at level + 1", cal.C_S_fine);
    run.value("C_inf", cal.C_inf);
    run.value("C_inf at level + 1", cal.C_inf_fine);
    run.value("trials", cal.trials);
    std::ofstream csv(run.path("constants.csv"));
    csv << "constant,level,level_plus_one,stable\n";
    csv << "C_w," << num(cal.C_w) << "," << num(cal.C_w_fine) << "," << (cal.C_w_stable ? 1 : 0) << "\n";
    csv << "C_S," << num(cal.C_S) << "," << num(cal.C_S_fine) << "," << (cal.C_S_stable ? 1 : 0) << "\n";
    csv << "C_inf," << num(cal.C_inf) << "," << num(cal.C_inf_fine) << "," << (cal.C_inf_stable ? 1 : 0) << "\n";
    run.check("C_w refinement stable", cal.C_w_stable);
    run.check("C_S refinement stable", cal.C_S_stable);
    run.check("C_inf refinement stable", cal.C_inf_stable);
}

void run_weighted_a2(const ScenarioConfig& cfg, Run& run) {
    const Grid g(cfg.n, cfg.level);
    const Weight w = make_weight(g, cfg.weight);
    const Cube Q0 = root_q0(g);
    run.constant("[w]_A_p", w.ap(cfg.p, Q0), "lattice sup");
    run.constant("[w]_RH_2", w.rh(2.0, Q0), "lattice sup");
    run.constant("p", cfg.p, "config");
    run.constant("theta", cfg.theta, "config");
    run.section("results");
    std::ofstream csv(run.path("chain.csv"));
    csv << "tuple,cubes,eta,t0,t1,t2,t3,t4,t5,t6,maximal_sigma,maximal_w,pass\n";
    int passed = 0;
    double worst = 0.0;
    for (int k = 0; k < cfg.trials; ++k) {
        const std::uint64_t seed = cfg.data.seed * 1000 + static_cast<std::uint64_t>(k);
        const SparseFamily fam = random_sparse_family(g, cfg.theta, cfg.level, seed);
        const GridField f = random_positive_field(g, 0.0, 2.0, seed ^ 0x51ed27ULL);
        const GridField h = random_positive_field(g, 0.0, 2.0, seed ^ 0xa3c59ULL);
        const WeightedChain r = sparse_to_weighted_check(fam, f, h, w, cfg.p);
        csv << k << "," << fam.cubes.size() << "," << num(r.eta);
        for (std::size_t t = 0; t < 7; ++t) csv << "," << (t < r.chain_terms.size() ? num(r.chain_terms[t]) : "");
        csv << "," << num(r.maximal_ratio_sigma) << "," << num(r.maximal_ratio_w) << "," << (r.pass ? 1 : 0) << "\n";
        if (r.pass) ++passed;
        if (r.rhs > 0.0) worst = std::max(worst, r.lhs / r.rhs);
        if (k == 0)
            write_family_svg(g, fam, run.path("family.svg"), fmt::format("random family, {} cubes", fam.cubes.size()));
        run.check(fmt::format("chain for tuple {}", k), r.pass);
        if (r.certified_chain) run.check(fmt::format("final bound without 1/eta for tuple {}", k), r.paper_final_holds);
    }
    run.value("tuples", cfg.trials);
    run.value("passed", passed);
    run.value("max lhs/rhs", worst);
    write_field_csv(w.field(), run.path("weight.csv"));
    write_heatmap_svg(w.field(), run.path("weight.svg"), w.name());
}

void run_weighted_gradient(const ScenarioConfig& cfg, Run& run, WeightedMode mode) {
    const WeightedRefinement r = weighted_gradient_bound_check(cfg.coefficient, cfg.domain, cfg.data, cfg.weight,
                                                               cfg.n, cfg.level, cfg.p, mode);
    run.constant("p", cfg.p, "config");
    run.constant("[w]_A_p", r.coarse.Ap, "lattice sup");
    run.constant("[w]_A_p at level + 1", r.fine.Ap, "lattice sup");
    run.section("results");
    run.value("lhs norm", r.coarse.lhs_norm);
    run.value("rhs norm", r.coarse.rhs_norm);
    run.value("ratio", r.coarse.ratio);
    run.value("ratio at level + 1", r.fine.ratio);
    run.value("exponent", r.coarse.exponent);
    run.value("normalized ratio", r.coarse.normalized);
    run.value("normalized ratio at level + 1", r.fine.normalized);
    run.value("relative change", r.change);
    if (mode == WeightedMode::Dini) {
        const double c = declared_dini_constant(cfg.coefficient);
        if (c > 0.0) {
            const Grid g(cfg.n, cfg.level);
            const auto a = make_coefficient(g, cfg.coefficient);
            const Domain dom = make_domain(g, cfg.domain);
            bool ok = true;
            for (double rr = 1.0 / 32; rr <= 0.5; rr *= 2.0)
                ok = ok && oscillation_modulus(a.matrix(), rr, dom) <= c * std::pow(std::abs(std::log(rr)), -2.0);
            run.check("oscillation below declared Dini modulus", ok);
        }
        run.check("normalized ratio stable within 25%", r.stable, num(r.change));
    } else {
        run.check("ratio stable within 25%", r.stable, num(r.change));
    }
}

}  // namespace

ScenarioConfig parse_config_text(const std::string& text) {
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        config_error(std::string("malformed config: ") + e.message());
    }
    ScenarioConfig cfg = from_tree(tree);
    validate_config(cfg);
    return cfg;
}

ScenarioConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) config_error("cannot read config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

void validate_config(const ScenarioConfig& cfg) {
    if (cfg.scenario.empty()) config_error("missing [scenario] name");
    if (!is_known(cfg.scenario)) config_error("unknown scenario '" + cfg.scenario + "'");
    if (cfg.n < 1 || cfg.n > 3) config_error("grid.n must be 1, 2 or 3");
    if (cfg.level < 1 || cfg.level > 9) config_error("grid.level must lie in [1, 9]");
    if (!(cfg.theta > 0.0 && cfg.theta < 1.0)) config_error("sparse.theta must lie in (0, 1)");
    if (!(cfg.q_l >= 1.0 && cfg.q_l <= 2.0)) config_error("sparse.q_l must lie in [1, 2]");
    if (!(cfg.q_h >= 2.0)) config_error("sparse.q_h must be at least 2");
    if (!(cfg.p > 1.0)) config_error("weight.p must exceed 1");
    if (cfg.trials < 1) config_error("sparse.trials must be positive");
    if (cfg.s_depth_cap < 0) config_error("sparse.s_depth_cap must be non-negative");
    if (!(cfg.threshold_scale > 0.0)) config_error("sparse.threshold_scale must be positive");
    if (cfg.scenario == "dini-sparse" && cfg.data.f != "zero") config_error("dini-sparse takes f = zero");
    if (cfg.output.find("..") != std::string::npos) config_error("output.dir must stay under the output root");
    try {
        const Grid g(cfg.n, 1);
        (void)make_coefficient(g, cfg.coefficient);
        (void)make_domain(g, cfg.domain);
        (void)make_data(g, cfg.data);
        (void)make_weight(g, cfg.weight);
    } catch (const Error& e) {
        config_error(e.what());
    }
}

std::string output_root() {
    const char* env = std::getenv("SPARSEDOM_OUTPUT_ROOT");
    return env && *env ? std::string(env) : std::string(".");
}

ScenarioResult run_scenario(const ScenarioConfig& cfg, const std::string& root) {
    ScenarioResult res;
    try {
        validate_config(cfg);
    } catch (const Error& e) {
        res.exit_code = 2;
        res.failure = e.what();
        return res;
    }
    const fs::path dir = fs::path(root) / (cfg.output.empty() ? cfg.scenario : cfg.output);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        res.exit_code = 1;
        res.failure = "cannot create " + dir.string() + ": " + ec.message();
        return res;
    }
    res.output_dir = dir.string();
    Run run(cfg, dir);
    std::string error;
    try {
        const std::string& s = cfg.scenario;
        if (s == "energy")
            run_energy(cfg, run);
        else if (s == "caccioppoli")
            run_caccioppoli(cfg, run);
        else if (s == "linearization")
            run_linearization(cfg, run);
        else if (s == "reverse-holder")
            run_reverse_holder(cfg, run);
        else if (s == "local-sparse")
            run_general_sparse(cfg, run, SparseMode::Local, false);
        else if (s == "global-sparse" || s == "vmo-sparse")
            run_general_sparse(cfg, run, SparseMode::Global, false);
        else if (s == "meyers-sparse")
            run_general_sparse(cfg, run, SparseMode::Global, true);
        else if (s == "dini-sparse")
            run_dini_sparse(cfg, run);
        else if (s == "dini-calibration")
            run_dini_calibration(cfg, run);
        else if (s == "weighted-a2")
            run_weighted_a2(cfg, run);
        else if (s == "weighted-vmo")
            run_weighted_gradient(cfg, run, WeightedMode::Vmo);
        else if (s == "weighted-dini")
            run_weighted_gradient(cfg, run, WeightedMode::Dini);
    } catch (const Error& e) {
        error = fmt::format("{}: {}", error_code_name(e.code()), e.what());
    }
    run.write(error);
    res.checks = run.checks();
    if (!error.empty()) {
        res.exit_code = 1;
        res.failure = error;
        return res;
    }
    for (const auto& c : res.checks)
        if (!c.pass) {
            res.exit_code = 1;
            res.failure = c.name;
            return res;
        }
    return res;
}

}  // namespace sparsedom
