#include "sparsedom/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "sparsedom/data.hpp"
#include "sparsedom/error.hpp"
#include "sparsedom/rng.hpp"

namespace sparsedom {

const char* sparse_mode_name(SparseMode m) {
    switch (m) {
        case SparseMode::Local: return "local";
        case SparseMode::Global: return "global";
        case SparseMode::Dini: return "dini";
    }
    return "?";
}

double SparseParams::km(int n) const { return K_M > 0.0 ? K_M : std::pow(9.0, n); }

void certify_A(SparseParams& p, const EllipticCoefficient& a, const CellSet& largest_region) {
    p.c_n = poincare_constant(largest_region).constant;
    p.A = (1.0 + p.c_n) * std::sqrt(2.0) / a.lambda();
    p.A_source = "certified";
}

void sharp_A(SparseParams& p, const EllipticCoefficient& a) {
    p.A = 1.0 / a.lambda();
    p.A_source = "sharp-f0";
}

double box_power_mean(const GridField& h, const Box& b, double s, double denominator_cells) {
    const Grid& g = h.grid();
    const Box clipped = intersect(b, box_of(root_3q0(g), g.n), g.n);
    double acc = 0.0;
    if (!clipped.empty(g.n)) {
        CellCoord c = clipped.lo;
        while (true) {
            acc += std::pow(h.norm_at(g.index(c)), s);
            int d = 0;
            for (; d < g.n; ++d) {
                if (++c[d] < clipped.hi[d]) break;
                c[d] = clipped.lo[d];
            }
            if (d == g.n) break;
        }
    }
    return std::pow(acc / denominator_cells, 1.0 / s);
}

double triple_mean(const GridField& h, const Cube& P, double s) {
    const int n = h.grid().n;
    return box_power_mean(h, dilate(P, 3, n), s, std::pow(3.0, n) * static_cast<double>(P.cell_count(n)));
}

double cube_mean(const GridField& h, const Cube& P, double s) {
    const int n = h.grid().n;
    return box_power_mean(h, box_of(P, n), s, static_cast<double>(P.cell_count(n)));
}

std::vector<Cube> threshold_stopping(const GridField& h, const Cube& Q, double threshold, bool cell_limit) {
    const Grid& g = h.grid();
    const BoxSums sums(h);
    const Box clip = box_of(root_3q0(g), g.n);
    const double tri = std::pow(3.0, g.n);
    std::vector<Cube> out;
    std::vector<Cube> stack{Q};
    while (!stack.empty()) {
        Cube P = std::move(stack.back());
        stack.pop_back();
        const double avg = sums.sum(triple(P, clip, g.n)) / (tri * static_cast<double>(P.cell_count(g.n)));
        if (avg > threshold) {
            out.push_back(std::move(P));
        } else if (P.side > 1 && P.side % 2 == 0) {
            auto ch = dyadic_children(P, g.n);
            for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(std::move(*it));
        } else if (cell_limit && P.side == 1 && h.norm_at(g.index(P.corner)) > threshold) {
            out.push_back(std::move(P));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Cube> density_stopping(const CellSet& xi, const Cube& Q, double density) {
    const Grid& g = xi.grid();
    std::vector<double> ind(g.cells(), 0.0);
    for (std::size_t i : xi.indices()) ind[i] = 1.0;
    const BoxSums sums(g, ind);
    std::vector<Cube> out;
    std::vector<Cube> stack{Q};
    while (!stack.empty()) {
        Cube P = std::move(stack.back());
        stack.pop_back();
        const double hit = sums.sum(box_of(P, g.n));
        if (hit > density * static_cast<double>(P.cell_count(g.n))) {
            out.push_back(std::move(P));
        } else if (hit > 0.0 && P.side > 1 && P.side % 2 == 0) {
            auto ch = dyadic_children(P, g.n);
            for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(std::move(*it));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

double lower_star(int n, double q) { return n * q / (n + q); }

bool nonzero(const GridField& f) {
    if (!f.valid()) return false;
    for (double v : f.data())
        if (v != 0.0) return true;
    return false;
}

// ∫_cells |v| g
double weighted_integral(const GridField& v, const GridField& g, const std::vector<std::size_t>& cells) {
    double acc = 0.0;
    for (std::size_t i : cells) acc += v.norm_at(i) * g.at(i);
    return acc * v.grid().cell_volume();
}

double diff_integral(const GridField& a, const GridField& b, const GridField& g, const std::vector<std::size_t>& cells) {
    double acc = 0.0;
    for (std::size_t i : cells) {
        double d2 = 0.0;
        for (int c = 0; c < a.components(); ++c) d2 += (a.at(i, c) - b.at(i, c)) * (a.at(i, c) - b.at(i, c));
        acc += std::sqrt(d2) * g.at(i);
    }
    return acc * a.grid().cell_volume();
}

CellSet union_of(const Grid& g, const std::vector<Cube>& cubes) {
    CellSet u(g);
    for (const Cube& c : cubes) u |= CellSet::from_cube(g, c);
    return u;
}

double conj(double q) { return q / (q - 1.0); }

constexpr double kRel = 1e-12;

}  // namespace

IterationReport iteration_step(const Cube& Q, const EllipticCoefficient& a, const GridField& F, const GridField& f,
                               const GridField& g, const Domain* omega, const SparseParams& p, const Solution* uQ) {
    const Grid& grid = a.grid();
    const int n = grid.n;
    const double q = p.q_l;
    const double r = conj(p.q_h);
    const double KM = p.km(n);
    if (!(p.theta > 0.0 && p.theta < 1.0)) throw Error(ErrorCode::InvalidArgument, "theta must lie in (0,1)");
    if (!(p.A > 0.0) || !(p.B > 0.0)) throw Error(ErrorCode::InvalidArgument, "the constants A and B must be positive");

    IterationReport rep;
    rep.cube = Q;
    Solution own;
    if (!uQ) {
        own = solve_dirichlet(a, solve_region(grid, Q, omega), F, f, p.solver);
        uQ = &own;
    }
    const GridField grad = gradient(uQ->u, uQ->region);

    const double Fq = triple_mean(F, Q, q);
    double fterm = 0.0;
    if (nonzero(f)) {
        const double qs = lower_star(n, q);
        if (!(qs > 1.0)) throw Error(ErrorCode::InvalidArgument, "f must vanish when q_l* <= 1");
        fterm = 3.0 * Q.length(grid) * triple_mean(f, Q, qs);
    }
    const double gQ = cube_mean(g, Q, r);
    const double measQ = Q.measure(grid);
    rep.local_term = measQ * (Fq + fterm) * gQ;
    rep.threshold_D = p.A * std::pow(std::pow(3.0, n) * KM / p.theta, 1.0 / q) * (Fq + fterm) * p.threshold_scale;
    rep.stated_constant = std::pow(9.0, n / q) * (p.A * a.Lambda() + 1.0) * p.A * p.B * std::pow(KM / p.theta, 1.0 / q);
    rep.corrected_constant = rep.stated_constant + p.A * std::pow(std::pow(3.0, n) * KM / p.theta, 1.0 / q);

    const CellSet Qcells = CellSet::from_cube(grid, Q);
    const std::vector<std::size_t> qidx = Qcells.indices();
    rep.L_Q = weighted_integral(grad, g, qidx);

    const double Dq = std::pow(rep.threshold_D, q);
    CellSet xi(grid);
    if (rep.threshold_D > 0.0) {
        GridField hq(grid, 1);
        for (std::size_t i = 0; i < grid.cells(); ++i) hq.at(i) = std::pow(grad.norm_at(i), q);
        const MaximalResult m = dyadic_maximal(hq, Q, {true});
        for (std::size_t i : qidx)
            if (m.field.at(i) > Dq) xi.insert(i);
        rep.children = threshold_stopping(hq, Q, Dq, true);
    } else {
        // no data on 3Q: u_Q = 0
        for (std::size_t i : qidx)
            if (grad.norm_at(i) > 0.0) xi.insert(i);
    }
    const CellSet cover = union_of(grid, rep.children);
    rep.cover_exact = cover == xi;
    rep.exceptional_measure = xi.measure();
    rep.children_measure = cover.measure();
    if (static_cast<double>(xi.count()) > p.theta * static_cast<double>(Qcells.count()))
        throw Error(ErrorCode::MeasureBoundViolated,
                    fmt::format("|Xi| = {} cells exceeds theta |Q| = {} on cube {}", xi.count(),
                                p.theta * static_cast<double>(Qcells.count()), Q.address_string()));

    // I, II, III
    CellSet rest = Qcells - cover;
    rep.term_I = weighted_integral(grad, g, rest.indices());
    for (const Cube& P : rep.children) {
        if (P.side == 1) {
            // a cell-limit child: its own triple average stays below D^q
            const double avg = std::pow(triple_mean(grad, P, q), q);
            if (!(avg > Dq)) ++rep.cell_limit_children;
        }
        Solution uP = solve_dirichlet(a, solve_region(grid, P, omega), F, f, p.solver);
        const GridField gradP = gradient(uP.u, uP.region);
        const std::vector<std::size_t> pidx = CellSet::from_cube(grid, P).indices();
        rep.term_II += diff_integral(grad, gradP, g, pidx);
        rep.term_III += weighted_integral(gradP, g, pidx);
        rep.child_solutions.push_back(std::move(uP));
    }
    rep.bound_I = rep.threshold_D * measQ * gQ;
    rep.bound_II = std::pow(3.0, n / q) * (p.A * a.Lambda() + 1.0) * p.B * rep.threshold_D * measQ * gQ;
    const double slack = 1.0 + kRel;
    rep.audit_ok = rep.term_I <= rep.bound_I * slack && rep.term_II <= rep.bound_II * slack &&
                   rep.L_Q <= (rep.term_I + rep.term_II + rep.term_III) * slack + 1e-300;
    return rep;
}

IterationReport dini_iteration_step(const Cube& Q, const EllipticCoefficient& a, const GridField& F,
                                    const GridField& g, const Domain* omega, const SparseParams& p,
                                    const Solution* uQ) {
    const Grid& grid = a.grid();
    const int n = grid.n;
    const double KM = p.km(n);
    if (!a.is_linear()) throw Error(ErrorCode::InvalidArgument, "the Dini step needs a linear coefficient");
    if (!(p.theta > 0.0 && p.theta < 1.0)) throw Error(ErrorCode::InvalidArgument, "theta must lie in (0,1)");
    if (!(p.C_w > 0.0) || !(p.C_S > 0.0)) throw Error(ErrorCode::InvalidArgument, "C_w and C_S must be calibrated");

    IterationReport rep;
    rep.cube = Q;
    Solution own;
    if (!uQ) {
        own = solve_dirichlet(a, solve_region(grid, Q, omega), F, GridField(), p.solver);
        uQ = &own;
    }
    const GridField grad = gradient(uQ->u, uQ->region);
    const double big = std::max({p.C_w, p.C_S, KM});
    const double F1 = triple_mean(F, Q, 1.0);
    const double gQ = cube_mean(g, Q, 1.0);
    const double measQ = Q.measure(grid);
    rep.threshold_D = std::pow(12.0, n + 1) * big * F1 / p.theta * p.threshold_scale;
    rep.local_term = measQ * F1 * gQ;
    rep.N = 4.0 * std::pow(3.0, n) * p.C_w;
    rep.stated_constant = (2.0 * rep.N + 2.0) * std::pow(12.0, n + 1) * big / p.theta;
    rep.corrected_constant = rep.stated_constant;

    const CellSet Qcells = CellSet::from_cube(grid, Q);
    const std::vector<std::size_t> qidx = Qcells.indices();
    rep.L_Q = weighted_integral(grad, g, qidx);

    CellSet xi(grid);
    // F = 0 on 3Q: u_Q = 0 and Ξ = ∅ by convention
    if (rep.threshold_D > 0.0) {
        const CellSet tri = CellSet::from_box(grid, dilate(Q, 3, n));
        const GridField F3 = restrict_to(F, tri);
        OscillationOptions oo;
        oo.depth_cap = p.s_depth_cap;
        oo.solver = p.solver;
        const GridField S = oscillation_function_S(Q, a, F3, omega, oo);
        const MaximalResult MF = dyadic_maximal(magnitude(F3), Q, {true});
        for (std::size_t i : qidx) {
            const double v = std::max({grad.norm_at(i), S.at(i), MF.field.at(i)});
            if (v > rep.threshold_D) xi.insert(i);
        }
    }
    const double density = std::pow(2.0, -(n + 1));
    rep.children = density_stopping(xi, Q, density);
    const CellSet cover = union_of(grid, rep.children);
    rep.cover_exact = xi.subset_of(cover);
    rep.exceptional_measure = xi.measure();
    rep.children_measure = cover.measure();
    if (static_cast<double>(cover.count()) > std::pow(2.0, n + 1) * static_cast<double>(xi.count()) ||
        static_cast<double>(cover.count()) > p.theta * static_cast<double>(Qcells.count()))
        throw Error(ErrorCode::MeasureBoundViolated,
                    fmt::format("|union P| = {} cells, |Xi| = {} cells, theta |Q| = {} on cube {}", cover.count(),
                                xi.count(), p.theta * static_cast<double>(Qcells.count()), Q.address_string()));

    rep.term_I = weighted_integral(grad, g, (Qcells - cover).indices());
    for (const Cube& P : rep.children) {
        const CellSet Pcells = CellSet::from_cube(grid, P);
        const double hit = static_cast<double>((Pcells & xi).count());
        rep.max_child_density = std::max(rep.max_child_density, hit / static_cast<double>(Pcells.count()));
        if (P.depth > Q.depth) {
            // parent of P inside D(Q)
            Cube parent = Q;
            for (std::size_t k = Q.address.size(); k + 1 < P.address.size(); ++k)
                parent = dyadic_children(parent, n)[static_cast<std::size_t>(P.address[k])];
            const CellSet par = CellSet::from_cube(grid, parent);
            rep.max_parent_density =
                std::max(rep.max_parent_density,
                         static_cast<double>((par & xi).count()) / static_cast<double>(par.count()));
        }
        if (P.depth - Q.depth > p.s_depth_cap) ++rep.children_below_s_cap;

        Solution uP = solve_dirichlet(a, solve_region(grid, P, omega), F, GridField(), p.solver);
        const GridField gradP = gradient(uP.u, uP.region);
        std::size_t best = kNoCell;
        double best_val = std::numeric_limits<double>::infinity();
        for (std::size_t i : Pcells.indices()) {
            if (xi.contains(i)) continue;
            const double v = std::max(gradP.norm_at(i), grad.norm_at(i));
            if (v < best_val) {
                best_val = v;
                best = i;
            }
        }
        if (best == kNoCell || best_val > rep.N * rep.threshold_D)
            throw Error(ErrorCode::NoWitness,
                        fmt::format("no witness x_P on cube {} (best max gradient {:.6g}, N D = {:.6g})",
                                    P.address_string(), best_val, rep.N * rep.threshold_D));
        rep.witnesses.push_back(best);
        const std::vector<std::size_t> pidx = Pcells.indices();
        rep.term_II += diff_integral(grad, gradP, g, pidx);
        rep.term_III += weighted_integral(gradP, g, pidx);
        rep.child_solutions.push_back(std::move(uP));
    }
    rep.bound_I = rep.threshold_D * measQ * gQ;
    rep.bound_II = (2.0 * rep.N + 1.0) * rep.threshold_D * measQ * gQ;
    const double slack = 1.0 + kRel;
    rep.audit_ok = rep.term_I <= rep.bound_I * slack && rep.term_II <= rep.bound_II * slack &&
                   rep.L_Q <= (rep.term_I + rep.term_II + rep.term_III) * slack + 1e-300;
    return rep;
}

double sparse_form(const SparseFamily& fam, const GridField& F, const GridField& g, double s, double r,
                   bool g_on_triple) {
    const Grid& grid = F.grid();
    double acc = 0.0;
    for (const Cube& P : fam.cubes) {
        const double gP = g_on_triple ? triple_mean(g, P, r) : cube_mean(g, P, r);
        acc += P.measure(grid) * triple_mean(F, P, s) * gP;
    }
    return acc;
}

double sparse_form_first_order(const SparseFamily& fam, const GridField& f, const GridField& g, double s, double r) {
    const Grid& grid = f.grid();
    double acc = 0.0;
    for (const Cube& P : fam.cubes) acc += P.measure(grid) * 3.0 * P.length(grid) * triple_mean(f, P, s) * cube_mean(g, P, r);
    return acc;
}

SparseBoundCertificate build_sparse_family(const EllipticCoefficient& a, const GridField& F, const GridField& f,
                                          const GridField& g, const Domain* omega, SparseMode mode,
                                          const SparseParams& p) {
    const Grid& grid = a.grid();
    const int n = grid.n;
    if (mode != SparseMode::Local && !omega)
        throw Error(ErrorCode::InvalidArgument, "global and dini modes need a domain");
    const Domain* dom = mode == SparseMode::Local ? nullptr : omega;

    SparseBoundCertificate cert;
    cert.mode = mode;
    cert.params = p;
    const bool has_f = nonzero(f);
    if (has_f) {
        if (mode == SparseMode::Dini) throw Error(ErrorCode::InvalidArgument, "the Dini bound takes F only");
        cert.f_guard_binding = lower_star(n, p.q_l) <= 1.0;
        if (cert.f_guard_binding) throw Error(ErrorCode::InvalidArgument, "f must vanish when q_l* <= 1");
    }
    cert.f_guard_binding = lower_star(n, p.q_l) <= 1.0;
    const GridField Fm = dom ? restrict_to(F, dom->mask) : F;
    const GridField fm = has_f ? (dom ? restrict_to(f, dom->mask) : f) : GridField();

    const Cube Q0 = root_q0(grid);
    const double q0_cells = static_cast<double>(Q0.cell_count(n));
    struct Item {
        Cube cube;
        Solution sol;
        std::size_t family_index;
    };
    std::vector<Item> current;
    {
        Solution s0 = solve_dirichlet(a, solve_region(grid, Q0, dom), Fm, fm, p.solver);
        cert.lhs = weighted_integral(gradient(s0.u, s0.region), g, CellSet::from_cube(grid, Q0).indices());
        current.push_back({Q0, std::move(s0), 0});
    }
    cert.family.theta = 1.0 - p.theta;
    cert.family.cubes.push_back(Q0);
    cert.family.witnesses.emplace_back();

    cert.measure_bounds_ok = true;
    cert.generation_decay_ok = true;
    cert.audits_ok = true;
    int j = 0;
    while (!current.empty()) {
        GenerationRecord rec;
        rec.cubes = current.size();
        std::size_t cells = 0;
        for (const Item& it : current) cells += it.cube.cell_count(n);
        rec.measure = static_cast<double>(cells) * grid.cell_volume();
        rec.bound = std::pow(p.theta, j) * Q0.measure(grid);
        if (static_cast<double>(cells) > std::pow(p.theta, j) * q0_cells) cert.generation_decay_ok = false;

        std::vector<std::size_t> gen_indices;
        std::vector<Item> next;
        for (Item& it : current) {
            gen_indices.push_back(it.family_index);
            IterationReport rep;
            try {
                rep = mode == SparseMode::Dini ? dini_iteration_step(it.cube, a, Fm, g, dom, p, &it.sol)
                                               : iteration_step(it.cube, a, Fm, fm, g, dom, p, &it.sol);
            } catch (const Error& e) {
                throw Error(e.code(), fmt::format("generation {}: {}", j, e.what()));
            }
            rec.residual += rep.L_Q;
            if (rep.children_measure > p.theta * it.cube.measure(grid) * (1.0 + kRel)) cert.measure_bounds_ok = false;
            if (!rep.audit_ok) cert.audits_ok = false;
            CellSet witness = CellSet::from_cube(grid, it.cube);
            for (std::size_t k = 0; k < rep.children.size(); ++k) {
                witness -= CellSet::from_cube(grid, rep.children[k]);
                cert.family.cubes.push_back(rep.children[k]);
                cert.family.witnesses.emplace_back();
                next.push_back({rep.children[k], std::move(rep.child_solutions[k]), cert.family.cubes.size() - 1});
            }
            cert.family.witnesses[it.family_index] = std::move(witness);
            rep.child_solutions.clear();
            cert.steps.push_back(std::move(rep));
        }
        cert.family.generations.push_back(std::move(gen_indices));
        cert.residual_decay.push_back(rec.residual);
        cert.generations.push_back(rec);
        current = std::move(next);
        ++j;
    }
    cert.family.residuals = cert.residual_decay;
    cert.final_residual = 0.0;
    cert.residual_monotone = true;
    for (std::size_t k = 1; k < cert.residual_decay.size(); ++k)
        if (cert.residual_decay[k] > cert.residual_decay[k - 1] * (1.0 + kRel)) cert.residual_monotone = false;

    if (mode == SparseMode::Dini) {
        cert.rhs_sum = sparse_form(cert.family, Fm, g, 1.0, 1.0);
        cert.paper_constant = cert.steps.front().stated_constant;
        cert.corrected_constant = cert.paper_constant;
    } else {
        cert.rhs_sum = sparse_form(cert.family, Fm, g, p.q_l, conj(p.q_h));
        if (has_f) cert.rhs_first_order = sparse_form_first_order(cert.family, fm, g, lower_star(n, p.q_l), conj(p.q_h));
        cert.paper_constant = cert.steps.front().stated_constant;
        cert.corrected_constant = cert.steps.front().corrected_constant;
    }
    const double rhs = cert.rhs_sum + cert.rhs_first_order;
    cert.empirical_ratio = rhs > 0.0 ? cert.lhs / rhs : (cert.lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    cert.ratio_ok = cert.lhs <= cert.paper_constant * rhs * (1.0 + kRel) + cert.final_residual;
    cert.sparsity = verify_sparsity(grid, cert.family);
    const bool supplied = p.A_source == "supplied" || p.B_source == "supplied";
    cert.certified = p.threshold_scale == 1.0 && (mode == SparseMode::Dini || !supplied);
    return cert;
}

DiniCalibration measure_dini_constants(const EllipticCoefficient& a, const Domain* omega,
                                       const CalibrationOptions& opt) {
    const Grid& g = a.grid();
    const int n = g.n;
    const CellSet dom = omega ? omega->mask : CellSet(g, true);
    const Cube Q0 = root_q0(g);
    Rng rng(opt.seed);
    DiniCalibration out;
    auto random_cube = [&](int depth) {
        Cube c = Q0;
        for (int k = 0; k < depth && c.side > 1; ++k) {
            auto ch = dyadic_children(c, n);
            c = ch[rng.index(ch.size())];
        }
        return c;
    };
    auto data = [&](int t) {
        const std::uint64_t seed = opt.seed * 7919ULL + static_cast<std::uint64_t>(t);
        // alternate smooth and concentrated data
        return t % 2 == 0 ? fourier_field(g, n, 4, 1.0, seed) : bump_field(g, n, 2, 1.0, opt.bump_radius, seed);
    };
    for (int t = 0; t < opt.trials; ++t) {
        const Cube P = random_cube(1 + static_cast<int>(rng.index(2)));
        const CellSet region = solve_region(g, P, omega);
        const GridField F = restrict_to(data(t), region);
        const double mass = lp_norm(F, 1.0, region);
        if (!(mass > 0.0)) continue;
        const Solution v = solve_dirichlet(a, region, F, GridField(), opt.solver);
        out.C_w = std::max(out.C_w, weak_norm(magnitude(gradient(v.u, v.region)), region) / mass);
        ++out.trials;
    }
    OscillationOptions oo;
    oo.depth_cap = opt.depth_cap;
    oo.solver = opt.solver;
    for (int t = 0; t < opt.s_trials; ++t) {
        const Cube Q = random_cube(1);
        const CellSet region = solve_region(g, Q, omega);
        const GridField F = restrict_to(data(1000 + t), region);
        const double mass = lp_norm(F, 1.0, region);
        if (!(mass > 0.0)) continue;
        OscillationStats st;
        const GridField S = oscillation_function_S(Q, a, F, omega, oo, &st);
        out.C_S = std::max(out.C_S, weak_norm(S, region & dom) / mass);
        out.C_inf = std::max(out.C_inf, st.c_inf);
    }
    return out;
}

DiniCalibration calibrate_dini_constants(const CoefficientSpec& coef, const std::string& domain, int n, int level,
                                         const CalibrationOptions& opt) {
    DiniCalibration out;
    for (int k = 0; k < 2; ++k) {
        const Grid g(n, level + k);
        const EllipticCoefficient a = make_coefficient(g, coef);
        const Domain dom = make_domain(g, domain);
        const DiniCalibration r = measure_dini_constants(a, &dom, opt);
        if (k == 0) {
            out = r;
        } else {
            out.C_w_fine = r.C_w;
            out.C_S_fine = r.C_S;
            out.C_inf_fine = r.C_inf;
        }
    }
    auto stable = [&](double c, double f) { return c > 0.0 && std::abs(f - c) <= opt.tolerance * c; };
    out.C_w_stable = stable(out.C_w, out.C_w_fine);
    out.C_S_stable = stable(out.C_S, out.C_S_fine);
    out.C_inf_stable = stable(out.C_inf, out.C_inf_fine);
    return out;
}

SparseFamily random_sparse_family(const Grid& g, double theta, int generations, std::uint64_t seed) {
    Rng rng(seed);
    SparseFamily fam;
    fam.theta = 1.0 - theta;
    fam.cubes.push_back(root_q0(g));
    fam.generations.push_back({0});
    for (int gen = 1; gen <= generations; ++gen) {
        std::vector<std::size_t> next;
        for (std::size_t k : fam.generations.back()) {
            const Cube P = fam.cubes[k];
            if (P.side < 2) continue;
            const int down = (P.side >= 4 && rng.uniform() < 0.5) ? 2 : 1;
            std::vector<Cube> cand{P};
            for (int d = 0; d < down; ++d) {
                std::vector<Cube> nxt;
                for (const Cube& c : cand)
                    for (Cube& ch : dyadic_children(c, g.n)) nxt.push_back(std::move(ch));
                cand = std::move(nxt);
            }
            const auto cap = static_cast<std::size_t>(std::floor(theta * static_cast<double>(cand.size())));
            const std::size_t m = rng.index(cap + 1);
            for (std::size_t j = 0; j < m; ++j) {
                const std::size_t pick = j + rng.index(cand.size() - j);
                std::swap(cand[j], cand[pick]);
                next.push_back(fam.cubes.size());
                fam.cubes.push_back(cand[j]);
            }
        }
        if (next.empty()) break;
        fam.generations.push_back(std::move(next));
    }
    for (const Cube& P : fam.cubes) {
        CellSet e = CellSet::from_cube(g, P);
        for (const Cube& c : fam.cubes)
            if (c.side < P.side && P.contains(c, g.n)) e -= CellSet::from_cube(g, c);
        fam.witnesses.emplace_back(std::move(e));
    }
    return fam;
}

}  // namespace sparsedom
