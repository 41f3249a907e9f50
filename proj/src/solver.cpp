#include "sparsedom/solver.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <fmt/format.h>

#include "sparsedom/discretization.hpp"
#include "sparsedom/error.hpp"

namespace sparsedom {

double SolverConfig::K_M(int n) const { return maximal_weak_norm > 0.0 ? maximal_weak_norm : std::pow(9.0, n); }

GridField Solution::gradient() const { return sparsedom::gradient(u, region); }

namespace {

using SpMat = Eigen::SparseMatrix<double>;

Eigen::VectorXd linear_solve(const SpMat& K, const Eigen::VectorXd& b, bool symmetric, const SolverConfig& cfg,
                             SolveStats& stats) {
    if (b.squaredNorm() == 0.0) {
        stats.iterations = 0;
        stats.residual = 0.0;
        return Eigen::VectorXd::Zero(b.size());
    }
    Eigen::VectorXd x;
    if (cfg.method == LinearMethod::Direct) {
        if (symmetric) {
            Eigen::SimplicialLDLT<SpMat> ldlt(K);
            if (ldlt.info() != Eigen::Success) throw Error(ErrorCode::NoConvergence, "LDLT factorization failed");
            x = ldlt.solve(b);
        } else {
            Eigen::SparseLU<SpMat> lu;
            lu.analyzePattern(K);
            lu.factorize(K);
            if (lu.info() != Eigen::Success) throw Error(ErrorCode::NoConvergence, "LU factorization failed");
            x = lu.solve(b);
        }
        stats.iterations = 1;
    } else if (symmetric) {
        Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
        cg.setTolerance(cfg.cg_tol);
        cg.setMaxIterations(cfg.max_iter);
        cg.compute(K);
        x = cg.solve(b);
        stats.iterations = static_cast<int>(cg.iterations());
        if (cg.info() != Eigen::Success)
            throw Error(ErrorCode::NoConvergence,
                        fmt::format("conjugate gradients stopped at relative residual {:.3g}", cg.error()));
    } else {
        Eigen::BiCGSTAB<SpMat, Eigen::DiagonalPreconditioner<double>> bicg;
        bicg.setTolerance(cfg.cg_tol);
        bicg.setMaxIterations(cfg.max_iter);
        bicg.compute(K);
        x = bicg.solve(b);
        stats.iterations = static_cast<int>(bicg.iterations());
        if (bicg.info() != Eigen::Success)
            throw Error(ErrorCode::NoConvergence,
                        fmt::format("BiCGSTAB stopped at relative residual {:.3g}", bicg.error()));
    }
    stats.residual = (K * x - b).norm() / b.norm();
    return x;
}

void require_region(const CellSet& region) {
    if (region.empty()) throw Error(ErrorCode::EmptyRegion, "solve region is empty");
}

}  // namespace

Solution solve_dirichlet(const EllipticCoefficient& a, const CellSet& region, const GridField& F, const GridField& f,
                         const SolverConfig& cfg) {
    require_region(region);
    if (!(a.lambda() > 0.0)) throw Error(ErrorCode::NotElliptic, "coefficient is not elliptic");
    if (!a.is_linear()) return solve_nonlinear(a, region, F, f, cfg);
    const Grid& g = region.grid();
    const RegionIndex idx(region);
    const SpMat K = assemble_stiffness(a, region, region);
    const Eigen::VectorXd b = assemble_load(region, region, &F, &f);
    Solution sol;
    sol.region = region;
    const Eigen::VectorXd x = linear_solve(K, b, a.symmetric(), cfg, sol.stats);
    sol.u = to_field(g, idx, x);
    return sol;
}

Solution solve_nonlinear(const EllipticCoefficient& a, const CellSet& region, const GridField& F, const GridField& f,
                         const SolverConfig& cfg) {
    require_region(region);
    if (!(a.lambda() > 0.0)) throw Error(ErrorCode::NotElliptic, "coefficient is not elliptic");
    const Grid& g = region.grid();
    const RegionIndex idx(region);
    const SpMat K = identity_stiffness(region, region);
    Eigen::SimplicialLDLT<SpMat> ldlt(K);
    if (ldlt.info() != Eigen::Success) throw Error(ErrorCode::NoConvergence, "identity stiffness factorization failed");
    const Eigen::VectorXd b = assemble_load(region, region, &F, &f);
    const double tau = cfg.picard_step > 0.0 ? cfg.picard_step : a.lambda() / (a.Lambda() * a.Lambda());

    Solution sol;
    sol.region = region;
    sol.stats.nonlinear = true;
    sol.stats.contraction_bound = std::sqrt(std::max(0.0, 1.0 - std::pow(a.lambda() / a.Lambda(), 2)));
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<long>(idx.size()));
    GridField u(g, 1);
    double prev_inc = -1.0;
    for (int it = 1; it <= cfg.picard_max_iter; ++it) {
        const Eigen::VectorXd r = b - apply_form(a, region, u, region, region);
        const Eigen::VectorXd delta = tau * ldlt.solve(r);
        x += delta;
        u = to_field(g, idx, x);
        const double inc = std::sqrt(std::max(0.0, delta.dot(K * delta)));
        const double norm = std::sqrt(std::max(0.0, x.dot(K * x)));
        if (prev_inc > 0.0) {
            const double ratio = inc / prev_inc;
            sol.stats.contraction.push_back(ratio);
            sol.stats.max_contraction = std::max(sol.stats.max_contraction, ratio);
        }
        prev_inc = inc;
        sol.stats.iterations = it;
        sol.stats.residual = norm > 0.0 ? inc / norm : inc;
        if (inc <= cfg.picard_tol * norm || inc == 0.0) {
            sol.u = std::move(u);
            return sol;
        }
    }
    throw Error(ErrorCode::NoConvergence,
                fmt::format("Picard iteration did not reach {:.1e} in {} steps", cfg.picard_tol, cfg.picard_max_iter));
}

CellSet solve_region(const Grid& g, const Cube& Q, const Domain* omega) {
    CellSet r = CellSet::from_box(g, triple(Q, box_of(root_3q0(g), g.n), g.n));
    if (omega) r &= omega->mask;
    return r;
}

CellSet interior_cells(const CellSet& region) {
    const Grid& g = region.grid();
    CellSet out(g);
    for (std::size_t i : region.indices()) {
        bool ok = true;
        for (int d = 0; d < g.n && ok; ++d)
            for (int s : {-1, 1}) {
                const std::size_t nb = neighbor(g, i, d, s);
                if (nb == kNoCell || !region.contains(nb)) {
                    ok = false;
                    break;
                }
            }
        if (ok) out.insert(i);
    }
    return out;
}

PoincareEstimate poincare_constant(const CellSet& region) {
    require_region(region);
    const Grid& g = region.grid();
    const SpMat K = identity_stiffness(region, region);
    Eigen::SimplicialLDLT<SpMat> ldlt(K);
    Eigen::VectorXd x = Eigen::VectorXd::Ones(K.rows());
    x.normalize();
    PoincareEstimate est;
    double prev = 0.0;
    for (int it = 1; it <= 2000; ++it) {
        Eigen::VectorXd y = ldlt.solve(x);
        y.normalize();
        x = y;
        const Eigen::VectorXd Kx = K * x;
        const double R = x.dot(Kx);
        const double res = (Kx - R * x).norm();
        est.rayleigh = R;
        est.lambda_min = R - res;
        est.iterations = it;
        if (it > 5 && std::abs(R - prev) <= 1e-14 * R && res <= 1e-8 * R) break;
        prev = R;
    }
    if (!(est.lambda_min > 0.0)) throw Error(ErrorCode::NoConvergence, "Poincare iteration did not certify a bound");
    est.constant = std::sqrt(g.cell_volume() / est.lambda_min);
    return est;
}

double weak_residual(const EllipticCoefficient& a, const GridField& u, const CellSet& u_region, const GridField& F,
                     const GridField& f, const CellSet& test) {
    if (test.empty()) return 0.0;
    const Eigen::VectorXd r =
        apply_form(a, u_region, u, u_region, test) - assemble_load(u_region, test, &F, &f);
    const SpMat K = identity_stiffness(CellSet(test.grid(), true), test);
    Eigen::SimplicialLDLT<SpMat> ldlt(K);
    const Eigen::VectorXd z = ldlt.solve(r);
    return std::sqrt(std::max(0.0, r.dot(z)));
}

double energy_norm(const GridField& u, const CellSet& region) {
    const GridField s = sample_gradients(u, region);
    double acc = 0.0;
    for (std::size_t i : region.indices())
        for (int c = 0; c < s.components(); ++c) acc += s.at(i, c) * s.at(i, c);
    return std::sqrt(acc * u.grid().cell_volume() / sample_count(u.grid().n));
}

EnergyReport energy_estimate_for(const EllipticCoefficient& a, const Solution& sol, const GridField& F,
                                 const GridField& f, const SolverConfig& cfg) {
    EnergyReport rep;
    const double grad2 = std::pow(lp_norm(sol.gradient(), 2.0, sol.region), 2);
    const double F2 = F.valid() ? std::pow(lp_norm(F, 2.0, sol.region), 2) : 0.0;
    const double f2 = f.valid() ? std::pow(lp_norm(f, 2.0, sol.region), 2) : 0.0;
    double c = 0.0;
    if (f2 > 0.0) c = cfg.sobolev_constant > 0.0 ? cfg.sobolev_constant : poincare_constant(sol.region).constant;
    rep.sobolev_constant = c;
    const double lam2 = a.lambda() * a.lambda();
    rep.lhs = grad2;
    rep.bound = 2.0 / lam2;
    rep.rhs = (2.0 / lam2) * F2 + (2.0 * c * c / lam2) * f2;
    const double data = F2 + c * c * f2;
    rep.ratio = data > 0.0 ? grad2 / data : 0.0;
    rep.pass = rep.lhs <= rep.rhs;
    return rep;
}

EnergyReport check_energy_estimate(const EllipticCoefficient& a, const Cube& Q, const Domain* omega,
                                   const GridField& F, const GridField& f, const SolverConfig& cfg) {
    const CellSet region = solve_region(a.grid(), Q, omega);
    const Solution sol = solve_dirichlet(a, region, F, f, cfg);
    return energy_estimate_for(a, sol, F, f, cfg);
}

CaccioppoliReport check_caccioppoli(const EllipticCoefficient& a, const Cube& Q, const CellSet& homog_region,
                                    const GridField& u, const CellSet& u_region, double residual_tol) {
    const Grid& g = u.grid();
    CaccioppoliReport rep;
    const GridField zero;
    const double scale = energy_norm(u, u_region);
    rep.residual = weak_residual(a, u, u_region, zero, zero, interior_cells(homog_region));
    if (rep.residual > residual_tol * std::max(scale, 1e-300) && rep.residual > 0.0)
        throw Error(ErrorCode::NotHomogeneous,
                    fmt::format("weak residual {:.3e} exceeds {:.1e} x energy {:.3e}", rep.residual, residual_tol, scale));

    const CellSet twoQ = CellSet::from_box(g, dilate(Q, 2, g.n));
    double shift = 0.0;
    if (twoQ.subset_of(homog_region)) {
        double acc = 0.0;
        for (std::size_t i : twoQ.indices()) acc += u.at(i);
        shift = acc / static_cast<double>(twoQ.count());
        rep.mean_subtracted = true;
    }
    const GridField grad = gradient(u, u_region);
    const double ell = Q.length(g);
    double ctr[3] = {0, 0, 0};
    for (int d = 0; d < g.n; ++d) ctr[d] = -1.0 + (Q.corner[d] + 0.5 * Q.side) * g.h();
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i : twoQ.indices()) {
        const auto x = g.center_of(i);
        double s = 0.0;
        for (int d = 0; d < g.n; ++d) s = std::max(s, std::abs(x[d] - ctr[d]) / (0.5 * ell));
        const double phi = std::clamp(2.0 - s, 0.0, 1.0);
        const double dphi = (s > 1.0 && s < 2.0) ? 2.0 / ell : 0.0;
        const double n2 = grad.norm_at(i);
        lhs += n2 * n2 * phi * phi;
        const double ui = (u_region.contains(i) ? u.at(i) : 0.0) - shift;
        rhs += ui * ui * dphi * dphi;
    }
    const double vol = g.cell_volume();
    const double k = 4.0 * a.Lambda() * a.Lambda() / (a.lambda() * a.lambda());
    rep.lhs = lhs * vol;
    rep.rhs = k * rhs * vol;
    rep.pass = rep.lhs <= rep.rhs * (1.0 + 1e-6);
    return rep;
}

}  // namespace sparsedom
