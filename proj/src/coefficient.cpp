#include "sparsedom/coefficient.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "sparsedom/error.hpp"
#include "sparsedom/rng.hpp"

namespace sparsedom {

double CoefficientSpec::param(const std::string& key, double fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

std::string CoefficientSpec::describe() const {
    std::string s = name;
    if (!params.empty()) {
        s += "(";
        bool first = true;
        for (const auto& [k, v] : params) {
            s += fmt::format("{}{}={:g}", first ? "" : ",", k, v);
            first = false;
        }
        s += ")";
    }
    if (nonlinear) s += fmt::format("+nonlinear(eps={:g})", epsilon);
    return s;
}

namespace {

double phi(double r) { return 1.0 / (1.0 + r * r); }

bool matrices_symmetric(const GridField& m, int n) {
    const int per = m.components() / (n * n);
    for (std::size_t i = 0; i < m.grid().cells(); ++i)
        for (int s = 0; s < per; ++s)
            for (int r = 0; r < n; ++r)
                for (int c = r + 1; c < n; ++c)
                    if (m.at(i, s * n * n + r * n + c) != m.at(i, s * n * n + c * n + r)) return false;
    return true;
}

}  // namespace

EllipticCoefficient EllipticCoefficient::linear(GridField matrix, double lambda, double Lambda, std::string name) {
    EllipticCoefficient a;
    a.kind_ = Kind::Linear;
    a.grid_ = matrix.grid();
    a.symmetric_ = matrices_symmetric(matrix, a.grid_.n);
    a.matrix_ = std::move(matrix);
    a.lambda_ = lambda;
    a.Lambda_ = Lambda;
    a.name_ = std::move(name);
    return a;
}

EllipticCoefficient EllipticCoefficient::per_sample_linear(GridField matrices, double lambda, double Lambda,
                                                           std::string name) {
    EllipticCoefficient a = linear(std::move(matrices), lambda, Lambda, std::move(name));
    a.per_sample_ = true;
    return a;
}

EllipticCoefficient EllipticCoefficient::perturbed(GridField matrix, double lambda_A, double Lambda_A,
                                                   double epsilon, std::string name) {
    // sym(D_xi (phi(|xi|) xi)) has spectrum in [-1/8, 1] and operator norm <= 1
    const double lam = lambda_A + std::min(-epsilon / 8.0, epsilon);
    const double Lam = Lambda_A + std::abs(epsilon);
    if (!(lam > 0.0))
        throw Error(ErrorCode::NotElliptic, fmt::format("perturbation eps={:g} leaves lambda={:g} <= 0", epsilon, lam));
    EllipticCoefficient a = linear(std::move(matrix), lam, Lam, std::move(name));
    a.kind_ = epsilon == 0.0 ? Kind::Linear : Kind::Nonlinear;
    a.epsilon_ = epsilon;
    return a;
}

EllipticCoefficient EllipticCoefficient::custom(const Grid& g, FluxFn flux, JacobianFn jacobian, double lambda,
                                                double Lambda, std::string name) {
    if (!(lambda > 0.0)) throw Error(ErrorCode::NotElliptic, "declared lambda must be positive");
    EllipticCoefficient a;
    a.kind_ = Kind::Nonlinear;
    a.grid_ = g;
    a.symmetric_ = false;
    a.differentiable_ = static_cast<bool>(jacobian);
    a.lambda_ = lambda;
    a.Lambda_ = Lambda;
    a.name_ = std::move(name);
    a.flux_ = std::move(flux);
    a.jacobian_ = std::move(jacobian);
    return a;
}

const double* EllipticCoefficient::matrix_at(std::size_t cell, int sample) const {
    const int nn = grid_.n * grid_.n;
    return matrix_.ptr(cell, per_sample_ ? sample * nn : 0);
}

void EllipticCoefficient::flux(std::size_t cell, int sample, const double* xi, double* out) const {
    const int n = grid_.n;
    if (flux_) {
        flux_(cell, xi, out);
        return;
    }
    const double* A = matrix_at(cell, sample);
    for (int r = 0; r < n; ++r) {
        double s = 0.0;
        for (int c = 0; c < n; ++c) s += A[r * n + c] * xi[c];
        out[r] = s;
    }
    if (epsilon_ != 0.0) {
        double r2 = 0.0;
        for (int d = 0; d < n; ++d) r2 += xi[d] * xi[d];
        const double f = epsilon_ * phi(std::sqrt(r2));
        for (int d = 0; d < n; ++d) out[d] += f * xi[d];
    }
}

void EllipticCoefficient::jacobian(std::size_t cell, int sample, const double* xi, double* out) const {
    const int n = grid_.n;
    if (flux_) {
        if (!jacobian_) throw Error(ErrorCode::NotDifferentiable, "coefficient '" + name_ + "' has no jacobian");
        jacobian_(cell, xi, out);
        return;
    }
    const double* A = matrix_at(cell, sample);
    for (int k = 0; k < n * n; ++k) out[k] = A[k];
    if (epsilon_ != 0.0) {
        double r2 = 0.0;
        for (int d = 0; d < n; ++d) r2 += xi[d] * xi[d];
        const double p = phi(std::sqrt(r2));
        // phi'(r)/r = -2/(1+r^2)^2
        const double q = -2.0 * p * p;
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) out[r * n + c] += epsilon_ * ((r == c ? p : 0.0) + q * xi[r] * xi[c]);
    }
}

namespace {

GridField constant_matrix(const Grid& g, double diag) {
    GridField m(g, g.n * g.n);
    for (std::size_t i = 0; i < g.cells(); ++i)
        for (int d = 0; d < g.n; ++d) m.at(i, d * g.n + d) = diag;
    return m;
}

double distance_to(const Grid& g, std::size_t i, const CoefficientSpec& spec) {
    const auto x = g.center_of(i);
    const double c[3] = {spec.param("x0", 0.5), spec.param("y0", 0.5), spec.param("z0", 0.5)};
    double r2 = 0.0;
    for (int d = 0; d < g.n; ++d) r2 += (x[d] - c[d]) * (x[d] - c[d]);
    return std::sqrt(r2);
}

double dini_profile(double t) { return t < 1.0 ? 1.0 / std::pow(1.0 + std::log(1.0 / t), 2) : 1.0; }

}  // namespace

std::vector<std::string> builtin_coefficients() {
    return {"identity", "scalar", "checkerboard", "rotation", "vmo", "dini"};
}

double declared_dini_constant(const CoefficientSpec& spec) {
    if (spec.name != "dini") return 0.0;
    return 2.0 * std::abs(spec.param("beta", 1.0));
}

EllipticCoefficient make_coefficient(const Grid& g, const CoefficientSpec& spec) {
    GridField m;
    double lam = 1.0, Lam = 1.0;
    const std::string& name = spec.name;
    if (name == "identity") {
        m = constant_matrix(g, 1.0);
    } else if (name == "scalar") {
        const double c = spec.param("c", 1.0);
        if (!(c > 0.0)) throw Error(ErrorCode::NotElliptic, "scalar coefficient must be positive");
        m = constant_matrix(g, c);
        lam = Lam = c;
    } else if (name == "checkerboard") {
        const double alpha = spec.param("alpha", 1.0);
        const double beta = spec.param("beta", 4.0);
        const double k = spec.param("k", 4.0);
        if (!(alpha > 0.0 && beta > 0.0)) throw Error(ErrorCode::NotElliptic, "checkerboard values must be positive");
        m = constant_matrix(g, 1.0);
        for (std::size_t i = 0; i < g.cells(); ++i) {
            const auto x = g.center_of(i);
            long parity = 0;
            for (int d = 0; d < g.n; ++d) parity += static_cast<long>(std::floor(k * x[d]));
            const double v = ((parity % 2 + 2) % 2 == 0) ? alpha : beta;
            for (int d = 0; d < g.n; ++d) m.at(i, d * g.n + d) = v;
        }
        lam = std::min(alpha, beta);
        Lam = std::max(alpha, beta);
    } else if (name == "rotation") {
        if (g.n != 2) throw Error(ErrorCode::InvalidArgument, "rotation coefficient is two-dimensional");
        const double gamma = spec.param("gamma", 1.0);
        m = constant_matrix(g, 1.0);
        for (std::size_t i = 0; i < g.cells(); ++i) {
            const auto x = g.center_of(i);
            const double r = std::sin(2.0 * std::numbers::pi * x[0]) * std::cos(2.0 * std::numbers::pi * x[1]);
            m.at(i, 1) = -gamma * r;
            m.at(i, 2) = gamma * r;
        }
        lam = 1.0;
        Lam = std::sqrt(1.0 + gamma * gamma);
    } else if (name == "vmo") {
        const double alpha = spec.param("alpha", 2.0);
        const double beta = spec.param("beta", 1.0);
        if (!(alpha - std::abs(beta) > 0.0)) throw Error(ErrorCode::NotElliptic, "vmo needs alpha > |beta|");
        m = constant_matrix(g, 1.0);
        for (std::size_t i = 0; i < g.cells(); ++i) {
            const double r = distance_to(g, i, spec);
            const double v = alpha + beta * std::sin(std::log(1.0 + std::abs(std::log(r))));
            for (int d = 0; d < g.n; ++d) m.at(i, d * g.n + d) = v;
        }
        lam = alpha - std::abs(beta);
        Lam = alpha + std::abs(beta);
    } else if (name == "dini") {
        const double alpha = spec.param("alpha", 1.0);
        const double beta = spec.param("beta", 1.0);
        if (!(alpha + std::min(beta, 0.0) > 0.0)) throw Error(ErrorCode::NotElliptic, "dini needs alpha + min(beta,0) > 0");
        m = constant_matrix(g, 1.0);
        for (std::size_t i = 0; i < g.cells(); ++i) {
            const double v = alpha + beta * dini_profile(distance_to(g, i, spec));
            for (int d = 0; d < g.n; ++d) m.at(i, d * g.n + d) = v;
        }
        lam = alpha + std::min(beta, 0.0);
        Lam = alpha + std::max(beta, 0.0);
    } else {
        throw Error(ErrorCode::ConfigError, "unknown coefficient '" + name + "'");
    }
    if (spec.nonlinear) return EllipticCoefficient::perturbed(std::move(m), lam, Lam, spec.epsilon, spec.describe());
    return EllipticCoefficient::linear(std::move(m), lam, Lam, spec.describe());
}

namespace {
void random_vector(Rng& rng, int n, double* out) {
    const double mag = std::pow(10.0, rng.uniform(-3.0, 3.0));
    double s = 0.0;
    for (int d = 0; d < n; ++d) {
        out[d] = rng.normal();
        s += out[d] * out[d];
    }
    s = std::sqrt(s);
    if (s == 0.0) {
        out[0] = 1.0;
        s = 1.0;
    }
    for (int d = 0; d < n; ++d) out[d] *= mag / s;
}
}  // namespace

EllipticityCheck verify_ellipticity(const EllipticCoefficient& a, std::size_t samples, std::uint64_t seed) {
    if (samples < 1) throw Error(ErrorCode::InvalidArgument, "need at least one sample");
    Rng rng(seed);
    const Grid& g = a.grid();
    const int n = g.n;
    const int m = sample_count(n);
    EllipticityCheck out;
    out.lambda_hat = std::numeric_limits<double>::infinity();
    out.Lambda_hat = 0.0;
    double xi[3], eta[3], fx[3], fy[3];
    for (std::size_t s = 0; s < samples; ++s) {
        const std::size_t cell = rng.index(g.cells());
        const int k = static_cast<int>(rng.index(static_cast<std::size_t>(m)));
        random_vector(rng, n, xi);
        // pairs at comparable and at very different scales
        if (rng.uniform() < 0.5) {
            random_vector(rng, n, eta);
        } else {
            for (int d = 0; d < n; ++d) eta[d] = xi[d] * rng.uniform(-2.0, 2.0) + 1e-3 * rng.normal();
        }
        a.flux(cell, k, xi, fx);
        a.flux(cell, k, eta, fy);
        double dd = 0.0, dot = 0.0, df = 0.0;
        for (int d = 0; d < n; ++d) {
            const double e = xi[d] - eta[d];
            const double f = fx[d] - fy[d];
            dd += e * e;
            dot += f * e;
            df += f * f;
        }
        if (dd == 0.0) continue;
        out.lambda_hat = std::min(out.lambda_hat, dot / dd);
        out.Lambda_hat = std::max(out.Lambda_hat, std::sqrt(df / dd));
    }
    out.pass = out.lambda_hat >= a.lambda() * (1.0 - 1e-9) && out.Lambda_hat <= a.Lambda() * (1.0 + 1e-9);
    return out;
}

double oscillation_modulus(const GridField& A, double r, const Domain& omega) {
    const Grid& g = A.grid();
    const int m = static_cast<int>(std::lround(r / g.h()));
    if (m < 1) throw Error(ErrorCode::RadiusTooSmall, fmt::format("radius {:g} is below one cell", r));
    const int stride = std::max(1, m / 2);
    const int lo_off = m / 2;
    const int comps = A.components();
    double sup = 0.0;
    std::vector<std::size_t> window;
    std::vector<double> mean(static_cast<std::size_t>(comps));
    const CellSet& mask = omega.mask;
    for (std::size_t i : mask.indices()) {
        const CellCoord c = g.coord(i);
        bool on_lattice = true;
        for (int d = 0; d < g.n; ++d)
            if (c[d] % stride != 0) on_lattice = false;
        if (!on_lattice) continue;
        Box b;
        for (int d = 0; d < g.n; ++d) {
            b.lo[d] = c[d] - lo_off;
            b.hi[d] = b.lo[d] + m;
        }
        window.clear();
        const CellSet win = CellSet::from_box(g, b) & mask;
        for (std::size_t j : win.indices()) window.push_back(j);
        if (window.empty()) continue;
        std::fill(mean.begin(), mean.end(), 0.0);
        for (std::size_t j : window)
            for (int k = 0; k < comps; ++k) mean[k] += A.at(j, k);
        for (auto& v : mean) v /= static_cast<double>(window.size());
        for (int k = 0; k < comps; ++k) {
            double osc = 0.0;
            for (std::size_t j : window) osc += std::abs(A.at(j, k) - mean[k]);
            sup = std::max(sup, osc / static_cast<double>(window.size()));
        }
    }
    return sup;
}

OscillationProfile oscillation_profile(const GridField& A, const std::vector<double>& radii, const Domain& omega) {
    OscillationProfile p;
    p.radii = radii;
    std::sort(p.radii.begin(), p.radii.end());
    double running = 0.0, integral = 0.0;
    for (std::size_t k = 0; k < p.radii.size(); ++k) {
        const double w = oscillation_modulus(A, p.radii[k], omega);
        p.omega.push_back(w);
        running = std::max(running, w);
        p.vmo_modulus.push_back(running);
        // ∫ omega(s)/s ds ≈ Σ omega Δlog s, with the first interval taken as one octave
        const double dlog = k == 0 ? std::log(2.0) : std::log(p.radii[k] / p.radii[k - 1]);
        integral += w * dlog;
        p.dini_integral.push_back(integral);
    }
    return p;
}

GaussLegendre gauss_legendre(int points) {
    if (points < 1) throw Error(ErrorCode::InvalidArgument, "quadrature needs at least one point");
    GaussLegendre q;
    for (int i = 0; i < points; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (points + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= points; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = points * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        q.nodes.push_back(0.5 * (1.0 - x));
        q.weights.push_back(0.5 * w);
    }
    return q;
}

EllipticCoefficient linearize_pair(const EllipticCoefficient& a, const GridField& u, const CellSet& region_u,
                                   const GridField& v, const CellSet& region_v, int quad_points) {
    if (!a.differentiable()) throw Error(ErrorCode::NotDifferentiable, "coefficient '" + a.name() + "' has no jacobian");
    const Grid& g = a.grid();
    const int n = g.n;
    const int m = sample_count(n);
    const int nn = n * n;
    GridField out(g, m * nn);
    const CellSet cells = region_u | region_v;
    const GaussLegendre q = gauss_legendre(quad_points);
    double gu[3], gv[3], xi[3], jac[9];
    for (std::size_t i : cells.indices()) {
        for (int k = 0; k < m; ++k) {
            sample_gradient_at(u, region_u, i, k, gu);
            sample_gradient_at(v, region_v, i, k, gv);
            double* dst = &out.at(i, k * nn);
            if (a.is_linear()) {
                a.jacobian(i, k, gu, jac);
                for (int e = 0; e < nn; ++e) dst[e] = jac[e];
                continue;
            }
            for (std::size_t p = 0; p < q.nodes.size(); ++p) {
                const double t = q.nodes[p];
                for (int d = 0; d < n; ++d) xi[d] = t * gu[d] + (1.0 - t) * gv[d];
                a.jacobian(i, k, xi, jac);
                for (int e = 0; e < nn; ++e) dst[e] += q.weights[p] * jac[e];
            }
        }
    }
    return EllipticCoefficient::per_sample_linear(std::move(out), a.lambda(), a.Lambda(), "linearized " + a.name());
}

GridField cell_average_matrix(const EllipticCoefficient& a) {
    const Grid& g = a.grid();
    const int nn = g.n * g.n;
    if (!a.per_sample()) return a.matrix();
    const int m = sample_count(g.n);
    GridField out(g, nn);
    for (std::size_t i = 0; i < g.cells(); ++i)
        for (int k = 0; k < m; ++k)
            for (int e = 0; e < nn; ++e) out.at(i, e) += a.matrix().at(i, k * nn + e) / m;
    return out;
}

}  // namespace sparsedom
