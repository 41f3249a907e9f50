#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sparsedom/field.hpp"
#include "sparsedom/geometry.hpp"

namespace sparsedom {

struct CoefficientSpec {
    std::string name = "identity";
    std::map<std::string, double> params;
    bool nonlinear = false;
    double epsilon = 0.0;

    double param(const std::string& key, double fallback) const;
    std::string describe() const;
};

using FluxFn = std::function<void(std::size_t cell, const double* xi, double* out)>;
using JacobianFn = std::function<void(std::size_t cell, const double* xi, double* out)>;

// a(x, xi) = A(x) xi + eps * phi(|xi|) xi with phi(r) = 1/(1+r^2), or a user flux.
class EllipticCoefficient {
public:
    enum class Kind { Linear, Nonlinear };

    static EllipticCoefficient linear(GridField matrix, double lambda, double Lambda, std::string name);
    static EllipticCoefficient perturbed(GridField matrix, double lambda_A, double Lambda_A, double epsilon,
                                         std::string name);
    static EllipticCoefficient custom(const Grid& g, FluxFn flux, JacobianFn jacobian, double lambda,
                                      double Lambda, std::string name);

    Kind kind() const { return kind_; }
    bool is_linear() const { return kind_ == Kind::Linear; }
    bool differentiable() const { return differentiable_; }
    bool symmetric() const { return symmetric_; }
    double lambda() const { return lambda_; }
    double Lambda() const { return Lambda_; }
    double epsilon() const { return epsilon_; }
    const std::string& name() const { return name_; }
    const Grid& grid() const { return grid_; }
    int n() const { return grid_.n; }

    // Base matrix A(x) (n*n row-major per cell, or per sample when per_sample()).
    const GridField& matrix() const { return matrix_; }
    bool per_sample() const { return per_sample_; }
    const double* matrix_at(std::size_t cell, int sample) const;

    void flux(std::size_t cell, int sample, const double* xi, double* out) const;
    void jacobian(std::size_t cell, int sample, const double* xi, double* out) const;

    // Linear coefficient whose matrices live on (cell, sample) pairs.
    static EllipticCoefficient per_sample_linear(GridField matrices, double lambda, double Lambda, std::string name);

private:
    Kind kind_ = Kind::Linear;
    Grid grid_;
    GridField matrix_;
    bool per_sample_ = false;
    bool symmetric_ = true;
    bool differentiable_ = true;
    double lambda_ = 1.0;
    double Lambda_ = 1.0;
    double epsilon_ = 0.0;
    std::string name_;
    FluxFn flux_;
    JacobianFn jacobian_;
};

EllipticCoefficient make_coefficient(const Grid& g, const CoefficientSpec& spec);
std::vector<std::string> builtin_coefficients();
// Declared c with omega_A(r) <= c |log r|^-2 for the dini built-in (0 for others).
double declared_dini_constant(const CoefficientSpec& spec);

struct EllipticityCheck {
    double lambda_hat = 0.0;
    double Lambda_hat = 0.0;
    bool pass = false;
};

EllipticityCheck verify_ellipticity(const EllipticCoefficient& a, std::size_t samples, std::uint64_t seed = 1);

// Entrywise max of the mean oscillation of A over Q_r(x) ∩ Ω, sup over centers on a stride r/2 lattice.
double oscillation_modulus(const GridField& A, double r, const Domain& omega);

struct OscillationProfile {
    std::vector<double> radii;
    std::vector<double> omega;
    std::vector<double> vmo_modulus;
    std::vector<double> dini_integral;
};

OscillationProfile oscillation_profile(const GridField& A, const std::vector<double>& radii, const Domain& omega);

struct GaussLegendre {
    std::vector<double> nodes;    // on [0,1]
    std::vector<double> weights;  // sum to 1
};
GaussLegendre gauss_legendre(int points);

// A(x) = ∫_0^1 D_xi a(x, t g_k u + (1-t) g_k v) dt on every (cell, sample) of region_u ∪ region_v.
EllipticCoefficient linearize_pair(const EllipticCoefficient& a, const GridField& u, const CellSet& region_u,
                                   const GridField& v, const CellSet& region_v, int quad_points = 8);
// Cell averages of a per-sample matrix field (n*n components per cell).
GridField cell_average_matrix(const EllipticCoefficient& a);

}  // namespace sparsedom
