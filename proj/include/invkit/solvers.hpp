// Model-based reconstruction: ML/MAP solvers built from forward operators and
// regularizers, plus plug-and-play and regularization-by-denoising variants.
#ifndef INVKIT_SOLVERS_HPP
#define INVKIT_SOLVERS_HPP

#include <functional>
#include <limits>

#include "invkit/operators.hpp"
#include "invkit/regularizers.hpp"

namespace invkit {

struct SolveConfig {
    double eta = 0.0;  // step size; 0 selects 0.9 / ||A||^2 via power iteration
    std::size_t max_iters = 500;
    double tol = 1e-8;  // relative objective change, 3 consecutive iterations
    std::uint64_t seed = 0;
};

struct SolveReport {
    Image reconstruction;
    std::vector<double> objective_trace;
    std::size_t iterations_run = 0;
    bool converged = false;
    std::string notes;
    std::vector<double> restart_objectives;  // phase retrieval / best-of runs
};

using Denoiser = std::function<Image(const Image&)>;

namespace detail {

inline void ensure_finite(const std::vector<double>& x, const char* who) {
    if (!all_finite(x)) throw NumericError(std::string(who) + ": iterate became non-finite");
}

// Tracks the "relative change below tol for 3 consecutive iterations" rule.
class ConvergenceRule {
  public:
    explicit ConvergenceRule(double tol) : tol_(tol) {}
    bool update(double objective) {
        if (has_prev_) {
            double denom = std::max(std::abs(prev_), 1e-300);
            if (std::abs(objective - prev_) / denom < tol_)
                ++streak_;
            else
                streak_ = 0;
        }
        prev_ = objective;
        has_prev_ = true;
        return streak_ >= 3;
    }

  private:
    double tol_;
    double prev_ = 0.0;
    bool has_prev_ = false;
    int streak_ = 0;
};

// Conjugate gradient on a symmetric positive (semi)definite system.
inline std::vector<double> conjugate_gradient(const std::function<std::vector<double>(const std::vector<double>&)>& spd,
                                              const std::vector<double>& b, std::vector<double> x0, double tol,
                                              std::size_t max_iters, std::size_t* iters_out = nullptr) {
    std::vector<double> x = std::move(x0);
    if (x.empty()) x.assign(b.size(), 0.0);
    std::vector<double> r = b;
    if (norm2(x) > 0.0) {
        std::vector<double> ax = spd(x);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] -= ax[i];
    }
    std::vector<double> p = r;
    double rs = dot(r, r);
    double bnorm = std::max(norm2(b), 1e-300);
    std::size_t it = 0;
    for (; it < max_iters && std::sqrt(rs) > tol * bnorm; ++it) {
        std::vector<double> ap = spd(p);
        double pap = dot(p, ap);
        if (pap <= 0.0) break;  // hit the null space; current iterate is the answer so far
        double alpha = rs / pap;
        axpy(alpha, p, x);
        axpy(-alpha, ap, r);
        double rs_new = dot(r, r);
        double beta = rs_new / rs;
        rs = rs_new;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
        ensure_finite(x, "conjugate_gradient");
    }
    if (iters_out) *iters_out = it;
    return x;
}

inline double data_objective(const ForwardOperator& op, const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> ax = op.apply_vec(x);
    double s = 0.0;
    for (std::size_t i = 0; i < ax.size(); ++i) s += (ax[i] - y[i]) * (ax[i] - y[i]);
    return 0.5 * s;
}

}  // namespace detail

// Largest eigenvalue of A^T A (= ||A||^2), fixed-seed power iteration.
inline double estimate_op_norm_sq(const ForwardOperator& op, std::size_t iters = 50, std::uint64_t seed = 0x707769) {
    Rng rng(seed);
    std::vector<double> v(op.input_size());
    for (double& e : v) e = rng.normal();
    double nv = norm2(v);
    for (double& e : v) e /= nv;
    double lambda = 0.0;
    for (std::size_t it = 0; it < iters; ++it) {
        std::vector<double> w = op.adjoint_vec(op.apply_vec(v));
        lambda = dot(v, w);
        double nw = norm2(w);
        if (nw == 0.0) return 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = w[i] / nw;
    }
    return lambda;
}

// Tikhonov-regularized maximum likelihood: CG on (A^T A + lambda I) x = A^T y.
// With lambda = 0 and the zero initialization this is the minimum-norm
// least-squares fit.
inline SolveReport ml_least_squares(const ForwardOperator& op, const MeasurementVector& y, double lambda,
                                    const SolveConfig& cfg) {
    if (!op.is_linear()) throw ValidationError("ml_least_squares: operator must be linear");
    if (!all_finite(y.data)) throw ValidationError("ml_least_squares: non-finite measurements");
    if (lambda < 0.0) throw ValidationError("ml_least_squares: lambda must be nonnegative");
    std::vector<double> b = op.adjoint_vec(y.data);
    auto spd = [&](const std::vector<double>& v) {
        std::vector<double> out = op.adjoint_vec(op.apply_vec(v));
        if (lambda != 0.0) axpy(lambda, v, out);
        return out;
    };

    SolveReport rep;
    std::vector<double> x(op.input_size(), 0.0);
    std::vector<double> r = b;
    std::vector<double> p = r;
    double rs = dot(r, r);
    double bnorm = std::max(norm2(b), 1e-300);
    std::size_t it = 0;
    for (; it < cfg.max_iters; ++it) {
        if (std::sqrt(rs) <= cfg.tol * bnorm) {
            rep.converged = true;
            break;
        }
        std::vector<double> ap = spd(p);
        double pap = dot(p, ap);
        if (pap <= 0.0) break;
        double alpha = rs / pap;
        axpy(alpha, p, x);
        axpy(-alpha, ap, r);
        double rs_new = dot(r, r);
        double beta = rs_new / rs;
        rs = rs_new;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
        detail::ensure_finite(x, "ml_least_squares");
        rep.objective_trace.push_back(detail::data_objective(op, x, y.data) + 0.5 * lambda * dot(x, x));
    }
    if (it == cfg.max_iters && std::sqrt(rs) <= cfg.tol * bnorm) rep.converged = true;
    rep.reconstruction = Image(op.input_height(), op.input_width(), std::move(x));
    rep.iterations_run = it;
    rep.notes = "cg normal equations";
    return rep;
}

// Proximal gradient descent x <- prox_{eta r}(x - eta A^T (Ax - y)) from zero.
inline SolveReport prox_gradient(const ForwardOperator& op, const MeasurementVector& y, const Regularizer& reg,
                                 const SolveConfig& cfg) {
    if (!op.is_linear()) throw ValidationError("prox_gradient: operator must be linear");
    double eta = cfg.eta > 0.0 ? cfg.eta : 0.9 / std::max(estimate_op_norm_sq(op), 1e-300);

    SolveReport rep;
    Image x(op.input_height(), op.input_width(), 0.0);
    detail::ConvergenceRule rule(cfg.tol);
    std::size_t it = 0;
    for (; it < cfg.max_iters; ++it) {
        std::vector<double> ax = op.apply_vec(x.data);
        for (std::size_t i = 0; i < ax.size(); ++i) ax[i] -= y.data[i];
        std::vector<double> grad = op.adjoint_vec(ax);
        Image z = x;
        axpy(-eta, grad, z.data);
        x = reg.prox(z, eta);
        detail::ensure_finite(x.data, "prox_gradient");
        double obj = detail::data_objective(op, x.data, y.data) + reg.value(x);
        rep.objective_trace.push_back(obj);
        if (rule.update(obj)) {
            rep.converged = true;
            ++it;
            break;
        }
    }
    rep.reconstruction = std::move(x);
    rep.iterations_run = it;
    return rep;
}

namespace detail {

// Shared ADMM skeleton; the z update is either a prox or a plugged denoiser.
inline SolveReport admm_core(const ForwardOperator& op, const MeasurementVector& y,
                             const std::function<Image(const Image&)>& z_update,
                             const std::function<double(const Image&)>& reg_value, double rho,
                             const SolveConfig& cfg) {
    if (!op.is_linear()) throw ValidationError("admm: operator must be linear");
    if (rho <= 0.0) throw ValidationError("admm: rho must be positive");
    std::size_t n = op.input_size();
    std::vector<double> aty = op.adjoint_vec(y.data);
    auto spd = [&](const std::vector<double>& v) {
        std::vector<double> out = op.adjoint_vec(op.apply_vec(v));
        axpy(rho, v, out);
        return out;
    };

    SolveReport rep;
    std::vector<double> x(n, 0.0), z(n, 0.0), u(n, 0.0);
    detail::ConvergenceRule rule(cfg.tol);
    std::size_t it = 0;
    for (; it < cfg.max_iters; ++it) {
        std::vector<double> rhs = aty;
        for (std::size_t i = 0; i < n; ++i) rhs[i] += rho * (z[i] - u[i]);
        x = conjugate_gradient(spd, rhs, std::move(x), 1e-12, 200);
        Image zin(op.input_height(), op.input_width());
        for (std::size_t i = 0; i < n; ++i) zin.data[i] = x[i] + u[i];
        Image znew = z_update(zin);
        if (!all_finite(znew.data)) throw NumericError("admm: z update produced non-finite values");
        z = znew.data;
        for (std::size_t i = 0; i < n; ++i) u[i] += x[i] - z[i];
        detail::ensure_finite(x, "admm");

        Image xi(op.input_height(), op.input_width(), x);
        double obj = data_objective(op, x, y.data) + reg_value(xi);
        rep.objective_trace.push_back(obj);
        if (rule.update(obj)) {
            rep.converged = true;
            ++it;
            break;
        }
    }
    rep.reconstruction = Image(op.input_height(), op.input_width(), std::move(x));
    rep.iterations_run = it;
    return rep;
}

}  // namespace detail

// Two-block ADMM splitting the quadratic data term (solved by CG) from the
// regularizer prox.
inline SolveReport admm(const ForwardOperator& op, const MeasurementVector& y, const Regularizer& reg, double rho,
                        const SolveConfig& cfg) {
    return detail::admm_core(
        op, y, [&](const Image& zin) { return reg.prox(zin, 1.0 / rho); },
        [&](const Image& x) { return reg.value(x); }, rho, cfg);
}

// Plug-and-play ADMM: the prox step is replaced by an arbitrary denoiser.
// No convergence guarantee is claimed; the residual trace is returned.
inline SolveReport pnp_admm(const ForwardOperator& op, const MeasurementVector& y, const Denoiser& denoiser, double rho,
                            const SolveConfig& cfg) {
    SolveReport rep = detail::admm_core(
        op, y, [&](const Image& zin) { return denoiser(zin); }, [](const Image&) { return 0.0; }, rho, cfg);
    rep.notes = "pnp: objective trace is the data term only";
    return rep;
}

// Gradient descent on 1/2||Ax-y||^2 + (lambda/2) x^T (x - D(x)), using the
// simplified RED gradient A^T(Ax-y) + lambda (x - D(x)) that assumes a
// symmetric denoiser Jacobian.
inline SolveReport red_solve(const ForwardOperator& op, const MeasurementVector& y, const Denoiser& denoiser,
                             double lambda, const SolveConfig& cfg) {
    if (!op.is_linear()) throw ValidationError("red_solve: operator must be linear");
    if (lambda < 0.0) throw ValidationError("red_solve: lambda must be nonnegative");
    double eta = cfg.eta > 0.0 ? cfg.eta : 0.9 / (estimate_op_norm_sq(op) + lambda + 1e-300);

    SolveReport rep;
    rep.notes = "red gradient assumes symmetric denoiser Jacobian";
    std::size_t n = op.input_size();
    Image x(op.input_height(), op.input_width(), 0.0);
    detail::ConvergenceRule rule(cfg.tol);
    std::size_t it = 0;
    for (; it < cfg.max_iters; ++it) {
        std::vector<double> ax = op.apply_vec(x.data);
        for (std::size_t i = 0; i < ax.size(); ++i) ax[i] -= y.data[i];
        std::vector<double> grad = op.adjoint_vec(ax);
        Image dx = denoiser(x);
        if (!all_finite(dx.data)) throw NumericError("red_solve: denoiser produced non-finite values");
        for (std::size_t i = 0; i < n; ++i) grad[i] += lambda * (x.data[i] - dx.data[i]);
        axpy(-eta, grad, x.data);
        detail::ensure_finite(x.data, "red_solve");
        double reg_term = 0.0;
        Image dnew = denoiser(x);
        for (std::size_t i = 0; i < n; ++i) reg_term += x.data[i] * (x.data[i] - dnew.data[i]);
        double obj = detail::data_objective(op, x.data, y.data) + 0.5 * lambda * reg_term;
        rep.objective_trace.push_back(obj);
        if (rule.update(obj)) {
            rep.converged = true;
            ++it;
            break;
        }
    }
    rep.reconstruction = std::move(x);
    rep.iterations_run = it;
    return rep;
}

// Gradient descent with halving line search on 1/2||y - |Ax|^2||^2, best of
// `restarts` initializations by final objective. Restart 0 starts at zero so
// y = 0 recovers the global minimum exactly; later restarts use a scaled
// mostly-positive random start suited to intensity images.
inline SolveReport phase_retrieval_gd(const ForwardOperator& op, const MeasurementVector& y, std::size_t restarts,
                                      const SolveConfig& cfg) {
    if (op.kind() != OperatorKind::phase_retrieval)
        throw ValidationError("phase_retrieval_gd: operator must be phase_retrieval kind");
    if (restarts < 1) throw ValidationError("phase_retrieval_gd: restarts must be >= 1");

    auto objective = [&](const std::vector<double>& x) {
        std::vector<double> ax = op.apply_vec(x);
        double s = 0.0;
        for (std::size_t i = 0; i < ax.size(); ++i) s += (ax[i] - y.data[i]) * (ax[i] - y.data[i]);
        return 0.5 * s;
    };

    double mean_abs_y = 0.0;
    for (double v : y.data) mean_abs_y += std::abs(v);
    mean_abs_y /= std::max<std::size_t>(1, y.data.size());
    double init_scale = std::sqrt(mean_abs_y);

    SolveReport best;
    double best_obj = std::numeric_limits<double>::infinity();
    bool any_finite = false;
    for (std::size_t restart = 0; restart < restarts; ++restart) {
        std::vector<double> x(op.input_size(), 0.0);
        if (restart > 0) {
            Rng rng = Rng(cfg.seed).fork(restart);
            for (double& v : x) v = init_scale * (1.0 + 0.25 * rng.normal());
        }
        best.restart_objectives.push_back(objective(x));

        std::vector<double> trace;
        double obj = objective(x);
        detail::ConvergenceRule rule(cfg.tol);
        std::size_t it = 0;
        bool diverged = false;
        // Line search warm-started from the last accepted step. The first
        // step is scaled to ~10% of the iterate norm so no coordinate can
        // tunnel through zero in a single update.
        double eta_cap = cfg.eta > 0.0 ? cfg.eta : 1.0;
        double eta_ls = 0.0;
        for (; it < cfg.max_iters; ++it) {
            std::vector<double> ax = op.apply_vec(x);
            for (std::size_t i = 0; i < ax.size(); ++i) ax[i] -= y.data[i];
            std::vector<double> grad = op.jtvp_vec(x, ax);
            if (eta_ls == 0.0) {
                double gn = norm2(grad);
                eta_ls = gn > 0.0 ? std::min(eta_cap, 0.1 * (norm2(x) + 1e-9) / gn) : eta_cap;
            }
            double eta = std::min(2.0 * eta_ls, eta_cap);
            double new_obj = obj;
            std::vector<double> cand;
            for (int halvings = 0; halvings < 60; ++halvings) {
                cand = x;
                axpy(-eta, grad, cand);
                new_obj = objective(cand);
                if (std::isfinite(new_obj) && new_obj <= obj) break;
                eta *= 0.5;
            }
            if (!std::isfinite(new_obj) || new_obj > obj) {
                diverged = true;
                break;
            }
            eta_ls = eta;
            x = std::move(cand);
            obj = new_obj;
            trace.push_back(obj);
            if (rule.update(obj)) {
                ++it;
                break;
            }
        }
        if (diverged || !all_finite(x)) continue;
        any_finite = true;
        if (obj < best_obj) {
            best_obj = obj;
            best.reconstruction = Image(op.input_height(), op.input_width(), x);
            best.objective_trace = std::move(trace);
            best.iterations_run = it;
            best.converged = it < cfg.max_iters;
        }
    }
    if (!any_finite) throw NumericError("phase_retrieval_gd: all restarts diverged");
    best.notes = "sign-ambiguous reconstruction";
    return best;
}

}  // namespace invkit

#endif  // INVKIT_SOLVERS_HPP
