#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "sqkd/adversary.hpp"
#include "sqkd/rng.hpp"

namespace sqkd {

namespace {

/// Error rates, trace distance and the error-amplitude residual at one point.
struct Evaluation {
    double e_ctrl = 0.0;
    double e_sift = 0.0;
    double td = 0.0;
    Eigen::VectorXd ctrl_residual;  // [Re; Im] of the |-> amplitude vector, norm^2 = e_ctrl
    Eigen::VectorXd sift_residual;  // wrong-outcome branches / sqrt2, norm^2 = e_sift

    bool finite() const { return std::isfinite(e_ctrl) && std::isfinite(e_sift) && std::isfinite(td); }
};

Eigen::VectorXd realify(const Eigen::VectorXcd& v) {
    Eigen::VectorXd out(2 * v.size());
    out.head(v.size()) = v.real();
    out.tail(v.size()) = v.imag();
    return out;
}

/// Tight evaluation path for the search; agrees with assess() and the
/// constraint residuals but skips the JointState plumbing.
class Evaluator {
public:
    explicit Evaluator(std::size_t d) : d_(d), m_(generator_size(d)) {
        const double h = std::numbers::sqrt2 / 2.0;
        for (int b = 0; b < 2; ++b) sift_[b] = sift_operator(b).matrix();
        plus_ = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(2 * d));
        plus_(0) = h;
        plus_(static_cast<Eigen::Index>(d)) = h;
    }

    std::size_t params() const { return 2 * m_; }

    Eigen::MatrixXcd forward(std::span<const double> theta) const {
        return unitary_from_params(theta.subspan(0, m_), 2 * d_);
    }
    Eigen::MatrixXcd backward(std::span<const double> theta) const {
        return unitary_from_params(theta.subspan(m_, m_), 2 * d_);
    }

    Evaluation evaluate(const Eigen::MatrixXcd& uf, const Eigen::MatrixXcd& ur) const {
        const auto d = static_cast<Eigen::Index>(d_);
        const Eigen::VectorXcd after_f = uf * plus_;
        Evaluation ev;

        const Eigen::VectorXcd ctrl = ur * after_f;
        const Eigen::VectorXcd minus_amp = (ctrl.head(d) - ctrl.tail(d)) / std::numbers::sqrt2;
        ev.e_ctrl = minus_amp.squaredNorm();
        ev.ctrl_residual = realify(minus_amp);

        Eigen::MatrixXcd rho[2];
        Eigen::VectorXcd wrong[2];
        for (int b = 0; b < 2; ++b) {
            const Eigen::Matrix2cd& s = sift_[b];
            Eigen::VectorXcd mid(2 * d);
            mid.head(d) = s(0, 0) * after_f.head(d) + s(0, 1) * after_f.tail(d);
            mid.tail(d) = s(1, 0) * after_f.head(d) + s(1, 1) * after_f.tail(d);
            const Eigen::VectorXcd fin = ur * mid;
            const Eigen::VectorXcd right = b == 0 ? fin.head(d) : fin.tail(d);
            wrong[b] = b == 0 ? fin.tail(d) : fin.head(d);
            rho[b] = right * right.adjoint() + wrong[b] * wrong[b].adjoint();
        }
        ev.e_sift = 0.5 * (wrong[0].squaredNorm() + wrong[1].squaredNorm());
        Eigen::VectorXcd stacked(2 * d);
        stacked << wrong[0] / std::numbers::sqrt2, wrong[1] / std::numbers::sqrt2;
        ev.sift_residual = realify(stacked);
        ev.td = trace_distance(rho[0], rho[1]);
        return ev;
    }

    Evaluation evaluate(std::span<const double> theta) const { return evaluate(forward(theta), backward(theta)); }

private:
    std::size_t d_;
    std::size_t m_;
    Eigen::Matrix2cd sift_[2];
    Eigen::VectorXcd plus_;
};

double violation(const Evaluation& ev, double eps) {
    return std::max(0.0, ev.e_ctrl - eps) + std::max(0.0, ev.e_sift - eps);
}

double penalized(const Evaluation& ev, double eps, double mu) { return ev.td - mu * violation(ev, eps); }

bool feasible(const Evaluation& ev, double eps, double slack) {
    return ev.finite() && ev.e_ctrl <= eps + slack && ev.e_sift <= eps + slack;
}

struct StartRun {
    std::vector<double> theta;
    Evaluation final;
    StartSummary summary;
    std::uint64_t evaluations = 0;
    bool diverged = false;
};

class StartSearch {
public:
    StartSearch(const Evaluator& ev, double eps, const OptimizerConfig& cfg) : ev_(ev), eps_(eps), cfg_(cfg) {}

    StartRun run(std::vector<double> theta, bool warm) {
        StartRun out;
        out.summary.warm = warm;
        ascend(theta, out);
        if (!out.diverged) restore(theta, out);
        out.final = eval(theta, out);
        out.summary.feasible = !out.diverged && feasible(out.final, eps_, cfg_.feasibility_slack);
        out.theta = std::move(theta);
        return out;
    }

private:
    Evaluation eval(std::span<const double> theta, StartRun& out) const {
        ++out.evaluations;
        Evaluation e = ev_.evaluate(theta);
        if (!e.finite()) out.diverged = true;
        return e;
    }

    /// Forward-difference gradient of the penalized objective. Only one of
    /// the two unitaries changes per coordinate, so the other is reused.
    std::vector<double> gradient(std::vector<double>& theta, double f0, double mu, StartRun& out) const {
        const std::size_t m = theta.size() / 2;
        const Eigen::MatrixXcd uf = ev_.forward(theta);
        const Eigen::MatrixXcd ur = ev_.backward(theta);
        std::vector<double> g(theta.size());
        for (std::size_t k = 0; k < theta.size(); ++k) {
            const double saved = theta[k];
            theta[k] += cfg_.fd_step;
            const Evaluation e = k < m ? ev_.evaluate(ev_.forward(theta), ur) : ev_.evaluate(uf, ev_.backward(theta));
            theta[k] = saved;
            ++out.evaluations;
            g[k] = (penalized(e, eps_, mu) - f0) / cfg_.fd_step;
        }
        return g;
    }

    void ascend(std::vector<double>& theta, StartRun& out) const {
        if (cfg_.penalty_schedule.empty()) return;
        const unsigned per_stage = cfg_.ascent_iterations / static_cast<unsigned>(cfg_.penalty_schedule.size());
        for (double mu : cfg_.penalty_schedule) {
            double step = 0.2;
            for (unsigned it = 0; it < per_stage; ++it) {
                ++out.summary.iterations;
                const double f0 = penalized(eval(theta, out), eps_, mu);
                if (out.diverged) return;
                std::vector<double> g = gradient(theta, f0, mu, out);
                const double gnorm = std::sqrt(std::inner_product(g.begin(), g.end(), g.begin(), 0.0));
                if (!std::isfinite(gnorm)) {
                    out.diverged = true;
                    return;
                }
                if (gnorm < 1e-12) break;
                bool moved = false;
                std::vector<double> cand(theta.size());
                for (int tries = 0; tries < 12 && !moved; ++tries) {
                    for (std::size_t k = 0; k < theta.size(); ++k) cand[k] = theta[k] + step * g[k] / gnorm;
                    if (penalized(eval(cand, out), eps_, mu) > f0) {
                        theta.swap(cand);
                        step *= 1.5;
                        moved = true;
                    } else {
                        step *= 0.5;
                    }
                }
                if (!moved) break;
            }
        }
    }

    /// Levenberg-Marquardt projection: pulls each violated residual block
    /// back to the boundary e = eps (to zero when eps = 0).
    void restore(std::vector<double>& theta, StartRun& out) const {
        const double stop = eps_ + 1e-4 * cfg_.feasibility_slack;
        double lambda = 1e-6;
        for (unsigned it = 0; it < cfg_.restore_iterations; ++it) {
            const Evaluation e0 = eval(theta, out);
            if (out.diverged) return;
            if (e0.e_ctrl <= stop && e0.e_sift <= stop) return;
            ++out.summary.iterations;

            auto target = [&](const Evaluation& e) {
                Eigen::VectorXd r(e.ctrl_residual.size() + e.sift_residual.size());
                const double inside = eps_ * (1.0 - 1e-6);
                auto shrink = [&](double err) { return err > eps_ ? 1.0 - std::sqrt(inside / err) : 0.0; };
                r << shrink(e0.e_ctrl) * e.ctrl_residual, shrink(e0.e_sift) * e.sift_residual;
                return r;
            };
            // Jacobian of the full residual; the shrink factors stay fixed at theta.
            auto full = [](const Evaluation& e) {
                Eigen::VectorXd r(e.ctrl_residual.size() + e.sift_residual.size());
                r << e.ctrl_residual, e.sift_residual;
                return r;
            };
            const Eigen::VectorXd r0 = full(e0);
            const Eigen::VectorXd want = target(e0);
            const auto rows = r0.size();
            const auto cols = static_cast<Eigen::Index>(theta.size());
            Eigen::MatrixXd jac(rows, cols);
            const std::size_t m = theta.size() / 2;
            const Eigen::MatrixXcd uf = ev_.forward(theta);
            const Eigen::MatrixXcd ur = ev_.backward(theta);
            const double h = 1e-7;
            for (std::size_t k = 0; k < theta.size(); ++k) {
                const double saved = theta[k];
                theta[k] += h;
                const Evaluation e = k < m ? ev_.evaluate(ev_.forward(theta), ur) : ev_.evaluate(uf, ev_.backward(theta));
                theta[k] = saved;
                ++out.evaluations;
                jac.col(static_cast<Eigen::Index>(k)) = (full(e) - r0) / h;
            }
            const Eigen::MatrixXd jjt = jac * jac.transpose();
            const double v0 = violation(e0, eps_);
            bool accepted = false;
            for (int tries = 0; tries < 10 && !accepted; ++tries) {
                const Eigen::MatrixXd a = jjt + lambda * Eigen::MatrixXd::Identity(rows, rows);
                const Eigen::VectorXd delta = -jac.transpose() * a.ldlt().solve(want);
                std::vector<double> cand(theta);
                for (std::size_t k = 0; k < theta.size(); ++k) cand[k] += delta(static_cast<Eigen::Index>(k));
                if (violation(eval(cand, out), eps_) < v0) {
                    theta.swap(cand);
                    lambda = std::max(lambda / 4.0, 1e-12);
                    accepted = true;
                } else {
                    lambda *= 8.0;
                }
            }
            if (!accepted) return;
        }
    }

    const Evaluator& ev_;
    double eps_;
    const OptimizerConfig& cfg_;
};

std::vector<double> random_start(std::size_t n, const OptimizerConfig& cfg, unsigned index) {
    StreamRng rng(cfg.seed, index, streams::kOptimizer);
    std::normal_distribution<double> normal(0.0, cfg.init_scale);
    std::vector<double> theta(n);
    for (double& t : theta) t = normal(rng);
    return theta;
}

AttackOutcome outcome_of(const std::vector<double>& theta, std::size_t d) {
    return assess(attack_from_params(theta, d));
}

}  // namespace

void validate(const OptimizerConfig& cfg) {
    if (cfg.starts < 1) throw std::invalid_argument("optimizer_starts must be >= 1");
    if (!(cfg.fd_step > 0.0) || !std::isfinite(cfg.fd_step)) throw std::invalid_argument("optimizer_fd_step must be > 0");
    if (!(cfg.init_scale > 0.0) || !std::isfinite(cfg.init_scale))
        throw std::invalid_argument("optimizer_init_scale must be > 0");
    if (!(cfg.feasibility_slack >= 0.0)) throw std::invalid_argument("optimizer_feasibility_slack must be >= 0");
    if (cfg.penalty_schedule.empty()) throw std::invalid_argument("optimizer_penalties must not be empty");
    for (double mu : cfg.penalty_schedule) {
        if (!(mu > 0.0) || !std::isfinite(mu)) throw std::invalid_argument("optimizer penalties must be > 0");
    }
}

AttackModel SearchResult::best_attack() const {
    if (best_theta.empty()) return AttackModel::identity(ancilla_dim);
    return attack_from_params(best_theta, ancilla_dim);
}

SearchResult max_info_at_error_budget(double epsilon, std::size_t d, const OptimizerConfig& cfg,
                                      std::span<const std::vector<double>> warm_starts) {
    if (!(epsilon >= 0.0 && epsilon <= 0.5)) {
        throw std::invalid_argument("max_info_at_error_budget: epsilon must be in [0, 0.5]");
    }
    if (d < 2) {
        throw std::invalid_argument("max_info_at_error_budget: ancilla dimension must be >= 2");
    }
    validate(cfg);

    const Evaluator evaluator(d);
    const std::size_t n = evaluator.params();
    for (const auto& w : warm_starts) {
        if (w.size() != n) throw std::invalid_argument("max_info_at_error_budget: warm start has wrong length");
    }

    const std::size_t total = cfg.starts + warm_starts.size();
    std::vector<StartRun> runs(total);
    auto work = [&](std::size_t worker, std::size_t workers) {
        for (std::size_t i = worker; i < total; i += workers) {
            const bool warm = i >= cfg.starts;
            std::vector<double> theta =
                warm ? warm_starts[i - cfg.starts] : random_start(n, cfg, static_cast<unsigned>(i));
            StartSearch search(evaluator, epsilon, cfg);
            runs[i] = search.run(std::move(theta), warm);
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(cfg.threads, 1, total);
    if (workers == 1) {
        work(0, 1);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
    }

    SearchResult res;
    res.epsilon = epsilon;
    res.ancilla_dim = d;
    res.best = assess(AttackModel::identity(d));
    res.info = res.best.eve_trace_distance;

    auto consider = [&](const std::vector<double>& theta, const Evaluation& ev) {
        if (!feasible(ev, epsilon, cfg.feasibility_slack) || ev.td <= res.info) return;
        res.info = ev.td;
        res.best_theta = theta;
    };
    for (const auto& w : warm_starts) {
        const Evaluation ev = evaluator.evaluate(w);
        ++res.evaluations;
        consider(w, ev);
    }
    for (auto& run : runs) {
        res.evaluations += run.evaluations;
        res.iterations += run.summary.iterations;
        res.diverged = res.diverged || run.diverged;
        run.summary.outcome = outcome_of(run.theta, d);
        if (run.summary.feasible) {
            ++res.feasible_starts;
            consider(run.theta, run.final);
        }
        res.starts.push_back(run.summary);
    }
    if (!res.best_theta.empty()) {
        res.best = outcome_of(res.best_theta, d);
        res.info = res.best.eve_trace_distance;
    }
    return res;
}

std::vector<SearchResult> robustness_sweep(std::span<const double> epsilons, std::size_t d,
                                           const OptimizerConfig& cfg) {
    std::vector<std::size_t> order(epsilons.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return epsilons[a] < epsilons[b]; });

    std::vector<SearchResult> out(epsilons.size());
    std::vector<std::vector<double>> warm;
    for (std::size_t idx : order) {
        out[idx] = max_info_at_error_budget(epsilons[idx], d, cfg, warm);
        if (!out[idx].best_theta.empty()) {
            warm.assign(1, out[idx].best_theta);
        }
    }
    return out;
}

}  // namespace sqkd
