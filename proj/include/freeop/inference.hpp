#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "freeop/tasks.hpp"
#include "freeop/wiring.hpp"

namespace freeop {

// --- numeric helpers ----------------------------------------------------------

inline double logsumexp(const std::vector<double>& xs) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : xs)
        if (x > mx) mx = x;
    if (std::isinf(mx) && mx < 0) return mx;
    double sum = 0.0;
    for (double x : xs) sum += std::exp(x - mx);
    return mx + std::log(sum);
}

// Effective sample size of normalized importance weights given as logs:
// (sum w)^2 / sum w^2, computed without leaving log space.
inline double effective_sample_size(const std::vector<double>& log_weights) {
    std::vector<double> doubled(log_weights.size());
    for (size_t i = 0; i < log_weights.size(); ++i) doubled[i] = 2.0 * log_weights[i];
    double lse = logsumexp(log_weights);
    if (std::isinf(lse) && lse < 0) return 0.0;
    return std::exp(2.0 * lse - logsumexp(doubled));
}

inline double digamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("digamma needs finite x > 0");
    double result = 0.0;
    while (x < 6.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    double inv = 1.0 / x;
    double inv2 = inv * inv;
    result += std::log(x) - 0.5 * inv;
    result -= inv2 * (1.0 / 12.0 -
                      inv2 * (1.0 / 120.0 -
                              inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
    return result;
}

// Runs fn(0..n-1), optionally across threads. Each index must write only its
// own slots; results are then reduced serially so the output is identical for
// any thread count. The lowest-index exception wins when several indices
// throw.
inline void parallel_for(size_t n, size_t threads, const std::function<void(size_t)>& fn) {
    if (threads <= 1 || n < 2) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    size_t workers = std::min(threads, n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
            while (true) {
                size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    for (size_t i = 0; i < n; ++i)
        if (errors[i]) std::rethrow_exception(errors[i]);
}

// --- variational family ---------------------------------------------------------
//
// q(beta, w) = Gamma(shape, rate) x Dirichlet(alpha), the mean-field family
// fitted against the path prior.

struct VariationalParams {
    double shape = 1.0;
    double rate = 1.0;
    std::vector<double> alpha;
};

inline VariationalParams default_variational(size_t n_weights) {
    VariationalParams p;
    p.alpha.assign(n_weights, 1.0);
    return p;
}

inline double log_q_beta(double beta, double shape, double rate) {
    if (!(beta > 0.0)) throw DomainError("beta must be positive");
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(beta) -
           rate * beta;
}

inline double log_q_weights(const std::vector<double>& w, const std::vector<double>& alpha) {
    if (w.size() != alpha.size()) throw DimensionError("weight and alpha sizes differ");
    double a0 = 0.0;
    double lp = 0.0;
    for (size_t i = 0; i < w.size(); ++i) {
        if (!(w[i] > 0.0)) return -std::numeric_limits<double>::infinity();
        a0 += alpha[i];
        lp += (alpha[i] - 1.0) * std::log(w[i]) - std::lgamma(alpha[i]);
    }
    return lp + std::lgamma(a0);
}

// --- importance-sampled evidence ---------------------------------------------

struct EvidenceReport {
    double log_evidence = 0.0;
    double ess = 0.0;
    size_t particles = 0;
    size_t failed = 0;
};

inline nlohmann::ordered_json evidence_json(const EvidenceReport& r) {
    nlohmann::ordered_json j;
    j["log_evidence"] = r.log_evidence;
    j["ess"] = r.ess;
    j["particles"] = r.particles;
    j["failed"] = r.failed;
    return j;
}

namespace detail {

// One prior draw per particle: hyperparameters from their priors unless
// fixed, then a joint diagram fill. A particle whose walk trips the step cap
// carries zero weight; anything else propagates.
template <typename HyperFn>
inline EvidenceReport weighted_particles(const OperadGraph& g, const DistanceMatrix& dist,
                                         const WiringDiagram& diagram, const Task& task,
                                         size_t n, Rng& rng, size_t threads, size_t step_cap,
                                         HyperFn&& hyper_of) {
    if (n < 2) throw ValidationError("need at least 2 particles");
    std::vector<double> log_weights(n, -std::numeric_limits<double>::infinity());
    std::vector<char> ok(n, 0);
    parallel_for(n, threads, [&](size_t i) {
        Rng particle = rng.child(i);
        auto [beta, w] = hyper_of(particle);
        try {
            DiagramSample s = sample_diagram(g, dist, diagram, beta, w, particle, step_cap);
            log_weights[i] = log_likelihood(task, s.term);
            ok[i] = 1;
        } catch (const StepCapExceeded&) {
            // zero weight
        }
    });
    EvidenceReport report;
    report.particles = n;
    for (size_t i = 0; i < n; ++i)
        if (!ok[i]) report.failed++;
    if (report.failed == n)
        throw AllParticlesFailed("all " + std::to_string(n) + " particles hit the step cap");
    report.log_evidence = logsumexp(log_weights) - std::log(static_cast<double>(n));
    report.ess = effective_sample_size(log_weights);
    return report;
}

} // namespace detail

inline EvidenceReport snis_evidence(const OperadGraph& g, const DistanceMatrix& dist,
                                    const WiringDiagram& diagram, const Task& task, size_t n,
                                    Rng& rng, size_t threads = 1, size_t step_cap = 256) {
    size_t nw = weight_count(g);
    return detail::weighted_particles(
        g, dist, diagram, task, n, rng, threads, step_cap,
        [nw](Rng& r) {
            double beta = sample_beta(r);
            return std::make_pair(beta, sample_weights(nw, r));
        });
}

inline EvidenceReport conditional_evidence(const OperadGraph& g, const DistanceMatrix& dist,
                                           const WiringDiagram& diagram, const Task& task,
                                           double beta, const std::vector<double>& w, size_t n,
                                           Rng& rng, size_t threads = 1, size_t step_cap = 256) {
    if (w.size() != weight_count(g))
        throw DimensionError("weight vector size does not match the graph");
    return detail::weighted_particles(g, dist, diagram, task, n, rng, threads, step_cap,
                                      [&](Rng&) { return std::make_pair(beta, w); });
}

// --- ELBO --------------------------------------------------------------------
//
// Monte Carlo bound: E_q[log lik + log p(hyper) - log q(hyper)]. The path
// structure is drawn from its own prior given the hyperparameters, so its
// density cancels between model and proposal. Draws that trip the step cap or
// land on a zero weight are dropped; the estimate conditions on usable draws.

struct ElboEstimate {
    double value = 0.0;
    double std_error = 0.0;
    size_t used = 0;
};

inline ElboEstimate elbo_estimate(const OperadGraph& g, const DistanceMatrix& dist,
                                  const WiringDiagram& diagram, const Task& task,
                                  const VariationalParams& q, size_t n, Rng& rng,
                                  size_t threads = 1, size_t step_cap = 256) {
    if (n < 2) throw ValidationError("need at least 2 samples");
    if (q.alpha.size() != weight_count(g))
        throw DimensionError("alpha size does not match the graph");
    std::vector<double> rewards(n, 0.0);
    std::vector<char> ok(n, 0);
    parallel_for(n, threads, [&](size_t i) {
        Rng draw = rng.child(i);
        double beta = draw.gamma(q.shape, q.rate);
        if (!(beta > 0.0)) return;
        std::vector<double> w = draw.dirichlet(q.alpha);
        for (double x : w)
            if (!(x > 0.0)) return;
        try {
            DiagramSample s = sample_diagram(g, dist, diagram, beta, w, draw, step_cap);
            double r = log_likelihood(task, s.term) + log_pdf_beta(beta) + log_pdf_weights(w) -
                       log_q_beta(beta, q.shape, q.rate) - log_q_weights(w, q.alpha);
            rewards[i] = r;
            ok[i] = 1;
        } catch (const StepCapExceeded&) {
        }
    });
    std::vector<double> used;
    used.reserve(n);
    for (size_t i = 0; i < n; ++i)
        if (ok[i]) used.push_back(rewards[i]);
    if (used.empty()) throw AllParticlesFailed("no usable draws for the bound");
    double mean = 0.0;
    for (double r : used) mean += r;
    mean /= static_cast<double>(used.size());
    double var = 0.0;
    for (double r : used) var += (r - mean) * (r - mean);
    if (used.size() > 1) var /= static_cast<double>(used.size() - 1);
    ElboEstimate est;
    est.value = mean;
    est.std_error = std::sqrt(var / static_cast<double>(used.size()));
    est.used = used.size();
    return est;
}

// --- variational fit ------------------------------------------------------------
//
// Stochastic ascent on the bound with score-function gradients, a
// leave-one-out baseline, and log-parameterized positives (log shape,
// log rate, log alpha), clipped to a maximum gradient norm.

struct FitConfig {
    size_t steps = 120;
    size_t samples = 64;
    double learning_rate = 0.05;
    double clip_norm = 10.0;
    size_t step_cap = 256;
    size_t threads = 1;
};

struct FitResult {
    VariationalParams params;
    std::vector<ElboEstimate> history;  // one entry per step
};

inline FitResult fit_variational(const OperadGraph& g, const DistanceMatrix& dist,
                                 const WiringDiagram& diagram, const Task& task,
                                 const FitConfig& cfg, Rng& rng) {
    size_t nw = weight_count(g);
    size_t dim = 2 + nw;  // log shape, log rate, log alpha
    std::vector<double> lp(dim, 0.0);
    if (cfg.samples < 2) throw ValidationError("need at least 2 samples per step");

    FitResult result;
    for (size_t step = 0; step < cfg.steps; ++step) {
        double shape = std::exp(lp[0]);
        double rate = std::exp(lp[1]);
        std::vector<double> alpha(nw);
        for (size_t i = 0; i < nw; ++i) alpha[i] = std::exp(lp[2 + i]);

        size_t S = cfg.samples;
        std::vector<double> rewards(S, 0.0);
        std::vector<std::vector<double>> grads(S);
        std::vector<char> ok(S, 0);
        Rng step_rng = rng.child(step);
        parallel_for(S, cfg.threads, [&](size_t i) {
            Rng draw = step_rng.child(i);
            double beta = draw.gamma(shape, rate);
            if (!(beta > 0.0) || !std::isfinite(beta)) return;
            std::vector<double> w = draw.dirichlet(alpha);
            for (double x : w)
                if (!(x > 0.0)) return;
            try {
                DiagramSample s =
                    sample_diagram(g, dist, diagram, beta, w, draw, cfg.step_cap);
                double r = log_likelihood(task, s.term) + log_pdf_beta(beta) +
                           log_pdf_weights(w) - log_q_beta(beta, shape, rate) -
                           log_q_weights(w, alpha);
                if (std::isinf(r) && r < 0) return;  // zero-likelihood draw
                if (!std::isfinite(r)) return;
                std::vector<double> grad(2 + w.size());
                grad[0] = shape * (std::log(rate) + std::log(beta) - digamma(shape));
                grad[1] = shape - rate * beta;
                double a0 = 0.0;
                for (double a : alpha) a0 += a;
                double dg0 = digamma(a0);
                for (size_t k = 0; k < w.size(); ++k)
                    grad[2 + k] = alpha[k] * (dg0 - digamma(alpha[k]) + std::log(w[k]));
                rewards[i] = r;
                grads[i] = std::move(grad);
                ok[i] = 1;
            } catch (const StepCapExceeded&) {
            }
        });

        std::vector<size_t> valid;
        for (size_t i = 0; i < S; ++i)
            if (ok[i]) valid.push_back(i);
        if (valid.empty())
            throw AllParticlesFailed("no usable draws at fit step " + std::to_string(step));

        double total = 0.0;
        for (size_t i : valid) total += rewards[i];
        double mean = total / static_cast<double>(valid.size());
        double var = 0.0;
        for (size_t i : valid) var += (rewards[i] - mean) * (rewards[i] - mean);
        if (valid.size() > 1) var /= static_cast<double>(valid.size() - 1);
        ElboEstimate est;
        est.value = mean;
        est.std_error = std::sqrt(var / static_cast<double>(valid.size()));
        est.used = valid.size();
        result.history.push_back(est);

        std::vector<double> ghat(dim, 0.0);
        for (size_t i : valid) {
            double baseline = valid.size() > 1
                                  ? (total - rewards[i]) / static_cast<double>(valid.size() - 1)
                                  : 0.0;
            double adv = rewards[i] - baseline;
            for (size_t k = 0; k < dim; ++k) ghat[k] += grads[i][k] * adv;
        }
        double norm = 0.0;
        for (size_t k = 0; k < dim; ++k) {
            ghat[k] /= static_cast<double>(valid.size());
            norm += ghat[k] * ghat[k];
        }
        norm = std::sqrt(norm);
        if (!std::isfinite(norm)) throw NonFiniteGradient("gradient is not finite");
        if (norm > cfg.clip_norm && norm > 0.0) {
            double scale = cfg.clip_norm / norm;
            for (double& x : ghat) x *= scale;
        }
        for (size_t k = 0; k < dim; ++k) lp[k] += cfg.learning_rate * ghat[k];
    }

    result.params.shape = std::exp(lp[0]);
    result.params.rate = std::exp(lp[1]);
    result.params.alpha.resize(nw);
    for (size_t i = 0; i < nw; ++i) result.params.alpha[i] = std::exp(lp[2 + i]);
    return result;
}

// --- posterior over terms --------------------------------------------------------

struct PosteriorEntry {
    std::string term;
    double prob = 0.0;
};

// Importance-sampled posterior over composed terms, proposing hyperparameters
// from q and structure from its prior: weight = lik x p(hyper) / q(hyper).
// Draws are pooled by canonical term text.
inline std::vector<PosteriorEntry> posterior_samples(const OperadGraph& g,
                                                     const DistanceMatrix& dist,
                                                     const WiringDiagram& diagram,
                                                     const Task& task,
                                                     const VariationalParams& q, size_t n,
                                                     Rng& rng, size_t threads = 1,
                                                     size_t step_cap = 256) {
    if (n < 2) throw ValidationError("need at least 2 samples");
    if (q.alpha.size() != weight_count(g))
        throw DimensionError("alpha size does not match the graph");
    std::vector<double> log_w(n, -std::numeric_limits<double>::infinity());
    std::vector<std::string> keys(n);
    std::vector<char> ok(n, 0);
    parallel_for(n, threads, [&](size_t i) {
        Rng draw = rng.child(i);
        double beta = draw.gamma(q.shape, q.rate);
        if (!(beta > 0.0) || !std::isfinite(beta)) return;
        std::vector<double> w = draw.dirichlet(q.alpha);
        for (double x : w)
            if (!(x > 0.0)) return;
        try {
            DiagramSample s = sample_diagram(g, dist, diagram, beta, w, draw, step_cap);
            double lw = log_likelihood(task, s.term) + log_pdf_beta(beta) + log_pdf_weights(w) -
                        log_q_beta(beta, q.shape, q.rate) - log_q_weights(w, q.alpha);
            keys[i] = print_term(canonicalize(s.term));
            log_w[i] = lw;
            ok[i] = 1;
        } catch (const StepCapExceeded&) {
        }
    });
    size_t n_ok = 0;
    for (size_t i = 0; i < n; ++i)
        if (ok[i]) n_ok++;
    if (n_ok == 0) throw AllParticlesFailed("all posterior draws hit the step cap");

    std::map<std::string, std::vector<double>> pooled;
    for (size_t i = 0; i < n; ++i)
        if (ok[i] && std::isfinite(log_w[i])) pooled[keys[i]].push_back(log_w[i]);
    std::vector<double> all;
    for (size_t i = 0; i < n; ++i)
        if (ok[i]) all.push_back(log_w[i]);
    double lse = logsumexp(all);
    if (std::isinf(lse))
        throw AllParticlesFailed("every posterior draw has zero likelihood");

    std::vector<PosteriorEntry> out;
    for (const auto& [term, lws] : pooled) {
        double p = std::exp(logsumexp(lws) - lse);
        // Terms whose share underflows to an exact zero carry no
        // representable mass, so they are left out of the report.
        if (p > 0.0) out.push_back({term, p});
    }
    std::sort(out.begin(), out.end(), [](const PosteriorEntry& a, const PosteriorEntry& b) {
        if (a.prob != b.prob) return a.prob > b.prob;
        return a.term < b.term;
    });
    return out;
}

} // namespace freeop
