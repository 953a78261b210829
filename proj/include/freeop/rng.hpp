#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "freeop/errors.hpp"

namespace freeop {

// Counter-based random streams built on the splitmix64 finalizer.
//
// Runs must be reproducible from (seed, stream path) alone, independent of
// how work is scheduled across threads. Standard-library distributions are
// implementation defined, so the few samplers needed here are pinned below.
// Every concurrent unit of work (particle, box) derives its own child stream
// from immutable identifiers, never from consumed state.
class Rng {
public:
    static Rng root(uint64_t seed) { return Rng(mix(seed + 0x9e3779b97f4a7c15ull)); }

    // Child identity depends only on this stream's origin and the tag, not on
    // how much the parent has been consumed.
    Rng child(uint64_t tag) const {
        return Rng(mix(origin_ ^ mix(tag + 0x632be59bd9b4e019ull)));
    }

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix(state_);
    }

    // Uniform on [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Exponential(1) via inversion; log1p keeps small draws accurate.
    double exponential() {
        return -std::log1p(-uniform());
    }

    // Standard normal, polar method. One draw is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        while (true) {
            double u = 2.0 * uniform() - 1.0;
            double v = 2.0 * uniform() - 1.0;
            double s = u * u + v * v;
            if (s > 0.0 && s < 1.0) {
                double m = std::sqrt(-2.0 * std::log(s) / s);
                spare_ = v * m;
                have_spare_ = true;
                return u * m;
            }
        }
    }

    // Gamma(shape, rate) by Marsaglia-Tsang; shapes below one use the boost
    // trick of sampling at shape+1 and scaling by a uniform power.
    double gamma(double shape, double rate) {
        if (!(shape > 0.0) || !(rate > 0.0))
            throw DomainError("gamma sampler needs positive shape and rate");
        if (shape < 1.0) {
            double u = uniform();
            while (u <= 0.0) u = uniform();
            return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
        }
        double d = shape - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        while (true) {
            double x = normal();
            double t = 1.0 + c * x;
            if (t <= 0.0) continue;
            double v = t * t * t;
            double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
        }
    }

    // Dirichlet via normalized gammas.
    std::vector<double> dirichlet(const std::vector<double>& conc) {
        if (conc.empty()) throw DomainError("dirichlet needs at least one component");
        std::vector<double> out(conc.size());
        double total = 0.0;
        for (size_t i = 0; i < conc.size(); ++i) {
            out[i] = gamma(conc[i], 1.0);
            total += out[i];
        }
        for (double& x : out) x /= total;
        return out;
    }

    // Index draw from unnormalized non-negative weights.
    size_t discrete(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0)) throw DomainError("discrete weights must be non-negative");
            total += w;
        }
        if (!(total > 0.0)) throw DomainError("discrete weights sum to zero");
        double u = uniform() * total;
        double acc = 0.0;
        for (size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return i;
        }
        return weights.size() - 1;
    }

private:
    explicit Rng(uint64_t key) : origin_(key), state_(key) {}

    static uint64_t mix(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    uint64_t origin_;
    uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace freeop
