#pragma once

// Tree-structured Parzen Estimator: sequential hyperparameter search
// maximizing a black-box objective (here, mean CV AUC).

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace coughml {

struct SearchDim {
    enum class Kind { uniform, log_uniform, categorical };
    std::string name;
    Kind kind = Kind::uniform;
    double lo = 0.0, hi = 1.0;           // numeric kinds
    std::vector<double> options;          // categorical

    void validate() const {
        if (kind == Kind::categorical) {
            if (options.empty())
                throw std::invalid_argument("search dim '" + name +
                                            "': no categorical options");
        } else if (!(lo < hi)) {
            throw std::invalid_argument("search dim '" + name +
                                        "': lo must be < hi");
        } else if (kind == Kind::log_uniform && lo <= 0.0) {
            throw std::invalid_argument("search dim '" + name +
                                        "': log_uniform needs lo > 0");
        }
    }
};

struct SearchSpace {
    std::vector<SearchDim> dims;
    void validate() const {
        if (dims.empty()) throw std::invalid_argument("empty search space");
        for (const auto& d : dims) d.validate();
    }
};

using ParamConfig = std::map<std::string, double>;

struct Trial {
    ParamConfig config;
    double objective = -INFINITY;  // mean CV AUC; -inf marks a failed trial
    double fold_std = 0.0;
};

struct TpeOptions {
    double gamma = 0.25;
    int n_candidates = 24;
    int n_startup = 10;
};

namespace detail {

inline double dim_transform(const SearchDim& d, double v) {
    return d.kind == SearchDim::Kind::log_uniform ? std::log(v) : v;
}
inline double dim_untransform(const SearchDim& d, double v) {
    return d.kind == SearchDim::Kind::log_uniform ? std::exp(v) : v;
}

// Parzen mixture over observed values in transformed coordinates;
// Scott's-rule bandwidth with a floor at a tenth of the range.
struct Parzen {
    std::vector<double> centers;
    double bw = 1.0;
    double lo, hi;

    Parzen(const std::vector<double>& values, double lo_t, double hi_t)
        : centers(values), lo(lo_t), hi(hi_t) {
        double n = double(centers.size());
        double m = 0.0;
        for (double c : centers) m += c;
        m /= n;
        double var = 0.0;
        for (double c : centers) var += (c - m) * (c - m);
        double sd = std::sqrt(var / std::max(1.0, n - 1.0));
        bw = sd * std::pow(n, -0.2);
        // Keep a floor at a tenth of the range so the proposal mixture
        // never collapses onto the incumbent and stops exploring.
        bw = std::max(bw, (hi - lo) / 10.0);
        bw = std::max(bw, 1e-12);
    }

    double pdf(double x) const {
        double acc = 0.0;
        for (double c : centers) {
            double z = (x - c) / bw;
            acc += std::exp(-0.5 * z * z);
        }
        return acc / (double(centers.size()) * bw * std::sqrt(2.0 * M_PI)) +
               1e-12;
    }

    double sample(std::mt19937_64& rng) const {
        std::normal_distribution<double> noise(0.0, bw);
        double c = centers[rng() % centers.size()];
        double x = c + noise(rng);
        return std::min(hi, std::max(lo, x));
    }
};

}  // namespace detail

inline ParamConfig sample_uniform(const SearchSpace& space, std::mt19937_64& rng) {
    ParamConfig cfg;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const auto& d : space.dims) {
        if (d.kind == SearchDim::Kind::categorical) {
            cfg[d.name] = d.options[rng() % d.options.size()];
        } else {
            double lo = detail::dim_transform(d, d.lo);
            double hi = detail::dim_transform(d, d.hi);
            cfg[d.name] = detail::dim_untransform(d, lo + (hi - lo) * u(rng));
        }
    }
    return cfg;
}

// One TPE suggestion. Below n_startup completed trials the draw is
// uniform; afterwards the history is split at the gamma-quantile into
// good/bad sets, densities l(x) and g(x) are fit per dimension, and the
// best of n_candidates draws from l by the ratio l/g is returned.
inline ParamConfig tpe_suggest(const std::vector<Trial>& history,
                               const SearchSpace& space, uint64_t seed,
                               const TpeOptions& opt = {}) {
    space.validate();
    std::mt19937_64 rng(seed);
    std::vector<const Trial*> ok;
    for (const auto& t : history)
        if (std::isfinite(t.objective)) ok.push_back(&t);
    if (int(ok.size()) < opt.n_startup) return sample_uniform(space, rng);

    std::sort(ok.begin(), ok.end(),
              [](const Trial* a, const Trial* b) { return a->objective > b->objective; });
    size_t n_good = std::max<size_t>(
        1, size_t(std::ceil(opt.gamma * double(ok.size()))));
    if (n_good >= ok.size()) n_good = ok.size() - 1;

    double best_score = -INFINITY;
    ParamConfig best;
    for (int c = 0; c < opt.n_candidates; ++c) {
        ParamConfig cand;
        double log_ratio = 0.0;
        for (const auto& d : space.dims) {
            if (d.kind == SearchDim::Kind::categorical) {
                // smoothed category frequencies
                std::vector<double> wg(d.options.size(), 1.0),
                    wb(d.options.size(), 1.0);
                auto opt_index = [&](double v) {
                    size_t best_i = 0;
                    for (size_t i = 0; i < d.options.size(); ++i)
                        if (std::abs(d.options[i] - v) <
                            std::abs(d.options[best_i] - v))
                            best_i = i;
                    return best_i;
                };
                for (size_t i = 0; i < ok.size(); ++i)
                    (i < n_good ? wg : wb)[opt_index(ok[i]->config.at(d.name))] += 1.0;
                double sg = 0.0, sb = 0.0;
                for (size_t i = 0; i < d.options.size(); ++i) {
                    sg += wg[i];
                    sb += wb[i];
                }
                // draw from the good distribution
                std::uniform_real_distribution<double> u(0.0, sg);
                double r = u(rng), acc = 0.0;
                size_t pick = 0;
                for (size_t i = 0; i < d.options.size(); ++i) {
                    acc += wg[i];
                    if (r <= acc) {
                        pick = i;
                        break;
                    }
                }
                cand[d.name] = d.options[pick];
                log_ratio += std::log((wg[pick] / sg) / (wb[pick] / sb));
            } else {
                double lo = detail::dim_transform(d, d.lo);
                double hi = detail::dim_transform(d, d.hi);
                std::vector<double> good_v, bad_v;
                for (size_t i = 0; i < ok.size(); ++i) {
                    double v = detail::dim_transform(d, ok[i]->config.at(d.name));
                    (i < n_good ? good_v : bad_v).push_back(v);
                }
                detail::Parzen l(good_v, lo, hi), g(bad_v, lo, hi);
                double x = l.sample(rng);
                cand[d.name] = detail::dim_untransform(d, x);
                log_ratio += std::log(l.pdf(x)) - std::log(g.pdf(x));
            }
        }
        if (log_ratio > best_score) {
            best_score = log_ratio;
            best = std::move(cand);
        }
    }
    return best;
}

struct OptimizeResult {
    ParamConfig best_config;
    double best_objective = -INFINITY;
    double best_fold_std = 0.0;
    std::vector<Trial> history;
};

// Sequential search: suggest, evaluate, log. Objective failures score
// -inf and the search continues.
inline OptimizeResult tpe_optimize(
    const SearchSpace& space,
    const std::function<std::pair<double, double>(const ParamConfig&)>& objective,
    int budget, uint64_t seed, const TpeOptions& opt = {}) {
    if (budget < 1) throw std::invalid_argument("tpe_optimize: budget must be >= 1");
    OptimizeResult res;
    for (int t = 0; t < budget; ++t) {
        ParamConfig cfg = tpe_suggest(res.history, space, seed + uint64_t(t) * 0x9e3779b97f4a7c15ULL, opt);
        Trial trial;
        trial.config = cfg;
        try {
            auto [obj, sd] = objective(cfg);
            trial.objective = std::isfinite(obj) ? obj : -INFINITY;
            trial.fold_std = sd;
        } catch (const std::exception&) {
            trial.objective = -INFINITY;
        }
        if (trial.objective > res.best_objective) {
            res.best_objective = trial.objective;
            res.best_fold_std = trial.fold_std;
            res.best_config = trial.config;
        }
        res.history.push_back(std::move(trial));
    }
    return res;
}

}  // namespace coughml
