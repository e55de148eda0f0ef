// Copyright 2026 The convgeom Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "convgeom/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <thread>

#include "json.hpp"

namespace convgeom {

using nlohmann::ordered_json;

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform_open() {
    double u;
    do {
        u = uniform();
    } while (u == 0.0);
    return u;
}

std::size_t Rng::index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("Rng::index: empty range");
    // Rejection keeps the draw unbiased.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
        v = engine_();
    } while (v >= limit);
    return static_cast<std::size_t>(v % n);
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

double Rng::exponential(double mean) { return -mean * std::log(uniform_open()); }

int Rng::poisson(double lambda) {
    if (lambda <= 0.0) return 0;
    // Inversion by sequential search; fine for the moderate rates used here.
    const double u = uniform();
    double p = std::exp(-lambda);
    double cdf = p;
    int k = 0;
    while (u > cdf && k < 100000) {
        ++k;
        p *= lambda / k;
        cdf += p;
        if (p == 0.0 && cdf < u) break;
    }
    return k;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (k + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<double> default_coefficients(ModelId model) {
    switch (model) {
        case ModelId::M1: return {-1.47, 0.0002};
        case ModelId::M2: return {-1.48, 0.00004};
        case ModelId::M3: return {-1.40, 0.252};
        case ModelId::M4: return {-1.09, 0.246};
        case ModelId::M5: return {-1.33, 0.193, 0.147, 0.038};
        case ModelId::M6: return {-0.92099, 0.32972, -0.39631, -0.19115};
    }
    return {};
}

void SynthConfig::validate() const {
    scale.validate();
    if (n_discussions < 1) throw std::invalid_argument("synth: n_discussions must be >= 1");
    if (mean_posts < 1.0) throw std::invalid_argument("synth: mean_posts must be >= 1");
    if (p_reply_root < 0.0 || p_reply_root > 1.0) throw std::invalid_argument("synth: p_reply_root outside [0, 1]");
    if (mean_interarrival_hours <= 0.0) throw std::invalid_argument("synth: mean_interarrival_hours must be > 0");
    if (sigma < 0.0 || tau < 0.0 || baseline_sd < 0.0) throw std::invalid_argument("synth: sds must be >= 0");
    if (replications < 1) throw std::invalid_argument("synth: replications must be >= 1");
    const std::size_t k = make_spec(model, response).terms.size();
    for (const auto& c : coefficients) {
        if (!c.empty() && c.size() != k) {
            throw std::invalid_argument("synth: model " + std::string(to_string(model)) + " needs " +
                                        std::to_string(k) + " coefficients");
        }
    }
}

SynthConfig synth_config_from_json(const std::string& json_text) {
    const auto j = ordered_json::parse(json_text);
    SynthConfig c;
    c.n_discussions = j.value("n_discussions", c.n_discussions);
    c.mean_posts = j.value("mean_posts", c.mean_posts);
    c.p_reply_root = j.value("p_reply_root", c.p_reply_root);
    c.mean_interarrival_hours = j.value("mean_interarrival_hours", c.mean_interarrival_hours);
    c.start_epoch = j.value("start_epoch", c.start_epoch);
    if (j.contains("model")) {
        auto m = parse_model_id(j["model"].get<std::string>());
        if (!m) throw std::invalid_argument("synth: unknown model " + j["model"].dump());
        c.model = *m;
    }
    if (j.contains("coefficients")) {
        const auto& cj = j["coefficients"];
        if (cj.is_array()) {
            for (auto& per_dim : c.coefficients) per_dim = cj.get<std::vector<double>>();
        } else {
            for (const auto& [key, value] : cj.items()) {
                auto d = parse_dimension(key);
                if (!d) throw std::invalid_argument("synth: unknown dimension '" + key + "'");
                c.coefficients[index(*d)] = value.get<std::vector<double>>();
            }
        }
    }
    c.sigma = j.value("sigma", c.sigma);
    c.tau = j.value("tau", c.tau);
    if (j.contains("cluster_noise")) {
        const auto s = j["cluster_noise"].get<std::string>();
        if (s == "intercept") c.cluster_noise = ClusterNoise::Intercept;
        else if (s == "depth_layer") c.cluster_noise = ClusterNoise::DepthLayer;
        else throw std::invalid_argument("synth: cluster_noise must be intercept|depth_layer");
    }
    c.baseline_sd = j.value("baseline_sd", c.baseline_sd);
    c.continuous = j.value("continuous", c.continuous);
    c.scale.min = j.value("scale_min", c.scale.min);
    c.scale.max = j.value("scale_max", c.scale.max);
    c.replications = j.value("replications", c.replications);
    if (j.contains("prev_scope")) {
        auto s = parse_prev_scope(j["prev_scope"].get<std::string>());
        if (!s) throw std::invalid_argument("synth: prev_scope must be discussion|branch");
        c.prev_scope = *s;
    }
    if (j.contains("response")) {
        auto d = parse_dimension(j["response"].get<std::string>());
        if (!d) throw std::invalid_argument("synth: unknown response dimension");
        c.response = *d;
    }
    c.model_id = j.value("model_id", c.model_id);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

std::string synth_config_to_json(const SynthConfig& c) {
    ordered_json j;
    j["n_discussions"] = c.n_discussions;
    j["mean_posts"] = c.mean_posts;
    j["p_reply_root"] = c.p_reply_root;
    j["mean_interarrival_hours"] = c.mean_interarrival_hours;
    j["start_epoch"] = c.start_epoch;
    j["model"] = std::string(to_string(c.model));
    ordered_json coef = ordered_json::object();
    for (Dimension d : kAllDimensions) coef[std::string(name(d))] = c.coefficients[index(d)];
    j["coefficients"] = coef;
    j["sigma"] = c.sigma;
    j["tau"] = c.tau;
    j["cluster_noise"] = c.cluster_noise == ClusterNoise::Intercept ? "intercept" : "depth_layer";
    j["baseline_sd"] = c.baseline_sd;
    j["continuous"] = c.continuous;
    j["scale_min"] = c.scale.min;
    j["scale_max"] = c.scale.max;
    j["replications"] = c.replications;
    j["prev_scope"] = c.prev_scope == PrevScope::Discussion ? "discussion" : "branch";
    j["response"] = std::string(name(c.response));
    j["model_id"] = c.model_id;
    j["seed"] = c.seed;
    return j.dump(2) + "\n";
}

namespace {

std::string padded(const char* prefix, int v, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%0*d", prefix, width, v);
    return buf;
}

// Covariates a model needs before its linear predictor can be evaluated.
SampleFilter covariate_filter(const ModelSpec& spec) {
    SampleFilter f;
    for (Term t : spec.terms) {
        switch (t) {
            case Term::DtPrev: f.dt_prev = true; break;
            case Term::DtParent: f.dt_parent = true; break;
            case Term::SibOlderMean: f.older_sibling = true; break;
            case Term::ParentMetric: f.parent_metric = true; break;
            case Term::BrNeg: f.br_neg = true; break;
            case Term::ParentXSib: f.parent_metric = f.older_sibling = true; break;
            case Term::ParentXBr: f.parent_metric = f.br_neg = true; break;
            case Term::Intercept: break;
        }
    }
    return f;
}

// Integer replications around `value` whose mean is exactly `value`.
std::vector<int> jittered_replications(int value, int reps, const AnnotationScale& scale, Rng& rng) {
    std::vector<int> out;
    const bool room = value - 1 >= scale.min && value + 1 <= scale.max;
    for (int r = 0; r + 1 < reps; r += 2) {
        const int j = room && rng.bernoulli(0.5) ? 1 : 0;
        out.push_back(value + j);
        out.push_back(value - j);
    }
    if (reps % 2 == 1) out.push_back(value);
    return out;
}

}  // namespace

SynthOutput generate_corpus(const SynthConfig& config) {
    config.validate();
    Rng rng(config.seed);
    SynthOutput out;

    std::vector<Post> posts;
    for (int d = 0; d < config.n_discussions; ++d) {
        const std::string did = padded("d", d, 4);
        const int n = 1 + rng.poisson(config.mean_posts - 1.0);
        std::int64_t t = config.start_epoch + static_cast<std::int64_t>(d) * 30 * 86400;
        std::vector<std::string> non_root;
        for (int i = 0; i < n; ++i) {
            Post p;
            p.post_id = did + padded("-p", i, 5);
            p.discussion_id = did;
            p.author = padded("user", static_cast<int>(rng.index(400)), 3);
            if (i > 0) {
                t += static_cast<std::int64_t>(std::llround(rng.exponential(config.mean_interarrival_hours) * 3600.0));
                const bool to_root = non_root.empty() || rng.bernoulli(config.p_reply_root);
                p.parent_id = to_root ? did + padded("-p", 0, 5) : non_root[rng.index(non_root.size())];
                non_root.push_back(p.post_id);
            }
            p.timestamp = t;
            p.text = i == 0 ? "Synthetic root post of discussion " + did + "." : "Synthetic reply " + p.post_id + ".";
            posts.push_back(std::move(p));
        }
    }
    out.corpus = make_corpus(std::move(posts));

    const ModelSpec spec = make_spec(config.model, config.response);
    const SampleFilter needs = covariate_filter(spec);
    PerDimension<std::vector<double>> coef;
    for (Dimension dim : kAllDimensions) {
        coef[index(dim)] = config.coefficients[index(dim)].empty() ? default_coefficients(config.model)
                                                                   : config.coefficients[index(dim)];
    }

    const std::int64_t stamp = 0;
    for (const auto& [did, tree] : out.corpus.discussions) {
        PerDimension<double> intercept_shock{};
        std::map<int, PerDimension<double>> layer_shock;
        for (auto& s : intercept_shock) s = config.tau * rng.normal();

        for (const std::string& id : tree.chronological) {
            if (id == tree.root_id) continue;
            FeatureRow cov;
            cov.depth = tree.depth.at(id);
            cov.dt_prev = delta_t_prev(out.corpus, tree, id, config.prev_scope);
            cov.dt_parent = delta_t_parent(out.corpus, tree, id);
            const std::string& parent = tree.parent.at(id);
            const auto parent_it = cov.depth >= 2 ? out.metrics.find(parent) : out.metrics.end();
            for (Dimension dim : kAllDimensions) {
                const std::size_t k = index(dim);
                if (parent_it != out.metrics.end()) cov.parent_metric[k] = parent_it->second[k];
                cov.sib_older_mean[k] = older_sibling_mean(tree, id, dim, out.metrics);
                cov.br_neg[k] = br_neg_indicator(tree, id, dim, out.metrics);
            }

            if (config.cluster_noise == ClusterNoise::DepthLayer && !layer_shock.count(cov.depth)) {
                auto& s = layer_shock[cov.depth];
                for (auto& v : s) v = config.tau * rng.normal();
            }

            PerDimension<double> value{};
            for (Dimension dim : kAllDimensions) {
                const std::size_t k = index(dim);
                double y = 0.0;
                if (needs.accepts(cov, dim)) {
                    for (std::size_t j = 0; j < spec.terms.size(); ++j) y += coef[k][j] * term_value(spec.terms[j], cov, dim);
                } else {
                    y = coef[k][0] + config.baseline_sd * rng.normal();
                }
                y += config.cluster_noise == ClusterNoise::Intercept ? intercept_shock[k] : layer_shock[cov.depth][k];
                y += config.sigma * rng.normal();

                ++out.draws;
                if (y < config.scale.min || y > config.scale.max) {
                    ++out.truncations;
                    y = std::clamp(y, static_cast<double>(config.scale.min), static_cast<double>(config.scale.max));
                }
                if (!config.continuous) {
                    const int v = static_cast<int>(std::lround(y));
                    AnnotationRecord rec;
                    rec.pair_id = id;
                    rec.dimension = dim;
                    rec.raw_scores = jittered_replications(v, config.replications, config.scale, rng);
                    rec.mean = mean_of(rec.raw_scores);
                    y = rec.mean;
                    out.records.push_back(std::move(rec));
                }
                value[k] = y;
            }
            out.metrics.emplace(id, value);
        }
    }

    if (!config.continuous) {
        for (const AnnotationRecord& rec : out.records) {
            const Post& child = out.corpus.post(rec.pair_id);
            const Post& parent = out.corpus.post(*child.parent_id);
            const std::string h = pair_hash(parent.text, child.text);
            for (std::size_t r = 0; r < rec.raw_scores.size(); ++r) {
                out.cache.push_back({h, config.model_id, config.scale, rec.dimension, static_cast<int>(r),
                                     rec.raw_scores[r], stamp});
            }
        }
    }
    return out;
}

std::string RecoverySummary::to_json() const {
    ordered_json j;
    j["model"] = std::string(to_string(model));
    j["response"] = std::string(name(response));
    j["runs"] = runs;
    j["failed_runs"] = failed_runs;
    j["truncation_rate"] = truncation_rate;
    j["mean_n_obs"] = mean_n_obs;
    ordered_json coefs = ordered_json::array();
    for (const auto& c : coefficients) {
        coefs.push_back({{"term", c.term},
                         {"truth", c.truth},
                         {"mean_estimate", c.mean_estimate},
                         {"bias", c.bias},
                         {"mc_se", c.mc_se},
                         {"coverage", c.coverage}});
    }
    j["coefficients"] = coefs;
    return j.dump(2) + "\n";
}

RecoverySummary recovery_experiment(const SynthConfig& config, int n_runs, const InferenceOptions& options,
                                    int threads) {
    config.validate();
    if (n_runs < 1) throw std::invalid_argument("recovery: n_runs must be >= 1");
    const ModelSpec spec = make_spec(config.model, config.response, options);
    const auto& truth_in = config.coefficients[index(config.response)];
    const std::vector<double> truth = truth_in.empty() ? default_coefficients(config.model) : truth_in;
    const std::size_t k = spec.terms.size();

    struct RunResult {
        bool ok = false;
        std::vector<double> estimate, covered;
        std::size_t n_obs = 0, truncations = 0, draws = 0;
    };
    std::vector<RunResult> results(static_cast<std::size_t>(n_runs));

    auto run_one = [&](int r) {
        SynthConfig c = config;
        c.seed = derive_seed(config.seed, static_cast<std::uint64_t>(r));
        const SynthOutput synth = generate_corpus(c);
        RunResult& res = results[static_cast<std::size_t>(r)];
        res.truncations = synth.truncations;
        res.draws = synth.draws;
        try {
            const FeatureTable ft = compute_feature_table(synth.corpus, synth.metrics);
            const RegressionTable t = run_model(spec, ft.rows, options);
            res.n_obs = t.n_obs;
            for (std::size_t j = 0; j < k; ++j) {
                const auto& e = t.terms[j];
                res.estimate.push_back(e.estimate);
                const PValue p = p_value(e.estimate - truth[j], e.std_error, t.n_clusters, options.pvalue);
                res.covered.push_back(p.value >= 0.05 ? 1.0 : 0.0);
            }
            res.ok = true;
        } catch (const InferenceError&) {
            res.ok = false;
        }
    };

    const int n_threads = std::max(1, std::min(threads, n_runs));
    if (n_threads == 1) {
        for (int r = 0; r < n_runs; ++r) run_one(r);
    } else {
        std::atomic<int> next{0};
        std::vector<std::jthread> pool;
        for (int t = 0; t < n_threads; ++t) {
            pool.emplace_back([&] {
                for (int r = next++; r < n_runs; r = next++) run_one(r);
            });
        }
    }

    RecoverySummary s;
    s.model = config.model;
    s.response = config.response;
    s.runs = n_runs;
    std::size_t trunc = 0, draws = 0;
    std::vector<std::vector<double>> est(k), cov(k);
    double n_obs = 0.0;
    for (const RunResult& r : results) {
        trunc += r.truncations;
        draws += r.draws;
        if (!r.ok) {
            ++s.failed_runs;
            continue;
        }
        n_obs += static_cast<double>(r.n_obs);
        for (std::size_t j = 0; j < k; ++j) {
            est[j].push_back(r.estimate[j]);
            cov[j].push_back(r.covered[j]);
        }
    }
    const int ok = n_runs - s.failed_runs;
    s.truncation_rate = draws ? static_cast<double>(trunc) / static_cast<double>(draws) : 0.0;
    s.mean_n_obs = ok ? n_obs / ok : 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        CoefficientRecovery c;
        c.term = std::string(to_string(spec.terms[j]));
        c.truth = truth[j];
        if (ok > 0) {
            const Eigen::Map<const Eigen::VectorXd> e(est[j].data(), ok);
            c.mean_estimate = e.mean();
            c.bias = c.mean_estimate - c.truth;
            const double var = ok > 1 ? (e.array() - c.mean_estimate).square().sum() / (ok - 1) : 0.0;
            c.mc_se = std::sqrt(var / ok);
            c.coverage = Eigen::Map<const Eigen::VectorXd>(cov[j].data(), ok).mean();
        }
        s.coefficients.push_back(c);
    }
    return s;
}

}  // namespace convgeom
