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

#ifndef CONVGEOM_SYNTH_HPP
#define CONVGEOM_SYNTH_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "convgeom/annotator.hpp"
#include "convgeom/cache.hpp"
#include "convgeom/corpus.hpp"
#include "convgeom/geometry.hpp"
#include "convgeom/inference.hpp"
#include "convgeom/types.hpp"

namespace convgeom {

/// Portable random source: mt19937_64 plus distributions implemented here so
/// that a seed yields the same stream with any standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform();                   // [0, 1)
    double uniform_open();              // (0, 1)
    std::size_t index(std::size_t n);   // [0, n)
    double normal();                    // N(0, 1), Marsaglia polar method
    double exponential(double mean);
    int poisson(double lambda);
    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Derives an independent stream seed for sub-run `k`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k);

enum class ClusterNoise {
    Intercept,   // one shock per discussion
    DepthLayer,  // one shock per (discussion, depth); never shared with ancestors
};

struct SynthConfig {
    int n_discussions = 60;
    double mean_posts = 38.0;          // per discussion, root included
    double p_reply_root = 0.35;        // else a uniformly chosen non-root post
    double mean_interarrival_hours = 6.0;
    std::int64_t start_epoch = 1'230'768'000;
    ModelId model = ModelId::M6;
    PerDimension<std::vector<double>> coefficients;  // per dimension, in make_spec term order
    double sigma = 1.0;                // post-level noise sd
    double tau = 0.5;                  // cluster-level noise sd
    ClusterNoise cluster_noise = ClusterNoise::Intercept;
    double baseline_sd = 1.5;          // spread for posts lacking the model's covariates
    bool continuous = false;           // skip rounding to scale integers
    AnnotationScale scale;
    int replications = 4;
    PrevScope prev_scope = PrevScope::Discussion;
    Dimension response = Dimension::DisagreeVsAgree;  // fitted by the recovery experiment
    std::string model_id = "synthetic";
    std::uint64_t seed = 1;

    void validate() const;
};

/// Default generating coefficients of a model (shared by all dimensions).
std::vector<double> default_coefficients(ModelId model);

SynthConfig synth_config_from_json(const std::string& json_text);
std::string synth_config_to_json(const SynthConfig& config);

struct SynthOutput {
    Corpus corpus;
    PostMetrics metrics;                  // drawn post-level values
    std::vector<AnnotationRecord> records;  // rounded mode only
    std::vector<CacheEntry> cache;          // rounded mode only
    std::size_t truncations = 0;            // scores clipped to the scale
    std::size_t draws = 0;
};

SynthOutput generate_corpus(const SynthConfig& config);

struct CoefficientRecovery {
    std::string term;
    double truth = 0.0;
    double mean_estimate = 0.0;
    double bias = 0.0;
    double mc_se = 0.0;     // Monte-Carlo standard error of the mean estimate
    double coverage = 0.0;  // share of runs whose 95% CI covers the truth
};

struct RecoverySummary {
    ModelId model = ModelId::M6;
    Dimension response = Dimension::DisagreeVsAgree;
    int runs = 0;
    int failed_runs = 0;
    double truncation_rate = 0.0;
    double mean_n_obs = 0.0;
    std::vector<CoefficientRecovery> coefficients;

    std::string to_json() const;
};

/// Regenerates and refits `n_runs` times from derived seeds. Runs may execute
/// on several threads; the summary does not depend on the thread count.
RecoverySummary recovery_experiment(const SynthConfig& config, int n_runs, const InferenceOptions& options = {},
                                    int threads = 1);

}  // namespace convgeom

#endif  // CONVGEOM_SYNTH_HPP
