#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "adam.hpp"
#include "errors.hpp"
#include "regretnet.hpp"
#include "rng.hpp"
#include "valuations.hpp"

namespace deepauction::training {

using diffcore::ParamStore;
using diffcore::Tensor;
using regretnet::ArchSpec;
using valuations::SettingSpec;

enum class RegretMode { kGradient, kSampleBased };

struct TrainConfig {
  std::string setting_id = "I";
  int hidden_layers = 2;
  int hidden_width = 100;
  std::size_t train_size = 5000;
  std::size_t test_size = 10000;
  std::size_t batch = 128;
  int epochs = 40;
  double rho_init = 1.0;
  double rho_increment = 1.0;
  int rho_inc_every_epochs = 2;
  int lagrange_every = 100;  // Z, in minibatches
  double lambda_init = 1.0;
  int misreport_steps = 25;   // R
  double misreport_lr = 0.1;  // gamma
  std::size_t misreport_samples = 100;  // Q, sample-based mode
  double adam_lr = 0.001;
  std::uint64_t seed = 0;
  RegretMode mode = RegretMode::kGradient;
  bool verbose = false;

  void validate() const;
};

struct LagrangeState {
  std::vector<double> lambda;
  double rho = 1.0;
  int epoch = 0;
  std::uint64_t minibatch = 0;
};

// lambda_i += rho * rgt_i. Callers invoke this only on the configured
// multiplier-update cadence.
void multiplier_update(LagrangeState& state, const std::vector<double>& rgt);

struct EpochStats {
  int epoch = 0;
  double revenue = 0.0;
  double regret_mean = 0.0;
  std::vector<double> regret_per_bidder;
  std::vector<double> lambda;
  double rho = 0.0;
  double wall_time_s = 0.0;
};

struct History {
  std::vector<EpochStats> epochs;
};

struct TrainResult {
  ArchSpec arch;
  ParamStore params;
  History history;
};

// Cached per-(profile, bidder) misreports, one L x report_dim tensor per
// bidder, initialized from the setting's own valuation distribution and
// reused across epochs.
struct MisreportCache {
  std::vector<Tensor> per_bidder;

  static MisreportCache init(const SettingSpec& spec, std::size_t profiles,
                             Rng& rng);
};

// Projected Adam ascent on a batch of row vectors. `grad_fn` receives the
// current x and returns the per-row ascent gradient (same shape);
// `project_row` clamps one row onto the feasible set (may be empty).
void adam_ascent(Tensor& x, int steps, double lr,
                 const std::function<Tensor(const Tensor&)>& grad_fn,
                 const std::function<void(double*)>& project_row);

// Empirical ex post regret per bidder on a batch, at explicit misreports
// (one B x report_dim tensor per bidder): mean over profiles of the
// truthful-vs-misreport utility difference, floored at zero per profile.
std::vector<double> empirical_regret(const ArchSpec& arch,
                                     const ParamStore& params,
                                     const Tensor& batch,
                                     const std::vector<Tensor>& misreports);

// Sample-based approximate regret: per (profile, bidder), the best of Q
// uniform misreports, averaged over profiles and floored at zero. Also
// reports the winning misreports so the solver can push gradients through
// them.
struct SampleRegret {
  std::vector<double> regret;       // per bidder
  std::vector<Tensor> best_reports; // per bidder, B x report_dim
  std::vector<Tensor> gains;        // per bidder, B x 1 (unfloored)
};
SampleRegret sample_based_regret(const ArchSpec& arch, const ParamStore& params,
                                 const SettingSpec& spec, const Tensor& batch,
                                 std::size_t q, Rng& rng);

// Variant with a caller-supplied misreport sampler (used with discrete
// toy supports in tests).
using ReportSampler = std::function<void(int bidder, Rng& rng, double* report)>;
SampleRegret sample_based_regret(const ArchSpec& arch, const ParamStore& params,
                                 const ReportSampler& sampler,
                                 const Tensor& batch, std::size_t q, Rng& rng);

// One evaluation of the augmented Lagrangian objective at frozen
// misreports, and its parameter gradient:
//   value = -(1/B) sum_l sum_i p_i
//           + sum_i lambda_i * D_i + (rho / 2B) * sum_i D_i^2,
//   grad  = -(1/B) sum grad p
//           + sum_i (lambda_i + rho * rgt_i) * sum_l g_{l,i},
// where D_i is the unfloored sum over the batch of utility differences at
// the misreports, g_{l,i} the per-profile utility-difference gradient and
// rgt_i the floored per-profile mean. The misreports are treated as
// constants (no differentiation through the inner maximization).
struct LagrangianEval {
  double value = 0.0;
  double revenue_sum = 0.0;
  std::map<std::string, Tensor> param_grads;
  std::vector<double> regret;  // floored per-bidder empirical regret
};
LagrangianEval eval_lagrangian(const ArchSpec& arch, const ParamStore& params,
                               const Tensor& batch,
                               const std::vector<Tensor>& misreports,
                               const std::vector<double>& lambda, double rho);

// Full augmented Lagrangian training loop.
TrainResult train(const TrainConfig& cfg);

// Exposed for tests: ascends the cache entries for the given profile rows
// with R projected Adam steps per (profile, bidder) and returns the final
// per-bidder misreport bid blocks for the rows.
class Trainer {
 public:
  explicit Trainer(const TrainConfig& cfg);
  ~Trainer();

  TrainResult run();

  const SettingSpec& spec() const { return spec_; }
  const ArchSpec& arch() const { return arch_; }

  // R misreport-ascent steps on the cached entries for `rows`, against
  // the current parameters. Returns per-bidder B x report_dim blocks.
  std::vector<Tensor> optimize_misreports(const Tensor& batch,
                                          const std::vector<std::size_t>& rows);

  const MisreportCache& cache() const { return cache_; }
  const ParamStore& params() const { return params_; }
  ParamStore& params_mut() { return params_; }

 private:
  struct BidderExec;
  void misreport_phase(const Tensor& batch, const std::vector<std::size_t>& rows,
                       std::vector<Tensor>* mis_blocks,
                       std::vector<Tensor>* gains);
  void sample_phase(const Tensor& batch, std::vector<Tensor>* mis_blocks,
                    std::vector<Tensor>* gains, Rng& rng);

  TrainConfig cfg_;
  SettingSpec spec_;
  ArchSpec arch_;
  ParamStore params_;
  MisreportCache cache_;
  std::vector<std::unique_ptr<BidderExec>> bidder_execs_;
};

}  // namespace deepauction::training
