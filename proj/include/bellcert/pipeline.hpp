#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>

#include <json.hpp>

#include "bellcert/bits.hpp"
#include "bellcert/entropy.hpp"
#include "bellcert/extractor.hpp"
#include "bellcert/ns_mle.hpp"
#include "bellcert/pbr.hpp"
#include "bellcert/stats_tests.hpp"

namespace bellcert {

using json = nlohmann::json;

enum class BudgetConvention {
  RawRatio,     // eps_p : eps_ext = ratio : 1
  KappaScaled,  // eps_p/kappa : eps_ext = ratio : 1
};

struct ErrorBudget {
  double eps_p = 0;
  double eps_ext = 0;
  BudgetConvention convention = BudgetConvention::RawRatio;
};

// Both conventions satisfy eps_fin = eps_p/kappa + eps_ext.
ErrorBudget resolve_error_budget(double eps_fin, double kappa, double ratio,
                                 BudgetConvention convention = BudgetConvention::RawRatio);

struct RunConfig {
  std::filesystem::path trials_path;
  std::filesystem::path seed_path;
  std::filesystem::path out_bits_path;
  std::filesystem::path report_path;
  std::int64_t train_count = 0;
  double quantile = 0.95;
  double eps_fin = 0.001;
  double eps_split_ratio = 9;
  double kappa = 1;
  std::int64_t target_t = 256;
  BudgetConvention convention = BudgetConvention::RawRatio;
  bool free_00 = false;
  std::optional<std::uint64_t> dev_seed;
  unsigned threads = 0;
  MleConfig mle;
};

struct RunReport {
  json config;
  std::map<std::string, std::string> digests;
  bool passed = false;
  std::string abort_reason;
  bool certifiable = true;
  std::int64_t train_trials = 0;
  std::int64_t protocol_trials = 0;
  std::optional<MleResult> mle;
  std::optional<BellFunction> bell;
  std::optional<BellBound> bound;
  std::optional<ThresholdPlan> threshold;
  std::optional<ErrorBudget> budget;
  std::optional<ProtocolParams> params;
  std::optional<ProtocolResult> result;
  std::optional<EntropyCertificate> certificate;
  std::optional<std::int64_t> max_output_bits;
  std::optional<ExtractorPlan> plan;
  std::string output_hex;
  std::string started_at;
  std::string finished_at;

  json to_json() const;
  static RunReport from_json(const json& j);
};

struct PipelineOutput {
  RunReport report;
  std::optional<BitString> bits;
};

// Outcome bits of the protocol trials with every trial after the crossing set to (0,0),
// the string the extractor consumes.
BitString protocol_output_bits(std::span<const TrialRecord> protocol_trials,
                               const ProtocolResult& result);

// Everything after ingest. Seed bits come from `seed` (first d bits used) or, with
// cfg.dev_seed set, from the simulator's generator, which marks the run non-certifiable.
PipelineOutput run_pipeline(std::span<const TrialRecord> trials, const RunConfig& cfg,
                            const BitString* seed);

// File-backed run: reads trials and seed, writes the report always and bits only on pass.
RunReport full_run(const RunConfig& cfg);

json to_json(const JointDistribution& d);
JointDistribution distribution_from_json(const json& j);
json to_json(const BellFunction& t);
BellFunction bell_function_from_json(const json& j);
json to_json(const MleResult& r);
json to_json(const BellBound& b);
json to_json(const ThresholdPlan& p);
json to_json(const ErrorBudget& b);
json to_json(const ProtocolParams& p);
ProtocolParams protocol_params_from_json(const json& j);
json to_json(const ProtocolResult& r);
json to_json(const EntropyCertificate& c);
json to_json(const ExtractorPlan& p);
json to_json(const TestReport& r);

}  // namespace bellcert
