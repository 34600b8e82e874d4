#include "bellcert/pipeline.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include "bellcert/simulator.hpp"
#include "bellcert/trial_io.hpp"

namespace bellcert {

namespace {

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string cell_key(int i) {
  const int a = (i >> 3) & 1, b = (i >> 2) & 1, x = (i >> 1) & 1, y = i & 1;
  return std::to_string(a) + "," + std::to_string(b) + "," + std::to_string(x) + "," + std::to_string(y);
}

json table_json(const Table16& t) {
  json j = json::object();
  for (int i = 0; i < 16; ++i) j[cell_key(i)] = t[i];
  return j;
}

Table16 table_from_json(const json& j) {
  Table16 t{};
  for (int i = 0; i < 16; ++i) {
    const auto key = cell_key(i);
    if (!j.contains(key)) throw Error(ErrorKind::Parse, "missing table entry \"" + key + "\"");
    t[i] = j.at(key).get<double>();
  }
  return t;
}

template <class F>
auto stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("stage ") + name + ": " + e.what());
  }
}

const char* convention_name(BudgetConvention c) {
  return c == BudgetConvention::RawRatio ? "raw-ratio" : "kappa-scaled";
}

BudgetConvention convention_from(const std::string& s) {
  if (s == "raw-ratio") return BudgetConvention::RawRatio;
  if (s == "kappa-scaled") return BudgetConvention::KappaScaled;
  throw Error(ErrorKind::Parse, "unknown budget convention " + s);
}

json optional_json(const auto& opt) { return opt ? to_json(*opt) : json(nullptr); }

MleResult mle_from_json(const json& j) {
  MleResult r;
  r.q = distribution_from_json(j.at("q"));
  r.log_likelihood = j.at("log_likelihood").get<double>();
  r.iterations = j.at("iterations").get<std::int64_t>();
  r.converged = j.at("converged").get<bool>();
  r.weights = j.at("vertex_weights").get<std::array<double, 24>>();
  return r;
}

BellBound bound_from_json(const json& j) {
  return {j.at("m").get<double>(), j.at("achieving_vertex").get<int>()};
}

ThresholdPlan threshold_from_json(const json& j) {
  ThresholdPlan p;
  p.ln_vthresh = j.at("ln_vthresh").get<double>();
  p.mu = j.at("mu").get<double>();
  p.sigma2 = j.at("sigma2").get<double>();
  p.quantile = j.at("quantile").get<double>();
  p.z = j.at("z").get<double>();
  p.n = j.at("n").get<std::int64_t>();
  return p;
}

ErrorBudget budget_from_json(const json& j) {
  return {j.at("eps_p").get<double>(), j.at("eps_ext").get<double>(),
          convention_from(j.at("convention").get<std::string>())};
}

ProtocolResult result_from_json(const json& j) {
  ProtocolResult r;
  r.passed = j.at("passed").get<bool>();
  if (!j.at("crossing_index").is_null()) r.crossing_index = j.at("crossing_index").get<std::int64_t>();
  r.ln_v_final = j.at("ln_v_final").get<double>();
  r.ln_v_max = j.at("ln_v_max").get<double>();
  r.max_index = j.at("max_index").get<std::int64_t>();
  r.trials_consumed = j.at("trials_consumed").get<std::int64_t>();
  return r;
}

EntropyCertificate certificate_from_json(const json& j) {
  return {j.at("delta_log2").get<double>(), j.at("entropy_bits").get<double>()};
}

ExtractorPlan plan_from_json(const json& j) {
  ExtractorPlan p;
  p.q = j.at("q").get<std::int64_t>();
  p.t = j.at("t").get<std::int64_t>();
  p.eps = j.at("eps").get<double>();
  p.sigma = j.at("sigma").get<double>();
  p.l = j.at("l").get<int>();
  p.w = j.at("w").get<std::int64_t>();
  p.blocks = j.at("blocks").get<std::int64_t>();
  p.d = j.at("d").get<std::int64_t>();
  return p;
}

template <class T, class F>
std::optional<T> optional_from(const json& j, const char* key, F parse) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return parse(j.at(key));
}

}  // namespace

json to_json(const JointDistribution& d) { return table_json(d.p); }
JointDistribution distribution_from_json(const json& j) { return JointDistribution{table_from_json(j)}; }
json to_json(const BellFunction& t) { return table_json(t.t); }
BellFunction bell_function_from_json(const json& j) { return BellFunction{table_from_json(j)}; }

json to_json(const MleResult& r) {
  return {{"q", to_json(r.q)},
          {"log_likelihood", r.log_likelihood},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"vertex_weights", r.weights}};
}

json to_json(const BellBound& b) { return {{"m", b.m}, {"achieving_vertex", b.achieving_vertex}}; }

json to_json(const ThresholdPlan& p) {
  return {{"ln_vthresh", p.ln_vthresh}, {"mu", p.mu}, {"sigma2", p.sigma2},
          {"quantile", p.quantile},     {"z", p.z},   {"n", p.n}};
}

json to_json(const ErrorBudget& b) {
  return {{"eps_p", b.eps_p}, {"eps_ext", b.eps_ext}, {"convention", convention_name(b.convention)}};
}

json to_json(const ProtocolParams& p) {
  return {{"n", p.n}, {"m", p.m}, {"eps_p", p.eps_p}, {"ln_vthresh", p.ln_vthresh}};
}

ProtocolParams protocol_params_from_json(const json& j) {
  ProtocolParams p;
  p.n = j.value("n", std::int64_t{0});
  p.m = j.at("m").get<double>();
  p.eps_p = j.at("eps_p").get<double>();
  if (j.contains("ln_vthresh"))
    p.ln_vthresh = j.at("ln_vthresh").get<double>();
  else if (j.contains("v_thresh"))
    p.ln_vthresh = std::log(j.at("v_thresh").get<double>());
  else
    throw Error(ErrorKind::Parse, "params need ln_vthresh or v_thresh");
  return p;
}

json to_json(const ProtocolResult& r) {
  return {{"passed", r.passed},
          {"crossing_index", r.crossing_index ? json(*r.crossing_index) : json(nullptr)},
          {"ln_v_final", r.ln_v_final},
          {"ln_v_max", r.ln_v_max},
          {"max_index", r.max_index},
          {"trials_consumed", r.trials_consumed}};
}

json to_json(const EntropyCertificate& c) {
  return {{"delta_log2", c.delta_log2}, {"entropy_bits", c.entropy_bits}};
}

json to_json(const ExtractorPlan& p) {
  return {{"q", p.q}, {"t", p.t}, {"eps", p.eps}, {"sigma", p.sigma},
          {"l", p.l}, {"w", p.w}, {"blocks", p.blocks}, {"d", p.d}};
}

json to_json(const TestReport& r) {
  return {{"statistic", r.statistic}, {"p_value", r.p_value}, {"n_effective", r.n_effective}};
}

json RunReport::to_json() const {
  json j;
  j["config"] = config;
  j["digests"] = digests;
  j["passed"] = passed;
  j["abort_reason"] = abort_reason;
  j["certifiable"] = certifiable;
  j["train_trials"] = train_trials;
  j["protocol_trials"] = protocol_trials;
  j["mle"] = optional_json(mle);
  j["bell_function"] = optional_json(bell);
  j["bell_bound"] = optional_json(bound);
  j["threshold"] = optional_json(threshold);
  j["budget"] = optional_json(budget);
  j["params"] = optional_json(params);
  j["result"] = optional_json(result);
  j["certificate"] = optional_json(certificate);
  j["max_output_bits"] = max_output_bits ? json(*max_output_bits) : json(nullptr);
  j["extractor_plan"] = optional_json(plan);
  j["output_hex"] = output_hex;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  return j;
}

RunReport RunReport::from_json(const json& j) {
  RunReport r;
  r.config = j.at("config");
  r.digests = j.at("digests").get<std::map<std::string, std::string>>();
  r.passed = j.at("passed").get<bool>();
  r.abort_reason = j.at("abort_reason").get<std::string>();
  r.certifiable = j.at("certifiable").get<bool>();
  r.train_trials = j.at("train_trials").get<std::int64_t>();
  r.protocol_trials = j.at("protocol_trials").get<std::int64_t>();
  r.mle = optional_from<MleResult>(j, "mle", mle_from_json);
  r.bell = optional_from<BellFunction>(j, "bell_function", bell_function_from_json);
  r.bound = optional_from<BellBound>(j, "bell_bound", bound_from_json);
  r.threshold = optional_from<ThresholdPlan>(j, "threshold", threshold_from_json);
  r.budget = optional_from<ErrorBudget>(j, "budget", budget_from_json);
  r.params = optional_from<ProtocolParams>(j, "params", protocol_params_from_json);
  r.result = optional_from<ProtocolResult>(j, "result", result_from_json);
  r.certificate = optional_from<EntropyCertificate>(j, "certificate", certificate_from_json);
  r.max_output_bits = optional_from<std::int64_t>(j, "max_output_bits",
                                                  [](const json& v) { return v.get<std::int64_t>(); });
  r.plan = optional_from<ExtractorPlan>(j, "extractor_plan", plan_from_json);
  r.output_hex = j.at("output_hex").get<std::string>();
  r.started_at = j.at("started_at").get<std::string>();
  r.finished_at = j.at("finished_at").get<std::string>();
  return r;
}

ErrorBudget resolve_error_budget(double eps_fin, double kappa, double ratio, BudgetConvention convention) {
  if (!(eps_fin > 0 && eps_fin < 1) || !(kappa > 0 && kappa <= 1) || !(ratio > 0))
    throw Error(ErrorKind::InvalidParams, "need 0 < eps_fin < 1, 0 < kappa <= 1, ratio > 0");
  ErrorBudget b;
  b.convention = convention;
  if (convention == BudgetConvention::RawRatio) {
    b.eps_ext = eps_fin / (ratio / kappa + 1);
    b.eps_p = kappa * (eps_fin - b.eps_ext);
  } else {
    b.eps_ext = eps_fin / (ratio + 1);
    b.eps_p = kappa * (eps_fin - b.eps_ext);
  }
  return b;
}

BitString protocol_output_bits(std::span<const TrialRecord> protocol_trials, const ProtocolResult& result) {
  const auto n = static_cast<std::size_t>(result.trials_consumed);
  const std::size_t keep = result.crossing_index ? static_cast<std::size_t>(*result.crossing_index) : n;
  BitString out(2 * n);
  for (std::size_t i = 0; i < std::min(keep, n); ++i) {
    if (protocol_trials[i].a()) out.set(2 * i, true);
    if (protocol_trials[i].b()) out.set(2 * i + 1, true);
  }
  return out;
}

PipelineOutput run_pipeline(std::span<const TrialRecord> trials, const RunConfig& cfg, const BitString* seed) {
  PipelineOutput out;
  RunReport& rep = out.report;
  rep.started_at = utc_now();
  rep.config = {{"train_count", cfg.train_count},
                {"quantile", cfg.quantile},
                {"eps_fin", cfg.eps_fin},
                {"eps_split_ratio", cfg.eps_split_ratio},
                {"kappa", cfg.kappa},
                {"target_t", cfg.target_t},
                {"budget_convention", convention_name(cfg.convention)},
                {"free_00", cfg.free_00},
                {"dev_seed", cfg.dev_seed ? json(*cfg.dev_seed) : json(nullptr)},
                {"trials_path", cfg.trials_path.string()},
                {"seed_path", cfg.seed_path.string()},
                {"out_bits_path", cfg.out_bits_path.string()},
                {"report_path", cfg.report_path.string()}};
  rep.certifiable = !cfg.dev_seed.has_value();

  auto abort_with = [&](std::string why) {
    rep.passed = false;
    rep.abort_reason = std::move(why);
    rep.finished_at = utc_now();
    return out;
  };

  stage("ingest", [&] {
    if (cfg.train_count < 0) throw Error(ErrorKind::InvalidParams, "train_count must be nonnegative");
    if (trials.size() < static_cast<std::size_t>(cfg.train_count) + 1)
      throw Error(ErrorKind::StreamTooShort, "trial file holds " + std::to_string(trials.size()) +
                                                 " trials, need at least train_count + 1 = " +
                                                 std::to_string(cfg.train_count + 1));
  });
  const auto train = trials.subspan(0, static_cast<std::size_t>(cfg.train_count));
  const auto protocol = trials.subspan(static_cast<std::size_t>(cfg.train_count));
  rep.train_trials = static_cast<std::int64_t>(train.size());
  rep.protocol_trials = static_cast<std::int64_t>(protocol.size());

  rep.mle = stage("estimate", [&] { return fit_nonsignaling(counts_from_stream(train), cfg.mle); });

  try {
    rep.bell = stage("pbr", [&] { return optimize_bell_function(rep.mle->q, cfg.mle, PbrOptions{cfg.free_00}); });
    rep.bound = stage("bound", [&] { return compute_m(*rep.bell); });
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::DegenerateInput || e.kind() == ErrorKind::NoViolationPossible)
      return abort_with(std::string("training data admits no Bell violation (") + e.what() + ")");
    throw;
  }

  const std::int64_t n = rep.protocol_trials;
  rep.threshold = stage("threshold", [&] { return choose_vthresh(*rep.bell, rep.mle->q, n, cfg.quantile); });
  rep.budget = stage("budget", [&] {
    return resolve_error_budget(cfg.eps_fin, cfg.kappa, cfg.eps_split_ratio, cfg.convention);
  });

  ProtocolParams params;
  params.n = n;
  params.m = rep.bound->m;
  params.eps_p = rep.budget->eps_p;
  params.ln_vthresh = std::min(rep.threshold->ln_vthresh, max_ln_vthresh(n, params.m, params.eps_p));
  rep.params = params;
  stage("validate", [&] {
    auto v = validate_params(params);
    if (!v.empty()) throw Error(ErrorKind::InvalidParams, "violated: " + v.front());
  });

  rep.result = stage("protocol", [&] { return run_protocol(protocol, *rep.bell, params); });
  if (!rep.result->passed) return abort_with("running product stayed below v_thresh");

  rep.certificate = stage("certificate", [&] { return compute_delta(params); });
  rep.max_output_bits = max_output_bits(rep.certificate->delta_log2, cfg.kappa, rep.budget->eps_ext);
  if (*rep.max_output_bits < cfg.target_t)
    return abort_with("certified entropy supports only " + std::to_string(*rep.max_output_bits) +
                      " bits, target is " + std::to_string(cfg.target_t));

  rep.plan = stage("plan", [&] {
    return plan_for_certificate(2 * n, cfg.target_t, rep.certificate->delta_log2, cfg.kappa, rep.budget->eps_ext);
  });
  const WeakDesign design = stage("design", [&] { return build_weak_design(rep.plan->t, rep.plan->w); });

  BitString seed_bits = stage("seed", [&] {
    const auto d = static_cast<std::size_t>(rep.plan->d);
    if (seed != nullptr) {
      if (seed->size() < d)
        throw Error(ErrorKind::LengthMismatch, "seed holds " + std::to_string(seed->size()) +
                                                   " bits, plan needs d = " + std::to_string(d));
      BitString s(d);
      for (std::size_t i = 0; i < d; ++i) s.set(i, seed->get(i));
      return s;
    }
    if (cfg.dev_seed) return dev_seed_bits(rep.plan->d, *cfg.dev_seed);
    throw Error(ErrorKind::InvalidParams, "no seed supplied");
  });

  out.bits = stage("extract", [&] {
    return extract(protocol_output_bits(protocol, *rep.result), seed_bits, *rep.plan, design, cfg.threads);
  });
  rep.output_hex = out.bits->to_hex();
  rep.passed = true;
  rep.finished_at = utc_now();
  return out;
}

RunReport full_run(const RunConfig& cfg) {
  const TrialStream trials = stage("ingest", [&] { return read_trials(cfg.trials_path); });
  std::map<std::string, std::string> digests;
  digests["trials"] = sha256_file(cfg.trials_path);

  std::optional<BitString> seed;
  if (!cfg.seed_path.empty()) {
    seed = stage("seed", [&] { return read_bits(cfg.seed_path); });
    digests["seed"] = sha256_file(cfg.seed_path);
  }

  PipelineOutput out = run_pipeline(trials, cfg, seed ? &*seed : nullptr);
  if (out.report.passed && out.bits && !cfg.out_bits_path.empty()) {
    stage("write", [&] { write_bits(cfg.out_bits_path, *out.bits); });
    digests["output"] = sha256_file(cfg.out_bits_path);
  }
  out.report.digests = digests;
  if (!cfg.report_path.empty()) {
    stage("write", [&] {
      std::ofstream f(cfg.report_path, std::ios::trunc);
      if (!f) throw Error(ErrorKind::Io, "cannot open " + cfg.report_path.string());
      f << out.report.to_json().dump(2) << '\n';
    });
  }
  return out.report;
}

}  // namespace bellcert
