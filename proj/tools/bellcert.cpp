// bellcert command-line front end. Exit codes: 0 pass, 2 abort, 1 error.

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>

#include "bellcert/pipeline.hpp"
#include "bellcert/pm_compare.hpp"
#include "bellcert/simulator.hpp"
#include "bellcert/trial_io.hpp"

using namespace bellcert;

namespace {

constexpr int kExitAbort = 2;

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, path + ": " + e.what());
  }
}

void emit(const json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

TrialStream slice(const TrialStream& all, std::int64_t skip, std::int64_t take) {
  if (skip < 0 || static_cast<std::size_t>(skip) > all.size())
    throw Error(ErrorKind::StreamTooShort, "cannot skip " + std::to_string(skip) + " trials");
  const std::size_t end = take < 0 ? all.size() : std::min(all.size(), static_cast<std::size_t>(skip + take));
  return TrialStream(all.begin() + skip, all.begin() + static_cast<std::ptrdiff_t>(end));
}

SimSpec spec_from_json(const json& j) {
  if (j.contains("mixture")) {
    MixtureSpec m;
    for (const auto& c : j.at("mixture"))
      m.components.emplace_back(c.at("weight").get<double>(), distribution_from_json(c.at("table")));
    return m;
  }
  if (j.contains("schedule")) {
    DriftSchedule s;
    for (const auto& c : j.at("schedule"))
      s.segments.emplace_back(c.at("length").get<std::int64_t>(), distribution_from_json(c.at("table")));
    return s;
  }
  throw Error(ErrorKind::Parse, "spec needs a \"mixture\" or \"schedule\" array");
}

json stats_json(const TrialStream& trials) {
  const CountsTable c = counts_from_stream(trials);
  json j;
  json counts = json::object();
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          counts[std::to_string(a) + "," + std::to_string(b) + "," + std::to_string(x) + "," +
                 std::to_string(y)] = c.at(a, b, x, y);
  j["counts"] = counts;
  j["n_total"] = c.n_total;
  j["bias_alice"] = to_json(settings_bias_test(trials, Station::Alice));
  j["bias_bob"] = to_json(settings_bias_test(trials, Station::Bob));
  j["independence"] = to_json(settings_independence_test(c));
  const auto sig = signaling_tests(c);
  j["signaling"] = {{"alice_x0", to_json(sig[0])},
                    {"alice_x1", to_json(sig[1])},
                    {"bob_y0", to_json(sig[2])},
                    {"bob_y1", to_json(sig[3])}};
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified randomness from Bell-test trial data"};
  app.require_subcommand(1);

  // estimate
  std::string est_in, est_out = "-";
  std::int64_t est_take = -1, est_skip = 0;
  auto* est = app.add_subcommand("estimate", "Fit the maximum-likelihood non-signaling distribution");
  est->add_option("--in", est_in, "Trial file (BTF1 or CSV)")->required();
  est->add_option("--take", est_take, "Number of trials to use (default: all)");
  est->add_option("--skip", est_skip, "Trials to skip first");
  est->add_option("--out", est_out, "Output q.json");

  // pbr
  std::string pbr_q, pbr_out = "-";
  bool pbr_free00 = false;
  auto* pbr = app.add_subcommand("pbr", "Optimize the Bell function for a fitted distribution");
  pbr->add_option("--q", pbr_q, "q.json from estimate")->required();
  pbr->add_option("--out", pbr_out, "Output t.json");
  pbr->add_flag("--free-00", pbr_free00, "Do not pin T(0,0,x,y) to 1");

  // plan-threshold
  std::string pt_t, pt_q, pt_out = "-";
  std::int64_t pt_n = 0;
  double pt_quantile = 0.95;
  auto* pt = app.add_subcommand("plan-threshold", "Choose v_thresh from the Gaussian approximation");
  pt->add_option("--t", pt_t, "t.json")->required();
  pt->add_option("--q", pt_q, "q.json")->required();
  pt->add_option("--n", pt_n, "Protocol trials")->required();
  pt->add_option("--quantile", pt_quantile, "Pass probability target");
  pt->add_option("--out", pt_out, "Output JSON");

  // run
  std::string run_in, run_t, run_params, run_report = "-", run_bits;
  std::int64_t run_skip = 0, run_n = -1;
  auto* run = app.add_subcommand("run", "Run the entropy-production phase");
  run->add_option("--in", run_in, "Trial file")->required();
  run->add_option("--skip", run_skip, "Training trials to skip");
  run->add_option("--n", run_n, "Protocol trials (default: params.n or the rest of the file)");
  run->add_option("--t", run_t, "t.json")->required();
  run->add_option("--params", run_params, "params.json with m, eps_p, ln_vthresh or v_thresh")->required();
  run->add_option("--report", run_report, "Report JSON");
  run->add_option("--out-bits", run_bits, "Write the protocol output string AB on pass");

  // extract
  std::string ex_in, ex_seed, ex_out;
  std::int64_t ex_t = 0;
  double ex_eps = 0, ex_kappa = 1, ex_delta = 0;
  unsigned ex_threads = 0;
  auto* ex = app.add_subcommand("extract", "Apply the Trevisan extractor");
  ex->add_option("--in", ex_in, "Outcome bit file")->required();
  ex->add_option("--seed", ex_seed, "Seed bit file")->required();
  ex->add_option("--t", ex_t, "Output bits")->required();
  ex->add_option("--eps-ext", ex_eps, "Extractor error budget")->required();
  ex->add_option("--kappa", ex_kappa, "Lower bound on the pass probability")->required();
  ex->add_option("--delta-log2", ex_delta, "log2 of delta from the entropy certificate")->required();
  ex->add_option("--out", ex_out, "Output bit file")->required();
  ex->add_option("--threads", ex_threads, "Worker threads (default: BELLCERT_THREADS)");

  // stats
  std::string st_in, st_report = "-";
  auto* st = app.add_subcommand("stats", "Settings and signaling hypothesis tests");
  st->add_option("--in", st_in, "Trial file")->required();
  st->add_option("--report", st_report, "Report JSON");

  // simulate
  std::string sim_spec, sim_out;
  std::int64_t sim_n = 0;
  std::uint64_t sim_seed = 0;
  unsigned sim_threads = 1;
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic trial stream");
  sim->add_option("--spec", sim_spec, "spec.json with a mixture or schedule")->required();
  sim->add_option("--n", sim_n, "Trials")->required();
  sim->add_option("--seed", sim_seed, "RNG seed")->required();
  sim->add_option("--out", sim_out, "Output trial file (.csv for CSV, otherwise BTF1)")->required();
  sim->add_option("--threads", sim_threads, "Worker threads");

  // compare-pm
  std::string pm_q, pm_out = "-";
  double pm_eps = 0.05;
  auto* pm = app.add_subcommand("compare-pm", "PR-box weight and the PM minimum-trials bound");
  pm->add_option("--q", pm_q, "q.json")->required();
  pm->add_option("--eps", pm_eps, "Error parameter");
  pm->add_option("--out", pm_out, "Output JSON");

  // full-run
  RunConfig cfg;
  std::string fr_trials, fr_seed, fr_bits, fr_report = "-", fr_budget = "raw-ratio";
  std::uint64_t fr_dev_seed = 0;
  auto* fr = app.add_subcommand("full-run", "Training, estimation, PBR, protocol and extraction");
  fr->add_option("--trials", fr_trials, "Trial file")->required();
  fr->add_option("--train", cfg.train_count, "Training prefix length")->required();
  fr->add_option("--quantile", cfg.quantile, "Pass probability target for v_thresh");
  fr->add_option("--eps-fin", cfg.eps_fin, "Final error");
  fr->add_option("--ratio", cfg.eps_split_ratio, "eps_p : eps_ext split");
  fr->add_option("--budget", fr_budget, "raw-ratio or kappa-scaled")
      ->check(CLI::IsMember({"raw-ratio", "kappa-scaled"}));
  fr->add_option("--kappa", cfg.kappa, "Lower bound on the pass probability");
  fr->add_option("--t", cfg.target_t, "Output bits");
  auto* seed_opt = fr->add_option("--seed", fr_seed, "Seed bit file");
  auto* dev_opt = fr->add_option("--dev-seed", fr_dev_seed, "Generate seed bits (not certifiable)");
  seed_opt->excludes(dev_opt);
  fr->add_option("--out-bits", fr_bits, "Output bit file");
  fr->add_option("--report", fr_report, "Report JSON");
  fr->add_flag("--free-00", cfg.free_00, "Do not pin T(0,0,x,y) to 1");
  fr->add_option("--threads", cfg.threads, "Worker threads");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*est) {
      const TrialStream trials = slice(read_trials(est_in), est_skip, est_take);
      const MleResult r = fit_nonsignaling(counts_from_stream(trials));
      json j = to_json(r.q);
      j["log_likelihood"] = r.log_likelihood;
      j["solver"] = {{"method", "exponentiated-gradient+newton"},
                     {"iterations", r.iterations},
                     {"converged", r.converged},
                     {"trials", trials.size()},
                     {"input_sha256", sha256_file(est_in)}};
      emit(j, est_out);
    } else if (*pbr) {
      const JointDistribution q = distribution_from_json(load_json(pbr_q));
      const BellFunction t = optimize_bell_function(q, {}, PbrOptions{pbr_free00});
      const BellBound b = compute_m(t);
      const ThresholdPlan unit = choose_vthresh(t, q, 1, 0.5);
      json j = to_json(t);
      j["m"] = b.m;
      j["achieving_vertex"] = b.achieving_vertex;
      j["mu"] = unit.mu;
      j["sigma2"] = unit.sigma2;
      j["asymptotic_rate"] = asymptotic_rate(t, q, b.m);
      emit(j, pbr_out);
    } else if (*pt) {
      const BellFunction t = bell_function_from_json(load_json(pt_t));
      const JointDistribution q = distribution_from_json(load_json(pt_q));
      const ThresholdPlan p = choose_vthresh(t, q, pt_n, pt_quantile);
      json j = to_json(p);
      j["v_thresh"] = std::exp(p.ln_vthresh);
      emit(j, pt_out);
    } else if (*run) {
      const BellFunction t = bell_function_from_json(load_json(run_t));
      ProtocolParams params = protocol_params_from_json(load_json(run_params));
      const TrialStream all = read_trials(run_in);
      const TrialStream protocol = slice(all, run_skip, -1);
      if (run_n >= 0) params.n = run_n;
      if (params.n <= 0) params.n = static_cast<std::int64_t>(protocol.size());
      const auto violations = validate_params(params);
      if (!violations.empty()) throw Error(ErrorKind::InvalidParams, "violated: " + violations.front());
      const ProtocolResult r = run_protocol(protocol, t, params);
      json j;
      j["params"] = to_json(params);
      j["result"] = to_json(r);
      j["certificate"] = r.passed ? to_json(compute_delta(params)) : json(nullptr);
      j["digests"] = {{"trials", sha256_file(run_in)}, {"t", sha256_file(run_t)},
                      {"params", sha256_file(run_params)}};
      if (r.passed && !run_bits.empty()) {
        write_bits(run_bits, protocol_output_bits(protocol, r));
        j["digests"]["output"] = sha256_file(run_bits);
      }
      emit(j, run_report);
      return r.passed ? 0 : kExitAbort;
    } else if (*ex) {
      const BitString input = read_bits(ex_in);
      const BitString seed_file = read_bits(ex_seed);
      const std::int64_t tmax = max_output_bits(ex_delta, ex_kappa, ex_eps);
      if (ex_t > tmax) {
        std::cerr << "abort: certificate supports at most " << tmax << " bits\n";
        return kExitAbort;
      }
      const ExtractorPlan p =
          plan_for_certificate(static_cast<std::int64_t>(input.size()), ex_t, ex_delta, ex_kappa, ex_eps);
      if (seed_file.size() < static_cast<std::size_t>(p.d))
        throw Error(ErrorKind::LengthMismatch, "seed holds " + std::to_string(seed_file.size()) +
                                                   " bits, plan needs " + std::to_string(p.d));
      BitString seed(static_cast<std::size_t>(p.d));
      for (std::int64_t i = 0; i < p.d; ++i) seed.set(static_cast<std::size_t>(i), seed_file.get(static_cast<std::size_t>(i)));
      const BitString out = extract(input, seed, p, build_weak_design(p.t, p.w), ex_threads);
      write_bits(ex_out, out);
      std::cout << to_json(p).dump(2) << '\n' << out.to_hex() << '\n';
    } else if (*st) {
      emit(stats_json(read_trials(st_in)), st_report);
    } else if (*sim) {
      const TrialStream trials = sample_stream(spec_from_json(load_json(sim_spec)), sim_n, sim_seed, sim_threads);
      if (sim_out.size() >= 4 && sim_out.substr(sim_out.size() - 4) == ".csv")
        write_csv(sim_out, trials);
      else
        write_btf(sim_out, trials);
    } else if (*pm) {
      const JointDistribution q = distribution_from_json(load_json(pm_q));
      const PrDecomposition dec = pr_weight(q);
      json j;
      j["p"] = dec.p;
      j["pr_index"] = dec.pr_index;
      j["lr_weights"] = dec.lr_weights;
      j["pm_min_trials"] = dec.p > 0 ? json(pm_min_trials({dec.p, pm_eps, {}, {}})) : json(nullptr);
      j["chsh_expectation"] = expectation(q, chsh_function());
      emit(j, pm_out);
    } else if (*fr) {
      cfg.trials_path = fr_trials;
      cfg.seed_path = fr_seed;
      cfg.out_bits_path = fr_bits;
      cfg.report_path = fr_report == "-" ? "" : fr_report;
      cfg.convention = fr_budget == "raw-ratio" ? BudgetConvention::RawRatio : BudgetConvention::KappaScaled;
      if (*dev_opt) cfg.dev_seed = fr_dev_seed;
      const RunReport rep = full_run(cfg);
      if (fr_report == "-") std::cout << rep.to_json().dump(2) << '\n';
      if (!rep.passed) {
        std::cerr << "abort: " << rep.abort_reason << '\n';
        return kExitAbort;
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
