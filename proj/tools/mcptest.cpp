#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "mcptest/harness.hpp"
#include "mcptest/metrics.hpp"
#include "mcptest/score_matrix.hpp"
#include "mcptest/sigtests.hpp"
#include "mcptest/simulation.hpp"
#include "mcptest/trec.hpp"

namespace {

using namespace mcptest;

// Everything is rendered into memory first; the output file is only touched
// once the whole command succeeded.
void write_output(const std::string& path, const std::string& payload) {
  if (path == "-") {
    std::cout << payload << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file " + path);
  out << payload;
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path);
}

template <typename Parser>
auto load_file(const std::string& path, Parser parse) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path);
  try {
    return parse(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

struct MetricFlags {
  std::string metric = "ap";
  std::size_t depth = 1000;
  std::string denominator = "retrieved";

  MetricSpec to_spec() const {
    MetricSpec spec;
    spec.kind = metric_kind_from_string(metric);
    if (depth < 1) throw std::invalid_argument("depth must be >= 1");
    spec.depth = depth;
    if (denominator == "retrieved")
      spec.denominator = DenominatorPolicy::retrieved_relevant;
    else if (denominator == "qrels")
      spec.denominator = DenominatorPolicy::qrels_relevant;
    else
      throw std::invalid_argument("unknown denominator `" + denominator +
                                  "` (expected retrieved or qrels)");
    return spec;
  }
};

void add_metric_flags(CLI::App* cmd, MetricFlags& flags) {
  cmd->add_option("--metric", flags.metric, "Effectiveness metric: ap or ndcg")
      ->default_val("ap");
  cmd->add_option("--depth", flags.depth, "Evaluation depth")->default_val(1000);
  cmd->add_option("--denominator", flags.denominator,
                  "Relevant-count source: retrieved or qrels")
      ->default_val("retrieved");
}

// "test" or "test:adjustment", e.g. "t:bonferroni", "randomized-tukey".
TestAdjustCombo parse_combo(const std::string& text) {
  TestAdjustCombo combo;
  const auto colon = text.find(':');
  combo.test = test_kind_from_string(text.substr(0, colon));
  if (colon != std::string::npos)
    combo.adjustment = adjust_method_from_string(text.substr(colon + 1));
  validate_combo(combo);
  return combo;
}

std::vector<TestAdjustCombo> parse_combos(const std::vector<std::string>& texts) {
  // The paper's main battery: both paired tests with every adjustment, plus
  // the classic TukeyHSD. The randomized variant is opt-in because of its
  // permutation cost.
  static const std::vector<std::string> kDefault = {
      "t:none",        "t:bonferroni",        "t:holm",        "t:bh",        "t:by",
      "wilcoxon:none", "wilcoxon:bonferroni", "wilcoxon:holm", "wilcoxon:bh", "wilcoxon:by",
      "anova-tukey"};
  std::vector<TestAdjustCombo> combos;
  for (const auto& text : texts.empty() ? kDefault : texts) combos.push_back(parse_combo(text));
  return combos;
}

unsigned default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

std::string render_report(const ExperimentReport& report, const std::string& format) {
  std::ostringstream out;
  if (format == "csv")
    write_report_csv(report, out);
  else if (format == "json")
    write_report_json(report, out);
  else
    throw std::invalid_argument("unknown format `" + format + "` (expected csv or json)");
  return out.str();
}

std::string trim_copy(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

// CLI11 only consults a config option installed on the root app, so each
// subcommand applies its own key=value file by hand when its callback starts.
// Values given on the command line or through the environment win.
std::shared_ptr<std::string> add_config_option(CLI::App* cmd) {
  auto path = std::make_shared<std::string>();
  cmd->add_option("--config", *path, "key=value file with defaults for this subcommand")
      ->check(CLI::ExistingFile);
  return path;
}

void apply_config(CLI::App* cmd, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path);
  std::map<CLI::Option*, std::vector<std::string>> grouped;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string text = trim_copy(line);
    if (text.empty() || text[0] == '#') continue;
    const auto eq = text.find('=');
    const std::string key = eq == std::string::npos ? "" : trim_copy(text.substr(0, eq));
    if (key.empty())
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": expected key=value");
    auto* option = cmd->get_option_no_throw("--" + key);
    if (option == nullptr)
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": unknown key `" + key +
                                  "`");
    grouped[option].push_back(trim_copy(text.substr(eq + 1)));
  }
  for (auto& [option, values] : grouped) {
    if (option->count() > 0) continue;
    for (const auto& value : values) option->add_result(value);
    option->run_callback();
  }
}

void setup_score(CLI::App& app) {
  auto* cmd = app.add_subcommand("score", "Score TREC runs against qrels into a matrix CSV");
  auto runs = std::make_shared<std::vector<std::string>>();
  auto qrels_path = std::make_shared<std::string>();
  auto metric = std::make_shared<MetricFlags>();
  auto out_path = std::make_shared<std::string>("-");
  cmd->add_option("--run", *runs, "TREC run file (repeatable)")->required()->expected(-1);
  cmd->add_option("--qrels", *qrels_path, "TREC qrels file")->required();
  add_metric_flags(cmd, *metric);
  cmd->add_option("--out", *out_path, "Output path, - for stdout")->default_val("-");
  auto config_path = add_config_option(cmd);
  cmd->callback([=] {
    apply_config(cmd, *config_path);
    std::vector<RunSet> loaded;
    for (const auto& path : *runs)
      loaded.push_back(load_file(path, [](std::istream& in) { return parse_run(in); }));
    const Qrels qrels = load_file(*qrels_path, [](std::istream& in) { return parse_qrels(in); });
    const ScoreMatrix matrix = build_score_matrix(loaded, qrels, metric->to_spec());
    std::ostringstream payload;
    write_score_matrix_csv(matrix, payload);
    write_output(*out_path, payload.str());
  });
}

void setup_fit(CLI::App& app) {
  auto* cmd = app.add_subcommand("fit", "Fit per-topic logistic regressors from a run");
  auto run_path = std::make_shared<std::string>();
  auto qrels_path = std::make_shared<std::string>();
  auto rank_size = std::make_shared<std::size_t>(1000);
  auto out_path = std::make_shared<std::string>("-");
  cmd->add_option("--run", *run_path, "TREC run file")->required();
  cmd->add_option("--qrels", *qrels_path, "TREC qrels file")->required();
  cmd->add_option("--rank-size", *rank_size, "Positions fitted per topic")->default_val(1000);
  cmd->add_option("--out", *out_path, "Output path, - for stdout")->default_val("-");
  auto config_path = add_config_option(cmd);
  cmd->callback([=] {
    apply_config(cmd, *config_path);
    const RunSet run = load_file(*run_path, [](std::istream& in) { return parse_run(in); });
    const Qrels qrels = load_file(*qrels_path, [](std::istream& in) { return parse_qrels(in); });
    const RegressorBank bank = fit_bank(run, qrels, *rank_size);
    std::ostringstream payload;
    write_bank_csv(bank, payload);
    write_output(*out_path, payload.str());
  });
}

void setup_simulate(CLI::App& app) {
  auto* cmd = app.add_subcommand("simulate", "Run a scenario experiment from a regressor bank");
  auto bank_path = std::make_shared<std::string>();
  auto scenario = std::make_shared<std::string>("null");
  auto cfg = std::make_shared<SimConfig>();
  auto props = std::make_shared<std::vector<double>>();
  auto metric = std::make_shared<MetricFlags>();
  auto combos = std::make_shared<std::vector<std::string>>();
  auto alpha = std::make_shared<double>(0.05);
  auto tukey_b = std::make_shared<std::uint64_t>(100000);
  auto threads = std::make_shared<unsigned>(default_threads());
  auto rep_offset = std::make_shared<std::uint64_t>(0);
  auto format = std::make_shared<std::string>("csv");
  auto out_path = std::make_shared<std::string>("-");
  cmd->add_option("--bank", *bank_path, "Regressor bank CSV")->required();
  cmd->add_option("--scenario", *scenario, "null (all hypotheses true) or alt (all false)")
      ->default_val("null");
  cmd->add_option("--m", cfg->systems, "Systems per repetition")->default_val(2);
  cmd->add_option("--n", cfg->topics, "Topics per repetition")->default_val(50);
  cmd->add_option("--reps", cfg->reps, "Repetitions")->default_val(1000);
  cmd->add_option("--props", *props, "Scenario-2 perturbations, one per non-baseline system");
  cmd->add_option("--rank-size", cfg->rank_size, "Sampled ranking length")->default_val(1000);
  add_metric_flags(cmd, *metric);
  cmd->add_option("--seed", cfg->seed, "Master seed")->envname("MCPTEST_SEED")->default_val(0);
  cmd->add_option("--combo", *combos,
                  "test[:adjustment] combination (repeatable); default is the full t/wilcoxon "
                  "battery plus anova-tukey");
  cmd->add_option("--alpha", *alpha, "Significance level")->default_val(0.05);
  cmd->add_option("--tukey-b", *tukey_b, "Permutations for randomized-tukey")
      ->default_val(100000);
  cmd->add_option("--threads", *threads, "Worker cap")->default_val(default_threads());
  cmd->add_option("--rep-offset", *rep_offset, "First repetition index")->default_val(0);
  cmd->add_option("--format", *format, "csv or json")->default_val("csv");
  cmd->add_option("--out", *out_path, "Output path, - for stdout")->default_val("-");
  auto config_path = add_config_option(cmd);
  cmd->callback([=] {
    apply_config(cmd, *config_path);
    const RegressorBank bank =
        load_file(*bank_path, [](std::istream& in) { return read_bank_csv(in); });
    ScenarioOptions options;
    options.scenario = scenario_from_string(*scenario);
    options.sim = *cfg;
    options.sim.props = *props;
    options.sim.metric = metric->to_spec();
    options.tests = parse_combos(*combos);
    options.alpha = *alpha;
    options.tukey_permutations = *tukey_b;
    options.threads = *threads;
    options.rep_offset = *rep_offset;
    const ExperimentReport report = run_scenario(bank, options);
    const std::string payload = render_report(report, *format);
    std::cerr << "simulate: " << options.sim.reps << " reps in " << report.elapsed_seconds
              << " s\n";
    write_output(*out_path, payload);
  });
}

void setup_test(CLI::App& app) {
  auto* cmd = app.add_subcommand("test", "Pairwise significance tests on a score matrix");
  auto matrix_path = std::make_shared<std::string>();
  auto test_name = std::make_shared<std::string>("t");
  auto adjust_name = std::make_shared<std::string>("none");
  auto alpha = std::make_shared<double>(0.05);
  auto seed = std::make_shared<std::uint64_t>(0);
  auto tukey_b = std::make_shared<std::uint64_t>(100000);
  auto threads = std::make_shared<unsigned>(default_threads());
  auto out_path = std::make_shared<std::string>("-");
  cmd->add_option("--matrix", *matrix_path, "Score matrix CSV")->required();
  cmd->add_option("--test", *test_name, "t, wilcoxon, anova-tukey or randomized-tukey")
      ->default_val("t");
  cmd->add_option("--adjust", *adjust_name, "none, bonferroni, holm, bh or by")
      ->default_val("none");
  cmd->add_option("--alpha", *alpha, "Significance level")->default_val(0.05);
  cmd->add_option("--seed", *seed, "Seed for randomized-tukey")
      ->envname("MCPTEST_SEED")
      ->default_val(0);
  cmd->add_option("--tukey-b", *tukey_b, "Permutations for randomized-tukey")
      ->default_val(100000);
  cmd->add_option("--threads", *threads, "Worker cap")->default_val(default_threads());
  cmd->add_option("--out", *out_path, "Output path, - for stdout")->default_val("-");
  auto config_path = add_config_option(cmd);
  cmd->callback([=] {
    apply_config(cmd, *config_path);
    const ScoreMatrix matrix =
        load_file(*matrix_path, [](std::istream& in) { return read_score_matrix_csv(in); });
    TestAdjustCombo combo;
    combo.test = test_kind_from_string(*test_name);
    combo.adjustment = adjust_method_from_string(*adjust_name);
    validate_combo(combo);
    HypothesisFamily family;
    if (combo.test == TestKind::randomized_tukey) {
      RandomizedTukeyOptions options;
      options.permutations = *tukey_b;
      options.seed = *seed;
      options.threads = *threads;
      family = to_family(randomized_tukey_hsd(matrix, options), matrix.systems,
                         "randomized-tukey");
    } else {
      family = detail::run_test(matrix, combo.test, *tukey_b, *seed);
    }
    std::ostringstream payload;
    if (combo.adjustment == AdjustMethod::none) {
      payload << "sys_i,sys_j,p\n";
      for (std::size_t k = 0; k < family.size(); ++k)
        payload << family.systems[family.pairs[k].i] << ',' << family.systems[family.pairs[k].j]
                << ',' << format_double(family.raw_p[k]) << '\n';
    } else {
      const AdjustedFamily adjusted = adjust_family(family, combo.adjustment, *alpha);
      const auto rejected = reject_set(adjusted);
      payload << "sys_i,sys_j,p,p_adj,reject\n";
      for (std::size_t k = 0; k < adjusted.base.size(); ++k)
        payload << adjusted.base.systems[adjusted.base.pairs[k].i] << ','
                << adjusted.base.systems[adjusted.base.pairs[k].j] << ','
                << format_double(adjusted.base.raw_p[k]) << ','
                << format_double(adjusted.adjusted_p[k]) << ',' << (rejected[k] ? 1 : 0) << '\n';
    }
    write_output(*out_path, payload.str());
  });
}

void setup_subsample(CLI::App& app) {
  auto* cmd =
      app.add_subcommand("subsample", "Average power over topic subsets of a full matrix");
  auto matrix_path = std::make_shared<std::string>();
  auto options = std::make_shared<SubsampleOptions>();
  auto combos = std::make_shared<std::vector<std::string>>();
  auto format = std::make_shared<std::string>("csv");
  auto out_path = std::make_shared<std::string>("-");
  options->threads = default_threads();
  cmd->add_option("--matrix", *matrix_path, "Full score matrix CSV")->required();
  cmd->add_option("--sizes", options->sizes, "Topic subset sizes (repeatable)")->required();
  cmd->add_option("--iters", options->iterations, "Subsets drawn per size")->default_val(2000);
  cmd->add_option("--combo", *combos, "test[:adjustment] combination (repeatable)");
  cmd->add_option("--gamma", options->gamma, "Ground-truth mean-gap threshold")
      ->default_val(0.0005);
  cmd->add_option("--alpha", options->alpha, "Significance level")->default_val(0.05);
  cmd->add_option("--seed", options->seed, "Master seed")
      ->envname("MCPTEST_SEED")
      ->default_val(0);
  cmd->add_option("--tukey-b", options->tukey_permutations, "Permutations for randomized-tukey")
      ->default_val(100000);
  cmd->add_option("--threads", options->threads, "Worker cap")->default_val(default_threads());
  cmd->add_option("--metric-label", options->metric_label, "Metric name recorded in the report")
      ->default_val("ap");
  cmd->add_option("--format", *format, "csv or json")->default_val("csv");
  cmd->add_option("--out", *out_path, "Output path, - for stdout")->default_val("-");
  auto config_path = add_config_option(cmd);
  cmd->callback([=] {
    apply_config(cmd, *config_path);
    const ScoreMatrix matrix =
        load_file(*matrix_path, [](std::istream& in) { return read_score_matrix_csv(in); });
    options->tests = parse_combos(*combos);
    const ExperimentReport report = subsample_power_experiment(matrix, *options);
    const std::string payload = render_report(report, *format);
    std::cerr << "subsample: " << options->iterations << " iterations per size in "
              << report.elapsed_seconds << " s\n";
    write_output(*out_path, payload);
  });
}

void setup_truth(CLI::App& app) {
  auto* cmd = app.add_subcommand("truth", "Gamma ground truth over system pairs");
  auto matrix_path = std::make_shared<std::string>();
  auto gamma = std::make_shared<double>(0.0005);
  auto out_path = std::make_shared<std::string>("-");
  cmd->add_option("--matrix", *matrix_path, "Full score matrix CSV")->required();
  cmd->add_option("--gamma", *gamma, "Mean-gap threshold")->default_val(0.0005);
  cmd->add_option("--out", *out_path, "Output path, - for stdout")->default_val("-");
  auto config_path = add_config_option(cmd);
  cmd->callback([=] {
    apply_config(cmd, *config_path);
    const ScoreMatrix matrix =
        load_file(*matrix_path, [](std::istream& in) { return read_score_matrix_csv(in); });
    const TruthMask mask = ground_truth_pairs(matrix, *gamma);
    const auto pairs = all_pairs(matrix.m());
    std::ostringstream payload;
    payload << "# gamma=" << format_double(*gamma) << '\n';
    payload << "sys_i,sys_j,status\n";
    for (std::size_t k = 0; k < pairs.size(); ++k)
      payload << matrix.systems[pairs[k].i] << ',' << matrix.systems[pairs[k].j] << ','
              << (mask.statuses[k] == PairStatus::different ? "different" : "undecided") << '\n';
    write_output(*out_path, payload.str());
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiple-comparison significance testing for IR evaluation"};
  app.require_subcommand(1);
  setup_score(app);
  setup_fit(app);
  setup_simulate(app);
  setup_test(app);
  setup_subsample(app);
  setup_truth(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const mcptest::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
