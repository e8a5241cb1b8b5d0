#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "hybridrisk/runner.hpp"

namespace fs = std::filesystem;
using namespace hybridrisk;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> tau;
  std::optional<std::size_t> bootstrap;
  std::optional<std::string> eval_mode;
  std::optional<std::string> mapping;
  std::optional<std::string> data;
  std::optional<std::string> schema;
  std::string out;
};

runner::ExperimentConfig config_from(const Flags& f) {
  auto config = runner::load_config(f.config);
  if (f.seed) {
    runner::apply_master_seed(config, *f.seed);
  }
  if (f.tau) config.tau = *f.tau;
  if (f.bootstrap) config.bootstrap = *f.bootstrap;
  if (f.eval_mode) config.eval_mode = *f.eval_mode;
  if (f.mapping) config.mapping = fs::absolute(*f.mapping);
  return config;
}

runner::EvalOptions eval_options(const Flags& f) { return {f.tau, f.bootstrap, f.eval_mode}; }

void print_report(const nlohmann::json& r) {
  std::cout << r.at("cohort").get<std::string>() << " cohort: n=" << r.at("n") << " prevalence="
            << r.at("prevalence") << "\n";
  for (const auto& [name, m] : r.at("models").items()) {
    std::cout << "  " << name << ": auroc=" << m.at("auroc") << " auprc=" << m.at("auprc")
              << " brier=" << m.at("brier") << "\n";
  }
  const auto& t = r.at("tests");
  std::cout << "  delong p=" << t.at("delong").at("p") << "  mcnemar p=" << t.at("mcnemar").at("p") << "\n";
}

int run(const std::string& verb, const Flags& f) {
  const fs::path out(f.out);
  if (verb == "prepare") {
    std::cout << runner::cmd_prepare(config_from(f), out).dump(2) << "\n";
  } else if (verb == "train") {
    const auto manifest = runner::cmd_train(config_from(f), out);
    std::cout << "bundle written to " << out.string() << " (" << manifest.at("smote").at("rows_after")
              << " training rows after resampling)\n";
  } else if (verb == "evaluate") {
    print_report(runner::cmd_evaluate(out, eval_options(f)));
  } else if (verb == "external-validate") {
    runner::ExternalOptions options;
    options.eval = eval_options(f);
    if (f.data || f.schema) {
      if (!f.data || !f.schema) {
        throw Error(ErrorKind::config, "--data and --schema must be given together");
      }
      options.cohort = runner::CohortFiles{fs::absolute(*f.data), fs::absolute(*f.schema)};
    }
    if (f.mapping) options.mapping = fs::absolute(*f.mapping);
    print_report(runner::cmd_external_validate(out, options));
  } else if (verb == "report") {
    std::cout << runner::cmd_report(out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid soft-voting diabetes risk models: train, evaluate, externally validate"};
  app.require_subcommand(1);
  Flags f;

  auto add_common_eval = [&](CLI::App* cmd) {
    cmd->add_option("--tau", f.tau, "decision threshold in (0, 1), default 0.5");
    cmd->add_option("--bootstrap", f.bootstrap, "bootstrap resamples, default 1000");
    cmd->add_option("--eval-mode", f.eval_mode, "natural or balanced")->check(CLI::IsMember({"natural", "balanced"}));
  };

  for (const char* verb : {"prepare", "train"}) {
    auto* cmd = app.add_subcommand(verb, std::string(verb) == "prepare" ? "load and split the primary cohort"
                                                                         : "fit the pipeline, learners and hybrids");
    cmd->add_option("--config", f.config, "experiment config JSON")->required();
    cmd->add_option("--seed", f.seed, "master seed; derives every component seed");
    cmd->add_option("--mapping", f.mapping, "external feature mapping JSON");
    cmd->add_option("--out", f.out, "bundle directory")->required();
    add_common_eval(cmd);
  }
  auto* evaluate = app.add_subcommand("evaluate", "score the held-out primary split");
  evaluate->add_option("--out", f.out, "bundle directory")->required();
  add_common_eval(evaluate);

  auto* external = app.add_subcommand("external-validate", "score an external cohort through the frozen pipeline");
  external->add_option("--out", f.out, "bundle directory")->required();
  external->add_option("--mapping", f.mapping, "feature mapping JSON overriding the bundle's");
  external->add_option("--data", f.data, "external cohort CSV overriding the config");
  external->add_option("--schema", f.schema, "schema for --data");
  add_common_eval(external);

  auto* report = app.add_subcommand("report", "plots and attenuation summary from the bundle's reports");
  report->add_option("--out", f.out, "bundle directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    return run(app.get_subcommands().front()->get_name(), f);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
