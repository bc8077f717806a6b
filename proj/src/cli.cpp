// Copyright 2026 The QLSC Authors
// SPDX-License-Identifier: Apache-2.0

#include "qlsc/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "qlsc/config.hpp"
#include "qlsc/data.hpp"
#include "qlsc/errors.hpp"
#include "qlsc/metrics.hpp"
#include "qlsc/qa_model.hpp"
#include "qlsc/train.hpp"

namespace qlsc::cli {
namespace {

namespace fs = std::filesystem;

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

void write_effective_config(const RunConfig& cfg, const fs::path& out_dir) {
  write_file(out_dir / "effective_config.json", to_json(cfg).dump(2) + "\n");
}

std::vector<QAExample> select_split(const std::vector<QAExample>& all,
                                    const std::string& split) {
  if (split == "all") return all;
  const Split wanted = parse_split(split);
  std::vector<QAExample> out;
  std::copy_if(all.begin(), all.end(), std::back_inserter(out),
               [&](const QAExample& ex) { return ex.split == wanted; });
  return out;
}

std::vector<std::size_t> parse_list(const std::string& text, const char* flag) {
  std::vector<std::size_t> values;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      values.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw CLI::ValidationError(flag, "expected a comma-separated list of "
                                       "non-negative integers, got '" + text + "'");
    }
  }
  if (values.empty()) throw CLI::ValidationError(flag, "empty list");
  return values;
}

// Flags shared by the commands that build and train a model.
struct ModelFlags {
  std::string qlsc;
  std::optional<std::size_t> k;
  std::optional<std::size_t> m;
  std::string encoder;
  std::optional<std::size_t> epochs;
  std::optional<double> lr;
  std::optional<std::size_t> batch_size;
  std::string preset;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--qlsc", qlsc, "Enable the calibrator: on|off")
        ->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--k", k, "Number of information vectors K")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--m", m, "Number of subspaces m")->check(CLI::PositiveNumber);
    cmd->add_option("--encoder", encoder, "Query encoder kind (lstm)")
        ->check(CLI::IsMember({"lstm"}));
    cmd->add_option("--epochs", epochs, "Training epochs")->check(CLI::PositiveNumber);
    cmd->add_option("--lr", lr, "Adam learning rate")->check(CLI::PositiveNumber);
    cmd->add_option("--batch-size", batch_size, "Examples per Adam step")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--preset", preset, "Training preset: desk|paper-plm")
        ->check(CLI::IsMember({"desk", "paper-plm"}));
  }

  void apply(RunConfig& cfg) const {
    if (!preset.empty()) {
      const auto seed = cfg.train.seed;
      cfg.train = TrainConfig::preset(preset);
      cfg.train.seed = seed;
    }
    if (qlsc == "on" && !cfg.model.qlsc) cfg.model.qlsc = QLSCConfig{};
    if (qlsc == "off") cfg.model.qlsc.reset();
    if (cfg.model.qlsc) {
      cfg.model.qlsc->n = cfg.model.embed_dim;
      if (k) cfg.model.qlsc->k = *k;
      if (m) cfg.model.qlsc->m = *m;
    }
    if (!encoder.empty()) cfg.model.encoder = encoder;
    if (epochs) cfg.train.epochs = *epochs;
    if (lr) cfg.train.learning_rate = *lr;
    if (batch_size) cfg.train.batch_size = *batch_size;
  }
};

RunConfig load_config(const std::string& path) {
  return path.empty() ? RunConfig{} : load_run_config(path);
}

// Vocabulary large enough for every token id in the data.
void fit_vocab(RunConfig& cfg, const std::vector<QAExample>& examples) {
  std::size_t needed = Vocab::kReserved;
  for (const auto& ex : examples) {
    for (int id : ex.question) needed = std::max(needed, static_cast<std::size_t>(id) + 1);
    for (int id : ex.passage) needed = std::max(needed, static_cast<std::size_t>(id) + 1);
  }
  cfg.model.vocab_size = std::max(cfg.model.vocab_size, needed);
}

struct Trained {
  QAModel model;
  TrainResult result;
};

Trained train_model(const RunConfig& cfg, const std::vector<QAExample>& examples,
                    std::ostream& out) {
  Rng rng(cfg.train.seed);
  Trained t{QAModel::init(cfg.model, rng), {}};
  t.result = train(t.model, examples, cfg.train, rng, [&](std::size_t epoch, double loss) {
    out << fmt::format("epoch {} mean_loss {:.6f}\n", epoch, loss) << std::flush;
  });
  return t;
}

QueryStage parse_stage(const std::string& stage) {
  return stage == "raw" ? QueryStage::kRaw : QueryStage::kCalibrated;
}

std::string report_row(const MetricsReport& r) {
  return fmt::format("{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{},{}", r.em, r.f1,
                     r.tcr, r.tir, r.mean_l1, r.mean_l2, r.n_examples, r.n_groups);
}

constexpr const char* kReportColumns =
    "em,f1,tcr,tir,mean_l1,mean_l2,n_examples,n_groups";

// ---- subcommands ----------------------------------------------------------

struct GenArgs {
  std::string config, out, out_dir;
  std::optional<std::uint64_t> seed;
};

int run_gen(const GenArgs& a, std::ostream& out) {
  RunConfig cfg = load_config(a.config);
  if (a.seed) cfg.gen.seed = *a.seed;
  const std::string path = a.out.empty() ? cfg.paths.data : a.out;
  const std::string out_dir = a.out_dir.empty() ? cfg.paths.out_dir : a.out_dir;
  const Corpus corpus = generate_corpus(cfg.gen);
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  save_jsonl(corpus.examples, path);
  write_effective_config(cfg, out_dir);
  out << fmt::format("wrote {} examples ({} groups) to {}\n", corpus.examples.size(),
                     cfg.gen.n_groups, path);
  return kExitOk;
}

struct TrainArgs {
  std::string config, data, out, out_dir, split = "train";
  std::optional<std::uint64_t> seed;
  ModelFlags model;
};

int run_train(const TrainArgs& a, std::ostream& out) {
  RunConfig cfg = load_config(a.config);
  if (a.seed) cfg.train.seed = *a.seed;
  a.model.apply(cfg);
  if (!a.data.empty()) cfg.paths.data = a.data;
  if (!a.out.empty()) cfg.paths.checkpoint = a.out;
  if (!a.out_dir.empty()) cfg.paths.out_dir = a.out_dir;
  const auto all = load_jsonl(cfg.paths.data);
  const auto examples = select_split(all, a.split);
  if (examples.empty()) throw Error("no examples in split '" + a.split + "'");
  fit_vocab(cfg, all);
  const Trained t = train_model(cfg, examples, out);
  const fs::path ckpt(cfg.paths.checkpoint);
  if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
  save_checkpoint(t.model, cfg.train, t.result.rng_state, ckpt);
  write_file(fs::path(cfg.paths.out_dir) / "loss.csv", loss_csv(t.result.epoch_losses));
  write_effective_config(cfg, cfg.paths.out_dir);
  out << "checkpoint written to " << ckpt.string() << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string ckpt, data, report, out_dir = ".", stage = "calibrated", split = "all";
};

int run_eval(const EvalArgs& a, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(a.ckpt);
  const auto examples = select_split(load_jsonl(a.data), a.split);
  if (examples.empty()) throw Error("no examples in split '" + a.split + "'");
  const MetricsReport report = evaluate_model(ckpt.model, examples, parse_stage(a.stage));
  const fs::path path = a.report.empty() ? fs::path(a.out_dir) / "metrics.csv"
                                         : fs::path(a.report);
  const std::string csv = metrics_csv(report);
  write_file(path, csv);
  out << csv;
  return kExitOk;
}

struct AblateKArgs {
  std::string config, data, out_dir, ks = "4,8,16,32,64", stage = "calibrated",
                                     eval_split = "test";
  std::optional<std::uint64_t> seed;
  ModelFlags model;
};

int run_ablate_k(const AblateKArgs& a, std::ostream& out) {
  RunConfig base = load_config(a.config);
  if (a.seed) base.train.seed = *a.seed;
  a.model.apply(base);
  if (!a.data.empty()) base.paths.data = a.data;
  if (!a.out_dir.empty()) base.paths.out_dir = a.out_dir;
  const auto ks = parse_list(a.ks, "--ks");
  const auto all = load_jsonl(base.paths.data);
  const auto train_set = select_split(all, "train");
  const auto eval_set = select_split(all, a.eval_split);
  if (train_set.empty() || eval_set.empty()) {
    throw Error("ablate-k needs non-empty train and " + a.eval_split + " splits");
  }
  fit_vocab(base, all);
  if (!base.model.qlsc) base.model.qlsc = QLSCConfig{};
  base.model.qlsc->n = base.model.embed_dim;

  const fs::path dir(base.paths.out_dir);
  std::string summary = std::string("k,") + kReportColumns + "\n";
  for (std::size_t k : ks) {
    if (k == 0) throw Error("--ks entries must be positive");
    RunConfig cfg = base;
    cfg.model.qlsc->k = k;
    out << "== K = " << k << "\n";
    const auto started = std::chrono::steady_clock::now();
    const Trained t = train_model(cfg, train_set, out);
    const MetricsReport report = evaluate_model(t.model, eval_set, parse_stage(a.stage));
    const double seconds = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - started).count();
    write_file(dir / fmt::format("metrics_k{}.csv", k), metrics_csv(report));
    summary += fmt::format("{},{}\n", k, report_row(report));
    out << fmt::format("K={} em={:.2f} f1={:.2f} tcr={:.2f} ({:.1f}s)\n", k,
                       report.em, report.f1, report.tcr, seconds);
  }
  write_file(dir / "ablate_k.csv", summary);
  write_effective_config(base, dir);
  return kExitOk;
}

struct AblateSeedArgs {
  std::string config, data, out_dir, seeds = "40,41,42", stage = "calibrated",
                                     eval_split = "test";
  std::size_t repeats = 5;
  ModelFlags model;
};

int run_ablate_seed(const AblateSeedArgs& a, std::ostream& out) {
  RunConfig base = load_config(a.config);
  a.model.apply(base);
  if (!a.data.empty()) base.paths.data = a.data;
  if (!a.out_dir.empty()) base.paths.out_dir = a.out_dir;
  const auto seeds = parse_list(a.seeds, "--seeds");
  const auto all = load_jsonl(base.paths.data);
  const auto train_set = select_split(all, "train");
  const auto eval_set = select_split(all, a.eval_split);
  if (train_set.empty() || eval_set.empty()) {
    throw Error("ablate-seed needs non-empty train and " + a.eval_split + " splits");
  }
  fit_vocab(base, all);

  std::vector<MetricsReport> reports;
  std::string runs = std::string("seed,repeat,") + kReportColumns + "\n";
  for (std::size_t seed : seeds) {
    for (std::size_t r = 0; r < a.repeats; ++r) {
      RunConfig cfg = base;
      cfg.train.seed = seed;
      out << "== seed " << seed << " repeat " << r + 1 << "\n";
      const Trained t = train_model(cfg, train_set, out);
      reports.push_back(evaluate_model(t.model, eval_set, parse_stage(a.stage)));
      runs += fmt::format("{},{},{}\n", seed, r + 1, report_row(reports.back()));
    }
  }
  auto summarize = [&](const char* name, double MetricsReport::*field) {
    double mean = 0.0;
    for (const auto& r : reports) mean += r.*field;
    mean /= static_cast<double>(reports.size());
    double var = 0.0;
    for (const auto& r : reports) var += (r.*field - mean) * (r.*field - mean);
    var /= static_cast<double>(reports.size());
    return fmt::format("{},{:.6f},{:.6f}\n", name, mean, std::sqrt(var));
  };
  std::string summary = "metric,mean,std\n";
  summary += summarize("em", &MetricsReport::em);
  summary += summarize("f1", &MetricsReport::f1);
  summary += summarize("tcr", &MetricsReport::tcr);
  summary += summarize("tir", &MetricsReport::tir);
  summary += summarize("mean_l1", &MetricsReport::mean_l1);
  summary += summarize("mean_l2", &MetricsReport::mean_l2);
  const fs::path dir(base.paths.out_dir);
  write_file(dir / "ablate_seed_runs.csv", runs);
  write_file(dir / "ablate_seed.csv", summary);
  write_effective_config(base, dir);
  out << summary;
  return kExitOk;
}

struct GradcheckArgs {
  std::uint64_t seed = 42;
  double h = 1e-5;
  double tol = 1e-3;
  std::size_t n = 8, m = 2, k = 4, query_len = 5, passage_len = 7, vocab = 20;
  std::string out_dir;
};

int run_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  ModelConfig mc;
  mc.vocab_size = a.vocab;
  mc.embed_dim = a.n;
  mc.max_query_len = a.query_len;
  mc.max_passage_len = a.passage_len;
  mc.max_answer_len = a.passage_len;
  mc.qlsc = QLSCConfig{a.n, a.m, a.k, true, true};
  Rng rng(a.seed);
  QAModel model = QAModel::init(mc, rng);
  // Probe away from the init: with 1/sqrt(fan_in) weights and zero biases the
  // query encoder gradients shrink to ~1e-9, where round-off in the central
  // difference alone exceeds the tolerance. Unit-scale weights keep every
  // gradient well above that noise without saturating the gates.
  for (auto& p : model.named_parameters()) {
    for (auto& v : p.tensor.mutable_data()) v = rng.uniform(-1.0, 1.0);
  }
  QAExample ex;
  ex.id = "gradcheck";
  ex.group_id = "gradcheck";
  for (std::size_t i = 0; i < a.query_len; ++i) {
    ex.question.push_back(static_cast<int>(Vocab::kReserved + rng.bounded(a.vocab - Vocab::kReserved)));
  }
  for (std::size_t i = 0; i < a.passage_len; ++i) {
    ex.passage.push_back(static_cast<int>(Vocab::kReserved + rng.bounded(a.vocab - Vocab::kReserved)));
  }
  ex.answer_start = static_cast<int>(rng.bounded(a.passage_len));
  ex.answer_end = ex.answer_start + static_cast<int>(rng.bounded(a.passage_len - ex.answer_start));

  const auto named = model.named_parameters();
  const auto started = std::chrono::steady_clock::now();
  const GradCheckReport report = finite_diff_report(
      [&] {
        const SpanLogits logits = model.forward_logits(ex);
        return span_loss(logits.start, logits.end,
                         static_cast<std::size_t>(ex.answer_start),
                         static_cast<std::size_t>(ex.answer_end));
      },
      named, a.h);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  std::string csv = "parameter,max_relative_error,worst_index,analytic,numeric\n";
  for (const auto& e : report.per_tensor) {
    csv += fmt::format("{},{:.3e},{},{:.6e},{:.6e}\n", e.name, e.max_relative_error,
                       e.worst_index, e.worst_analytic, e.worst_numeric);
  }
  out << csv;
  out << fmt::format("max_relative_error {:.3e} (tolerance {:.1e}) in {:.2f}s\n",
                     report.max_relative_error, a.tol, seconds);
  if (!a.out_dir.empty()) write_file(fs::path(a.out_dir) / "gradcheck.csv", csv);
  return report.max_relative_error <= a.tol ? kExitOk : kExitRuntime;
}

struct PcaArgs {
  std::string ckpt, data, out_dir = ".", stage = "calibrated", split = "all";
};

int run_pca(const PcaArgs& a, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(a.ckpt);
  const auto examples = select_split(load_jsonl(a.data), a.split);
  if (examples.size() < 2) throw Error("pca needs at least two examples");
  std::vector<std::vector<double>> vectors;
  for (const auto& ex : examples) {
    vectors.push_back(ckpt.model.query_representation(ex, parse_stage(a.stage)));
  }
  const PcaResult pca = pca_project_2d(vectors);
  std::string csv = "group_id,example_id,pc1,pc2\n";
  for (std::size_t i = 0; i < examples.size(); ++i) {
    csv += fmt::format("{},{},{:.6f},{:.6f}\n", examples[i].group_id, examples[i].id,
                       pca.points[i][0], pca.points[i][1]);
  }
  write_file(fs::path(a.out_dir) / "pca.csv", csv);
  out << fmt::format("explained variance {:.6f} {:.6f} of total {:.6f}\n",
                     pca.explained_variance[0], pca.explained_variance[1],
                     pca.total_variance);
  return kExitOk;
}

struct ImportArgs {
  std::string squad, out, vocab_out, split = "train";
};

int run_import_squad(const ImportArgs& a, std::ostream& out, std::ostream& err) {
  Vocab vocab;
  const SquadLoadResult result =
      load_squad_json(a.squad, VocabPolicy::kBuild, vocab, parse_split(a.split));
  for (const auto& w : result.warnings) err << "warning: " << w << "\n";
  save_jsonl(result.examples, a.out);
  if (!a.vocab_out.empty()) {
    write_file(a.vocab_out, Json(vocab.tokens()).dump(1) + "\n");
  }
  out << fmt::format("imported {} of {} questions ({} skipped), vocabulary {}\n",
                     result.examples.size(), result.total_answers, result.skipped,
                     vocab.size());
  return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err) {
  CLI::App app{"Query latent semantic calibration: corpus generation, training, "
               "evaluation and diagnostics",
               "qlsc"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic paraphrase QA corpus");
  gen_cmd->add_option("--config", gen.config, "Run config JSON");
  gen_cmd->add_option("--out", gen.out, "Output JSONL path");
  gen_cmd->add_option("--out-dir", gen.out_dir, "Directory for effective_config.json");
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a reader and write a checkpoint");
  train_cmd->add_option("--config", tr.config, "Run config JSON");
  train_cmd->add_option("--data", tr.data, "Corpus JSONL");
  train_cmd->add_option("--out", tr.out, "Checkpoint path");
  train_cmd->add_option("--out-dir", tr.out_dir, "Directory for loss.csv and effective_config.json");
  train_cmd->add_option("--seed", tr.seed, "Training seed (init and shuffling)");
  train_cmd->add_option("--split", tr.split, "Split to train on: train|dev|test|all")
      ->check(CLI::IsMember({"train", "dev", "test", "all"}));
  tr.model.add_to(train_cmd);

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint (EM/F1/TCR/TIR/L1/L2)");
  eval_cmd->add_option("--ckpt", ev.ckpt, "Checkpoint path")->required();
  eval_cmd->add_option("--data", ev.data, "Corpus JSONL")->required();
  eval_cmd->add_option("--report", ev.report, "Metrics CSV path (default <out-dir>/metrics.csv)");
  eval_cmd->add_option("--out-dir", ev.out_dir, "Output directory");
  eval_cmd->add_option("--stage", ev.stage, "Query representation for distances: raw|calibrated")
      ->check(CLI::IsMember({"raw", "calibrated"}));
  eval_cmd->add_option("--split", ev.split, "Split to evaluate: train|dev|test|all")
      ->check(CLI::IsMember({"train", "dev", "test", "all"}));

  AblateKArgs ak;
  auto* ak_cmd = app.add_subcommand("ablate-k", "Sweep the number of information vectors K");
  ak_cmd->add_option("--config", ak.config, "Run config JSON");
  ak_cmd->add_option("--data", ak.data, "Corpus JSONL");
  ak_cmd->add_option("--out-dir", ak.out_dir, "Output directory");
  ak_cmd->add_option("--ks", ak.ks, "Comma-separated K values");
  ak_cmd->add_option("--seed", ak.seed, "Training seed");
  ak_cmd->add_option("--stage", ak.stage, "Query representation for distances: raw|calibrated")
      ->check(CLI::IsMember({"raw", "calibrated"}));
  ak_cmd->add_option("--eval-split", ak.eval_split, "Split to evaluate on")
      ->check(CLI::IsMember({"train", "dev", "test", "all"}));
  ak.model.add_to(ak_cmd);

  AblateSeedArgs as;
  auto* as_cmd = app.add_subcommand("ablate-seed", "Repeat training over seeds; report mean and std");
  as_cmd->add_option("--config", as.config, "Run config JSON");
  as_cmd->add_option("--data", as.data, "Corpus JSONL");
  as_cmd->add_option("--out-dir", as.out_dir, "Output directory");
  as_cmd->add_option("--seeds", as.seeds, "Comma-separated training seeds");
  as_cmd->add_option("--repeats", as.repeats, "Runs per seed")->check(CLI::PositiveNumber);
  as_cmd->add_option("--stage", as.stage, "Query representation for distances: raw|calibrated")
      ->check(CLI::IsMember({"raw", "calibrated"}));
  as_cmd->add_option("--eval-split", as.eval_split, "Split to evaluate on")
      ->check(CLI::IsMember({"train", "dev", "test", "all"}));
  as.model.add_to(as_cmd);

  GradcheckArgs gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every model gradient");
  gc_cmd->add_option("--seed", gc.seed, "Seed for weights and the probe example");
  gc_cmd->set_help_flag("--help", "Print this help message and exit");
  gc_cmd->add_option("--h", gc.h, "Central-difference step")->check(CLI::PositiveNumber);
  gc_cmd->add_option("--tol", gc.tol, "Maximum tolerated relative error");
  gc_cmd->add_option("--n", gc.n, "Hidden width")->check(CLI::PositiveNumber);
  gc_cmd->add_option("--m", gc.m, "Subspaces")->check(CLI::PositiveNumber);
  gc_cmd->add_option("--k", gc.k, "Information vectors")->check(CLI::PositiveNumber);
  gc_cmd->add_option("--query-len", gc.query_len, "Query tokens")->check(CLI::PositiveNumber);
  gc_cmd->add_option("--passage-len", gc.passage_len, "Passage tokens")->check(CLI::PositiveNumber);
  gc_cmd->add_option("--vocab", gc.vocab, "Vocabulary size")->check(CLI::Range(4, 1000000));
  gc_cmd->add_option("--out-dir", gc.out_dir, "Write gradcheck.csv here");

  PcaArgs pc;
  auto* pca_cmd = app.add_subcommand("pca", "Export 2-D PCA projections of query representations");
  pca_cmd->add_option("--ckpt", pc.ckpt, "Checkpoint path")->required();
  pca_cmd->add_option("--data", pc.data, "Corpus JSONL")->required();
  pca_cmd->add_option("--out-dir", pc.out_dir, "Output directory for pca.csv");
  pca_cmd->add_option("--stage", pc.stage, "raw|calibrated")
      ->check(CLI::IsMember({"raw", "calibrated"}));
  pca_cmd->add_option("--split", pc.split, "Split to project")
      ->check(CLI::IsMember({"train", "dev", "test", "all"}));

  ImportArgs im;
  auto* im_cmd = app.add_subcommand("import-squad", "Convert SQuAD v1.1 JSON to JSONL");
  im_cmd->add_option("--squad", im.squad, "SQuAD JSON file")->required();
  im_cmd->add_option("--out", im.out, "Output JSONL path")->required();
  im_cmd->add_option("--vocab-out", im.vocab_out, "Write the vocabulary (JSON array)");
  im_cmd->add_option("--split", im.split, "Split label for imported examples")
      ->check(CLI::IsMember({"train", "dev", "test"}));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kExitOk;
    err << app.help();
    return kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) return run_gen(gen, out);
    if (train_cmd->parsed()) return run_train(tr, out);
    if (eval_cmd->parsed()) return run_eval(ev, out);
    if (ak_cmd->parsed()) return run_ablate_k(ak, out);
    if (as_cmd->parsed()) return run_ablate_seed(as, out);
    if (gc_cmd->parsed()) return run_gradcheck(gc, out);
    if (pca_cmd->parsed()) return run_pca(pc, out);
    if (im_cmd->parsed()) return run_import_squad(im, out, err);
  } catch (const CLI::ValidationError& e) {
    err << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace qlsc::cli
