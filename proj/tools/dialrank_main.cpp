// dialrank: generate synthetic dialog-ranking data, train the ranking models,
// evaluate logit files, ensemble them, and run history ablations.
//
// Every report is printed as a human table followed by one machine-readable
// JSON line (the last line of stdout). Exit codes: 0 success, 1 usage error,
// 2 data error, 3 numeric failure.

#include <cstdio>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dialrank/errors.hpp"
#include "dialrank/fusion.hpp"
#include "dialrank/metrics.hpp"
#include "dialrank/models.hpp"
#include "dialrank/synth_data.hpp"
#include "dialrank/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

dialrank::ModelKind parse_model_kind(const std::string& name) {
  if (name == "cdf") return dialrank::ModelKind::consensus_dropout;
  try {
    return dialrank::model_kind_from_string(name);
  } catch (const dialrank::data_error&) {
    throw dialrank::usage_error("unknown model '" + name +
                                "' (expected image_only, joint, or consensus_dropout)");
  }
}

json report_json(const dialrank::MetricReport& r) {
  json j;
  j["ndcg"] = r.ndcg;
  j["mrr"] = r.mrr;
  j["r_at_1"] = r.r_at_1;
  j["r_at_5"] = r.r_at_5;
  j["r_at_10"] = r.r_at_10;
  j["mean_rank"] = r.mean_rank;
  j["instances"] = r.n_instances;
  return j;
}

void print_report_table(const dialrank::MetricReport& r) {
  std::printf("%-8s %-8s %-8s %-8s %-8s %-8s\n", "NDCG", "MRR", "R@1", "R@5", "R@10", "Mean");
  std::printf("%-8.4f %-8.4f %-8.4f %-8.4f %-8.4f %-8.4f\n", r.ndcg, r.mrr, r.r_at_1, r.r_at_5,
              r.r_at_10, r.mean_rank);
}

void print_row(const std::string& name, const dialrank::MetricReport& r) {
  std::printf("%-10s %-8.4f %-8.4f %-8.4f %-8.4f %-8.4f %-8.4f\n", name.c_str(), r.ndcg, r.mrr,
              r.r_at_1, r.r_at_5, r.r_at_10, r.mean_rank);
}

// --- gen ---

struct GenOptions {
  dialrank::DatasetConfig config;
  std::string out_dir = "data";
};

void run_gen(const GenOptions& opt) {
  fs::create_directories(opt.out_dir);
  dialrank::Dataset full = dialrank::generate(opt.config);
  auto [train, val] = dialrank::split_dataset(full, opt.config.train_ratio);

  const std::string train_path = (fs::path(opt.out_dir) / "train.dataset").string();
  const std::string val_path = (fs::path(opt.out_dir) / "val.dataset").string();
  const std::string train_ann = (fs::path(opt.out_dir) / "train.annotations").string();
  const std::string val_ann = (fs::path(opt.out_dir) / "val.annotations").string();
  dialrank::save_dataset_file(train, train_path);
  dialrank::save_dataset_file(val, val_path);
  dialrank::save_annotations_file(dialrank::annotations_from(train), train_ann);
  dialrank::save_annotations_file(dialrank::annotations_from(val), val_ann);

  std::printf("wrote %zu train / %zu val examples to %s\n", train.examples.size(),
              val.examples.size(), opt.out_dir.c_str());
  json j;
  j["train_dataset"] = train_path;
  j["val_dataset"] = val_path;
  j["train_annotations"] = train_ann;
  j["val_annotations"] = val_ann;
  j["train_history_fraction"] = dialrank::measure_history_fraction(train);
  j["val_history_fraction"] = dialrank::measure_history_fraction(val);
  std::printf("%s\n", j.dump().c_str());
}

// --- train ---

struct TrainOptions {
  std::string model = "image_only";
  std::string data;
  std::string val;
  std::string out_dir = "runs";
  std::string checkpoint;  // default derived from out_dir + model
  std::string logits;
  std::string log;
  std::size_t epochs = 30;
  std::size_t batch = 8;
  std::size_t hidden = 32;
  std::size_t embed = 16;
  std::size_t factors = 2;
  std::size_t fused_dim = 0;  // 0 = 2 * hidden
  double instance_dropout_p = 0.25;
  bool round_dropout = true;
  bool caption_to_question = false;
  std::uint64_t seed = 0;
};

void run_train(const TrainOptions& opt) {
  const dialrank::ModelKind kind = parse_model_kind(opt.model);
  dialrank::Dataset train_data = dialrank::load_dataset_file(opt.data);
  dialrank::Dataset val_data = dialrank::load_dataset_file(opt.val);

  dialrank::ModelConfig config;
  config.vocab_size = train_data.vocab.size();
  config.embed_dim = opt.embed;
  config.hidden_dim = opt.hidden;
  config.factor_count = opt.factors;
  config.fused_dim = opt.fused_dim == 0 ? 2 * opt.hidden : opt.fused_dim;
  config.feature_dim = train_data.feature_dim;
  config.caption_to_question = opt.caption_to_question;
  dialrank::Model model = dialrank::build_model(kind, config, opt.seed);

  fs::create_directories(opt.out_dir);
  const std::string stem = (fs::path(opt.out_dir) / opt.model).string();
  dialrank::TrainConfig tc;
  tc.epochs = opt.epochs;
  tc.batch_examples = opt.batch;
  tc.instance_dropout_p = opt.instance_dropout_p;
  tc.round_dropout = opt.round_dropout;
  tc.seed = opt.seed;
  tc.checkpoint_path = opt.checkpoint.empty() ? stem + ".checkpoint" : opt.checkpoint;
  tc.logits_path = opt.logits.empty() ? stem + ".logits" : opt.logits;
  tc.log_path = opt.log.empty() ? stem + ".log.jsonl" : opt.log;

  dialrank::TrainResult result = dialrank::train(model, train_data, val_data, tc);

  std::printf("best epoch %zu of %zu\n", result.best_epoch, opt.epochs);
  print_report_table(result.best_val);
  json j;
  j["model"] = dialrank::to_string(kind);
  j["best_epoch"] = result.best_epoch;
  j["checkpoint"] = tc.checkpoint_path;
  j["logits"] = tc.logits_path;
  j["log"] = tc.log_path;
  j["val"] = report_json(result.best_val);
  std::printf("%s\n", j.dump().c_str());
}

// --- eval ---

struct EvalOptions {
  std::string logits;
  std::string annotations;
  std::string compare;  // second logit file for overlap analysis
};

void run_eval(const EvalOptions& opt) {
  const dialrank::LogitMatrix logits = dialrank::LogitMatrix::load_file(opt.logits);
  const auto annotations = dialrank::load_annotations_file(opt.annotations);
  const auto instances = dialrank::join_instances(logits, annotations);

  if (opt.compare.empty()) {
    const dialrank::MetricReport report = dialrank::evaluate(instances);
    print_report_table(report);
    std::printf("%s\n", report_json(report).dump().c_str());
    return;
  }
  const dialrank::LogitMatrix other = dialrank::LogitMatrix::load_file(opt.compare);
  const auto other_instances = dialrank::join_instances(other, annotations);
  const dialrank::ComplementarityReport rep =
      dialrank::complementarity(instances, other_instances);
  std::printf("%-8s %-8s %-8s %-13s %-8s\n", "metric", "a", "b", "intersection", "union");
  std::printf("%-8s %-8.4f %-8.4f %-13.4f %-8.4f\n", "r_at_1", rep.r1_a, rep.r1_b,
              rep.r1_intersection, rep.r1_union);
  std::printf("%-8s %-8.4f %-8.4f %-13.4f %-8.4f\n", "ndcg", rep.ndcg_a, rep.ndcg_b,
              rep.ndcg_intersection, rep.ndcg_union);
  json j;
  j["r1_a"] = rep.r1_a;
  j["r1_b"] = rep.r1_b;
  j["r1_intersection"] = rep.r1_intersection;
  j["r1_union"] = rep.r1_union;
  j["ndcg_a"] = rep.ndcg_a;
  j["ndcg_b"] = rep.ndcg_b;
  j["ndcg_intersection"] = rep.ndcg_intersection;
  j["ndcg_union"] = rep.ndcg_union;
  std::printf("%s\n", j.dump().c_str());
}

// --- ensemble ---

struct EnsembleOptions {
  std::vector<std::string> logit_files;
  std::string out;
  std::string annotations;
};

void run_ensemble(const EnsembleOptions& opt) {
  std::vector<dialrank::LogitMatrix> models;
  models.reserve(opt.logit_files.size());
  for (const auto& path : opt.logit_files)
    models.push_back(dialrank::LogitMatrix::load_file(path));
  const dialrank::EnsembleRanking ranking = dialrank::ensemble(models);

  dialrank::LogitMatrix merged;
  merged.candidate_count = models[0].candidate_count;
  merged.source = dialrank::LogitSource::ensemble;
  merged.rows = ranking.summed;
  merged.save_file(opt.out);
  std::printf("wrote summed logits for %zu models to %s\n", models.size(), opt.out.c_str());

  json j;
  j["out"] = opt.out;
  j["models"] = opt.logit_files.size();
  if (!opt.annotations.empty()) {
    const auto annotations = dialrank::load_annotations_file(opt.annotations);
    const dialrank::MetricReport report =
        dialrank::evaluate(dialrank::join_instances(merged, annotations));
    print_report_table(report);
    j["val"] = report_json(report);
  }
  std::printf("%s\n", j.dump().c_str());
}

// --- ablate ---

struct AblateOptions {
  std::string joint_checkpoint;
  std::string image_checkpoint;
  std::string data;
  std::vector<std::size_t> keep;  // H-k rows
};

void run_ablate(const AblateOptions& opt) {
  const dialrank::Dataset data = dialrank::load_dataset_file(opt.data);
  const auto annotations = dialrank::annotations_from(data);
  auto eval_scores = [&](const dialrank::LogitMatrix& m) {
    return dialrank::evaluate(dialrank::join_instances(m, annotations));
  };

  dialrank::Model joint = dialrank::load_checkpoint(opt.joint_checkpoint);
  if (!joint.has_joint_head())
    throw dialrank::data_error("'" + opt.joint_checkpoint + "' has no history-reading head");

  std::printf("%-10s %-8s %-8s %-8s %-8s %-8s %-8s\n", "history", "NDCG", "MRR", "R@1", "R@5",
              "R@10", "Mean");
  json rows = json::array();
  auto add_row = [&](const std::string& name, const dialrank::MetricReport& r) {
    print_row(name, r);
    json row = report_json(r);
    row["name"] = name;
    rows.push_back(row);
  };

  add_row("FULL", eval_scores(dialrank::score_dataset(joint, data).primary()));
  std::vector<std::size_t> keep = opt.keep;
  std::sort(keep.begin(), keep.end(), std::greater<>());
  for (const std::size_t k : keep)
    add_row("H-" + std::to_string(k), eval_scores(dialrank::score_dataset(joint, data, k).primary()));
  if (!opt.image_checkpoint.empty()) {
    dialrank::Model image = dialrank::load_checkpoint(opt.image_checkpoint);
    if (!image.has_image_only_head())
      throw dialrank::data_error("'" + opt.image_checkpoint + "' has no image-only head");
    dialrank::DatasetScores s = dialrank::score_dataset(image, data);
    add_row("Img-only", eval_scores(image.kind == dialrank::ModelKind::image_only
                                        ? s.primary()
                                        : *s.image_only));
  }
  json j;
  j["rows"] = rows;
  std::printf("%s\n", j.dump().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dialog answer ranking: data, training, evaluation, fusion"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from a config file (sections per subcommand)");
  app.allow_config_extras(CLI::config_extras_mode::error);  // unknown keys are mistakes

  GenOptions gen;
  CLI::App* gen_cmd = app.add_subcommand("gen", "generate a synthetic dataset (train/val split)");
  gen_cmd->add_option("--out-dir", gen.out_dir, "output directory")->capture_default_str();
  gen_cmd->add_option("--examples", gen.config.n_examples, "total dialogs before the split")
      ->capture_default_str();
  gen_cmd->add_option("--train-ratio", gen.config.train_ratio, "fraction of dialogs in train")
      ->capture_default_str();
  gen_cmd->add_option("--rounds", gen.config.rounds, "rounds per dialog")->capture_default_str();
  gen_cmd->add_option("--candidates", gen.config.candidates, "candidates per round")
      ->capture_default_str();
  gen_cmd->add_option("--objects", gen.config.objects, "objects per image")->capture_default_str();
  gen_cmd->add_option("--feature-dim", gen.config.feature_dim, "visual feature width")
      ->capture_default_str();
  gen_cmd->add_option("--history-fraction", gen.config.history_fraction,
                      "fraction of rounds that need history")
      ->capture_default_str();
  gen_cmd->add_option("--noise-sigma", gen.config.noise_sigma, "feature cluster noise")
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen.config.seed, "generation seed")->capture_default_str();
  gen_cmd->callback([&] {
    gen.config.val_ratio = 1.0 - gen.config.train_ratio;
    run_gen(gen);
  });

  TrainOptions train;
  CLI::App* train_cmd = app.add_subcommand("train", "train a ranking model");
  train_cmd->add_option("--model", train.model,
                        "image_only, joint, or consensus_dropout (alias: cdf)")
      ->capture_default_str();
  train_cmd->add_option("--data", train.data, "training dataset file")->required();
  train_cmd->add_option("--val", train.val, "validation dataset file")->required();
  train_cmd->add_option("--out-dir", train.out_dir, "artifact directory")->capture_default_str();
  train_cmd->add_option("--checkpoint", train.checkpoint, "checkpoint path (default derived)");
  train_cmd->add_option("--logits", train.logits, "validation logits path (default derived)");
  train_cmd->add_option("--log", train.log, "JSON-lines epoch log path (default derived)");
  train_cmd->add_option("--epochs", train.epochs, "training epochs")->capture_default_str();
  train_cmd->add_option("--batch", train.batch, "examples per batch")->capture_default_str();
  train_cmd->add_option("--hidden", train.hidden, "hidden width d")->capture_default_str();
  train_cmd->add_option("--embed", train.embed, "token embedding width")->capture_default_str();
  train_cmd->add_option("--factors", train.factors, "bilinear factor count")
      ->capture_default_str();
  train_cmd->add_option("--fused-dim", train.fused_dim, "bilinear output width (0 = 2*hidden)")
      ->capture_default_str();
  train_cmd
      ->add_option("--instance-dropout", train.instance_dropout_p,
                   "row dropout probability for the fused model")
      ->capture_default_str();
  train_cmd->add_flag("--round-dropout,!--no-round-dropout", train.round_dropout,
                      "drop random history rounds while training history heads")
      ->capture_default_str();
  train_cmd->add_flag("--caption-to-question", train.caption_to_question,
                      "prepend the caption tokens to the image-only head's question");
  train_cmd->add_option("--seed", train.seed, "init + training seed")->capture_default_str();
  train_cmd->callback([&] { run_train(train); });

  EvalOptions eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "score a logit file against annotations");
  eval_cmd->add_option("--logits", eval.logits, "logit file")->required();
  eval_cmd->add_option("--annotations", eval.annotations, "annotations file")->required();
  eval_cmd->add_option("--compare", eval.compare,
                       "second logit file: report answer-overlap instead of plain metrics");
  eval_cmd->callback([&] { run_eval(eval); });

  EnsembleOptions ens;
  CLI::App* ens_cmd = app.add_subcommand("ensemble", "sum logit files and rank by the total");
  ens_cmd->add_option("files", ens.logit_files, "logit files (2 or more)")
      ->required()
      ->expected(2, -1);
  ens_cmd->add_option("--out", ens.out, "merged logit file")->required();
  ens_cmd->add_option("--annotations", ens.annotations, "evaluate the merged ranking");
  ens_cmd->callback([&] { run_ensemble(ens); });

  AblateOptions ablate;
  CLI::App* ablate_cmd =
      app.add_subcommand("ablate", "evaluate a history head with truncated history");
  ablate_cmd->add_option("--joint-checkpoint", ablate.joint_checkpoint, "history-head checkpoint")
      ->required();
  ablate_cmd->add_option("--image-checkpoint", ablate.image_checkpoint,
                         "optional image-only checkpoint for the last row");
  ablate_cmd->add_option("--data", ablate.data, "dataset file to score")->required();
  ablate_cmd->add_option("--keep", ablate.keep, "H-k rows: keep only the last k rounds")
      ->delimiter(',');
  ablate_cmd->callback([&] { run_ablate(ablate); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const dialrank::usage_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const dialrank::data_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const dialrank::numeric_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
