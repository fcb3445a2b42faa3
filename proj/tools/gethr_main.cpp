// gethr: command-line front end. Verbs: synth, train, eval, fuse, compare,
// gradcheck. Every verb prints its resolved configuration (lines starting
// with "# ") before doing anything, and all output is tab-separated so it
// can be consumed by scripts. Exit codes: 0 ok, 2 usage, 3 I/O, 4 training
// divergence, 5 undefined metric.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gethr/gethr.hpp"

namespace {

using namespace gethr;

std::string g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void print_config_line(const std::string& key, const std::string& value) {
  std::cout << "# " << key << " = " << value << "\n";
}

void print_json_config(const nlohmann::json& j) {
  for (const auto& [key, value] : j.items()) {
    print_config_line(key, value.is_string() ? value.get<std::string>() : value.dump());
  }
}

// ---------------------------------------------------------------------------
// shared helpers

TrainConfig load_train_config(const std::string& path) {
  if (path.empty()) return TrainConfig{};
  std::ifstream in(path);
  if (!in) throw gethr::io_error("config file not found: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw gethr::io_error(path + ": " + e.what());
  }
  return train_config_from_json(j);  // semantic problems stay usage errors
}

std::vector<std::string> split_ids(const std::vector<MultimodalSequence>& seqs) {
  std::vector<std::string> ids;
  ids.reserve(seqs.size());
  for (const auto& s : seqs) ids.push_back(s.id);
  return ids;
}

Matrix scores_matrix(const std::vector<ScoreVector>& scores) {
  if (scores.empty()) throw value_error("no scores");
  Matrix m(scores.size(), scores[0].size());
  for (std::size_t i = 0; i < scores.size(); ++i) m.set_row(i, scores[i].p);
  return m;
}

// One number for a batch of per-sequence score vectors. For `edit`, each
// sequence contributes a length-1 label stream (its argmax) against a
// length-1 truth stream, so the value is the fraction of misclassified
// sequences.
double metric_value(Metric metric, const std::vector<ScoreVector>& scores, const LabelSeq& labels,
                    const std::vector<std::string>& ids) {
  switch (metric) {
    case Metric::accuracy:
      return accuracy(argmax_labels(scores), labels);
    case Metric::map:
      return map_from_scores(scores_matrix(scores), labels, ids);
    case Metric::edit: {
      std::vector<LabelSeq> pred, truth;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        pred.push_back({scores[i].argmax()});
        truth.push_back({labels[i]});
      }
      return normalized_edit_score(pred, truth);
    }
  }
  throw value_error("bad metric");
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string task;
  std::string out;
  std::size_t train = 64, val = 32, test = 32;
  std::size_t length = 16, dim = 8;
  std::size_t classes = 0, modalities = 0;  // 0: task default
  double noise = 0.25;
  double fraction = 0.5;
  std::uint64_t seed = 1;
};

int run_synth(const SynthArgs& a) {
  GenConfig cfg;
  if (a.task == "xor") {
    cfg.task = GenConfig::Task::xor_bits;
  } else if (a.task == "distractor") {
    cfg.task = GenConfig::Task::distractor;
  } else {
    throw value_error("unknown task '" + a.task + "' (expected xor|distractor)");
  }
  cfg.train_count = a.train;
  cfg.val_count = a.val;
  cfg.test_count = a.test;
  cfg.length = a.length;
  cfg.dim = a.dim;
  cfg.noise = a.noise;
  cfg.distractor_fraction = a.fraction;
  cfg.seed = a.seed;
  cfg.num_classes = a.classes != 0 ? a.classes : (cfg.task == GenConfig::Task::xor_bits ? 2 : 4);
  cfg.num_modalities = a.modalities != 0 ? a.modalities : 2;

  print_config_line("command", "synth");
  print_config_line("task", a.task);
  print_config_line("out", a.out);
  print_config_line("train", std::to_string(cfg.train_count));
  print_config_line("val", std::to_string(cfg.val_count));
  print_config_line("test", std::to_string(cfg.test_count));
  print_config_line("length", std::to_string(cfg.length));
  print_config_line("dim", std::to_string(cfg.dim));
  print_config_line("classes", std::to_string(cfg.num_classes));
  print_config_line("modalities", std::to_string(cfg.num_modalities));
  print_config_line("noise", g9(cfg.noise));
  if (cfg.task == GenConfig::Task::distractor) {
    print_config_line("distractor_fraction", g9(cfg.distractor_fraction));
  }
  print_config_line("seed", std::to_string(cfg.seed));

  SeededRng rng(cfg.seed);
  Dataset ds = generate(cfg, rng);
  save_dataset(ds, a.out);
  std::cout << "train\t" << ds.train.size() << "\n";
  std::cout << "val\t" << ds.val.size() << "\n";
  std::cout << "test\t" << ds.test.size() << "\n";
  std::cout << "wrote\t" << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string data, topology, config, out;
  std::int64_t seed = -1;  // <0: keep config seed
};

int run_train(const TrainArgs& a) {
  TrainConfig cfg = load_train_config(a.config);
  if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);

  print_config_line("command", "train");
  print_config_line("data", a.data);
  print_config_line("topology", a.topology);
  print_config_line("out", a.out);
  print_json_config(train_config_to_json(cfg));

  parse_topology(a.topology);  // validate before the expensive load
  Dataset ds = load_dataset(a.data);

  std::cout << "# epoch\tlr\tmean_loss\ttrain_acc\tval_acc\n";
  TrainResult res = train_model(ds.train, ds.val, ds.modalities, ds.classes, a.topology, cfg);
  for (const auto& rep : res.reports) {
    std::cout << rep.epoch << "\t" << g9(rep.lr) << "\t" << g9(rep.mean_loss) << "\t"
              << g9(rep.train_accuracy) << "\t" << g9(rep.val_accuracy) << "\n";
  }
  std::cout << "best\t" << res.best_epoch << "\t" << g9(res.best_val_accuracy) << "\n";
  save_model(res.model, a.out);
  std::cout << "wrote\t" << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string data, split = "test", metric = "accuracy";
  std::string model, ensemble, preds, dump;
};

int run_eval(const EvalArgs& a) {
  Metric metric = parse_metric(a.metric);
  int sources = !a.model.empty() + !a.ensemble.empty() + !a.preds.empty();
  if (sources != 1) {
    throw value_error("eval needs exactly one of --model, --ensemble, --preds");
  }

  print_config_line("command", "eval");
  print_config_line("metric", a.metric);

  std::vector<ScoreVector> scores;
  LabelSeq labels;
  std::vector<std::string> ids;
  std::vector<std::string> classes;

  if (!a.preds.empty()) {
    if (!a.dump.empty()) throw value_error("--dump makes no sense with --preds");
    if (a.data.empty()) throw value_error("eval --preds needs --data for the reference labels");
    print_config_line("data", a.data);
    print_config_line("split", a.split);
    print_config_line("preds", a.preds);
    Dataset ds = load_dataset(a.data);
    const auto& seqs = ds.split(a.split);
    if (seqs.empty()) throw value_error("split '" + a.split + "' is empty");
    PredictionSet p = load_predictions(a.preds);
    if (p.ids.size() != seqs.size()) {
      throw value_error(a.preds + ": " + std::to_string(p.ids.size()) +
                        " sequences, but split '" + a.split + "' has " +
                        std::to_string(seqs.size()));
    }
    if (p.classes.size() != ds.classes.size()) {
      throw value_error(a.preds + ": class set does not match the dataset");
    }
    std::vector<std::size_t> col(ds.classes.size());
    for (std::size_t k = 0; k < ds.classes.size(); ++k) {
      auto it = std::find(p.classes.begin(), p.classes.end(), ds.classes[k]);
      if (it == p.classes.end()) {
        throw value_error(a.preds + ": missing class '" + ds.classes[k] + "'");
      }
      col[k] = static_cast<std::size_t>(it - p.classes.begin());
    }
    for (const auto& seq : seqs) {
      auto it = std::find(p.ids.begin(), p.ids.end(), seq.id);
      if (it == p.ids.end()) {
        throw value_error(a.preds + ": no scores for sequence '" + seq.id + "'");
      }
      std::size_t row = static_cast<std::size_t>(it - p.ids.begin());
      Vec s(ds.classes.size());
      for (std::size_t k = 0; k < ds.classes.size(); ++k) s[k] = p.scores(row, col[k]);
      scores.push_back(ScoreVector{std::move(s)});
    }
    labels = labels_of(seqs);
    ids = split_ids(seqs);
    classes = ds.classes;
  } else {
    if (a.data.empty()) throw value_error("eval needs --data when scoring a model");
    print_config_line("data", a.data);
    print_config_line("split", a.split);
    if (!a.model.empty()) print_config_line("model", a.model);
    if (!a.ensemble.empty()) print_config_line("ensemble", a.ensemble);
    Dataset ds = load_dataset(a.data);
    const auto& seqs = ds.split(a.split);
    if (seqs.empty()) throw value_error("split '" + a.split + "' is empty");
    labels = labels_of(seqs);
    ids = split_ids(seqs);
    classes = ds.classes;
    if (!a.model.empty()) {
      Model model = load_model(a.model);
      if (model_classes(model) != ds.classes) {
        throw value_error("model classes do not match the dataset");
      }
      scores = score_split(model, seqs);
    } else {
      Ensemble ens = load_ensemble(a.ensemble);
      if (model_classes(ens.components[0]) != ds.classes) {
        throw value_error("ensemble classes do not match the dataset");
      }
      scores.reserve(seqs.size());
      for (const auto& seq : seqs) scores.push_back(ensemble_predict(ens, seq));
    }
  }

  std::cout << a.metric << "\t" << g9(metric_value(metric, scores, labels, ids)) << "\n";

  if (!a.dump.empty()) {
    PredictionSet out;
    out.classes = classes;
    out.ids = ids;
    out.scores = scores_matrix(scores);
    save_predictions(out, a.dump);
    std::cout << "wrote\t" << a.dump << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// fuse

struct FuseArgs {
  std::string data, out, metric = "accuracy";
  std::vector<std::string> components;
};

int run_fuse(const FuseArgs& a) {
  FusionMetric metric = parse_fusion_metric(a.metric);
  if (a.components.empty()) throw value_error("fuse needs at least one --component");

  print_config_line("command", "fuse");
  print_config_line("data", a.data);
  print_config_line("metric", a.metric);
  for (const auto& c : a.components) print_config_line("component", c);
  print_config_line("out", a.out);

  Dataset ds = load_dataset(a.data);
  if (ds.val.empty()) throw value_error("fuse needs a non-empty val split");

  std::vector<std::string> abs_paths;
  std::vector<std::vector<ScoreVector>> comp_scores;
  for (const auto& path : a.components) {
    Model model = load_model(path);
    if (model_classes(model) != ds.classes) {
      throw value_error(path + ": model classes do not match the dataset");
    }
    comp_scores.push_back(score_split(model, ds.val));
    abs_paths.push_back(std::filesystem::absolute(path).string());
  }

  LabelSeq labels = labels_of(ds.val);
  std::vector<std::string> ids = split_ids(ds.val);
  Vec weights = learn_combination_weights(comp_scores, labels, ids, metric);

  for (std::size_t c = 0; c < weights.size(); ++c) {
    std::cout << "weight\t" << abs_paths[c] << "\t" << g9(weights[c]) << "\n";
  }
  double val = detail::fusion_objective(comp_scores, weights, labels, ids, metric);
  std::cout << "val_" << a.metric << "\t" << g9(val) << "\n";

  save_ensemble(abs_paths, weights, a.out);
  std::cout << "wrote\t" << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// compare

struct CompareArgs {
  std::string data, config, metric = "accuracy";
  std::int64_t seed = -1;
};

struct TrainedComponent {
  std::string name;
  TrainResult result;
  std::vector<ScoreVector> val_scores, test_scores;
};

int run_compare(const CompareArgs& a) {
  Metric metric = parse_metric(a.metric);
  TrainConfig base_cfg = load_train_config(a.config);
  std::uint64_t master = a.seed >= 0 ? static_cast<std::uint64_t>(a.seed) : base_cfg.seed;

  print_config_line("command", "compare");
  print_config_line("data", a.data);
  print_config_line("metric", a.metric);
  print_config_line("seed", std::to_string(master));
  print_json_config(train_config_to_json(base_cfg));

  Dataset ds = load_dataset(a.data);
  if (ds.test.empty()) throw value_error("compare needs a non-empty test split");
  LabelSeq val_labels = labels_of(ds.val);
  LabelSeq test_labels = labels_of(ds.test);
  std::vector<std::string> val_ids = split_ids(ds.val);
  std::vector<std::string> test_ids = split_ids(ds.test);

  // Weight learning maximizes accuracy unless the reported metric is mAP.
  FusionMetric fuse_metric =
      metric == Metric::map ? FusionMetric::map : FusionMetric::accuracy;

  auto train_one = [&](const std::string& topology) {
    TrainConfig cfg = base_cfg;
    cfg.seed = derive_seed(master, topology);
    TrainedComponent tc;
    tc.name = topology;
    tc.result = train_model(ds.train, ds.val, ds.modalities, ds.classes, topology, cfg);
    tc.val_scores = score_split(tc.result.model, ds.val);
    tc.test_scores = score_split(tc.result.model, ds.test);
    return tc;
  };

  std::vector<TrainedComponent> nontemporal, temporal;
  for (const auto& mod : ds.modalities) {
    nontemporal.push_back(train_one("nontemporal:" + mod.name));
    temporal.push_back(train_one("temporal:" + mod.name));
  }
  TrainedComponent early = train_one("early");
  TrainedComponent etoe = train_one("etoe");
  TrainedComponent hybrid = train_one("hybrid");

  auto test_metric = [&](const std::vector<ScoreVector>& scores) {
    return metric_value(metric, scores, test_labels, test_ids);
  };

  // Best single-modality component by validation accuracy; detail lists the
  // per-modality test numbers.
  auto best_single = [&](const std::vector<TrainedComponent>& comps, std::string& detail) {
    std::size_t best = 0;
    double best_val = -1.0;
    detail.clear();
    for (std::size_t m = 0; m < comps.size(); ++m) {
      double val_acc = accuracy(argmax_labels(comps[m].val_scores), val_labels);
      if (val_acc > best_val) {
        best_val = val_acc;
        best = m;
      }
      if (!detail.empty()) detail += " ";
      detail += ds.modalities[m].name + "=" + g9(test_metric(comps[m].test_scores));
    }
    detail = "best=" + ds.modalities[best].name + " " + detail;
    return test_metric(comps[best].test_scores);
  };

  // Learned combination of a set of components; detail records the weights.
  auto combine = [&](const std::vector<const TrainedComponent*>& comps, std::string& detail) {
    std::vector<std::vector<ScoreVector>> val_scores, test_scores;
    for (const auto* c : comps) {
      val_scores.push_back(c->val_scores);
      test_scores.push_back(c->test_scores);
    }
    Vec weights = learn_combination_weights(val_scores, val_labels, val_ids, fuse_metric);
    detail = "w=[";
    std::vector<ScoreVector> combined;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      detail += (i > 0 ? "," : "") + g9(weights[i]);
    }
    detail += "]";
    for (std::size_t i = 0; i < test_labels.size(); ++i) {
      std::vector<ScoreVector> per_seq;
      for (const auto& ts : test_scores) per_seq.push_back(ts[i]);
      combined.push_back(late_fusion_scores(per_seq, weights));
    }
    return test_metric(combined);
  };

  struct Row {
    char letter;
    std::string method;
    double value;
    std::string detail;
  };
  std::vector<Row> rows;

  std::string detail;
  double v = best_single(nontemporal, detail);
  rows.push_back({'a', "nontemporal-single", v, detail});
  v = best_single(temporal, detail);
  rows.push_back({'b', "temporal-single", v, detail});

  std::vector<const TrainedComponent*> nt_ptrs, t_ptrs, both_ptrs, gethr_ptrs;
  for (const auto& c : nontemporal) nt_ptrs.push_back(&c);
  for (const auto& c : temporal) t_ptrs.push_back(&c);
  for (const auto& c : temporal) both_ptrs.push_back(&c);
  for (const auto& c : nontemporal) both_ptrs.push_back(&c);
  gethr_ptrs.push_back(&hybrid);
  for (const auto& c : nontemporal) gethr_ptrs.push_back(&c);

  v = combine(nt_ptrs, detail);
  rows.push_back({'c', "nontemporal-combined", v, detail});
  v = combine(t_ptrs, detail);
  rows.push_back({'d', "temporal-late", v, detail});
  rows.push_back({'e', "temporal-etoe", test_metric(etoe.test_scores), ""});
  rows.push_back({'f', "temporal-early", test_metric(early.test_scores), ""});
  v = combine(both_ptrs, detail);
  rows.push_back({'g', "temporal+nontemporal", v, detail});
  rows.push_back({'h', "hybrid", test_metric(hybrid.test_scores), ""});
  v = combine(gethr_ptrs, detail);
  rows.push_back({'i', "gethr", v, detail});

  std::cout << "# row\tmethod\t" << a.metric << "\tdetail\n";
  for (const auto& row : rows) {
    std::cout << row.letter << "\t" << row.method << "\t" << g9(row.value) << "\t" << row.detail
              << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradCheckArgs {
  std::uint64_t seed = 1;
  double eps = 1e-5;
};

int run_gradcheck(const GradCheckArgs& a) {
  print_config_line("command", "gradcheck");
  print_config_line("seed", std::to_string(a.seed));
  print_config_line("eps", g9(a.eps));

  GradCheckConfig cfg;
  cfg.seed = a.seed;
  cfg.eps = a.eps;

  const char* kinds[] = {"hybrid",         "early",          "etoe",
                         "temporal:modA",  "temporal:modB",  "nontemporal:modA",
                         "nontemporal:modB"};
  bool ok = true;
  for (const char* kind : kinds) {
    double err = grad_check(kind, cfg);
    bool pass = err < 1e-4;
    ok = ok && pass;
    std::cout << kind << "\t" << g9(err) << "\t" << (pass ? "ok" : "FAIL") << "\n";
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multimodal temporal sequence classification"};
  app.require_subcommand(1);

  SynthArgs synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
  synth_cmd->add_option("--task", synth.task, "xor | distractor")->required();
  synth_cmd->add_option("--out", synth.out, "output dataset directory")->required();
  synth_cmd->add_option("--train", synth.train, "training sequences");
  synth_cmd->add_option("--val", synth.val, "validation sequences");
  synth_cmd->add_option("--test", synth.test, "test sequences");
  synth_cmd->add_option("--length", synth.length, "steps per sequence");
  synth_cmd->add_option("--dim", synth.dim, "features per modality");
  synth_cmd->add_option("--classes", synth.classes, "classes (distractor; xor is 2)");
  synth_cmd->add_option("--modalities", synth.modalities, "modalities (distractor; xor is 2)");
  synth_cmd->add_option("--noise", synth.noise, "feature noise stddev");
  synth_cmd->add_option("--distractor-fraction", synth.fraction,
                        "share of sequences with distractor tails");
  synth_cmd->add_option("--seed", synth.seed, "generator seed");

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "train one model");
  train_cmd->add_option("--data", train.data, "dataset directory")->required();
  train_cmd->add_option("--topology", train.topology,
                        "hybrid | early | etoe | temporal:<mod> | nontemporal:<mod>")
      ->required();
  train_cmd->add_option("--config", train.config, "training config JSON");
  train_cmd->add_option("--seed", train.seed, "override the config seed");
  train_cmd->add_option("--out", train.out, "output model file")->required();

  EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a model, ensemble or dump");
  eval_cmd->add_option("--data", eval.data, "dataset directory");
  eval_cmd->add_option("--split", eval.split, "train | val | test");
  eval_cmd->add_option("--metric", eval.metric, "accuracy | map | edit");
  eval_cmd->add_option("--model", eval.model, "model file");
  eval_cmd->add_option("--ensemble", eval.ensemble, "ensemble file");
  eval_cmd->add_option("--preds", eval.preds, "prediction dump to re-score");
  eval_cmd->add_option("--dump", eval.dump, "write predictions to this file");

  FuseArgs fuse;
  CLI::App* fuse_cmd = app.add_subcommand("fuse", "learn combination weights on validation");
  fuse_cmd->add_option("--data", fuse.data, "dataset directory")->required();
  fuse_cmd->add_option("--metric", fuse.metric, "accuracy | map");
  fuse_cmd->add_option("--component", fuse.components, "component model file (repeatable)")
      ->required();
  fuse_cmd->add_option("--out", fuse.out, "output ensemble file")->required();

  CompareArgs compare;
  CLI::App* compare_cmd = app.add_subcommand("compare", "train and tabulate all baselines");
  compare_cmd->add_option("--data", compare.data, "dataset directory")->required();
  compare_cmd->add_option("--config", compare.config, "training config JSON");
  compare_cmd->add_option("--metric", compare.metric, "accuracy | map | edit");
  compare_cmd->add_option("--seed", compare.seed, "master seed (default: config seed)");

  GradCheckArgs gradcheck;
  CLI::App* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference gradient check");
  gradcheck_cmd->add_option("--seed", gradcheck.seed, "seed");
  gradcheck_cmd->add_option("--eps", gradcheck.eps, "perturbation size");

  try {
    app.parse(argc, argv);
    if (app.got_subcommand(synth_cmd)) return run_synth(synth);
    if (app.got_subcommand(train_cmd)) return run_train(train);
    if (app.got_subcommand(eval_cmd)) return run_eval(eval);
    if (app.got_subcommand(fuse_cmd)) return run_fuse(fuse);
    if (app.got_subcommand(compare_cmd)) return run_compare(compare);
    if (app.got_subcommand(gradcheck_cmd)) return run_gradcheck(gradcheck);
    return 2;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const gethr::io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const gethr::divergence_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const gethr::metric_undefined_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const gethr::value_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
