#ifndef GETHR_DATASET_HPP
#define GETHR_DATASET_HPP

// Datasets on disk: a manifest.json describing modalities, classes and the
// three splits, plus one CSV per (sequence, modality) holding a T x D frame
// matrix. Also home to the two synthetic generators used for experiments.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gethr/errors.hpp"
#include "gethr/matrix.hpp"
#include "gethr/model.hpp"
#include "gethr/rng.hpp"

namespace gethr {

struct Dataset {
  std::vector<ModalitySpec> modalities;
  std::vector<std::string> classes;
  std::vector<MultimodalSequence> train, val, test;

  const std::vector<MultimodalSequence>& split(const std::string& name) const {
    if (name == "train") return train;
    if (name == "val") return val;
    if (name == "test") return test;
    throw value_error("unknown split '" + name + "' (expected train|val|test)");
  }

  std::size_t class_index(const std::string& name) const {
    for (std::size_t i = 0; i < classes.size(); ++i) {
      if (classes[i] == name) return i;
    }
    throw value_error("unknown class '" + name + "'");
  }
};

// Checks the cross-cutting invariants: unique ids across all splits, labels
// in range, every sequence consistent with the modality declarations.
inline void validate_dataset(const Dataset& ds) {
  if (ds.modalities.empty()) throw value_error("dataset has no modalities");
  if (ds.classes.size() < 2) throw value_error("dataset needs at least two classes");
  std::set<std::string> names;
  for (const auto& m : ds.modalities) {
    if (m.dim == 0) throw value_error("modality '" + m.name + "' has dim 0");
    if (!names.insert(m.name).second) throw value_error("duplicate modality '" + m.name + "'");
  }
  std::set<std::string> cls(ds.classes.begin(), ds.classes.end());
  if (cls.size() != ds.classes.size()) throw value_error("duplicate class name");

  std::set<std::string> ids;
  for (const auto* split : {&ds.train, &ds.val, &ds.test}) {
    for (const auto& seq : *split) {
      if (!ids.insert(seq.id).second) {
        throw value_error("sequence id '" + seq.id + "' appears in more than one place");
      }
      if (seq.label >= ds.classes.size()) {
        throw value_error("sequence " + seq.id + ": label index out of range");
      }
      validate_sequence(seq, ds.modalities);
    }
  }
}

// --------------------------------------------------------------------------
// CSV frame matrices

inline void write_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  char buf[64];
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out << buf << (j + 1 == m.cols ? "" : ",");
    }
    out << "\n";
  }
  if (!out) throw io_error("write failed for " + path.string());
}

inline Matrix read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path.string());
  std::vector<Vec> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Vec row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t comma = line.find(',', pos);
      std::string cell = line.substr(pos, comma == std::string::npos ? std::string::npos
                                                                     : comma - pos);
      // strtod rather than std::stod: stod throws on the ERANGE underflow
      // that subnormals raise, but they round-trip fine and must load back.
      const char* begin = cell.c_str();
      char* end = nullptr;
      double v = std::strtod(begin, &end);
      if (cell.empty() || end != begin + cell.size() || !std::isfinite(v)) {
        throw io_error(path.string() + ": bad number '" + cell + "' on line " +
                       std::to_string(rows.size() + 1));
      }
      row.push_back(v);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (!rows.empty() && row.size() != rows[0].size()) {
      throw io_error(path.string() + ": ragged row on line " + std::to_string(rows.size() + 1));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw io_error(path.string() + ": empty feature file");
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) m.set_row(i, rows[i]);
  return m;
}

// --------------------------------------------------------------------------
// manifest

inline std::string feature_relpath(const std::string& split, const std::string& id,
                                   const std::string& modality) {
  return "features/" + split + "/" + id + "." + modality + ".csv";
}

inline void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  validate_dataset(ds);
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);

  nlohmann::json manifest;
  manifest["format_version"] = kFormatVersion;
  for (const auto& m : ds.modalities) {
    manifest["modalities"].push_back({{"name", m.name}, {"dim", m.dim}});
  }
  manifest["classes"] = ds.classes;

  const std::pair<const char*, const std::vector<MultimodalSequence>*> splits[] = {
      {"train", &ds.train}, {"val", &ds.val}, {"test", &ds.test}};
  for (const auto& [split_name, seqs] : splits) {
    fs::create_directories(dir / "features" / split_name, ec);
    manifest["splits"][split_name] = nlohmann::json::array();
    for (const auto& seq : *seqs) {
      nlohmann::json rec;
      rec["id"] = seq.id;
      rec["label"] = ds.classes[seq.label];
      rec["length"] = seq.length();
      for (const auto& [mod, feats] : seq.features) {
        std::string rel = feature_relpath(split_name, seq.id, mod);
        rec["files"][mod] = rel;
        write_csv(dir / rel, feats);
      }
      manifest["splits"][split_name].push_back(std::move(rec));
    }
  }

  std::ofstream out(dir / "manifest.json");
  if (!out) throw io_error("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << "\n";
  if (!out) throw io_error("write failed for " + (dir / "manifest.json").string());
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
  auto manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw io_error("cannot open " + manifest_path.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw io_error(manifest_path.string() + ": " + e.what());
  }

  Dataset ds;
  try {
    if (manifest.at("format_version").get<std::string>() != kFormatVersion) {
      throw io_error(manifest_path.string() + ": unsupported format_version '" +
                     manifest["format_version"].get<std::string>() + "'");
    }
    for (const auto& m : manifest.at("modalities")) {
      ds.modalities.push_back({m.at("name").get<std::string>(), m.at("dim").get<std::size_t>()});
    }
    ds.classes = manifest.at("classes").get<std::vector<std::string>>();

    for (const char* split_name : {"train", "val", "test"}) {
      auto& target = split_name == std::string("train")
                         ? ds.train
                         : (split_name == std::string("val") ? ds.val : ds.test);
      if (!manifest.at("splits").contains(split_name)) {
        throw io_error(manifest_path.string() + ": missing split '" + split_name + "'");
      }
      for (const auto& rec : manifest["splits"][split_name]) {
        MultimodalSequence seq;
        seq.id = rec.at("id").get<std::string>();
        seq.label = ds.class_index(rec.at("label").get<std::string>());
        std::size_t declared_len = rec.at("length").get<std::size_t>();
        for (const auto& m : ds.modalities) {
          if (!rec.at("files").contains(m.name)) {
            throw io_error("sequence " + seq.id + ": no file for modality '" + m.name + "'");
          }
          std::string rel = rec["files"][m.name].get<std::string>();
          Matrix feats = read_csv(dir / rel);
          if (feats.rows != declared_len) {
            throw io_error("sequence " + seq.id + ": " + rel + " has " +
                           std::to_string(feats.rows) + " rows, manifest says " +
                           std::to_string(declared_len));
          }
          seq.features[m.name] = std::move(feats);
        }
        target.push_back(std::move(seq));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw io_error(manifest_path.string() + ": " + e.what());
  } catch (const io_error&) {
    throw;
  } catch (const value_error& e) {
    throw io_error(manifest_path.string() + ": " + e.what());
  }

  try {
    validate_dataset(ds);
  } catch (const value_error& e) {
    throw io_error(dir.string() + ": " + e.what());
  }
  return ds;
}

// --------------------------------------------------------------------------
// synthetic generators

struct GenConfig {
  enum class Task { xor_bits, distractor };
  Task task = Task::xor_bits;
  std::size_t train_count = 64;
  std::size_t val_count = 32;
  std::size_t test_count = 32;
  std::size_t length = 16;     // steps per sequence
  std::size_t dim = 8;         // feature width per modality
  std::size_t num_classes = 2;  // xor is fixed at 2; distractor callers pick
  std::size_t num_modalities = 2;
  double noise = 0.25;
  double distractor_fraction = 0.0;
  std::uint64_t seed = 1;
};

namespace detail {

inline std::string seq_id(const char* split, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%04zu", split, i);
  return buf;
}

inline std::vector<std::string> modality_names(std::size_t count) {
  std::vector<std::string> names;
  for (std::size_t m = 0; m < count; ++m) names.push_back("mod" + std::string(1, char('A' + m)));
  return names;
}

inline void require_positive_counts(const GenConfig& cfg, const char* task) {
  if (cfg.train_count == 0 || cfg.val_count == 0 || cfg.test_count == 0) {
    throw value_error(std::string(task) + ": split counts must be positive");
  }
}

}  // namespace detail

// Two modalities carry one bit each as a temporal motif: bit 0 plays basis
// vector e0 for the first half of the sequence then e1, bit 1 plays them in
// the other order. The label is the XOR of the two bits, so neither modality
// alone carries any label information. Gaussian noise on every entry.
//
// Draw order per sequence: bit A, bit B, then noise for modA (row-major),
// then modB.
inline Dataset synth_xor(const GenConfig& cfg, SeededRng& rng) {
  detail::require_positive_counts(cfg, "synth_xor");
  if (cfg.length < 2 || cfg.length % 2 != 0) {
    throw value_error("synth_xor: length must be even and >= 2");
  }
  if (cfg.dim < 2) throw value_error("synth_xor: dim must be >= 2");
  if (cfg.num_classes != 2) throw value_error("synth_xor: task is two-class");
  if (cfg.num_modalities != 2) throw value_error("synth_xor: task uses exactly two modalities");
  if (!(cfg.noise >= 0.0)) throw value_error("synth_xor: noise must be >= 0");

  Dataset ds;
  ds.modalities = {{"modA", cfg.dim}, {"modB", cfg.dim}};
  ds.classes = {"xor0", "xor1"};

  auto gen_split = [&](const char* name, std::size_t count,
                       std::vector<MultimodalSequence>& out) {
    for (std::size_t i = 0; i < count; ++i) {
      MultimodalSequence seq;
      seq.id = detail::seq_id(name, i);
      std::size_t bit_a = rng.next_u64() & 1;
      std::size_t bit_b = rng.next_u64() & 1;
      seq.label = bit_a ^ bit_b;
      const std::pair<const char*, std::size_t> mods[] = {{"modA", bit_a}, {"modB", bit_b}};
      for (const auto& [mod, bit] : mods) {
        Matrix f(cfg.length, cfg.dim);
        for (std::size_t t = 0; t < cfg.length; ++t) {
          std::size_t first = bit == 0 ? 0 : 1;
          std::size_t motif = t < cfg.length / 2 ? first : 1 - first;
          for (std::size_t d = 0; d < cfg.dim; ++d) {
            f(t, d) = (d == motif ? 1.0 : 0.0) + cfg.noise * rng.gaussian();
          }
        }
        seq.features[mod] = std::move(f);
      }
      out.push_back(std::move(seq));
    }
  };
  gen_split("train", cfg.train_count, ds.train);
  gen_split("val", cfg.val_count, ds.val);
  gen_split("test", cfg.test_count, ds.test);
  return ds;
}

// K classes; class k shows the noisy basis vector e_k on every step of every
// modality. With probability distractor_fraction a sequence has its final
// ceil(T/2) steps replaced by a shared, class-independent motif (e_K when the
// width allows, otherwise a normalized all-ones vector). A frame-level
// classifier still sees the clean early frames, while a purely last-state
// reader can be misled — which is what this task is for.
//
// Draw order per sequence: label, distractor flag, then per modality the
// noise entries row-major.
inline Dataset synth_distractor(const GenConfig& cfg, SeededRng& rng) {
  detail::require_positive_counts(cfg, "synth_distractor");
  if (cfg.length < 2) throw value_error("synth_distractor: length must be >= 2");
  if (cfg.num_classes < 2) throw value_error("synth_distractor: need at least two classes");
  if (cfg.num_classes > cfg.dim) {
    throw value_error("synth_distractor: num_classes exceeds feature dim");
  }
  if (cfg.num_modalities == 0) throw value_error("synth_distractor: need a modality");
  if (!(cfg.noise >= 0.0)) throw value_error("synth_distractor: noise must be >= 0");
  if (cfg.distractor_fraction < 0.0 || cfg.distractor_fraction > 1.0) {
    throw value_error("synth_distractor: distractor_fraction must be in [0, 1]");
  }

  Dataset ds;
  for (const auto& name : detail::modality_names(cfg.num_modalities)) {
    ds.modalities.push_back({name, cfg.dim});
  }
  for (std::size_t k = 0; k < cfg.num_classes; ++k) ds.classes.push_back("class" + std::to_string(k));

  Vec shared(cfg.dim, 0.0);
  if (cfg.dim > cfg.num_classes) {
    shared[cfg.num_classes] = 1.0;
  } else {
    double v = 1.0 / std::sqrt(static_cast<double>(cfg.dim));
    std::fill(shared.begin(), shared.end(), v);
  }
  std::size_t tail_start = cfg.length - (cfg.length + 1) / 2;

  auto gen_split = [&](const char* name, std::size_t count,
                       std::vector<MultimodalSequence>& out) {
    for (std::size_t i = 0; i < count; ++i) {
      MultimodalSequence seq;
      seq.id = detail::seq_id(name, i);
      seq.label = rng.next_index(cfg.num_classes);
      bool distract = rng.uniform01() < cfg.distractor_fraction;
      for (const auto& mod : ds.modalities) {
        Matrix f(cfg.length, cfg.dim);
        for (std::size_t t = 0; t < cfg.length; ++t) {
          bool tail = distract && t >= tail_start;
          for (std::size_t d = 0; d < cfg.dim; ++d) {
            double base = tail ? shared[d] : (d == seq.label ? 1.0 : 0.0);
            f(t, d) = base + cfg.noise * rng.gaussian();
          }
        }
        seq.features[mod.name] = std::move(f);
      }
      out.push_back(std::move(seq));
    }
  };
  gen_split("train", cfg.train_count, ds.train);
  gen_split("val", cfg.val_count, ds.val);
  gen_split("test", cfg.test_count, ds.test);
  return ds;
}

inline Dataset generate(const GenConfig& cfg, SeededRng& rng) {
  return cfg.task == GenConfig::Task::xor_bits ? synth_xor(cfg, rng)
                                               : synth_distractor(cfg, rng);
}

}  // namespace gethr

#endif
