#ifndef GETHR_MODEL_IO_HPP
#define GETHR_MODEL_IO_HPP

// JSON persistence. Weights are stored as nested arrays of doubles; the JSON
// writer emits shortest-round-trip literals, so save/load reproduces every
// parameter bit for bit and a reloaded model scores sequences identically.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gethr/errors.hpp"
#include "gethr/matrix.hpp"
#include "gethr/model.hpp"

namespace gethr {

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < m.cols; ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw io_error(what + ": expected a non-empty array of rows");
  }
  Matrix m(j.size(), j[0].size());
  for (std::size_t i = 0; i < m.rows; ++i) {
    if (!j[i].is_array() || j[i].size() != m.cols) throw io_error(what + ": ragged rows");
    for (std::size_t jj = 0; jj < m.cols; ++jj) {
      if (!j[i][jj].is_number()) throw io_error(what + ": non-numeric entry");
      m(i, jj) = j[i][jj].get<double>();
    }
  }
  return m;
}

inline nlohmann::json model_sizes_json(const Model& model) {
  nlohmann::json sizes = nlohmann::json::object();
  if (const auto* h = std::get_if<HybridModel>(&model)) {
    for (std::size_t m = 0; m < h->modalities.size(); ++m) {
      sizes["hidden"][h->modalities[m].name] = h->branches[m].hidden_size;
    }
    sizes["fusion"] = h->w_z.value.rows;
    sizes["combined"] = h->combined.hidden_size;
  } else if (const auto* e = std::get_if<EarlyFusionModel>(&model)) {
    sizes["fusion"] = e->w_in.value.rows;
    sizes["combined"] = e->lstm.hidden_size;
  } else if (const auto* t = std::get_if<TemporalModel>(&model)) {
    sizes["hidden"][t->modality.name] = t->lstm.hidden_size;
  } else if (const auto* et = std::get_if<EtoeModel>(&model)) {
    for (std::size_t m = 0; m < et->modalities.size(); ++m) {
      sizes["hidden"][et->modalities[m].name] = et->branches[m].hidden_size;
    }
  }
  return sizes;
}

}  // namespace detail

inline void save_model(const Model& model, const std::filesystem::path& path) {
  nlohmann::json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = model_kind(model);
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, TemporalModel> || std::is_same_v<T, NonTemporalModel>) {
          j["modalities"] = {{{"name", m.modality.name}, {"dim", m.modality.dim}}};
        } else {
          for (const auto& spec : m.modalities) {
            j["modalities"].push_back({{"name", spec.name}, {"dim", spec.dim}});
          }
        }
        if constexpr (!std::is_same_v<T, NonTemporalModel>) {
          j["pooling"] = to_string(m.pooling);
        }
      },
      model);
  j["classes"] = model_classes(model);
  j["sizes"] = detail::model_sizes_json(model);

  Model& mutable_model = const_cast<Model&>(model);  // params() is non-const; values untouched
  for (const ParamTensor* p : model_params(mutable_model)) {
    j["weights"][p->name] = detail::matrix_to_json(p->value);
  }

  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path.string());
  out << j.dump(1) << "\n";
  if (!out) throw io_error("write failed for " + path.string());
}

inline Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw io_error(path.string() + ": " + e.what());
  }

  try {
    if (j.at("format_version").get<std::string>() != kFormatVersion) {
      throw io_error(path.string() + ": unsupported format_version");
    }
    std::string kind = j.at("kind").get<std::string>();
    TopologyId topo = parse_topology(kind);

    std::vector<ModalitySpec> specs;
    for (const auto& m : j.at("modalities")) {
      specs.push_back({m.at("name").get<std::string>(), m.at("dim").get<std::size_t>()});
    }
    auto classes = j.at("classes").get<std::vector<std::string>>();

    SizesConfig sizes;
    if (j.contains("sizes")) {
      const auto& sj = j["sizes"];
      if (sj.contains("hidden")) {
        for (const auto& [name, v] : sj["hidden"].items()) {
          sizes.hidden[name] = v.get<std::size_t>();
        }
      }
      if (sj.contains("fusion")) sizes.fusion = sj["fusion"].get<std::size_t>();
      if (sj.contains("combined")) sizes.combined = sj["combined"].get<std::size_t>();
    }
    Pooling pooling = Pooling::last;
    if (j.contains("pooling")) pooling = parse_pooling(j["pooling"].get<std::string>());

    SeededRng scratch(0);  // values are overwritten below
    Model model = make_model(topo, specs, classes, sizes, pooling, scratch);

    for (ParamTensor* p : model_params(model)) {
      if (!j.at("weights").contains(p->name)) {
        throw io_error(path.string() + ": missing weight '" + p->name + "'");
      }
      Matrix loaded = detail::matrix_from_json(j["weights"][p->name], p->name);
      if (!loaded.same_shape(p->value)) {
        throw io_error(path.string() + ": weight '" + p->name + "' has shape " +
                       shape_str(loaded) + ", expected " + shape_str(p->value));
      }
      p->value = std::move(loaded);
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw io_error(path.string() + ": " + e.what());
  } catch (const value_error& e) {
    throw io_error(path.string() + ": " + e.what());
  }
}

// --------------------------------------------------------------------------
// weighted ensembles of saved models

struct Ensemble {
  std::vector<std::string> paths;  // as recorded in the file
  std::vector<Model> components;
  Vec weights;
};

inline void save_ensemble(const std::vector<std::string>& component_paths, const Vec& weights,
                          const std::filesystem::path& path) {
  if (component_paths.size() != weights.size() || component_paths.empty()) {
    throw value_error("save_ensemble: need one weight per component");
  }
  nlohmann::json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "ensemble";
  j["components"] = nlohmann::json::array();
  for (std::size_t i = 0; i < component_paths.size(); ++i) {
    j["components"].push_back({{"path", component_paths[i]}, {"weight", weights[i]}});
  }
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path.string());
  out << j.dump(1) << "\n";
  if (!out) throw io_error("write failed for " + path.string());
}

inline Ensemble load_ensemble(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw io_error(path.string() + ": " + e.what());
  }

  Ensemble ens;
  try {
    if (j.at("format_version").get<std::string>() != kFormatVersion) {
      throw io_error(path.string() + ": unsupported format_version");
    }
    if (j.at("kind").get<std::string>() != "ensemble") {
      throw io_error(path.string() + ": not an ensemble file");
    }
    for (const auto& c : j.at("components")) {
      std::string rel = c.at("path").get<std::string>();
      ens.paths.push_back(rel);
      ens.weights.push_back(c.at("weight").get<double>());
      std::filesystem::path comp(rel);
      if (comp.is_relative()) comp = path.parent_path() / comp;
      ens.components.push_back(load_model(comp));
    }
  } catch (const nlohmann::json::exception& e) {
    throw io_error(path.string() + ": " + e.what());
  }

  if (ens.components.empty()) throw io_error(path.string() + ": empty ensemble");
  double sum = 0.0;
  for (double w : ens.weights) {
    if (!(w >= 0.0)) throw io_error(path.string() + ": negative combination weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw io_error(path.string() + ": combination weights must sum to 1");
  }
  const auto& classes = model_classes(ens.components[0]);
  for (const auto& comp : ens.components) {
    if (model_classes(comp) != classes) {
      throw io_error(path.string() + ": components disagree on classes");
    }
  }
  return ens;
}

inline ScoreVector ensemble_predict(const Ensemble& ens, const MultimodalSequence& seq) {
  std::vector<ScoreVector> scores;
  scores.reserve(ens.components.size());
  for (const auto& comp : ens.components) scores.push_back(predict(comp, seq));
  return combine_components(scores, ens.weights);
}

// --------------------------------------------------------------------------
// prediction dumps
//
// Tab-separated text: one `sequence_id<TAB>class_name<TAB>score` line per
// (class, sequence) pair, grouped into one contiguous block per class.  The
// first block fixes the sequence order; every later block must repeat it.

struct PredictionSet {
  std::vector<std::string> classes;  // block order
  std::vector<std::string> ids;      // row order within each block
  Matrix scores;                     // N x K; (i, k) = score of ids[i] for classes[k]
};

inline void save_predictions(const PredictionSet& preds, const std::filesystem::path& path) {
  if (preds.ids.empty() || preds.classes.empty() || preds.ids.size() != preds.scores.rows ||
      preds.classes.size() != preds.scores.cols) {
    throw value_error("save_predictions: inconsistent sizes");
  }
  for (const std::string& id : preds.ids) {
    if (id.empty() || id.find_first_of("\t\n") != std::string::npos) {
      throw value_error("save_predictions: id '" + id + "' is not representable");
    }
  }
  for (const std::string& name : preds.classes) {
    if (name.empty() || name.find_first_of("\t\n") != std::string::npos) {
      throw value_error("save_predictions: class '" + name + "' is not representable");
    }
  }
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path.string());
  char buf[64];
  for (std::size_t k = 0; k < preds.classes.size(); ++k) {
    for (std::size_t i = 0; i < preds.ids.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", preds.scores(i, k));
      out << preds.ids[i] << '\t' << preds.classes[k] << '\t' << buf << '\n';
    }
  }
  if (!out) throw io_error("write failed for " + path.string());
}

inline PredictionSet load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path.string());

  auto fail = [&](std::size_t lineno, const std::string& msg) -> io_error {
    return io_error(path.string() + ":" + std::to_string(lineno) + ": " + msg);
  };

  std::vector<std::string> classes;
  std::vector<std::string> ids;
  std::vector<Vec> blocks;  // per class, scores in id order
  std::string line;
  std::size_t lineno = 0;
  std::size_t row = 0;  // position within the current block
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t t1 = line.find('\t');
    std::size_t t2 = (t1 == std::string::npos) ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos) {
      throw fail(lineno, "expected 'sequence_id<TAB>class_name<TAB>score'");
    }
    std::string id = line.substr(0, t1);
    std::string cls = line.substr(t1 + 1, t2 - t1 - 1);
    std::string text = line.substr(t2 + 1);
    if (id.empty()) throw fail(lineno, "empty sequence id");
    if (cls.empty()) throw fail(lineno, "empty class name");
    // strtod rather than std::stod: stod throws on the ERANGE underflow that
    // subnormal scores raise, but they round-trip fine and must load back.
    const char* begin = text.c_str();
    char* end = nullptr;
    double score = std::strtod(begin, &end);
    if (text.empty() || end != begin + text.size()) {
      throw fail(lineno, "bad score '" + text + "'");
    }
    if (!std::isfinite(score)) throw fail(lineno, "non-finite score '" + text + "'");

    if (classes.empty() || cls != classes.back()) {
      if (!classes.empty() && row != ids.size()) {
        throw fail(lineno, "block for class '" + classes.back() + "' has " +
                               std::to_string(row) + " lines, expected " +
                               std::to_string(ids.size()));
      }
      if (std::find(classes.begin(), classes.end(), cls) != classes.end()) {
        throw fail(lineno, "class '" + cls + "' appears in more than one block");
      }
      classes.push_back(cls);
      blocks.emplace_back();
      row = 0;
    }
    if (classes.size() == 1) {
      if (std::find(ids.begin(), ids.end(), id) != ids.end()) {
        throw fail(lineno, "duplicate sequence id '" + id + "'");
      }
      ids.push_back(id);
    } else {
      if (row >= ids.size()) {
        throw fail(lineno, "block for class '" + cls + "' is longer than the first block");
      }
      if (ids[row] != id) {
        throw fail(lineno, "sequence id '" + id + "' out of order, expected '" + ids[row] + "'");
      }
    }
    blocks.back().push_back(score);
    ++row;
  }
  if (classes.empty()) throw io_error(path.string() + ": empty predictions");
  if (row != ids.size()) {
    throw io_error(path.string() + ": block for class '" + classes.back() + "' has " +
                   std::to_string(row) + " lines, expected " + std::to_string(ids.size()));
  }

  PredictionSet preds;
  preds.classes = std::move(classes);
  preds.ids = std::move(ids);
  preds.scores = Matrix(preds.ids.size(), preds.classes.size());
  for (std::size_t k = 0; k < preds.classes.size(); ++k) {
    for (std::size_t i = 0; i < preds.ids.size(); ++i) preds.scores(i, k) = blocks[k][i];
  }
  return preds;
}

}  // namespace gethr

#endif
