#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "gethr/dataset.hpp"

using namespace gethr;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("gethr_ds_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  EXPECT_TRUE(in.good()) << path;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void rewrite_manifest(const fs::path& dir, void (*mutate)(nlohmann::json&)) {
  nlohmann::json manifest;
  std::ifstream in(dir / "manifest.json");
  in >> manifest;
  mutate(manifest);
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << "\n";
}

GenConfig small_xor() {
  GenConfig cfg;
  cfg.task = GenConfig::Task::xor_bits;
  cfg.train_count = 6;
  cfg.val_count = 3;
  cfg.test_count = 3;
  cfg.length = 4;
  cfg.dim = 3;
  cfg.num_classes = 2;
  cfg.noise = 0.1;
  return cfg;
}

void expect_matrices_equal(const Matrix& a, const Matrix& b) {
  ASSERT_EQ(a.rows, b.rows);
  ASSERT_EQ(a.cols, b.cols);
  for (std::size_t i = 0; i < a.data.size(); ++i) EXPECT_EQ(a.data[i], b.data[i]);
}

void expect_datasets_equal(const Dataset& a, const Dataset& b) {
  ASSERT_EQ(a.modalities.size(), b.modalities.size());
  for (std::size_t m = 0; m < a.modalities.size(); ++m) {
    EXPECT_EQ(a.modalities[m].name, b.modalities[m].name);
    EXPECT_EQ(a.modalities[m].dim, b.modalities[m].dim);
  }
  EXPECT_EQ(a.classes, b.classes);
  const std::vector<MultimodalSequence>* lhs[] = {&a.train, &a.val, &a.test};
  const std::vector<MultimodalSequence>* rhs[] = {&b.train, &b.val, &b.test};
  for (int s = 0; s < 3; ++s) {
    ASSERT_EQ(lhs[s]->size(), rhs[s]->size());
    for (std::size_t i = 0; i < lhs[s]->size(); ++i) {
      const auto& x = (*lhs[s])[i];
      const auto& y = (*rhs[s])[i];
      EXPECT_EQ(x.id, y.id);
      EXPECT_EQ(x.label, y.label);
      ASSERT_EQ(x.features.size(), y.features.size());
      for (const auto& [mod, feats] : x.features) {
        expect_matrices_equal(feats, y.features.at(mod));
      }
    }
  }
}

}  // namespace

TEST(Csv, RoundTripIsBitExact) {
  fs::path dir = tmp_dir("csv_roundtrip");
  Matrix m(3, 4);
  m(0, 0) = 1.0 / 3.0;
  m(0, 1) = -0.0;
  m(0, 2) = 1e-300;
  m(0, 3) = -12345.678901234567;
  m(1, 0) = 0.1;
  m(1, 1) = 2.0;
  m(1, 2) = -7.25e17;
  m(1, 3) = 5e-324;  // smallest denormal
  m(2, 0) = 1.7976931348623157e308;
  m(2, 1) = -1.0;
  m(2, 2) = 42.0;
  m(2, 3) = 0.30000000000000004;

  write_csv(dir / "m.csv", m);
  Matrix back = read_csv(dir / "m.csv");
  expect_matrices_equal(m, back);
  EXPECT_TRUE(std::signbit(back(0, 1)));
}

TEST(Csv, DiagnosticsNameFileAndLine) {
  fs::path dir = tmp_dir("csv_errors");
  {
    std::ofstream out(dir / "junk.csv");
    out << "1.0,2.0\n1.0,zebra\n";
  }
  try {
    read_csv(dir / "junk.csv");
    FAIL() << "expected io_error";
  } catch (const io_error& e) {
    EXPECT_NE(std::string(e.what()).find("junk.csv"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }

  {
    std::ofstream out(dir / "ragged.csv");
    out << "1.0,2.0\n3.0\n";
  }
  try {
    read_csv(dir / "ragged.csv");
    FAIL() << "expected io_error";
  } catch (const io_error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }

  {
    std::ofstream out(dir / "empty.csv");
  }
  EXPECT_THROW(read_csv(dir / "empty.csv"), io_error);
  EXPECT_THROW(read_csv(dir / "absent.csv"), io_error);
}

TEST(DatasetIo, SaveLoadRoundTrip) {
  fs::path dir = tmp_dir("roundtrip");
  SeededRng rng(12);
  Dataset ds = synth_xor(small_xor(), rng);
  save_dataset(ds, dir);
  Dataset back = load_dataset(dir);
  expect_datasets_equal(ds, back);
}

TEST(DatasetIo, RegenerationIsByteIdentical) {
  fs::path a = tmp_dir("regen_a");
  fs::path b = tmp_dir("regen_b");
  {
    SeededRng rng(77);
    save_dataset(synth_xor(small_xor(), rng), a);
  }
  {
    SeededRng rng(77);
    save_dataset(synth_xor(small_xor(), rng), b);
  }
  EXPECT_EQ(slurp(a / "manifest.json"), slurp(b / "manifest.json"));
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    fs::path rel = fs::relative(entry.path(), a);
    EXPECT_EQ(slurp(entry.path()), slurp(b / rel)) << rel;
  }
}

TEST(DatasetIo, EmptyTestSplitAccepted) {
  fs::path dir = tmp_dir("empty_test");
  SeededRng rng(5);
  Dataset ds = synth_xor(small_xor(), rng);
  ds.test.clear();
  save_dataset(ds, dir);
  Dataset back = load_dataset(dir);
  EXPECT_TRUE(back.test.empty());
  EXPECT_EQ(back.train.size(), ds.train.size());
  EXPECT_EQ(back.val.size(), ds.val.size());
}

TEST(DatasetIo, RejectsBadFormatVersion) {
  fs::path dir = tmp_dir("bad_version");
  SeededRng rng(5);
  save_dataset(synth_xor(small_xor(), rng), dir);
  rewrite_manifest(dir, [](nlohmann::json& m) { m["format_version"] = "gethr-v999"; });
  EXPECT_THROW(load_dataset(dir), io_error);
}

TEST(DatasetIo, RejectsDuplicateIdAcrossSplits) {
  fs::path dir = tmp_dir("dup_id");
  SeededRng rng(5);
  save_dataset(synth_xor(small_xor(), rng), dir);
  rewrite_manifest(dir, [](nlohmann::json& m) {
    m["splits"]["val"][0]["id"] = m["splits"]["train"][0]["id"];
    m["splits"]["val"][0]["files"] = m["splits"]["train"][0]["files"];
  });
  EXPECT_THROW(load_dataset(dir), io_error);
}

TEST(DatasetIo, RejectsUnknownLabel) {
  fs::path dir = tmp_dir("bad_label");
  SeededRng rng(5);
  save_dataset(synth_xor(small_xor(), rng), dir);
  rewrite_manifest(dir, [](nlohmann::json& m) { m["splits"]["train"][0]["label"] = "zebra"; });
  EXPECT_THROW(load_dataset(dir), io_error);
}

TEST(DatasetIo, RejectsMissingModalityFile) {
  fs::path dir = tmp_dir("missing_mod");
  SeededRng rng(5);
  save_dataset(synth_xor(small_xor(), rng), dir);
  rewrite_manifest(dir, [](nlohmann::json& m) {
    m["splits"]["train"][0]["files"].erase("modB");
  });
  EXPECT_THROW(load_dataset(dir), io_error);
}

TEST(DatasetIo, LengthMismatchNamesTheSequence) {
  fs::path dir = tmp_dir("bad_length");
  SeededRng rng(5);
  save_dataset(synth_xor(small_xor(), rng), dir);
  rewrite_manifest(dir, [](nlohmann::json& m) { m["splits"]["train"][0]["length"] = 6; });
  try {
    load_dataset(dir);
    FAIL() << "expected io_error";
  } catch (const io_error& e) {
    EXPECT_NE(std::string(e.what()).find("train0000"), std::string::npos) << e.what();
  }
}

TEST(DatasetIo, RejectsMissingSplitOrManifest) {
  fs::path dir = tmp_dir("missing_split");
  SeededRng rng(5);
  save_dataset(synth_xor(small_xor(), rng), dir);
  rewrite_manifest(dir, [](nlohmann::json& m) { m["splits"].erase("test"); });
  EXPECT_THROW(load_dataset(dir), io_error);
  EXPECT_THROW(load_dataset(tmp_dir("nothing_here")), io_error);
}

TEST(SynthXor, NoiselessStructure) {
  GenConfig cfg = small_xor();
  cfg.noise = 0.0;
  cfg.length = 6;
  cfg.dim = 4;
  SeededRng rng(31);
  Dataset ds = synth_xor(cfg, rng);

  ASSERT_EQ(ds.classes, (std::vector<std::string>{"xor0", "xor1"}));
  ASSERT_EQ(ds.modalities.size(), 2u);
  EXPECT_EQ(ds.modalities[0].name, "modA");
  EXPECT_EQ(ds.modalities[1].name, "modB");
  EXPECT_EQ(ds.modalities[0].dim, 4u);

  for (const auto* split : {&ds.train, &ds.val, &ds.test}) {
    for (const auto& seq : *split) {
      std::size_t bits[2];
      const char* mods[] = {"modA", "modB"};
      for (int m = 0; m < 2; ++m) {
        const Matrix& f = seq.features.at(mods[m]);
        ASSERT_EQ(f.rows, 6u);
        // Noiseless rows are exact basis vectors; the first half plays the
        // bit's own index, the second half the other one.
        std::size_t first = f(0, 1) == 1.0 ? 1 : 0;
        bits[m] = first;
        for (std::size_t t = 0; t < f.rows; ++t) {
          std::size_t motif = t < 3 ? first : 1 - first;
          for (std::size_t d = 0; d < f.cols; ++d) {
            EXPECT_EQ(f(t, d), d == motif ? 1.0 : 0.0);
          }
        }
      }
      EXPECT_EQ(seq.label, bits[0] ^ bits[1]);
    }
  }
}

TEST(SynthXor, RejectsBadConfig) {
  SeededRng rng(1);
  GenConfig cfg = small_xor();
  cfg.length = 5;
  EXPECT_THROW(synth_xor(cfg, rng), value_error);
  cfg = small_xor();
  cfg.dim = 1;
  EXPECT_THROW(synth_xor(cfg, rng), value_error);
  cfg = small_xor();
  cfg.num_classes = 3;
  EXPECT_THROW(synth_xor(cfg, rng), value_error);
  cfg = small_xor();
  cfg.num_modalities = 3;
  EXPECT_THROW(synth_xor(cfg, rng), value_error);
  cfg = small_xor();
  cfg.noise = -0.5;
  EXPECT_THROW(synth_xor(cfg, rng), value_error);
  cfg = small_xor();
  cfg.train_count = 0;
  EXPECT_THROW(synth_xor(cfg, rng), value_error);
}

TEST(SynthDistractor, NoiselessStructure) {
  GenConfig cfg;
  cfg.task = GenConfig::Task::distractor;
  cfg.train_count = 8;
  cfg.val_count = 4;
  cfg.test_count = 4;
  cfg.length = 5;
  cfg.dim = 5;
  cfg.num_classes = 3;
  cfg.num_modalities = 2;
  cfg.noise = 0.0;
  cfg.distractor_fraction = 1.0;
  SeededRng rng(9);
  Dataset ds = synth_distractor(cfg, rng);

  ASSERT_EQ(ds.classes, (std::vector<std::string>{"class0", "class1", "class2"}));
  // T=5 -> the final ceil(5/2)=3 steps carry the shared motif e_K.
  for (const auto& seq : ds.train) {
    for (const auto& [mod, f] : seq.features) {
      for (std::size_t t = 0; t < 2; ++t) {
        for (std::size_t d = 0; d < 5; ++d) {
          EXPECT_EQ(f(t, d), d == seq.label ? 1.0 : 0.0);
        }
      }
      for (std::size_t t = 2; t < 5; ++t) {
        for (std::size_t d = 0; d < 5; ++d) {
          EXPECT_EQ(f(t, d), d == 3 ? 1.0 : 0.0);
        }
      }
    }
  }
}

TEST(SynthDistractor, SquareDimUsesFlatMotif) {
  GenConfig cfg;
  cfg.task = GenConfig::Task::distractor;
  cfg.train_count = 6;
  cfg.val_count = 2;
  cfg.test_count = 2;
  cfg.length = 4;
  cfg.dim = 3;
  cfg.num_classes = 3;
  cfg.num_modalities = 1;
  cfg.noise = 0.0;
  cfg.distractor_fraction = 1.0;
  SeededRng rng(9);
  Dataset ds = synth_distractor(cfg, rng);
  double flat = 1.0 / std::sqrt(3.0);
  for (const auto& seq : ds.train) {
    const Matrix& f = seq.features.at("modA");
    for (std::size_t t = 2; t < 4; ++t) {
      for (std::size_t d = 0; d < 3; ++d) EXPECT_EQ(f(t, d), flat);
    }
  }
}

TEST(SynthDistractor, FractionZeroIsClean) {
  GenConfig cfg;
  cfg.task = GenConfig::Task::distractor;
  cfg.train_count = 6;
  cfg.val_count = 2;
  cfg.test_count = 2;
  cfg.length = 4;
  cfg.dim = 4;
  cfg.num_classes = 4;
  cfg.num_modalities = 2;
  cfg.noise = 0.0;
  cfg.distractor_fraction = 0.0;
  SeededRng rng(15);
  Dataset ds = synth_distractor(cfg, rng);
  for (const auto& seq : ds.train) {
    for (const auto& [mod, f] : seq.features) {
      for (std::size_t t = 0; t < f.rows; ++t) {
        for (std::size_t d = 0; d < f.cols; ++d) {
          EXPECT_EQ(f(t, d), d == seq.label ? 1.0 : 0.0);
        }
      }
    }
  }
}

TEST(SynthDistractor, RejectsBadConfig) {
  SeededRng rng(1);
  GenConfig cfg;
  cfg.task = GenConfig::Task::distractor;
  cfg.num_classes = 9;
  cfg.dim = 8;
  EXPECT_THROW(synth_distractor(cfg, rng), value_error);
  cfg = GenConfig{};
  cfg.num_classes = 1;
  EXPECT_THROW(synth_distractor(cfg, rng), value_error);
  cfg = GenConfig{};
  cfg.length = 1;
  EXPECT_THROW(synth_distractor(cfg, rng), value_error);
  cfg = GenConfig{};
  cfg.num_modalities = 0;
  EXPECT_THROW(synth_distractor(cfg, rng), value_error);
  cfg = GenConfig{};
  cfg.distractor_fraction = 1.5;
  EXPECT_THROW(synth_distractor(cfg, rng), value_error);
  cfg = GenConfig{};
  cfg.val_count = 0;
  EXPECT_THROW(synth_distractor(cfg, rng), value_error);
}

TEST(Generators, DeterministicPerSeed) {
  GenConfig cfg = small_xor();
  SeededRng r1(123), r2(123), r3(124);
  Dataset a = generate(cfg, r1);
  Dataset b = generate(cfg, r2);
  expect_datasets_equal(a, b);

  Dataset c = generate(cfg, r3);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.train.size() && !any_diff; ++i) {
    if (a.train[i].label != c.train[i].label) any_diff = true;
    const auto& fa = a.train[i].features.at("modA");
    const auto& fc = c.train[i].features.at("modA");
    for (std::size_t k = 0; k < fa.data.size() && !any_diff; ++k) {
      any_diff = fa.data[k] != fc.data[k];
    }
  }
  EXPECT_TRUE(any_diff);
}

TEST(Generators, DispatcherPicksTask) {
  GenConfig cfg;
  cfg.task = GenConfig::Task::xor_bits;
  cfg.num_classes = 2;
  SeededRng r1(3);
  EXPECT_EQ(generate(cfg, r1).classes[0], "xor0");
  cfg = GenConfig{};
  cfg.task = GenConfig::Task::distractor;
  SeededRng r2(3);
  EXPECT_EQ(generate(cfg, r2).classes[0], "class0");
}

TEST(DatasetValidation, CatchesStructuralProblems) {
  SeededRng rng(4);
  Dataset ds = synth_xor(small_xor(), rng);
  Dataset bad = ds;
  bad.classes = {"only"};
  EXPECT_THROW(validate_dataset(bad), value_error);

  bad = ds;
  bad.modalities.clear();
  EXPECT_THROW(validate_dataset(bad), value_error);

  bad = ds;
  bad.val[0].id = bad.train[0].id;
  EXPECT_THROW(validate_dataset(bad), value_error);

  bad = ds;
  bad.train[0].label = 7;
  EXPECT_THROW(validate_dataset(bad), value_error);

  bad = ds;
  bad.train[0].features.erase("modB");
  EXPECT_THROW(validate_dataset(bad), value_error);

  bad = ds;
  bad.train[0].features["modA"] = Matrix(4, 9);
  EXPECT_THROW(validate_dataset(bad), shape_error);
}
