// Copyright 2026 The LPL Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <unistd.h>
#include <algorithm>
#include <functional>

#include "lpl/dataset.hpp"
#include "lpl/error.hpp"
#include "lpl/matrix_io.hpp"
#include "oracles.hpp"

using namespace lpl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("lpl_test_" + name + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

void write_fixture(const fs::path& dir) {
  write_text(dir / "features.csv",
             "id,label,f0,f1,f2\n"
             "0,0,1.0,0.0,0.5\n"
             "1,1,0.0,1.0,0.25\n"
             "2,0,0.9,0.1,0.5\n"
             "3,2,0.3,0.3,0.3\n");
  write_text(dir / "attributes.csv",
             "class_id,a0,a1\n"
             "0,1,0\n"
             "1,0,2\n"
             "2,3,4\n");
  write_text(dir / "split.txt",
             "seen: 0 1\n"
             "unseen: 2\n"
             "train: 0 1\n"
             "test_seen: 2\n"
             "test_unseen: 3\n");
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an lpl::Error");
  return ErrorKind::kUsage;
}

SynthConfig small_config(std::uint64_t seed = 1) {
  SynthConfig cfg;
  cfg.seen_count = 6;
  cfg.unseen_count = 3;
  cfg.attr_dim = 4;
  cfg.feat_dim = 8;
  cfg.train_per_class = 10;
  cfg.test_per_class = 5;
  cfg.noise_scale = 0.3;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_SUITE("loading") {
  TEST_CASE("hand-built CSV fixture") {
    TempDir tmp("fixture");
    write_fixture(tmp.path);
    const SplitDataset ds = load_dataset(tmp.path, DataFormat::kCsv);
    CHECK(ds.train_idx.size() == 2);
    CHECK(ds.test_unseen_idx.size() == 1);
    CHECK(ds.num_samples() == 4);
    CHECK(ds.feature_dim() == 3);
    CHECK(ds.labels == std::vector<std::size_t>{0, 1, 0, 2});
    // Attributes are normalized on load.
    CHECK(ds.attributes.values(1, 1) == 1.0);
    CHECK(ds.attributes.values(2, 0) == doctest::Approx(0.6));
    CHECK(ds.attributes.values(2, 1) == doctest::Approx(0.8));
  }

  TEST_CASE("split naming an out-of-range class") {
    TempDir tmp("oob");
    write_fixture(tmp.path);
    write_text(tmp.path / "split.txt",
               "seen: 0 1\nunseen: 3\ntrain: 0 1\ntest_seen: 2\ntest_unseen:\n");
    try {
      load_dataset(tmp.path, DataFormat::kCsv);
      FAIL("expected a validation error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kValidation);
      CHECK(std::string(e.what()).find("class id 3") != std::string::npos);
    }
  }

  TEST_CASE("malformed CSV cells report their location") {
    TempDir tmp("malformed");
    write_fixture(tmp.path);
    write_text(tmp.path / "features.csv",
               "id,label,f0,f1,f2\n0,0,1.0,0.0,0.5\n1,1,0.0,oops,0.25\n2,0,0.9,0.1,0.5\n3,2,0.3,0.3,0.3\n");
    try {
      load_dataset(tmp.path, DataFormat::kCsv);
      FAIL("expected a format error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kFormat);
      const std::string msg = e.what();
      CHECK(msg.find(":3:") != std::string::npos);
      CHECK(msg.find("column 4") != std::string::npos);
    }
  }

  TEST_CASE("bad header and ragged rows") {
    TempDir tmp("header");
    write_fixture(tmp.path);
    write_text(tmp.path / "attributes.csv", "class_id,a0,a2\n0,1,0\n1,0,1\n2,1,1\n");
    CHECK(kind_of([&] { load_dataset(tmp.path, DataFormat::kCsv); }) == ErrorKind::kFormat);
    write_fixture(tmp.path);
    write_text(tmp.path / "attributes.csv", "class_id,a0,a1\n0,1,0\n1,0\n2,1,1\n");
    CHECK(kind_of([&] { load_dataset(tmp.path, DataFormat::kCsv); }) == ErrorKind::kFormat);
  }

  TEST_CASE("split invariants are enforced") {
    TempDir tmp("invariants");
    write_fixture(tmp.path);
    // Unseen-class sample listed as training data.
    write_text(tmp.path / "split.txt",
               "seen: 0 1\nunseen: 2\ntrain: 0 1 3\ntest_seen: 2\ntest_unseen:\n");
    CHECK(kind_of([&] { load_dataset(tmp.path, DataFormat::kCsv); }) == ErrorKind::kValidation);
    // Overlapping seen and unseen sets.
    write_text(tmp.path / "split.txt",
               "seen: 0 1 2\nunseen: 2\ntrain: 0 1\ntest_seen: 2\ntest_unseen: 3\n");
    CHECK(kind_of([&] { load_dataset(tmp.path, DataFormat::kCsv); }) == ErrorKind::kValidation);
    // Sample in two index sets.
    write_text(tmp.path / "split.txt",
               "seen: 0 1\nunseen: 2\ntrain: 0 1 2\ntest_seen: 2\ntest_unseen: 3\n");
    CHECK(kind_of([&] { load_dataset(tmp.path, DataFormat::kCsv); }) == ErrorKind::kValidation);
    // Missing list.
    write_text(tmp.path / "split.txt", "seen: 0 1\nunseen: 2\ntrain: 0 1\ntest_seen: 2\n");
    CHECK(kind_of([&] { load_dataset(tmp.path, DataFormat::kCsv); }) == ErrorKind::kFormat);
  }

  TEST_CASE("zero attribute row") {
    TempDir tmp("zero_attr");
    write_fixture(tmp.path);
    write_text(tmp.path / "attributes.csv", "class_id,a0,a1\n0,1,0\n1,0,0\n2,1,1\n");
    CHECK(kind_of([&] { load_dataset(tmp.path, DataFormat::kCsv); }) == ErrorKind::kValidation);
  }

  TEST_CASE("missing files are I/O errors") {
    TempDir tmp("missing");
    CHECK(kind_of([&] { load_dataset(tmp.path, DataFormat::kCsv); }) == ErrorKind::kIo);
  }
}

TEST_SUITE("binary format") {
  TEST_CASE("header layout is bit-exact") {
    const std::string bytes = encode_lplf(Matrix{{1.0, -2.0, 0.5}});
    REQUIRE(bytes.size() == 12 + 12);
    CHECK(bytes.substr(0, 4) == "LPLF");
    const unsigned char expected_header[] = {1, 0, 0, 0, 3, 0, 0, 0};
    for (int i = 0; i < 8; ++i) CHECK(static_cast<unsigned char>(bytes[4 + i]) == expected_header[i]);
    // 1.0f = 0x3f800000, little-endian.
    CHECK(static_cast<unsigned char>(bytes[12]) == 0x00);
    CHECK(static_cast<unsigned char>(bytes[15]) == 0x3f);
    // -2.0f = 0xc0000000.
    CHECK(static_cast<unsigned char>(bytes[19]) == 0xc0);
  }

  TEST_CASE("truncated and mislabeled payloads") {
    std::string bytes = encode_lplf(Matrix(2, 2, 1.0));
    CHECK_THROWS_AS(decode_lplf(bytes.substr(0, bytes.size() - 1)), Error);
    bytes[0] = 'X';
    CHECK_THROWS_AS(decode_lplf(bytes), Error);
    CHECK_THROWS_AS(decode_lplf("LPL"), Error);
  }

  TEST_CASE("save, load, save is byte-identical") {
    TempDir a("bin_a"), b("bin_b");
    const SplitDataset ds = generate_synthetic(small_config());
    save_dataset(ds, a.path, DataFormat::kBinary);
    const SplitDataset loaded = load_dataset(a.path, DataFormat::kBinary);
    save_dataset(loaded, b.path, DataFormat::kBinary);
    for (const char* name : {"features.lplf", "features.labels.lplf", "attributes.lplf", "split.txt"}) {
      CHECK(read_file_bytes(a.path / name) == read_file_bytes(b.path / name));
    }
    CHECK(loaded.features == ds.features);
    CHECK(loaded.attributes.values == ds.attributes.values);
    CHECK(loaded.labels == ds.labels);
    CHECK(loaded.train_idx == ds.train_idx);
    CHECK(dataset_fingerprint(a.path) == dataset_fingerprint(b.path));
  }

  TEST_CASE("load(save(x)) is bitwise for float-representable data") {
    RngStream rng(4);
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix m = quantize_to_float(oracle::random_matrix(1 + rng.uniform_index(5),
                                                               1 + rng.uniform_index(5), rng, 100.0));
      CHECK(decode_lplf(encode_lplf(m)) == m);
    }
  }
}

TEST_SUITE("csv round trip") {
  TEST_CASE("nine significant digits") {
    TempDir tmp("csv_precision");
    SynthConfig cfg = small_config();
    const SplitDataset ds = generate_synthetic(cfg);
    save_dataset(ds, tmp.path, DataFormat::kCsv);
    const SplitDataset loaded = load_dataset(tmp.path, DataFormat::kCsv);
    CHECK(max_abs_diff(loaded.features, ds.features) < 1e-7);
    CHECK(max_abs_diff(loaded.attributes.values, ds.attributes.values) < 1e-7);
    CHECK(loaded.test_seen_idx == ds.test_seen_idx);
  }

  TEST_CASE("empty test_unseen set") {
    TempDir tmp("empty_unseen");
    SplitDataset ds = generate_synthetic(small_config());
    ds.test_unseen_idx.clear();
    for (DataFormat fmt : {DataFormat::kCsv, DataFormat::kBinary}) {
      save_dataset(ds, tmp.path, fmt);
      const SplitDataset loaded = load_dataset(tmp.path, fmt);
      CHECK(loaded.test_unseen_idx.empty());
    }
  }

  TEST_CASE("dataset with zero samples") {
    TempDir tmp("zero_rows");
    SplitDataset ds = generate_synthetic(small_config());
    ds.features = Matrix(0, ds.feature_dim());
    ds.labels.clear();
    ds.train_idx.clear();
    ds.test_seen_idx.clear();
    ds.test_unseen_idx.clear();
    for (DataFormat fmt : {DataFormat::kCsv, DataFormat::kBinary}) {
      save_dataset(ds, tmp.path, fmt);
      const SplitDataset loaded = load_dataset(tmp.path, fmt);
      CHECK(loaded.num_samples() == 0);
      CHECK(loaded.feature_dim() == ds.feature_dim());
    }
  }
}

TEST_SUITE("synthetic benchmark") {
  TEST_CASE("default shape contract") {
    const SplitDataset ds = generate_synthetic(SynthConfig{});
    CHECK(ds.seen_classes.size() == 40);
    CHECK(ds.unseen_classes.size() == 10);
    CHECK(ds.train_idx.size() == 40 * 100);
    CHECK(ds.test_seen_idx.size() + ds.test_unseen_idx.size() == 50 * 30);
    CHECK(ds.test_seen_idx.size() == 40 * 30);
    CHECK(ds.test_unseen_idx.size() == 10 * 30);
    CHECK(ds.feature_dim() == 32);
    CHECK(ds.attribute_dim() == 16);
    for (std::size_t k = 0; k < ds.num_classes(); ++k)
      CHECK(std::abs(l2_norm(ds.attributes.row(k)) - 1.0) < 1e-6);
  }

  TEST_CASE("zero noise puts every sample on its class mean") {
    SynthConfig cfg = small_config();
    cfg.noise_scale = 0.0;
    const SyntheticBenchmark b = generate_synthetic_benchmark(cfg);
    const SplitDataset& ds = b.dataset;
    for (std::size_t i = 0; i < ds.num_samples(); ++i) {
      const std::size_t k = ds.labels[i];
      for (std::size_t c = 0; c < ds.feature_dim(); ++c) {
        double mu = 0.0;
        for (std::size_t d = 0; d < ds.attribute_dim(); ++d)
          mu += b.ground_truth_map(c, d) * ds.attributes.values(k, d);
        CHECK(ds.features(i, c) == static_cast<double>(static_cast<float>(mu)));
      }
    }
  }

  TEST_CASE("least squares recovers the hidden map at zero noise") {
    SynthConfig cfg;
    cfg.noise_scale = 0.0;
    const SyntheticBenchmark b = generate_synthetic_benchmark(cfg);
    const SplitDataset& ds = b.dataset;
    // One row per sample: features = attributes(label) * G^T.
    Eigen::MatrixXd a(ds.num_samples(), ds.attribute_dim());
    for (std::size_t i = 0; i < ds.num_samples(); ++i)
      for (std::size_t d = 0; d < ds.attribute_dim(); ++d)
        a(i, d) = ds.attributes.values(ds.labels[i], d);
    const Eigen::MatrixXd y = oracle::to_eigen(ds.features);
    const Eigen::MatrixXd gt = (a.transpose() * a).ldlt().solve(a.transpose() * y);
    const Eigen::MatrixXd truth = oracle::to_eigen(b.ground_truth_map).transpose();
    CHECK((gt - truth).norm() / truth.norm() < 1e-6);
  }

  TEST_CASE("seeded reproducibility") {
    const SplitDataset a = generate_synthetic(small_config(5));
    const SplitDataset b = generate_synthetic(small_config(5));
    const SplitDataset c = generate_synthetic(small_config(6));
    CHECK(a.features == b.features);
    CHECK(a.attributes.values == b.attributes.values);
    CHECK(a.features != c.features);
  }

  TEST_CASE("invalid counts and dimension warnings") {
    SynthConfig cfg = small_config();
    cfg.seen_count = 0;
    CHECK_THROWS_AS(generate_synthetic(cfg), Error);
    cfg = small_config();
    cfg.feat_dim = 2;
    CHECK(cfg.warnings().size() == 1);
    CHECK(small_config().warnings().empty());
  }
}

TEST_SUITE("episodes") {
  TEST_CASE("M=20, N=4 on the default benchmark") {
    const SplitDataset ds = generate_synthetic(SynthConfig{});
    RngStream rng(1);
    const Episode ep = sample_episode(ds, 20, 4, rng);
    CHECK(ep.visual.rows() == 80);
    CHECK(ep.visual.cols() == 32);
    CHECK(ep.semantic.rows() == 20);
    CHECK(std::set<std::size_t>(ep.class_ids.begin(), ep.class_ids.end()).size() == 20);
    for (std::size_t r = 0; r < 80; ++r) {
      const std::size_t m = ep.local_labels[r];
      CHECK(m == r / 4);
      CHECK(ds.labels[ep.sample_idx[r]] == ep.class_ids[m]);
      CHECK(std::find(ds.train_idx.begin(), ds.train_idx.end(), ep.sample_idx[r]) != ds.train_idx.end());
      for (std::size_t c = 0; c < 32; ++c) CHECK(ep.visual(r, c) == ds.features(ep.sample_idx[r], c));
    }
    for (std::size_t m = 0; m < 20; ++m)
      for (std::size_t d = 0; d < 16; ++d)
        CHECK(ep.semantic(m, d) == ds.attributes.values(ep.class_ids[m], d));
  }

  TEST_CASE("drawing every seen class yields a permutation") {
    const SplitDataset ds = generate_synthetic(small_config());
    RngStream rng(2);
    const Episode ep = sample_episode(ds, ds.seen_classes.size(), 3, rng);
    std::vector<std::size_t> ids = ep.class_ids;
    std::sort(ids.begin(), ids.end());
    CHECK(ids == ds.seen_classes);
  }

  TEST_CASE("fresh streams with one seed give identical episodes") {
    const SplitDataset ds = generate_synthetic(small_config());
    RngStream a(9), b(9);
    const Episode e1 = sample_episode(ds, 4, 3, a);
    const Episode e2 = sample_episode(ds, 4, 3, b);
    CHECK(e1.sample_idx == e2.sample_idx);
    CHECK(e1.visual == e2.visual);
  }

  TEST_CASE("capacity errors state the deficit") {
    const SplitDataset ds = generate_synthetic(small_config());
    RngStream rng(3);
    try {
      sample_episode(ds, 8, 2, rng);
      FAIL("expected a capacity error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kCapacity);
      CHECK(std::string(e.what()).find("short by 2") != std::string::npos);
    }
    CHECK(kind_of([&] { sample_episode(ds, 2, 11, rng); }) == ErrorKind::kCapacity);
  }

  TEST_CASE("repeated draws cover every eligible class") {
    const SplitDataset ds = generate_synthetic(small_config());
    RngStream rng(4);
    std::set<std::size_t> covered;
    for (int i = 0; i < 10000; ++i) {
      const Episode ep = sample_episode(ds, 2, 1, rng);
      covered.insert(ep.class_ids.begin(), ep.class_ids.end());
    }
    CHECK(covered.size() == ds.seen_classes.size());
  }

  TEST_CASE("training view refuses test samples and unseen attributes") {
    const SplitDataset ds = generate_synthetic(small_config());
    const TrainingView view(ds);
    CHECK(kind_of([&] { view.feature(ds.test_seen_idx.front()); }) == ErrorKind::kUsage);
    CHECK(kind_of([&] { view.feature(ds.test_unseen_idx.front()); }) == ErrorKind::kUsage);
    CHECK(kind_of([&] { view.attribute(ds.unseen_classes.front()); }) == ErrorKind::kUsage);
    CHECK(kind_of([&] { view.train_indices_of(ds.unseen_classes.front()); }) == ErrorKind::kUsage);
    view.feature(ds.train_idx.front());
    CHECK(view.access_log().feature_reads == 1);
  }
}
