/*
 * Copyright 2026 The TransBoost Lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "transboost/data.hpp"

using namespace transboost;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("tb_data_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                                                 ::testing::UnitTest::GetInstance()->current_test_info()->name())) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string write(const std::string& name, const std::string& text) const {
    const auto p = path_ / name;
    std::ofstream(p) << text;
    return p.string();
  }

 private:
  fs::path path_;
};

}  // namespace

TEST(Blobs, NoiselessPointsSitOnCenters) {
  BlobsSpec spec;
  spec.classes = 3;
  spec.per_class = 20;
  spec.dim = 5;
  spec.noise_sigma = 0.0;
  const auto d = gen_blobs(spec);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const std::size_t first = (*d.labels)[i] * spec.per_class;
    for (std::size_t j = 0; j < spec.dim; ++j) EXPECT_EQ(d.features(i, j), d.features(first, j));
  }
}

TEST(Blobs, CountsAndDeterminism) {
  BlobsSpec spec;
  spec.seed = 17;
  const auto a = gen_blobs(spec);
  EXPECT_EQ(a.size(), 200u);
  EXPECT_EQ(a.num_classes, 2u);
  EXPECT_EQ(std::count(a.labels->begin(), a.labels->end(), 0u), 100);
  EXPECT_EQ(std::count(a.labels->begin(), a.labels->end(), 1u), 100);
  EXPECT_EQ(gen_blobs(spec), a);
  spec.seed = 18;
  EXPECT_NE(gen_blobs(spec).features, a.features);
}

TEST(Blobs, RejectsBadSpecs) {
  BlobsSpec spec;
  spec.classes = 1;
  EXPECT_THROW(gen_blobs(spec), InputError);
  spec = BlobsSpec{};
  spec.noise_sigma = -1.0;
  EXPECT_THROW(gen_blobs(spec), InputError);
}

TEST(Rings, RadiiAndCounts) {
  RingsSpec spec;
  spec.classes = 3;
  spec.per_class = 50;
  spec.noise_sigma = 0.0;
  const auto d = gen_rings(spec);
  EXPECT_EQ(d.size(), 150u);
  for (std::size_t i = 0; i < d.size(); ++i)
    EXPECT_NEAR(std::hypot(d.features(i, 0), d.features(i, 1)), static_cast<double>((*d.labels)[i] + 1), 1e-12);
  spec.noise_sigma = 0.1;
  EXPECT_EQ(gen_rings(spec), gen_rings(spec));
}

TEST(Csv, LabeledFile) {
  TempDir dir;
  const auto path = dir.write("a.csv", "f0,f1,label\n1.5,2,0\n-3,4e-2,1\n0,0,0\n");
  const auto d = load_csv(path);
  EXPECT_EQ(d.size(), 3u);
  EXPECT_EQ(d.dim(), 2u);
  EXPECT_EQ(d.num_classes, 2u);
  EXPECT_EQ(*d.labels, (std::vector<std::size_t>{0, 1, 0}));
  EXPECT_DOUBLE_EQ(d.features(1, 1), 0.04);
  EXPECT_EQ(load_csv(path, 5).num_classes, 5u);
}

TEST(Csv, ColumnOrderIsFree) {
  TempDir dir;
  const auto d = load_csv(dir.write("b.csv", "label,f1,f0\n1,10,20\n"));
  EXPECT_EQ(d.features(0, 0), 20.0);
  EXPECT_EQ(d.features(0, 1), 10.0);
}

TEST(Csv, UnlabeledFiles) {
  TempDir dir;
  EXPECT_FALSE(load_csv(dir.write("c.csv", "f0,f1\n1,2\n3,4\n")).has_labels());
  EXPECT_FALSE(load_csv(dir.write("d.csv", "f0,label\n1,\n3,\n")).has_labels());
}

TEST(Csv, MalformedRowNamesTheRow) {
  TempDir dir;
  std::string text = "f0,f1,label\n";
  for (int r = 1; r <= 6; ++r) text += "1,2,0\n";
  text += "1,oops,1\n";
  const auto path = dir.write("e.csv", text);
  try {
    load_csv(path);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 7u);
    EXPECT_NE(std::string(e.what()).find("row 7"), std::string::npos);
  }
}

TEST(Csv, StructuralErrors) {
  TempDir dir;
  EXPECT_THROW(load_csv(dir.write("r.csv", "f0,f1\n1,2\n3\n")), ParseError);
  EXPECT_THROW(load_csv(dir.write("m.csv", "f0,label\n1,0\n2,\n")), ParseError);
  EXPECT_THROW(load_csv(dir.write("h.csv", "f0,color\n1,2\n")), ParseError);
  EXPECT_THROW(load_csv(dir.write("g.csv", "f0,f2\n1,2\n")), ParseError);
  EXPECT_THROW(load_csv(dir.write("n.csv", "f0,label\n1,-1\n")), ParseError);
  EXPECT_THROW(load_csv(dir.write("o.csv", "f0,label\n1,3\n"), 2), InputError);
  EXPECT_THROW(load_csv("/nonexistent/x.csv"), IoError);
}

TEST(Split, FullFractionsPartitionTheData) {
  BlobsSpec bs;
  bs.per_class = 50;
  const auto d = gen_blobs(bs);
  SplitSpec spec;
  const auto s = transductive_split(d, spec);
  EXPECT_TRUE(s.heldout_indices.empty());
  EXPECT_EQ(s.train_indices.size() + s.test_indices.size(), d.size());
  std::set<std::size_t> all(s.train_indices.begin(), s.train_indices.end());
  for (auto i : s.test_indices) EXPECT_TRUE(all.insert(i).second);
  EXPECT_EQ(s.unlabeled.rows(), s.test_indices.size());
  EXPECT_EQ(s.truth.size(), s.test_indices.size());
  for (std::size_t k = 0; k < s.test_indices.size(); ++k)
    for (std::size_t j = 0; j < d.dim(); ++j) EXPECT_EQ(s.unlabeled(k, j), d.features(s.test_indices[k], j));
}

TEST(Split, FivePercentOfThousandPerClass) {
  BlobsSpec bs;
  bs.per_class = 2000;
  const auto d = gen_blobs(bs);
  SplitSpec spec;
  spec.train_fraction = 0.05;
  spec.test_fraction = 0.1;
  const auto s = transductive_split(d, spec);
  EXPECT_EQ(std::count(s.labeled.labels->begin(), s.labeled.labels->end(), 0u), 50);
  EXPECT_EQ(std::count(s.labeled.labels->begin(), s.labeled.labels->end(), 1u), 50);
  EXPECT_EQ(s.unlabeled.rows(), 200u);
  EXPECT_EQ(s.heldout.size(), 1800u);
}

TEST(Split, DeterministicAndSeedSensitive) {
  const auto d = gen_blobs(BlobsSpec{});
  SplitSpec spec;
  spec.train_fraction = 0.5;
  spec.seed = 3;
  const auto a = transductive_split(d, spec);
  const auto b = transductive_split(d, spec);
  EXPECT_EQ(a.train_indices, b.train_indices);
  EXPECT_EQ(a.test_indices, b.test_indices);
  spec.seed = 4;
  EXPECT_NE(transductive_split(d, spec).test_indices, a.test_indices);
}

TEST(Split, UnstratifiedUsesWholeSet) {
  const auto d = gen_blobs(BlobsSpec{});
  SplitSpec spec;
  spec.stratified = false;
  spec.test_share = 0.25;
  const auto s = transductive_split(d, spec);
  EXPECT_EQ(s.test_indices.size(), 50u);
  EXPECT_EQ(s.train_indices.size(), 150u);
}

TEST(Split, TooSmallFractionIsInputError) {
  BlobsSpec bs;
  bs.per_class = 10;
  const auto d = gen_blobs(bs);
  SplitSpec spec;
  spec.train_fraction = 0.01;
  EXPECT_THROW(transductive_split(d, spec), InputError);
  spec = SplitSpec{};
  spec.test_fraction = 0.0;
  EXPECT_THROW(transductive_split(d, spec), InputError);
}
