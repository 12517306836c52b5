// Copyright 2026 The subsent Authors. All Rights Reserved.
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

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "subsent/error.hpp"

namespace {

namespace fs = std::filesystem;
using subsent::ErrorCode;
using subsent::exit_status;

const fs::path kFixture = fs::path(SUBSENT_TEST_DATA) / "fixture.csv";

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("subsent_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Exit status of the CLI; stdout goes to out.txt in the scratch directory.
  int run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " '" + std::string(SUBSENT_CLI) + "' " + args + " > '" +
                            (dir_ / "out.txt").string() + "' 2> '" + (dir_ / "err.txt").string() +
                            "'";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string read(const fs::path& p) const {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  std::string stdout_text() const { return read(dir_ / "out.txt"); }

  fs::path dir_;
};

TEST_F(Cli, UsageErrors) {
  EXPECT_NE(run(""), 0);
  EXPECT_NE(run("ingest --csv x.csv"), 0);
  EXPECT_NE(run("ingest --csv x.csv --out y --bogus"), 0);
  EXPECT_NE(run("frobnicate"), 0);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, ErrorClassesMapToExitCodes) {
  EXPECT_EQ(run("ingest --csv /nonexistent.csv --out " + dir_.string()),
            exit_status(ErrorCode::kIo));
  std::ofstream(dir_ / "bad.csv") << "textID,text\n1,a\n";
  EXPECT_EQ(run("ingest --csv " + (dir_ / "bad.csv").string() + " --out " + dir_.string()),
            exit_status(ErrorCode::kMissingColumn));
  std::ofstream(dir_ / "cfg.txt") << "bogus = 1\n";
  EXPECT_EQ(run("train --config " + (dir_ / "cfg.txt").string() + " --out " + dir_.string()),
            exit_status(ErrorCode::kBadConfig));
  EXPECT_NE(exit_status(ErrorCode::kIo), exit_status(ErrorCode::kBadConfig));
}

TEST_F(Cli, IngestCorrectEda) {
  ASSERT_EQ(run("ingest --csv " + kFixture.string() + " --out " + dir_.string()), 0);
  EXPECT_NE(stdout_text().find("tweet\t50\t50\t19"), std::string::npos) << stdout_text();
  EXPECT_TRUE(fs::exists(dir_ / "preprocessed.csv"));

  ASSERT_EQ(run("correct --csv " + kFixture.string() + " --out " + (dir_ / "c.csv").string() +
                " --report " + (dir_ / "r.txt").string()),
            0);
  EXPECT_NE(stdout_text().find("n_corrected\t7"), std::string::npos);
  EXPECT_NE(read(dir_ / "r.txt").find("onna\tmiss"), std::string::npos);

  ASSERT_EQ(run("eda --csv " + kFixture.string() + " --ngrams 2 --out " + dir_.string()), 0);
  EXPECT_TRUE(fs::exists(dir_ / "ngrams_positive_2.tsv"));
  EXPECT_TRUE(fs::exists(dir_ / "jaccard_histogram.tsv"));
}

TEST_F(Cli, TrainEvaluatePredictViaEnvConfig) {
  std::ofstream(dir_ / "run.cfg") << "task = SE\nencoding = Esc\ndata = " << kFixture.string()
                                  << "\nvocab_size = 300\nmax_len = 48\nfolds = 2\nepochs = 1\n"
                                     "hidden = 16\nff = 32\nn_heads = 2\nlr = 0.001\n";
  const fs::path out = dir_ / "run";
  ASSERT_EQ(run("train --out " + out.string(), "SUBSENT_CONFIG='" + (dir_ / "run.cfg").string() + "'"),
            0)
      << read(dir_ / "err.txt");
  EXPECT_TRUE(fs::exists(out / "fold1_base.ckpt"));
  ASSERT_EQ(run("evaluate --checkpoints " + out.string() + " --test " + (out / "test.csv").string()),
            0)
      << read(dir_ / "err.txt");
  EXPECT_NE(stdout_text().find("jaccard"), std::string::npos);

  std::ofstream(dir_ / "spec.txt") << (out / "fold0.ckpt").string() << " 0.5\n"
                              << (out / "fold1.ckpt").string() << " 0.5\n";
  EXPECT_EQ(run("ensemble --spec " + (dir_ / "spec.txt").string() + " --test " +
                (out / "test.csv").string()),
            0)
      << read(dir_ / "err.txt");

  // Span models alone need a gold sentiment.
  EXPECT_EQ(run("predict --models " + out.string() + " --text 'so sad today'"),
            exit_status(ErrorCode::kModelMissing));
  ASSERT_EQ(run("predict --models " + out.string() +
                " --text 'so sad today' --gold-sentiment negative"),
            0)
      << read(dir_ / "err.txt");
  EXPECT_NE(stdout_text().find("sentiment=negative"), std::string::npos);
  EXPECT_NE(stdout_text().find("subsentence="), std::string::npos);
}

}  // namespace
