// Copyright 2026 The mtltag Authors
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

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include "support/test_support.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + MTLTAG_BINARY + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("exit codes") {
  const auto dir = mtltag::testing::scratch_dir("cli-binary");
  const std::string d = "\"" + dir.string() + "/";
  std::ofstream(dir / "data.conll") << "a\tO\nb\tB-X\n";
  std::ofstream(dir / "bad.yaml") << "network: {cell: tree}\ntasks: [{name: t, train: data.conll}]\n";
  std::ofstream(dir / "missing.yaml") << "network: {shared_layers: [2]}\ntasks: [{name: t, train: nowhere.conll, label_column: 1}]\n";

  CHECK(run("") == 1);
  CHECK(run("--version") == 0);
  CHECK(run("--help") == 0);
  CHECK(run("dance") == 1);
  CHECK(run("train " + d + "bad.yaml\"") == 1);
  CHECK(run("train " + d + "missing.yaml\"") == 2);
  CHECK(run("stats " + d + "data.conll\"") == 0);
  CHECK(run("evaluate -i " + d + "data.conll\" --metrics bleu") == 1);
  CHECK(run("evaluate -i " + d + "data.conll\" --pred-column 4") == 2);
  CHECK(run("postprocess -i " + d + "data.conll\" --variant bio-o") == 0);
  CHECK(run("predict -m " + d + "data.conll\" -i " + d + "data.conll\"") == 2);
}
