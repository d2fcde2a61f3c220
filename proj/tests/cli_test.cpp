#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sys/wait.h>

#include "bootkeeper/corpus.hpp"

using namespace bootkeeper;
namespace fs = std::filesystem;

namespace {

struct Out {
  int code = -1;
  std::string text;
};

Out cli(const std::string& args) {
  const std::string cmd = std::string(BOOTKEEPER_CLI) + " " + args + " 2>&1";
  Out o;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return o;
  std::array<char, 4096> buf;
  size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) o.text.append(buf.data(), n);
  const int st = pclose(p);
  o.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return o;
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / "bootkeeper_cli_test";
    fs::remove_all(dir_);
    build_corpus(dir_.string());
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }
  static std::string fw(const std::string& id) { return (dir_ / (id + ".fw")).string(); }
  static fs::path dir_;
};

fs::path Cli::dir_;

}  // namespace

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(cli("validate " + fw("b_o1")).code, 0);
  EXPECT_EQ(cli("validate " + fw("a5_overwrite")).code, 1);
  EXPECT_EQ(cli("validate " + fw("stress") + " --max-steps 2000").code, 3);
  EXPECT_EQ(cli("validate " + (dir_ / "missing.fw").string()).code, 2);
  EXPECT_EQ(cli("validate").code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
  EXPECT_EQ(cli("validate --timeout -1 " + fw("b_o1")).code, 2);
}

TEST_F(Cli, TimeoutGivesInconclusive) {
  const auto o = cli("validate --timeout 0.001 " + fw("b_o0"));
  EXPECT_EQ(o.code, 3) << o.text;
}

TEST_F(Cli, ReportFile) {
  const auto path = (dir_ / "r.json").string();
  const auto o = cli("validate --report " + path + " " + fw("a6_decoy"));
  EXPECT_EQ(o.code, 1);
  std::ifstream in(path);
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j.at("overall"), "invalid");
  EXPECT_EQ(j.at("properties")[2].at("id"), "P3");
  EXPECT_NE(o.text.find("P3"), std::string::npos);
}

TEST_F(Cli, MultipleInputs) {
  const auto path = (dir_ / "m.json").string();
  const auto o = cli("validate --report " + path + " " + fw("b_o2") + " " + fw("a3_hidden_code"));
  EXPECT_EQ(o.code, 1);
  EXPECT_TRUE(fs::exists(path + ".b_o2.json"));
  EXPECT_TRUE(fs::exists(path + ".a3_hidden_code.json"));
}

TEST_F(Cli, RunPrintsPcr0) {
  const auto fx = build_fixture("b_o3");
  const auto o = cli("run --tpm-log " + fw("b_o3"));
  EXPECT_EQ(o.code, 0);
  EXPECT_NE(o.text.find("PCR0=" + to_hex(fx.spec.golden_pcr0)), std::string::npos) << o.text;
  EXPECT_NE(o.text.find("addr=0xfed40024"), std::string::npos) << o.text;
  EXPECT_EQ(cli("run --max-steps 10 " + fw("b_o3")).code, 2);
}

TEST_F(Cli, AssembleAndCfg) {
  const auto src = (dir_ / "b_os.fasm").string();
  const auto out = (dir_ / "again.fw").string();
  EXPECT_EQ(cli("asm " + src + " --out " + out).code, 0);
  std::ifstream a(out, std::ios::binary), b(fw("b_os"), std::ios::binary);
  const std::string x((std::istreambuf_iterator<char>(a)), {}), y((std::istreambuf_iterator<char>(b)), {});
  EXPECT_EQ(x, y);
  const auto o = cli("cfg --dot - " + fw("b_os"));
  EXPECT_EQ(o.code, 0);
  EXPECT_NE(o.text.find("digraph"), std::string::npos);
  EXPECT_NE(o.text.find("blocks="), std::string::npos);
}

TEST_F(Cli, SigdbExport) {
  const auto path = (dir_ / "sigdb.json").string();
  EXPECT_EQ(cli("sigdb export " + path).code, 0);
  std::ifstream in(path);
  EXPECT_EQ(nlohmann::json::parse(in).at("algorithm"), "sha1");
}
