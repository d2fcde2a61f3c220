#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "bootkeeper/assembler.hpp"
#include "bootkeeper/cfg.hpp"
#include "bootkeeper/corpus.hpp"
#include "bootkeeper/cryptoid.hpp"
#include "bootkeeper/error.hpp"
#include "bootkeeper/machine.hpp"
#include "bootkeeper/validator.hpp"

using namespace bootkeeper;

namespace {

constexpr int kExitUsage = 2;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(Errc::IoError, path);
}

int cmd_validate(const std::vector<std::string>& inputs, const std::string& report_path, double timeout,
                 uint64_t max_steps, bool json, int verbosity) {
  ValidationConfig cfg;
  cfg.timeout_seconds = timeout;
  if (max_steps) cfg.exploration.max_depth = max_steps;
  bool any_invalid = false, any_inconclusive = false;
  for (const auto& in : inputs) {
    const auto bytes = read_file(in);
    const Report rep = validate(bytes, cfg);
    if (!report_path.empty()) {
      std::string path = report_path;
      if (inputs.size() > 1) path += "." + std::filesystem::path(in).stem().string() + ".json";
      write_text(path, report_json(rep));
    }
    if (json) {
      std::cout << report_json(rep);
    } else {
      if (inputs.size() > 1) std::cout << in << "\n";
      std::cout << report_summary(rep);
      if (verbosity > 0)
        for (const auto& [stage, ms] : rep.timings_ms) std::cout << "  " << stage << ": " << ms << " ms\n";
    }
    any_invalid = any_invalid || rep.overall == Overall::Invalid;
    any_inconclusive = any_inconclusive || rep.overall == Overall::Inconclusive;
  }
  return exit_code(any_invalid ? Overall::Invalid : any_inconclusive ? Overall::Inconclusive : Overall::Valid);
}

int cmd_run(const std::string& input, uint64_t max_steps, bool tpm_log) {
  const FirmwareImage img = load_image(read_file(input));
  const RunResult r = run(img, max_steps);
  if (tpm_log) {
    for (const auto& w : r.tpm.access_log())
      std::cout << "step=" << w.step << " addr=" << hex32(w.addr) << " value=" << hex32(w.value) << "\n";
  }
  std::cout << "steps=" << r.state.step_count << "\n";
  std::cout << "PCR0=" << to_hex(r.tpm.pcrs()[0]) << "\n";
  return 0;
}

int cmd_cfg(const std::string& input, const std::string& dot) {
  const FirmwareImage img = load_image(read_file(input));
  const Cfg cfg = recover_cfg(img);
  if (!dot.empty()) {
    if (dot == "-") std::cout << to_dot(cfg);
    else write_text(dot, to_dot(cfg));
  }
  std::cout << "blocks=" << cfg.nodes.size() << " edges=" << cfg.edges.size()
            << " functions=" << cfg.functions.size() << " unresolved=" << cfg.unresolved.size() << "\n";
  for (const auto& [entry, f] : cfg.functions)
    std::cout << "function " << hex32(entry) << " blocks=" << f.blocks.size() << " callees=" << f.callees.size()
              << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bootkeeper: measured-boot firmware validator"};
  app.require_subcommand(1);
  app.fallthrough();
  int verbosity = 0;
  app.add_flag("-v,--verbose", verbosity, "More output");

  std::vector<std::string> inputs;
  std::string report, out, dot;
  double timeout = 600.0;
  uint64_t max_steps = 0;
  bool json = false, tpm_log = false;

  auto* validate_cmd = app.add_subcommand("validate", "Check the four measurement properties");
  validate_cmd->add_option("images", inputs, "Firmware images (.fw)")->required()->check(CLI::ExistingFile);
  validate_cmd->add_option("--report", report, "Write the JSON report here");
  validate_cmd->add_option("--timeout", timeout, "Analysis timeout in seconds")
      ->check(CLI::PositiveNumber);
  validate_cmd->add_option("--max-steps", max_steps, "Instruction budget per symbolic state");
  validate_cmd->add_flag("--json", json, "Print the JSON report instead of the summary");

  std::string asm_in;
  auto* asm_cmd = app.add_subcommand("asm", "Assemble a .fasm source into a .fw image");
  asm_cmd->add_option("source", asm_in, "Assembly source")->required()->check(CLI::ExistingFile);
  asm_cmd->add_option("--out,-o", out, "Output image")->required();

  std::string run_in;
  uint64_t run_steps = 100'000'000;
  auto* run_cmd = app.add_subcommand("run", "Execute an image and print PCR0");
  run_cmd->add_option("image", run_in, "Firmware image")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--max-steps", run_steps, "Instruction budget");
  run_cmd->add_flag("--tpm-log", tpm_log, "Print the TPM access log");

  std::string cfg_in;
  auto* cfg_cmd = app.add_subcommand("cfg", "Recover and summarize the control-flow graph");
  cfg_cmd->add_option("image", cfg_in, "Firmware image")->required()->check(CLI::ExistingFile);
  cfg_cmd->add_option("--dot", dot, "Write Graphviz output (- for stdout)");

  auto* corpus_cmd = app.add_subcommand("corpus", "Generate the fixture corpus");
  corpus_cmd->add_option("--out,-o", out, "Output directory")->required();

  auto* sigdb_cmd = app.add_subcommand("sigdb", "Signature database");
  sigdb_cmd->require_subcommand(1);
  std::string sig_out;
  auto* export_cmd = sigdb_cmd->add_subcommand("export", "Write the signature graphs as JSON");
  export_cmd->add_option("out", sig_out, "Output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*validate_cmd) return cmd_validate(inputs, report, timeout, max_steps, json, verbosity);
    if (*asm_cmd) {
      write_file(out, serialize(assemble(read_text(asm_in))));
      return 0;
    }
    if (*run_cmd) return cmd_run(run_in, run_steps, tpm_log);
    if (*cfg_cmd) return cmd_cfg(cfg_in, dot);
    if (*corpus_cmd) {
      build_corpus(out);
      std::cout << "wrote " << fixture_ids().size() << " images and manifest.json to " << out << "\n";
      return 0;
    }
    if (*export_cmd) {
      write_text(sig_out, signature_db_json(make_reference_signatures()));
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "bootkeeper: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "bootkeeper: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
