#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bootkeeper {

enum class Errc {
  UnknownOpcode,
  RegisterOutOfRange,
  UndefinedLabel,
  DuplicateLabel,
  SyntaxError,
  BadMagic,
  BadVersion,
  TruncatedImage,
  EntryOutOfRange,
  ImageTooLarge,
  IndexOutOfRange,
  MemFault,
  UnalignedPc,
  StackUnderflow,
  StepBudgetExceeded,
  AnalysisTimeout,
  IncompleteCfg,
  InvalidPath,
  UnknownFixture,
  IoError,
};

const char* errc_name(Errc e);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

std::string hex32(uint32_t v);

}  // namespace bootkeeper
