#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mtd {

// Base of every exception thrown by the framework. Result-style outcomes
// (KillResult, AssignResult) are used where the caller is expected to branch.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define MTD_DEFINE_ERROR(Name)            \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

MTD_DEFINE_ERROR(ConfigError);
MTD_DEFINE_ERROR(ClockError);
MTD_DEFINE_ERROR(PathError);
MTD_DEFINE_ERROR(PermissionError);
MTD_DEFINE_ERROR(IntegrityError);
MTD_DEFINE_ERROR(ExhaustedError);
MTD_DEFINE_ERROR(EndOfStream);
MTD_DEFINE_ERROR(StratifyError);
MTD_DEFINE_ERROR(TrainError);
MTD_DEFINE_ERROR(ShapeError);
MTD_DEFINE_ERROR(NotConfigured);
MTD_DEFINE_ERROR(PersistenceError);

#undef MTD_DEFINE_ERROR

// Malformed serialized input. `offset()` is a byte offset for binary formats
// and a 1-based line number for text formats.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace mtd
