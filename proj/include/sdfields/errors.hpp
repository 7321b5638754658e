#pragma once

// Exception types raised by the library. Each carries a short kind tag that
// the CLI reports alongside the message.

#include <stdexcept>
#include <string>

namespace sdfields {

class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define SDFIELDS_ERROR_TYPE(Name)                                          \
  class Name : public Error {                                              \
   public:                                                                 \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  };

SDFIELDS_ERROR_TYPE(InvalidArgument)
SDFIELDS_ERROR_TYPE(ConfigParse)
SDFIELDS_ERROR_TYPE(QuadratureDivergence)
SDFIELDS_ERROR_TYPE(IntegrabilityFailure)
SDFIELDS_ERROR_TYPE(NotL1)
SDFIELDS_ERROR_TYPE(NotCentered)
SDFIELDS_ERROR_TYPE(JumpRateOverflow)
SDFIELDS_ERROR_TYPE(SingularCellOverflow)
SDFIELDS_ERROR_TYPE(LogMomentFailure)

#undef SDFIELDS_ERROR_TYPE

}  // namespace sdfields
