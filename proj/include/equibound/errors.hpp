#pragma once

#include <stdexcept>
#include <string>

namespace equibound {

// Error taxonomy shared by the library and the CLI exit-code mapping:
// config -> usage (1), data -> validation failure (2), numeric -> numerical
// failure (3).
enum class ErrorKind { config, data, numeric };

class AuditError : public std::runtime_error {
 public:
  AuditError(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define EQUIBOUND_ERROR(Name, Kind)                       \
  class Name : public AuditError {                        \
   public:                                                \
    explicit Name(const std::string& what)                \
        : AuditError(ErrorKind::Kind, #Name ": " + what) {} \
  }

EQUIBOUND_ERROR(SchemaError, data);
EQUIBOUND_ERROR(InvariantError, data);
EQUIBOUND_ERROR(EmptyStratumError, data);
EQUIBOUND_ERROR(TooFewRecords, data);
EQUIBOUND_ERROR(EmptyTrainingStratum, data);
EQUIBOUND_ERROR(NonBinaryCovariate, data);
EQUIBOUND_ERROR(NoNeedyUnits, data);
EQUIBOUND_ERROR(ConfigError, config);
EQUIBOUND_ERROR(UnsupportedSource, config);
EQUIBOUND_ERROR(PairNotFound, config);
EQUIBOUND_ERROR(DomainError, numeric);
EQUIBOUND_ERROR(DegenerateDesign, numeric);

#undef EQUIBOUND_ERROR

}  // namespace equibound
