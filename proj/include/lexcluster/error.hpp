#pragma once

#include <stdexcept>
#include <string>

namespace lexcluster {

/// Failure classes. The CLI maps these onto its exit codes.
enum class ErrorKind {
  usage,      // bad flags or parameters
  data,       // parse, schema, duplicate, missing file, format
  numeric,    // non-finite values, convergence failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define LEXCLUSTER_DEFINE_ERROR(Name, Kind)                  \
  class Name : public Error {                                \
   public:                                                   \
    explicit Name(const std::string& what)                   \
        : Error(ErrorKind::Kind, what) {}                    \
  };

LEXCLUSTER_DEFINE_ERROR(ParseError, data)
LEXCLUSTER_DEFINE_ERROR(SchemaError, data)
LEXCLUSTER_DEFINE_ERROR(DuplicateError, data)
LEXCLUSTER_DEFINE_ERROR(FormatError, data)
LEXCLUSTER_DEFINE_ERROR(IoError, data)
LEXCLUSTER_DEFINE_ERROR(EmptyInputError, data)
LEXCLUSTER_DEFINE_ERROR(KindError, data)
LEXCLUSTER_DEFINE_ERROR(StateError, data)
LEXCLUSTER_DEFINE_ERROR(ClassError, data)
LEXCLUSTER_DEFINE_ERROR(VocabularyError, data)
LEXCLUSTER_DEFINE_ERROR(ResolutionError, data)
LEXCLUSTER_DEFINE_ERROR(BoundsError, usage)
LEXCLUSTER_DEFINE_ERROR(ParameterError, usage)
LEXCLUSTER_DEFINE_ERROR(ShapeError, usage)
LEXCLUSTER_DEFINE_ERROR(NumericError, numeric)

#undef LEXCLUSTER_DEFINE_ERROR

}  // namespace lexcluster
