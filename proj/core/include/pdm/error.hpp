#pragma once

#include <stdexcept>
#include <string>

namespace pdm {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration, arguments or generator specs (CLI exit code 2).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// The data cannot support the requested computation (CLI exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

#define PDM_DEFINE_ERROR(Name, Base)          \
  class Name : public Base {                  \
   public:                                    \
    explicit Name(const std::string& what)    \
        : Base(std::string(#Name ": ") + what) {} \
  }

// ingest
PDM_DEFINE_ERROR(FormatError, DataError);
PDM_DEFINE_ERROR(SchemaError, DataError);
PDM_DEFINE_ERROR(EmptyInputError, DataError);
PDM_DEFINE_ERROR(UntypeableColumnError, DataError);
PDM_DEFINE_ERROR(DegenerateDatasetError, DataError);
PDM_DEFINE_ERROR(IoError, DataError);

// stats
PDM_DEFINE_ERROR(InsufficientDataError, DataError);
PDM_DEFINE_ERROR(DegenerateTableError, DataError);
PDM_DEFINE_ERROR(UndefinedFError, DataError);
PDM_DEFINE_ERROR(EncodingError, DataError);

// graph, community, scoring
PDM_DEFINE_ERROR(EmptyGraphError, DataError);
PDM_DEFINE_ERROR(UndefinedModularityError, DataError);
PDM_DEFINE_ERROR(NoStructureError, DataError);
PDM_DEFINE_ERROR(EmptyCommunityError, DataError);
PDM_DEFINE_ERROR(NotSymmetricError, DataError);

// sampling, evaluate
PDM_DEFINE_ERROR(EmptyDatasetError, DataError);
PDM_DEFINE_ERROR(InvalidRangeError, ValidationError);
PDM_DEFINE_ERROR(InsufficientMinorityError, DataError);
PDM_DEFINE_ERROR(DegenerateClassError, DataError);
PDM_DEFINE_ERROR(StratificationError, DataError);

// pipeline
PDM_DEFINE_ERROR(SpecError, ValidationError);
PDM_DEFINE_ERROR(ConfigError, ValidationError);

#undef PDM_DEFINE_ERROR

}  // namespace pdm
