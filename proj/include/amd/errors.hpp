#pragma once

#include <stdexcept>
#include <string>

namespace amd {

// Every engine error derives from amd::Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* code() const noexcept = 0;
};

#define AMD_DEFINE_ERROR(Name)                                       \
  class Name : public Error {                                        \
   public:                                                           \
    using Error::Error;                                              \
    const char* code() const noexcept override { return #Name; }     \
  };

AMD_DEFINE_ERROR(UnsupportedFormat)
AMD_DEFINE_ERROR(FormatError)
AMD_DEFINE_ERROR(ShapeError)
AMD_DEFINE_ERROR(NonFiniteInput)
AMD_DEFINE_ERROR(EmptySequence)
AMD_DEFINE_ERROR(BadParams)
AMD_DEFINE_ERROR(SessionFinalized)
AMD_DEFINE_ERROR(UnknownSession)
AMD_DEFINE_ERROR(DuplicateSession)
AMD_DEFINE_ERROR(BadMessage)
AMD_DEFINE_ERROR(MissingLabel)
AMD_DEFINE_ERROR(UnreadableFile)

#undef AMD_DEFINE_ERROR

}  // namespace amd
