#pragma once

#include <stdexcept>
#include <string>

namespace al {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define AL_DEFINE_ERROR(Name)                 \
  class Name : public Error {                 \
   public:                                    \
    using Error::Error;                       \
  };

AL_DEFINE_ERROR(InvalidConfig)
AL_DEFINE_ERROR(InvalidInput)
AL_DEFINE_ERROR(ConsistencyError)
AL_DEFINE_ERROR(BudgetError)
AL_DEFINE_ERROR(ShapeError)
AL_DEFINE_ERROR(FormatError)
AL_DEFINE_ERROR(ParseError)
AL_DEFINE_ERROR(SchemaError)
AL_DEFINE_ERROR(NumericalError)

#undef AL_DEFINE_ERROR

}  // namespace al
