#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace t2l {

// Exit-code buckets used by the CLI: input errors map to exit 2,
// state/config errors to 3, numeric failures to 4.
enum class ErrorKind { input, state, numeric };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, std::string msg)
      : std::runtime_error(std::move(msg)), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

#define T2L_DEFINE_ERROR(NAME, KIND)                                           \
  class NAME : public Error {                                                  \
  public:                                                                      \
    explicit NAME(const std::string& m)                                        \
        : Error(ErrorKind::KIND, std::string(#NAME) + ": " + m) {}             \
  };

T2L_DEFINE_ERROR(ParseError, input)
T2L_DEFINE_ERROR(FormatError, input)
T2L_DEFINE_ERROR(UnknownSymbol, input)
T2L_DEFINE_ERROR(IncompleteTable, input)
T2L_DEFINE_ERROR(EmptyInput, input)
T2L_DEFINE_ERROR(DegenerateInput, input)
T2L_DEFINE_ERROR(DataError, input)
T2L_DEFINE_ERROR(LengthMismatch, input)
T2L_DEFINE_ERROR(EmptyReference, input)
T2L_DEFINE_ERROR(MissingModality, input)
T2L_DEFINE_ERROR(IndexOutOfVocab, input)
T2L_DEFINE_ERROR(ShapeMismatch, state)
T2L_DEFINE_ERROR(InvalidHeads, state)
T2L_DEFINE_ERROR(InvalidSchedule, state)
T2L_DEFINE_ERROR(ConfigMismatch, state)
T2L_DEFINE_ERROR(NumericError, numeric)

#undef T2L_DEFINE_ERROR

class TrainingDiverged : public Error {
public:
  TrainingDiverged(std::int64_t step, const std::string& m)
      : Error(ErrorKind::numeric,
              "TrainingDiverged at step " + std::to_string(step) + ": " + m),
        step_(step) {}
  std::int64_t step() const { return step_; }

private:
  std::int64_t step_;
};

}  // namespace t2l
