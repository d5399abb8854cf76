// Copyright 2026 The ETID Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ETID_ERRORS_H_
#define ETID_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace etid {

// Root of the library's exception hierarchy. Callers that only care about
// "something in etid failed" can catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand dimensions do not line up (matrix rows/cols, model input width).
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A precondition on values was violated: bad config, unknown id, K < 3, ...
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A persisted artifact (checkpoint, manifest) could not be decoded.
class FormatError : public Error {
 public:
  using Error::Error;
};

class VersionMismatchError : public FormatError {
 public:
  VersionMismatchError(unsigned found, unsigned expected)
      : FormatError("checkpoint format version " + std::to_string(found) +
                    " is not supported (expected " + std::to_string(expected) +
                    ")"),
        found_(found),
        expected_(expected) {}

  unsigned found() const { return found_; }
  unsigned expected() const { return expected_; }

 private:
  unsigned found_;
  unsigned expected_;
};

// Text input (CSV, id lists) is malformed. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// The reference sub-models no longer qualify as retrained-alike stand-ins
// for at least one (reference, target) pair. The ensemble has to be rebuilt
// from scratch before further erasure requests can be honoured.
class ValidityExpiredError : public Error {
 public:
  ValidityExpiredError(std::size_t ref_part, std::size_t target_part,
                       double ratio)
      : Error("reference sub-model " + std::to_string(ref_part) +
              " is no longer retrained-alike for sub-model " +
              std::to_string(target_part) + " (overlap ratio " +
              std::to_string(ratio) +
              " < 1); rebuild the ensemble before unlearning more data"),
        ref_part_(ref_part),
        target_part_(target_part),
        ratio_(ratio) {}

  std::size_t ref_part() const { return ref_part_; }
  std::size_t target_part() const { return target_part_; }
  double ratio() const { return ratio_; }

 private:
  std::size_t ref_part_;
  std::size_t target_part_;
  double ratio_;
};

}  // namespace etid

#endif  // ETID_ERRORS_H_
