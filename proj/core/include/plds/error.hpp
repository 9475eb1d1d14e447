// Copyright 2026 The plds Authors
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace plds {

enum class ErrorCode {
  kInvalidParameters,
  kDimensionMismatch,
  kMissingLatents,
  kEmptyMixture,
  kNotSingleMode,
  kSingularMatrix,
  kCRankDeficient,
  kEnumerationTooLarge,
  kDegenerateResponsibilities,
  kUnknownMethod,
  kLengthMismatch,
  kIo,
  kParse,
};

/// Machine-readable name, e.g. "SINGULAR_MATRIX".
std::string_view code_name(ErrorCode code);

/// Validation-class errors map to CLI exit code 2, numerical ones to 3.
bool is_numerical(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const { return code_; }
  const std::string& detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace plds
