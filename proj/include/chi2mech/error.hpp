// Copyright 2026 The chi2mech Authors
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

#ifndef CHI2MECH_ERROR_HPP_
#define CHI2MECH_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace chi2mech {

// Error categories. The CLI maps them onto process exit codes.
enum class ErrorCode {
  kInvalidArgument,    // malformed or invalid input (exit 1)
  kInfeasibleEpsilon,  // epsilon outside the constructible range (exit 2)
  kNumerical,          // singular matrix or failed numerical assertion (exit 3)
  kInternal,           // broken internal invariant
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void Require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) Fail(code, message);
}

}  // namespace chi2mech

#endif  // CHI2MECH_ERROR_HPP_
