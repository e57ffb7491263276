/* Copyright 2026 The memecap Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef MEMECAP_ERROR_HPP_
#define MEMECAP_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace memecap {

enum class ErrorCode {
  kShape,       // dimension mismatch between operands
  kOutOfRange,  // index outside a table
  kValidation,  // bad configuration or argument
  kIo,          // file could not be opened, read or written
  kFormat,      // file contents violate the expected format
  kNumeric,     // non-finite loss or value
};

// Every library failure is reported as an Error; the code drives the C API
// status and the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace memecap

#endif  // MEMECAP_ERROR_HPP_
