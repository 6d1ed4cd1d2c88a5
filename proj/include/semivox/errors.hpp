// semivox/errors.hpp

// Copyright 2026  Semivox Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef SEMIVOX_ERRORS_HPP_
#define SEMIVOX_ERRORS_HPP_

#include <stdexcept>

namespace semivox {

// Error families the CLI maps to distinct exit codes.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MissingInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct VocabMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace semivox

#endif  // SEMIVOX_ERRORS_HPP_
