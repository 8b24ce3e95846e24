// Copyright 2026 The Signex Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace signex {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input files, bad arguments, inconsistent corpora. CLI exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or parameters during training. CLI exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace signex
