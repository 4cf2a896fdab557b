// Copyright 2026 The GDC Lab Authors. All Rights Reserved.
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
// ============================================================================

#ifndef GDC_ERROR_H_
#define GDC_ERROR_H_

#include <stdexcept>
#include <string>

namespace gdc {

// Base class of every error raised by the library. Subclasses identify the
// category so callers (and the CLI exit-code mapping) can tell them apart.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes. The message names the op and the shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A documented precondition was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Truncated, exhausted or corrupt byte streams.
class StreamError : public Error {
 public:
  using Error::Error;
};

// Wrong magic, version or tag in a serialized file.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Inputs whose value ranges do not permit the computation (e.g. BD-rate
// curves without PSNR overlap).
class RangeError : public Error {
 public:
  using Error::Error;
};

// An information-theoretic identity failed to hold numerically. This can
// only signal an implementation bug.
class IdentityViolation : public Error {
 public:
  using Error::Error;
};

// Training diverged; the message carries the step index.
class TrainingError : public Error {
 public:
  using Error::Error;
};

// Raised for an internal inconsistency such as a cycle in the tape.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace gdc

#endif  // GDC_ERROR_H_
