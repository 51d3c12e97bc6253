/*
 * Copyright 2026 The dflpool Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DFL_ERRORS_HPP_
#define DFL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace dfl {

// Every failure raised by the library derives from Error so callers (the CLI
// in particular) can separate library failures from std::bad_alloc & co.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

// Malformed input files (IDX headers, truncated payloads, bad JSON).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Shapes, lengths or class alphabets that do not agree with each other.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

// NaN or infinity escaped an iterative computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

class PartitionError : public Error {
 public:
  using Error::Error;
};

class FittingError : public Error {
 public:
  using Error::Error;
};

class TopologyError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

// Experiment configuration rejected during parsing or validation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace dfl

#endif  // DFL_ERRORS_HPP_
