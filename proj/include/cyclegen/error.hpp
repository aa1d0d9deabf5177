/*
 * Copyright (c) 2026, cyclegen contributors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace cyclegen {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector or matrix dimensions disagree with what an operation expects.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed or physically implausible input data (CSV rows, profiles,
/// normalization statistics).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Training or an optimizer step produced a non-finite value.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or argument combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace cyclegen
