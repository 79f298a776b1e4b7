// Copyright 2026 The OmniTraj Authors
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

#ifndef OMNITRAJ__UTIL__ERROR_HPP_
#define OMNITRAJ__UTIL__ERROR_HPP_

#include <stdexcept>
#include <string>

namespace omnitraj
{

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or validation failure. The CLI maps this to exit code 2.
class ConfigError : public Error
{
public:
  using Error::Error;
};

/// Input data does not match the scene schema.
class SchemaError : public Error
{
public:
  using Error::Error;
};

/// Tensor shapes are incompatible for the requested operation.
class ShapeError : public Error
{
public:
  using Error::Error;
};

/// A documented precondition of an operation was violated.
class ContractError : public Error
{
public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error
{
public:
  using Error::Error;
};

/// Requested prediction horizon exceeds what the model rolls out.
class HorizonError : public Error
{
public:
  using Error::Error;
};

/// Binary cache or checkpoint file is unreadable or incompatible.
class FormatError : public Error
{
public:
  using Error::Error;
};

}  // namespace omnitraj

#endif  // OMNITRAJ__UTIL__ERROR_HPP_
