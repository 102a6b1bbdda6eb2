/*
 * Copyright 2026 The uvcg Authors
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

namespace uvcg {

/// Base for every error raised by the library. Each subclass maps onto one
/// CLI exit code (see tools/cli.cpp).
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed on-disk data (missing manifest, unreadable image, bad JSON).
class FormatError : public Error {
  public:
    using Error::Error;
};

/// Data that parses but violates a structural invariant.
class IntegrityError : public Error {
  public:
    using Error::Error;
};

/// Invalid parameters or incompatible shapes.
class ConfigError : public Error {
  public:
    using Error::Error;
};

class IoError : public Error {
  public:
    using Error::Error;
};

class NumericalError : public Error {
  public:
    using Error::Error;
};

/// The requested operation is not supported by the chosen endpoint.
class CapabilityError : public Error {
  public:
    using Error::Error;
};

class SchemaError : public Error {
  public:
    using Error::Error;
};

/// Launch, transport or protocol failure talking to an external model host.
class SidecarError : public Error {
  public:
    using Error::Error;
};

}  // namespace uvcg
