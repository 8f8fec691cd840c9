#pragma once

#include <stdexcept>
#include <string>

namespace milwsi {

// Base for all library errors. The CLI maps IoError to exit code 2 and
// every other Error to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input values or inconsistent arguments.
class ValidationError : public Error {
public:
    using Error::Error;
};

// A file exists but its contents do not match the expected layout.
class FormatError : public Error {
public:
    using Error::Error;
};

// Opening, reading or writing a file failed.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace milwsi
