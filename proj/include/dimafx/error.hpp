#pragma once

#include <stdexcept>
#include <string>

namespace dimafx {

// Error categories map one-to-one onto CLI exit codes (2, 3, 4).

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace dimafx
