#pragma once

#include <stdexcept>
#include <string>

namespace memdse {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed workload or config text. `line`/`column` are 1-based, 0 when
/// the problem is structural rather than lexical.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line = 0, int column = 0)
        : Error(what), line_(line), column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

/// A workload graph that violates a structural invariant.
class GraphError : public Error {
public:
    using Error::Error;
};

/// Bad configuration values or missing referenced files.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// The model cannot evaluate the request (no feasible tiling, DRAM overflow).
class ModelError : public Error {
public:
    using Error::Error;
};

} // namespace memdse
