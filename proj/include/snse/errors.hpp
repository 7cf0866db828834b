#pragma once

#include <stdexcept>
#include <string>

namespace snse {

/// Invalid or inconsistent run configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A path ledger is missing data the auditor needs, or an identity term
/// has no closed form for the requested moment order (CLI exit code 3).
class AuditError : public std::runtime_error {
public:
    explicit AuditError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem failure while persisting outputs (CLI exit code 4).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace snse
