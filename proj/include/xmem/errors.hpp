#pragma once
// Error taxonomy. Rejected inputs, transport, protocol, schema, validation
// and IO failures are distinct types so callers (and the CLI exit-code map)
// can tell them apart.

#include <stdexcept>
#include <string>

namespace xmem {

// Precondition violation on caller-supplied data.
class RejectedInput : public std::invalid_argument {
public:
    explicit RejectedInput(const std::string& what) : std::invalid_argument(what) {}
};

// Network-level provider failure; safe to retry.
class TransportError : public std::runtime_error {
public:
    explicit TransportError(const std::string& what) : std::runtime_error(what) {}
};

// Provider responded but the payload does not match the wire contract.
// Carries the raw payload for inspection.
class ProtocolError : public std::runtime_error {
public:
    ProtocolError(const std::string& what, std::string payload)
        : std::runtime_error(what + "; payload: " + payload), payload_(std::move(payload)) {}
    const std::string& payload() const { return payload_; }

private:
    std::string payload_;
};

// Stored data fails an integrity check.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Store file carries an unknown schema version.
class SchemaError : public std::runtime_error {
public:
    explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace xmem
