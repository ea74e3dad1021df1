#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace typoflow {

// Shape or dtype conformance failure in a tensor op. Message names the
// offending op kind and the shapes involved.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Prompt markup violation; byte_offset points at the offending tag.
struct GrammarError : std::runtime_error {
    size_t byte_offset;
    GrammarError(const std::string& msg, size_t offset)
        : std::runtime_error(msg + " (at byte " + std::to_string(offset) + ")"),
          byte_offset(offset) {}
};

// Text does not fit the render canvas; carries the width that would be needed.
struct LayoutError : std::runtime_error {
    int required_width;
    LayoutError(const std::string& msg, int req_width)
        : std::runtime_error(msg + " (required width " + std::to_string(req_width) + ")"),
          required_width(req_width) {}
};

// Non-finite state during integration or training; step is where it happened.
struct DivergenceError : std::runtime_error {
    int64_t step;
    DivergenceError(const std::string& msg, int64_t at_step)
        : std::runtime_error(msg + " (at step " + std::to_string(at_step) + ")"),
          step(at_step) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace typoflow
