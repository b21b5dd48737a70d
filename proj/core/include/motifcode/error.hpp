#ifndef MOTIFCODE_ERROR_HPP
#define MOTIFCODE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace motif {

// Bad input from the outside world: malformed files, impossible configs.
// The CLI maps this to exit code 1.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// A contract the library promised to keep was broken. Exit code 2.
class InvariantError : public std::logic_error {
public:
    explicit InvariantError(const std::string& what) : std::logic_error(what) {}
};

} // namespace motif

#endif
