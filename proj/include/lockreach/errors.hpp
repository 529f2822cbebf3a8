#pragma once

#include <stdexcept>
#include <string>

namespace lockreach {

// Problems in user-supplied input (files, specs, queries). CLI exit status 1.
struct InputError : std::runtime_error {
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Broken internal invariant. CLI exit status 2.
struct InternalError : std::logic_error {
    explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

inline void internal_check(bool cond, const char* what) {
    if (!cond) throw InternalError(what);
}

}  // namespace lockreach
