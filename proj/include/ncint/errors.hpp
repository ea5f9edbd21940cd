#pragma once

#include <stdexcept>
#include <string>

namespace ncint {

// Base class for every error raised by the library.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input: bad shapes, bad letters, unrecognized JSON, ...
class invalid_input : public error {
public:
    using error::error;
};

class shape_error : public invalid_input {
public:
    using invalid_input::invalid_input;
};

class invalid_word_error : public invalid_input {
public:
    using invalid_input::invalid_input;
};

class not_in_ball_error : public invalid_input {
public:
    using invalid_input::invalid_input;
};

class parse_error : public invalid_input {
public:
    using invalid_input::invalid_input;
};

// Numerical failures: the computation ran but could not certify its result.
class numerical_error : public error {
public:
    using error::error;
};

class not_hermitian_error : public numerical_error {
public:
    using numerical_error::numerical_error;
};

class not_psd_error : public numerical_error {
public:
    using numerical_error::numerical_error;
};

class gram_mismatch_error : public numerical_error {
public:
    using numerical_error::numerical_error;
};

class singular_map_error : public numerical_error {
public:
    using numerical_error::numerical_error;
};

class decay_error : public numerical_error {
public:
    using numerical_error::numerical_error;
};

class depth_error : public numerical_error {
public:
    using numerical_error::numerical_error;
};

class crosscheck_error : public numerical_error {
public:
    using numerical_error::numerical_error;
};

// The problem itself has no solution (not a failure of the solver).
class infeasible_error : public error {
public:
    using error::error;
};

} // namespace ncint
