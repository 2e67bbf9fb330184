#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <stdexcept>
#include <string>

namespace adaptpc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inconsistent shapes or arguments outside an operation's domain.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure failed (SVD, root-find, Newton, rank collapse).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// The requested residual tolerance lies below what the system can reach.
class InfeasibleError : public Error {
public:
    InfeasibleError(const std::string& what, double min_residual)
        : Error(what), min_residual_(min_residual) {}

    double min_residual() const noexcept { return min_residual_; }

private:
    double min_residual_;
};

namespace detail {

inline std::function<void(const std::string&)>& warning_sink() {
    static std::function<void(const std::string&)> sink = [](const std::string& msg) {
        std::cerr << "warning: " << msg << '\n';
    };
    return sink;
}

inline std::mutex& warning_mutex() {
    static std::mutex m;
    return m;
}

} // namespace detail

/// Replace the process-wide warning sink (stderr by default). Returns the old one.
inline std::function<void(const std::string&)> set_warning_sink(std::function<void(const std::string&)> sink) {
    std::lock_guard<std::mutex> lock(detail::warning_mutex());
    auto old = std::move(detail::warning_sink());
    detail::warning_sink() = std::move(sink);
    return old;
}

inline void warn(const std::string& msg) {
    std::lock_guard<std::mutex> lock(detail::warning_mutex());
    if (detail::warning_sink()) detail::warning_sink()(msg);
}

} // namespace adaptpc
