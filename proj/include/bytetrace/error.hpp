#pragma once

#include <stdexcept>
#include <string>

namespace bytetrace {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BadSignature : public Error {
public:
    using Error::Error;
};

/// Raised by the Smali parser; carries the offending file and 1-based line.
class MalformedSmali : public Error {
public:
    MalformedSmali(std::string file, std::size_t line, const std::string& what)
        : Error(file + ":" + std::to_string(line) + ": " + what),
          file_(std::move(file)),
          line_(line)
    {
    }

    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

class DuplicateMethod : public Error {
public:
    DuplicateMethod(std::string signature, std::string first_file,
                    std::string second_file)
        : Error("duplicate method " + signature + " (defined in "
                + first_file + " and " + second_file + ")"),
          signature_(std::move(signature)),
          first_file_(std::move(first_file)),
          second_file_(std::move(second_file))
    {
    }

    const std::string& signature() const noexcept { return signature_; }
    const std::string& first_file() const noexcept { return first_file_; }
    const std::string& second_file() const noexcept { return second_file_; }

private:
    std::string signature_;
    std::string first_file_;
    std::string second_file_;
};

/// Schema violation in a configuration or input file.
class BadConfig : public Error {
public:
    using Error::Error;
};

/// Transport failure (connect, timeout, non-2xx) after all retries.
class BackendUnavailable : public Error {
public:
    using Error::Error;
};

/// Model output that could not be turned into a SummaryResult.
class InvalidResponse : public Error {
public:
    using Error::Error;
};

class OutOfRange : public Error {
public:
    using Error::Error;
};

} // namespace bytetrace
