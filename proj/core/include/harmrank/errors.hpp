#pragma once

#include <stdexcept>
#include <string>

namespace harmrank {

// Base for every error raised by the library. Subclasses name the failing
// stage so callers can route on type without parsing messages.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class LabelingError : public Error {
 public:
  LabelingError(const std::string& item_id, const std::string& what)
      : Error(what), item_id_(item_id) {}
  const std::string& item_id() const { return item_id_; }

 private:
  std::string item_id_;
};

class ParseError : public Error {
 public:
  explicit ParseError(std::string raw_text)
      : Error("unparseable judge response: \"" + raw_text + "\""),
        raw_text_(std::move(raw_text)) {}
  const std::string& raw_text() const { return raw_text_; }

 private:
  std::string raw_text_;
};

class TransportError : public Error {
 public:
  TransportError(const std::string& what, int status = 0)
      : Error(what), status_(status) {}
  // HTTP status of the last attempt, 0 when no response was received.
  int status() const { return status_; }

 private:
  int status_;
};

class JudgeError : public Error {
 public:
  using Error::Error;
};

class ScorerError : public Error {
 public:
  using Error::Error;
};

class RankError : public Error {
 public:
  RankError(const std::string& item_id, const std::string& what)
      : Error(what), item_id_(item_id) {}
  const std::string& item_id() const { return item_id_; }

 private:
  std::string item_id_;
};

class StorageError : public Error {
 public:
  using Error::Error;
};

class LoadError : public Error {
 public:
  LoadError(const std::string& what, std::size_t line = 0)
      : Error(what), line_(line) {}
  // 1-based line number, 0 when not tied to a line.
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class SamplingError : public Error {
 public:
  using Error::Error;
};

class SelectionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class AggregationError : public Error {
 public:
  using Error::Error;
};

}  // namespace harmrank
