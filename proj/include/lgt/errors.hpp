#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace lgt {

enum class Errc {
  Syntax,
  Io,
  Format,
  Definition,
  UnknownProperty,
  UnknownColumn,
  UnknownEntry,
  UnknownClass,
  NotDefinitional,
  InvalidDecomposition,
  NothingToExpand,
  NotConstant,
  EmptyTable,
  IncompleteCodings,
  DuplicateLabel,
  DuplicateClass,
  DuplicateLemma,
  Arity,
  UnroutableEntry,
  HumanConstraintViolated,
  Script,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::Syntax: return "SyntaxError";
    case Errc::Io: return "IoError";
    case Errc::Format: return "FormatError";
    case Errc::Definition: return "DefinitionError";
    case Errc::UnknownProperty: return "UnknownProperty";
    case Errc::UnknownColumn: return "UnknownColumn";
    case Errc::UnknownEntry: return "UnknownEntry";
    case Errc::UnknownClass: return "UnknownClass";
    case Errc::NotDefinitional: return "NotDefinitional";
    case Errc::InvalidDecomposition: return "InvalidDecomposition";
    case Errc::NothingToExpand: return "NothingToExpand";
    case Errc::NotConstant: return "NotConstant";
    case Errc::EmptyTable: return "EmptyTable";
    case Errc::IncompleteCodings: return "IncompleteCodings";
    case Errc::DuplicateLabel: return "DuplicateLabel";
    case Errc::DuplicateClass: return "DuplicateClass";
    case Errc::DuplicateLemma: return "DuplicateLemma";
    case Errc::Arity: return "ArityError";
    case Errc::UnroutableEntry: return "UnroutableEntry";
    case Errc::HumanConstraintViolated: return "HumanConstraintViolated";
    case Errc::Script: return "ScriptError";
  }
  return "Error";
}

class Error : public std::runtime_error {
 public:
  static constexpr std::size_t no_offset = static_cast<std::size_t>(-1);

  Error(Errc code, std::string message, std::size_t offset = no_offset,
        std::vector<std::string> expected = {})
      : std::runtime_error(compose(code, message, offset, expected)),
        code_(code),
        message_(std::move(message)),
        offset_(offset),
        expected_(std::move(expected)) {}

  Errc code() const { return code_; }
  const std::string& message() const { return message_; }
  std::size_t offset() const { return offset_; }
  bool has_offset() const { return offset_ != no_offset; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  static std::string compose(Errc code, const std::string& message, std::size_t offset,
                             const std::vector<std::string>& expected) {
    std::string s = errc_name(code);
    s += ": ";
    s += message;
    if (offset != no_offset) {
      s += " (at byte ";
      s += std::to_string(offset);
      s += ")";
    }
    if (!expected.empty()) {
      s += "; expected ";
      for (std::size_t i = 0; i < expected.size(); ++i) {
        if (i) s += " | ";
        s += expected[i];
      }
    }
    return s;
  }

  Errc code_;
  std::string message_;
  std::size_t offset_;
  std::vector<std::string> expected_;
};

[[noreturn]] inline void fail(Errc code, std::string message,
                              std::size_t offset = Error::no_offset,
                              std::vector<std::string> expected = {}) {
  throw Error(code, std::move(message), offset, std::move(expected));
}

}  // namespace lgt
